import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scx.errors import InvalidArgument
from scx.recursion_lab import (
    Direction,
    GeometricSeriesSpec,
    In_oracle,
    Mode,
    RecursionTable,
    backward_recursion,
    forward_recursion,
    geometric_partial_sums,
)

mpmath.mp.dps = 40


def I_exact(n: int) -> float:
    """Independent high-precision value of e^-1 int_0^1 x^n e^x dx."""
    return float(mpmath.quad(lambda x: x**n * mpmath.exp(x - 1), [0, 1]))


class TestGeometric:
    def test_weak_partial(self):
        series = geometric_partial_sums(GeometricSeriesSpec(0.5, Mode.WEAK, 4))
        assert series.partial_sums == [1.0, 0.5, 0.75, 0.625]
        assert series.limit == pytest.approx(2 / 3)
        assert not series.diverged

    def test_strong_partial(self):
        series = geometric_partial_sums(GeometricSeriesSpec(2.0, "strong", 4))
        assert series.partial_sums[-1] == 0.3125
        assert series.limit == pytest.approx(1 / 3)

    def test_wrong_regime(self):
        assert geometric_partial_sums(GeometricSeriesSpec(2.0, "weak", 4)).partial_sums[-1] == -5
        series = geometric_partial_sums(GeometricSeriesSpec(2.0, "weak", 60))
        assert series.diverged
        assert all(abs(s) <= 1e12 for s in series.partial_sums)
        assert len(series.partial_sums) < 60

    def test_strong_in_weak_regime_diverges(self):
        assert geometric_partial_sums(GeometricSeriesSpec(0.5, "strong", 60)).diverged

    @pytest.mark.parametrize("a, mode", [(1.0, "weak"), (-1.0, "strong"), (0.0, "strong")])
    def test_invalid(self, a, mode):
        with pytest.raises(InvalidArgument):
            GeometricSeriesSpec(a, mode, 3)

    @given(a=st.floats(-0.9, 0.9), m=st.integers(1, 30))
    def test_weak_matches_closed_sum(self, a, m):
        sums = geometric_partial_sums(GeometricSeriesSpec(a, "weak", m)).partial_sums
        assert sums[-1] == pytest.approx(sum((-a) ** k for k in range(m)), abs=1e-13)

    @given(a=st.floats(1.1, 50.0) | st.floats(-50.0, -1.1), m=st.integers(1, 30))
    def test_strong_matches_closed_sum(self, a, m):
        sums = geometric_partial_sums(GeometricSeriesSpec(a, "strong", m)).partial_sums
        expected = sum((-1) ** (k - 1) * a ** (-k) for k in range(1, m + 1))
        assert sums[-1] == pytest.approx(expected, abs=1e-13)

    def test_both_limits(self):
        assert abs(geometric_partial_sums(GeometricSeriesSpec(2, "strong", 50)).partial_sums[-1] - 1 / 3) < 1e-14
        assert abs(geometric_partial_sums(GeometricSeriesSpec(0.5, "weak", 50)).partial_sums[-1] - 2 / 3) < 1e-14


class TestOracle:
    def test_first_values(self):
        e1 = math.exp(-1)
        assert In_oracle(0) == pytest.approx(1 - e1, rel=1e-14)
        assert In_oracle(1) == pytest.approx(e1, rel=1e-14)
        assert In_oracle(2) == pytest.approx(1 - 2 * e1, rel=1e-14)

    @pytest.mark.parametrize("n", [0, 5, 10, 20, 40, 60])
    def test_against_mpmath(self, n):
        assert In_oracle(n) == pytest.approx(I_exact(n), rel=1e-13)

    def test_monotone_in_unit_interval(self):
        values = [In_oracle(n) for n in range(61)]
        assert all(0 < v < 1 for v in values)
        assert all(b < a for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("n", [-1, 61])
    def test_range(self, n):
        with pytest.raises(InvalidArgument):
            In_oracle(n)


class TestForward:
    def test_two_steps(self):
        table = forward_recursion(2, 1 - math.exp(-1))
        assert table.indices == [0, 1, 2]
        assert table.value_at(1) == pytest.approx(I_exact(1), rel=1e-14)
        assert table.value_at(2) == pytest.approx(I_exact(2), rel=1e-14)

    def test_zero_seed(self):
        assert forward_recursion(1, 0.0).values == [0.0, 1.0]

    def test_instability(self):
        last = forward_recursion(20, 1 - math.exp(-1)).last
        assert abs(last - I_exact(20)) / I_exact(20) > 1e2

    @given(s1=st.floats(0, 1), ds=st.floats(1e-6, 1e-2), n=st.integers(1, 15))
    def test_amplification_law(self, s1, ds, n):
        a = forward_recursion(n, s1).last
        b = forward_recursion(n, s1 + ds).last
        expected = ds * math.factorial(n)
        assert abs(a - b) == pytest.approx(expected, rel=1e-9)


class TestBackward:
    def test_single_step(self):
        assert backward_recursion(20, 0.0, 19).values == [0.0, 0.05]

    def test_crude_seed_converges(self):
        table = backward_recursion(25, 0.0, 10)
        assert table.indices == list(range(25, 9, -1))
        assert abs(table.last - I_exact(10)) < 1e-12

    def test_exact_inversion(self):
        assert backward_recursion(2, In_oracle(2), 0).last == pytest.approx(I_exact(0), rel=1e-14)

    @given(s1=st.floats(-1, 1), s2=st.floats(-1, 1), start=st.integers(2, 30), data=st.data())
    def test_damping_law(self, s1, s2, start, data):
        stop = data.draw(st.integers(0, start - 1))
        diff = abs(backward_recursion(start, s1, stop).last - backward_recursion(start, s2, stop).last)
        factor = math.factorial(stop) / math.factorial(start)
        assert diff == pytest.approx(abs(s1 - s2) * factor, rel=1e-13, abs=1e-16)

    @pytest.mark.parametrize("n", range(1, 13))
    def test_round_trip(self, n):
        up = forward_recursion(n, 1 - math.exp(-1)).last
        assert backward_recursion(n, up, 0).last == pytest.approx(1 - math.exp(-1), abs=1e-12)

    @pytest.mark.parametrize("start, stop", [(3, 3), (3, 5), (3, -1)])
    def test_invalid(self, start, stop):
        with pytest.raises(InvalidArgument):
            backward_recursion(start, 0.0, stop)


def test_table_rejects_bad_indices():
    with pytest.raises(InvalidArgument):
        RecursionTable(Direction.FORWARD, [0, 2], [1.0, 2.0], 0, 1.0)
    with pytest.raises(InvalidArgument):
        RecursionTable(Direction.BACKWARD, [2, 1], [1.0], 2, 1.0)
