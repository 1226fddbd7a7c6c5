import csv
import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from scx.errors import InvalidArgument, IoError
from scx.tables import ResultTable, emit_table, format_number, svg_plot, to_csv


def test_worked_example():
    assert to_csv(ResultTable(("n", "I"), [(1, 0.05)])) == "n,I\n1,5.0000000000000003e-2\n"


@pytest.mark.parametrize("x, text", [(0, "0"), (-7, "-7"), (1.0, "1.0000000000000000e0"),
                                     (0.0, "0.0000000000000000e0"), (-2.5e-300, "-2.5000000000000000e-300"),
                                     (float("nan"), "nan"), (float("-inf"), "-inf")])
def test_format_number(x, text):
    assert format_number(x) == text


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_floats_round_trip(x):
    assert float(format_number(x)) == x


def test_complex_column_split():
    table = ResultTable(("t", "u"), [(1, 1 - 2j), (2, 0.5)])
    assert table.header() == ["t", "u_re", "u_im"]
    rows = list(csv.reader(io.StringIO(to_csv(table))))
    assert rows[1] == ["1", "1.0000000000000000e0", "-2.0000000000000000e0"]
    assert rows[2][2] == "0.0000000000000000e0"


def test_empty_table_is_header_only():
    assert to_csv(ResultTable(("a", "b"), [])) == "a,b\n"


def test_ragged_rows_rejected():
    with pytest.raises(InvalidArgument):
        ResultTable(("a", "b"), [(1,)])


def test_svg(tmp_path):
    table = ResultTable(("g", "order", "error"), [(0.1, 1, 1e-3), (0.2, 1, 4e-3), (0.1, 2, 1e-5), (0.2, 2, 8e-5)])
    text = svg_plot(table, "g", "error", log_y=True, series="order")
    assert text.startswith("<svg") and text.count("<polyline") == 2
    emit_table(table, tmp_path / "e.csv", format="csv+svg", plot=("g", "error"), log_y=True)
    assert (tmp_path / "e.svg").read_text().count("<polyline") == 1


def test_emit_errors(tmp_path):
    table = ResultTable(("a",), [(1,)])
    with pytest.raises(IoError):
        emit_table(table, tmp_path / "missing" / "x.csv")
    with pytest.raises(InvalidArgument):
        emit_table(table, tmp_path / "x.csv", format="json")
