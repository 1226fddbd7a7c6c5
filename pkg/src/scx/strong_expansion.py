"""Strong-coupling expansion of the propagator, run backward in time.

With ``L(t_j, t0) = i int_{t0}^{t_j} H dt`` and the mean-value replacement
``int_{t0}^{t_k} H u dt ~ u(t_{k+1}) int_{t0}^{t_k} H dt`` the Volterra equation
``u = I - i int H u`` becomes the backward map

    u(t_{k+1}) = L(t_k)^-1 (I - u(t_k))

which, unrolled from a seed ``u(t_1)``, gives a series in products of
``L^-1``, i.e. in powers of ``1/g``.  The mean-value replacement is exact only
for real-valued integrands; :func:`defect_rel` and :func:`solve_mvt_time`
measure how far it is from holding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidArgument
from .numkit import CMatrix, QuadratureSpec, cmatrix, fro, identity, mat_inverse, quad_adaptive
from .propagator import (
    HamiltonianModel,
    SeriesKind,
    SeriesResult,
    _series_result,
    exact_history,
    exact_propagator,
)

SCAN_POINTS = 257
DEFECT_SCAN_POINTS = 129
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
L_QUAD = QuadratureSpec(rel_tol=1e-13)
DEFECT_QUAD = QuadratureSpec(rel_tol=1e-10)
MVT_QUAD = QuadratureSpec(rel_tol=1e-13)


@dataclass(frozen=True)
class TimeGrid:
    """Times ``t0 <= t_n <= ... <= t_2 <= t_1`` for an ``n``-point unrolling.

    ``points`` holds ``t_1 .. t_{n-1}``, the upper limits at which ``L`` is
    evaluated; ``target`` is ``t_n``, the time the result refers to.
    """

    t0: float
    points: tuple[float, ...]
    target: float

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise InvalidArgument("grid needs at least t_1")
        chain = pts + (float(self.target),)
        if any(b > a for a, b in zip(chain, chain[1:])):
            raise InvalidArgument(f"grid times must be non-increasing, got {list(chain)}")
        if chain[-1] < self.t0:
            raise InvalidArgument(f"target {self.target} precedes t0={self.t0}")
        if not pts[0] > self.t0:
            raise InvalidArgument("t_1 must be strictly greater than t0")

    @property
    def n(self) -> int:
        return len(self.points) + 1


@dataclass(frozen=True)
class DefectReport:
    t_candidate: float
    defect_rel: float


@dataclass(frozen=True)
class MvtProblem:
    f: Callable[[float], float]
    w: Callable[[float], float]
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise InvalidArgument(f"need a < b, got [{self.a}, {self.b}]")


@dataclass(frozen=True)
class MvtSolution:
    c: float
    mean: float
    bracketed: bool


def compute_L(model: HamiltonianModel, t_j: float, t0: float) -> CMatrix:
    """``L(t_j, t0) = i int_{t0}^{t_j} H(t) dt``."""
    model.check_times(t_j, t0)
    if not t0 < t_j:
        raise InvalidArgument(f"need t0 < t_j, got t0={t0}, t_j={t_j}")
    return 1j * quad_adaptive(lambda s: model.H_many([s])[0], t0, t_j, L_QUAD)


def backward_map(u_k, L_k) -> CMatrix:
    """One backward step ``u_{k+1} = L_k^-1 (I - u_k)``."""
    u_k = cmatrix(u_k)
    return mat_inverse(L_k) @ (identity(u_k.shape[0]) - u_k)


def _inverse_L_chain(model: HamiltonianModel, grid: TimeGrid) -> list[CMatrix]:
    return [mat_inverse(compute_L(model, t, grid.t0)) for t in grid.points]


def unroll_terms(L_inverses: Sequence[CMatrix], u1) -> list[CMatrix]:
    """Terms of the explicit backward series given ``L^-1(t_1) .. L^-1(t_{n-1})``.

    Term ``j`` (``1 <= j <= n-1``) is ``(-1)^(j-1) L^-1(t_{n-1}) ... L^-1(t_{n-j})``;
    the last entry is ``(-1)^(n-1) L^-1(t_{n-1}) ... L^-1(t_1) u1``.
    """
    u1 = cmatrix(u1)
    terms = []
    product = identity(u1.shape[0])
    sign = 1.0
    for inv in reversed(L_inverses):
        product = product @ inv
        terms.append(sign * product)
        sign = -sign
    terms.append(sign * product @ u1)
    return terms


def fold(L_inverses: Sequence[CMatrix], u1) -> CMatrix:
    """Iterate the backward step along the chain; equal to ``sum(unroll_terms)``."""
    u = cmatrix(u1)
    eye = identity(u.shape[0])
    for inv in L_inverses:
        u = inv @ (eye - u)
    return u


def strong_unroll(
    model: HamiltonianModel,
    grid: TimeGrid,
    u1=None,
    reference: Optional[CMatrix] = None,
) -> SeriesResult:
    """Backward series for ``u(t_n, t0)`` on ``grid``.

    ``u1`` defaults to the exact propagator at ``t_1``.  ``reference`` fills
    the ``errors`` column.
    """
    model.check_times(grid.t0, grid.target, *grid.points)
    if u1 is None:
        u1 = exact_propagator(model, grid.points[0], grid.t0).u
    terms = unroll_terms(_inverse_L_chain(model, grid), u1)
    return _series_result(SeriesKind.STRONG, terms, reference)


def strong_fold(model: HamiltonianModel, grid: TimeGrid, u1) -> CMatrix:
    """Same quantity as :func:`strong_unroll` via repeated :func:`backward_map`."""
    u = cmatrix(u1)
    for t in grid.points:
        u = backward_map(u, compute_L(model, t, grid.t0))
    return u


@dataclass(frozen=True)
class ScalingRow:
    factor: float
    g: float
    j: int
    term_norm: float
    ratio: float
    expected: float


def term_scaling_probe(
    model: HamiltonianModel, grid: TimeGrid, g_factors: Sequence[float]
) -> list[ScalingRow]:
    """Norms of the pure ``L^-1`` product terms at couplings ``factor * g``.

    Because ``L`` is linear in ``g`` the ratio to the base-coupling norm is
    ``factor^-j`` for term ``j``.
    """
    if any(not lam > 0 for lam in g_factors):
        raise InvalidArgument("scaling factors must be > 0")

    def norms(m: HamiltonianModel) -> list[float]:
        # u1 = 0 leaves only the pure product terms
        terms = unroll_terms(_inverse_L_chain(m, grid), np.zeros((m.dim, m.dim)))
        return [fro(x) for x in terms[:-1]]

    base = norms(model)
    rows = []
    for lam in g_factors:
        scaled = norms(model.with_coupling(lam * model.g))
        for j, (nb, ns) in enumerate(zip(base, scaled), start=1):
            rows.append(ScalingRow(float(lam), lam * model.g, j, ns, ns / nb, float(lam) ** -j))
    return rows


def mvt_point(problem: MvtProblem, tol: float = 1e-12) -> MvtSolution:
    """Point ``c`` with ``f(c) int w = int f w`` on ``[a, b]``.

    Scans 257 uniform points for a sign change of ``f - mean`` and bisects.
    When no sign change exists (``f`` numerically constant) the midpoint is
    returned with ``bracketed=False``.
    """
    f, w, a, b = problem.f, problem.w, problem.a, problem.b
    xs = np.linspace(a, b, SCAN_POINTS)
    if any(w(x) < 0 for x in xs):
        raise InvalidArgument("weight must be nonnegative")
    wint = quad_adaptive(w, a, b, MVT_QUAD).real
    if not wint > 0:
        raise InvalidArgument("weight integrates to zero")
    mean = float(quad_adaptive(lambda x: f(x) * w(x), a, b, MVT_QUAD).real / wint)

    def r(x: float) -> float:
        return f(x) - mean

    vals = [r(x) for x in xs]
    best = int(np.argmin(np.abs(vals)))
    if abs(vals[best]) <= tol:
        return MvtSolution(float(xs[best]), mean, True)
    for i in range(len(xs) - 1):
        if vals[i] * vals[i + 1] < 0:
            lo, hi, rlo = float(xs[i]), float(xs[i + 1]), vals[i]
            break
    else:
        return MvtSolution(0.5 * (a + b), mean, False)
    c = 0.5 * (lo + hi)
    while hi - lo > 4 * np.finfo(float).eps * max(1.0, abs(c)):
        c = 0.5 * (lo + hi)
        rc = r(c)
        if abs(rc) <= tol:
            break
        if (rc < 0) == (rlo < 0):
            lo, rlo = c, rc
        else:
            hi = c
    return MvtSolution(c, mean, True)


def _defect_parts(model, t_k, t0, u_ref):
    H = lambda s: model.H_many([s])[0]
    weighted = quad_adaptive(lambda s: H(s) @ u_ref(s), t0, t_k, DEFECT_QUAD)
    plain = quad_adaptive(H, t0, t_k, DEFECT_QUAD)
    return weighted, plain, fro(plain)


def defect_rel(
    model: HamiltonianModel,
    t_k: float,
    t_candidate: float,
    u_ref: Optional[Callable[[float], CMatrix]] = None,
    t0: Optional[float] = None,
) -> DefectReport:
    """Relative violation of ``int H u dt = u(t_cand) int H dt`` over ``[t0, t_k]``.

    ``u_ref`` defaults to the exact propagator from ``t0`` (the window start
    unless given).
    """
    t0 = model.window[0] if t0 is None else t0
    model.check_times(t_k, t0, t_candidate)
    if not t0 <= t_candidate <= t_k or not t0 < t_k:
        raise InvalidArgument(f"need t0 <= t_candidate <= t_k with t0 < t_k")
    u_ref = exact_history(model, t0) if u_ref is None else u_ref
    weighted, plain, scale = _defect_parts(model, t_k, t0, u_ref)
    return DefectReport(t_candidate, fro(weighted - u_ref(t_candidate) @ plain) / scale)


def solve_mvt_time(
    model: HamiltonianModel,
    t_k: float,
    u_ref: Optional[Callable[[float], CMatrix]] = None,
    t0: Optional[float] = None,
    resolution: float = 1e-9,
) -> DefectReport:
    """Candidate time in ``[t0, t_k]`` minimising :func:`defect_rel`.

    129-point scan, then golden-section search on the bracket around the best
    scan point.
    """
    t0 = model.window[0] if t0 is None else t0
    model.check_times(t_k, t0)
    if not t0 < t_k:
        raise InvalidArgument(f"need t0 < t_k, got t0={t0}, t_k={t_k}")
    u_ref = exact_history(model, t0) if u_ref is None else u_ref
    weighted, plain, scale = _defect_parts(model, t_k, t0, u_ref)

    def defect(tc: float) -> float:
        return fro(weighted - u_ref(tc) @ plain) / scale

    ts = np.linspace(t0, t_k, DEFECT_SCAN_POINTS)
    vals = [defect(float(t)) for t in ts]
    i = int(np.argmin(vals))
    lo = float(ts[max(i - 1, 0)])
    hi = float(ts[min(i + 1, len(ts) - 1)])
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = defect(x1), defect(x2)
    while hi - lo > resolution:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = defect(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = defect(x2)
    candidates = [(vals[i], float(ts[i])), (f1, x1), (f2, x2)]
    best_val, best_t = min(candidates)
    return DefectReport(best_t, best_val)


def mvt_optimal_grid(
    model: HamiltonianModel,
    t1: float,
    n: int,
    t0: Optional[float] = None,
    u_ref: Optional[Callable[[float], CMatrix]] = None,
) -> TimeGrid:
    """Grid whose ``t_{k+1}`` minimises the mean-value defect on ``[t0, t_k]``."""
    t0 = model.window[0] if t0 is None else t0
    if n < 2:
        raise InvalidArgument("grid needs n >= 2")
    u_ref = exact_history(model, t0) if u_ref is None else u_ref
    times = [float(t1)]
    while len(times) < n:
        times.append(solve_mvt_time(model, times[-1], u_ref, t0).t_candidate)
    return TimeGrid(t0, tuple(times[:-1]), times[-1])
