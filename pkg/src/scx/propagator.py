"""Model Hamiltonians, the exact time-evolution operator and the Dyson series.

A model is ``H(t) = g * A(t)`` with ``A(t)`` Hermitian and positive definite
on a finite window.  Three families are supported:

``constant``
    a fixed ``d x d`` matrix ``A0`` (``d <= 8``).
``scalar_profile``
    ``d = 1`` with ``A(t)`` one of ``c``, ``1 + alpha t^2`` or
    ``beta + exp(-t^2)``.
``two_level``
    ``A(t) = a I + b cos(omega t) sigma_x`` with ``a > |b|``.

Time ordering puts later times on the left throughout.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import (
    BadWindow,
    InvalidArgument,
    NoConvergence,
    NotHermitian,
    NotPositiveDefinite,
    OutOfWindow,
)
from .numkit import (
    CMatrix,
    QuadratureSpec,
    cmatrix,
    expm_batch,
    fro,
    identity,
    quad_adaptive,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)

PD_SAMPLES = 129
HERMITIAN_TOL = 1e-12
MAX_DOUBLINGS = 24
CHUNK = 1 << 15
DEFAULT_TOL = 1e-10
# Histories are themselves only converged to ~1e-10, so the residual
# quadrature cannot ask for much more.
RESIDUAL_QUAD = QuadratureSpec(rel_tol=1e-9)


class Family(str, Enum):
    CONSTANT = "constant"
    SCALAR_PROFILE = "scalar_profile"
    TWO_LEVEL = "two_level"


class SeriesKind(str, Enum):
    DYSON = "dyson"
    STRONG = "strong"


@dataclass(frozen=True)
class ScalarProfile:
    kind: str
    c: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0

    def __call__(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "const":
            return np.full_like(t, self.c, dtype=float)
        if self.kind == "poly":
            return 1.0 + self.alpha * t * t
        if self.kind == "gauss":
            return self.beta + np.exp(-t * t)
        raise InvalidArgument(f"unknown profile kind {self.kind!r}")

    def minimum(self, lo: float, hi: float) -> float:
        """Exact minimum of the profile on ``[lo, hi]``."""
        t_far = max(abs(lo), abs(hi))
        t_near = 0.0 if lo <= 0.0 <= hi else min(abs(lo), abs(hi))
        if self.kind == "const":
            return self.c
        if self.kind == "poly":
            t = t_far if self.alpha < 0 else t_near
            return 1.0 + self.alpha * t * t
        if self.kind == "gauss":
            return self.beta + math.exp(-t_far * t_far)
        raise InvalidArgument(f"unknown profile kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    family: Family
    dim: int
    g: float
    window: tuple[float, float]
    A0: Optional[np.ndarray] = None
    profile: Optional[ScalarProfile] = None
    a: float = 0.0
    b: float = 0.0
    omega: float = 0.0

    def generator_many(self, ts) -> np.ndarray:
        """``A(t)`` for every entry of ``ts``, shape ``(n, d, d)``."""
        ts = np.asarray(ts, dtype=float).reshape(-1)
        if self.family is Family.CONSTANT:
            return np.broadcast_to(self.A0, (ts.size, self.dim, self.dim))
        if self.family is Family.SCALAR_PROFILE:
            return self.profile(ts).astype(np.complex128).reshape(-1, 1, 1)
        bt = self.b * np.cos(self.omega * ts)
        out = np.zeros((ts.size, 2, 2), dtype=np.complex128)
        out[:, 0, 0] = out[:, 1, 1] = self.a
        out[:, 0, 1] = out[:, 1, 0] = bt
        return out

    def H_many(self, ts) -> np.ndarray:
        return self.g * self.generator_many(ts)

    def contains(self, t: float) -> bool:
        lo, hi = self.window
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        return lo - slack <= t <= hi + slack

    def check_times(self, *ts: float) -> None:
        for t in ts:
            if not self.contains(t):
                raise OutOfWindow(f"t={t} outside window {list(self.window)}")

    def with_coupling(self, g: float) -> "HamiltonianModel":
        if not g > 0:
            raise InvalidArgument(f"coupling must be > 0, got {g}")
        return dataclasses.replace(self, g=float(g))


def _min_eig_lower_bound(model: HamiltonianModel) -> float:
    lo, hi = model.window
    if model.family is Family.SCALAR_PROFILE:
        return model.profile.minimum(lo, hi)
    if model.family is Family.TWO_LEVEL:
        # |b cos(omega t)| <= |b|
        return model.a - abs(model.b)
    return _hermitian_pd_margin(model.A0)


def _hermitian_pd_margin(m: np.ndarray) -> float:
    """Smallest elimination pivot of Hermitian ``m`` (> 0 iff positive definite)."""
    a = np.array(m, dtype=np.complex128)
    d = a.shape[0]
    smallest = math.inf
    for k in range(d):
        pivot = a[k, k].real
        smallest = min(smallest, pivot)
        if pivot <= 0.0:
            return pivot
        a[k + 1 :, k + 1 :] -= np.outer(a[k + 1 :, k], a[k, k + 1 :]) / pivot
    return smallest


def _sampled_min_eig(model: HamiltonianModel, ts: np.ndarray) -> float:
    A = model.generator_many(ts)
    if model.dim == 1:
        return float(A[:, 0, 0].real.min())
    if model.dim == 2:
        tr = (A[:, 0, 0] + A[:, 1, 1]).real
        det = (A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]).real
        disc = np.sqrt(np.maximum(tr * tr / 4 - det, 0.0))
        return float((tr / 2 - disc).min())
    return _hermitian_pd_margin(A[0])


def _validate(model: HamiltonianModel) -> HamiltonianModel:
    lo, hi = model.window
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise BadWindow(f"window [{lo}, {hi}] needs t_min < t_max")
    if not (math.isfinite(model.g) and model.g > 0):
        raise InvalidArgument(f"coupling g must be > 0, got {model.g}")
    if model.family is Family.CONSTANT:
        A0 = model.A0
        if fro(A0 - A0.conj().T) > HERMITIAN_TOL * max(1.0, fro(A0)):
            raise NotHermitian("A0 is not conjugate-symmetric")
    ts = np.linspace(lo, hi, PD_SAMPLES)
    sampled = _sampled_min_eig(model, ts)
    bound = _min_eig_lower_bound(model)
    if not (sampled > 0 and bound > 0):
        raise NotPositiveDefinite(
            f"minimum eigenvalue of A(t) on the window is {min(sampled, bound):.6g}"
        )
    return model


def constant_model(A0, g: float, window) -> HamiltonianModel:
    A0 = cmatrix(A0)
    A0.flags.writeable = False
    return _validate(
        HamiltonianModel(Family.CONSTANT, A0.shape[0], float(g), _window(window), A0=A0)
    )


def scalar_model(kind: str, g: float, window, **params: float) -> HamiltonianModel:
    profile = ScalarProfile(kind, **{k: float(v) for k, v in params.items()})
    if kind not in ("const", "poly", "gauss"):
        raise InvalidArgument(f"unknown profile kind {kind!r}")
    return _validate(
        HamiltonianModel(Family.SCALAR_PROFILE, 1, float(g), _window(window), profile=profile)
    )


def two_level_model(a: float, b: float, g: float, window, omega: float = 0.0) -> HamiltonianModel:
    return _validate(
        HamiltonianModel(
            Family.TWO_LEVEL, 2, float(g), _window(window), a=float(a), b=float(b), omega=float(omega)
        )
    )


def _window(window) -> tuple[float, float]:
    lo, hi = window
    return float(lo), float(hi)


_PROFILE_KEYS = {"const": {"c"}, "poly": {"alpha"}, "gauss": {"beta"}}
_FAMILY_KEYS = {
    "constant": {"A"},
    "scalar_profile": {"profile"},
    "two_level": {"a", "b", "omega"},
}
_COMMON_KEYS = {"dim", "family", "g", "window"}


def _parse_entry(x):
    if isinstance(x, (list, tuple)):
        re, im = x
        return complex(float(re), float(im))
    return complex(float(x))


def build_model(config: Mapping) -> HamiltonianModel:
    """Build and validate a model from a JSON-style mapping.

    Examples of accepted mappings::

        {"dim": 1, "family": "scalar_profile",
         "profile": {"kind": "const", "c": 1.0}, "g": 3.0, "window": [0, 2]}
        {"dim": 2, "family": "two_level", "a": 2.0, "b": 1.0,
         "g": 1.0, "window": [0, 3]}
        {"dim": 2, "family": "constant", "A": [[2, [0, 1]], [[0, -1], 3]],
         "g": 1.0, "window": [0, 1]}

    Complex matrix entries are ``[re, im]`` pairs.  Unknown keys are
    rejected with :class:`InvalidArgument`.
    """
    if not isinstance(config, Mapping):
        raise InvalidArgument("model config must be an object")
    family = config.get("family")
    if family not in _FAMILY_KEYS:
        raise InvalidArgument(f"family must be one of {sorted(_FAMILY_KEYS)}, got {family!r}")
    required = _COMMON_KEYS | ({"A"} if family == "constant" else set())
    required |= {"profile"} if family == "scalar_profile" else set()
    required |= {"a", "b"} if family == "two_level" else set()
    _check_keys(config, _COMMON_KEYS | _FAMILY_KEYS[family], required, "")
    dim = config["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool):
        raise InvalidArgument("dim must be an integer")
    window = config["window"]
    if not isinstance(window, (list, tuple)) or len(window) != 2:
        raise InvalidArgument("window must be [t_min, t_max]")
    g = float(config["g"])

    if family == "scalar_profile":
        if dim != 1:
            raise InvalidArgument("scalar_profile needs dim 1")
        prof = config["profile"]
        if not isinstance(prof, Mapping) or prof.get("kind") not in _PROFILE_KEYS:
            raise InvalidArgument("profile.kind must be one of const, poly, gauss")
        keys = _PROFILE_KEYS[prof["kind"]]
        _check_keys(prof, keys | {"kind"}, keys | {"kind"}, "profile.")
        params = {k: float(prof[k]) for k in keys}
        return scalar_model(prof["kind"], g, window, **params)
    if family == "two_level":
        if dim != 2:
            raise InvalidArgument("two_level needs dim 2")
        return two_level_model(
            float(config["a"]), float(config["b"]), g, window, float(config.get("omega", 0.0))
        )
    rows = config["A"]
    A0 = [[_parse_entry(x) for x in row] for row in rows]
    if len(A0) != dim or any(len(r) != dim for r in A0):
        raise InvalidArgument(f"A must be {dim}x{dim}")
    return constant_model(A0, g, window)


def _check_keys(obj: Mapping, allowed: set, required: set, prefix: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise InvalidArgument(f"unknown key {prefix}{unknown[0]}")
    missing = sorted(required - set(obj))
    if missing:
        raise InvalidArgument(f"missing key {prefix}{missing[0]}")


def eval_H(model: HamiltonianModel, t: float) -> CMatrix:
    model.check_times(t)
    return model.H_many([t])[0].copy()


@dataclass(frozen=True, eq=False)
class PropagatorSample:
    t: float
    t0: float
    u: CMatrix
    steps: int = 0


def _bmm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched ``a @ b``; explicit broadcasting beats matmul for tiny matrices."""
    d = a.shape[-1]
    if d > 2:
        return a @ b
    out = a[..., :, 0, None] * b[..., None, 0, :]
    for j in range(1, d):
        out = out + a[..., :, j, None] * b[..., None, j, :]
    return out


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """``mats[-1] @ ... @ mats[0]`` by pairwise reduction."""
    while mats.shape[0] > 1:
        tail = mats[-1:] if mats.shape[0] % 2 else None
        if tail is not None:
            mats = mats[:-1]
        mats = _bmm(mats[1::2], mats[0::2])
        if tail is not None:
            mats = np.concatenate([mats, tail])
    return mats[0]


def _midpoint_propagator(model: HamiltonianModel, t: float, t0: float, n: int) -> np.ndarray:
    h = (t - t0) / n
    u = identity(model.dim)
    for start in range(0, n, CHUNK):
        idx = np.arange(start, min(n, start + CHUNK))
        steps = expm_batch(-1j * h * model.H_many(t0 + (idx + 0.5) * h))
        u = _ordered_product(steps) @ u
    return u


def exact_propagator(
    model: HamiltonianModel, t: float, t0: float, tol: float = DEFAULT_TOL
) -> PropagatorSample:
    """Solve ``i du/dt = H(t) u`` with ``u(t0, t0) = I``.

    Midpoint-exponential product ``prod exp(-i H(t_mid) dt)``, later steps on
    the left; the step count doubles until two successive products agree to
    ``tol`` in Frobenius norm.
    """
    model.check_times(t, t0)
    if t < t0:
        raise InvalidArgument(f"need t0 <= t, got t0={t0}, t={t}")
    if t == t0:
        return PropagatorSample(t, t0, identity(model.dim), 0)
    n = 1
    prev = _midpoint_propagator(model, t, t0, n)
    for _ in range(MAX_DOUBLINGS):
        n *= 2
        cur = _midpoint_propagator(model, t, t0, n)
        if fro(cur - prev) <= tol:
            return PropagatorSample(t, t0, cur, n)
        prev = cur
    raise NoConvergence(f"propagator from {t0} to {t} not converged after {n} steps")


def exact_history(
    model: HamiltonianModel, t0: float, tol: float = DEFAULT_TOL
) -> Callable[[float], CMatrix]:
    """Memoised ``s -> exact_propagator(model, s, t0).u``."""

    @lru_cache(maxsize=4096)
    def u(s: float) -> CMatrix:
        return exact_propagator(model, float(s), t0, tol).u

    return u


def volterra_residual(
    model: HamiltonianModel,
    u_candidate,
    u_history: Callable[[float], CMatrix],
    t: float,
    t0: float,
    spec: QuadratureSpec = RESIDUAL_QUAD,
) -> float:
    """``|| u_candidate - (I - i int_{t0}^t H(s) u_history(s) ds) ||_F``."""
    model.check_times(t, t0)
    integral = quad_adaptive(lambda s: model.H_many([s])[0] @ u_history(s), t0, t, spec)
    return fro(cmatrix(u_candidate) - (identity(model.dim) - 1j * integral))


@dataclass(frozen=True, eq=False)
class SeriesResult:
    kind: SeriesKind
    terms: list
    partial_sums: list
    term_norms: list
    reference: Optional[CMatrix] = None
    errors: Optional[list] = None

    @property
    def value(self) -> CMatrix:
        return self.partial_sums[-1]


def _series_result(kind: SeriesKind, terms, reference=None) -> SeriesResult:
    sums = []
    acc = None
    for term in terms:
        acc = term.copy() if acc is None else acc + term
        sums.append(acc)
    errors = None if reference is None else [fro(s - reference) for s in sums]
    return SeriesResult(kind, list(terms), sums, [fro(x) for x in terms], reference, errors)


def _truncated_product(later: np.ndarray, earlier: np.ndarray) -> np.ndarray:
    """Coefficients of ``later(lam) @ earlier(lam)`` up to the stored order.

    Arrays have shape ``(..., m+1, d, d)`` holding power-series coefficients.
    """
    m1 = later.shape[-3]
    out = np.zeros(np.broadcast_shapes(later.shape, earlier.shape), dtype=np.complex128)
    for k in range(m1):
        for j in range(k + 1):
            out[..., k, :, :] += _bmm(later[..., j, :, :], earlier[..., k - j, :, :])
    return out


def _ordered_series_product(steps: np.ndarray) -> np.ndarray:
    while steps.shape[0] > 1:
        tail = steps[-1:] if steps.shape[0] % 2 else None
        if tail is not None:
            steps = steps[:-1]
        steps = _truncated_product(steps[1::2], steps[0::2])
        if tail is not None:
            steps = np.concatenate([steps, tail])
    return steps[0]


def _midpoint_dyson(model: HamiltonianModel, t: float, t0: float, order: int, n: int) -> np.ndarray:
    d = model.dim
    h = (t - t0) / n
    acc = np.zeros((order + 1, d, d), dtype=np.complex128)
    acc[0] = identity(d)
    for start in range(0, n, CHUNK):
        idx = np.arange(start, min(n, start + CHUNK))
        x = -1j * h * model.H_many(t0 + (idx + 0.5) * h)
        steps = np.empty((idx.size, order + 1, d, d), dtype=np.complex128)
        steps[:, 0] = identity(d)
        for k in range(1, order + 1):
            steps[:, k] = _bmm(steps[:, k - 1], x) / k
        acc = _truncated_product(_ordered_series_product(steps), acc)
    return acc


def dyson_expansion(
    model: HamiltonianModel,
    t: float,
    t0: float,
    order: int,
    tol: float = DEFAULT_TOL,
    reference: Optional[CMatrix] = None,
) -> SeriesResult:
    """Dyson terms ``U_0 .. U_order`` of the propagator from ``t0`` to ``t``.

    ``U_n`` is the coefficient of ``lam^n`` in the time-ordered exponential of
    ``-i lam H``.  All orders are stepped together: each midpoint step
    ``exp(-i lam H h)`` is kept as a truncated power series in ``lam`` and the
    steps are multiplied with truncation.  The step count doubles as in
    :func:`exact_propagator`.  Pass ``reference`` (e.g. the exact propagator)
    to fill ``errors``.
    """
    if not 0 <= order <= 12:
        raise InvalidArgument(f"order {order} outside [0, 12]")
    model.check_times(t, t0)
    if t < t0:
        raise InvalidArgument(f"need t0 <= t, got t0={t0}, t={t}")
    d = model.dim
    if order == 0 or t == t0:
        terms = [identity(d)] + [np.zeros((d, d), dtype=np.complex128)] * order
        return _series_result(SeriesKind.DYSON, terms, reference)
    n = 1
    prev = _midpoint_dyson(model, t, t0, order, n)
    for _ in range(MAX_DOUBLINGS):
        n *= 2
        cur = _midpoint_dyson(model, t, t0, order, n)
        if fro(cur - prev) <= tol:
            return _series_result(SeriesKind.DYSON, list(cur), reference)
        prev = cur
    raise NoConvergence(f"Dyson cascade to order {order} not converged after {n} steps")


def dyson_term_oracle(
    model: HamiltonianModel,
    t: float,
    t0: float,
    n: int,
    spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-11),
) -> CMatrix:
    """n-th Dyson term by direct nested quadrature (``n <= 3``).

    ``(-i)^n int_{t0}^t dt1 int_{t0}^{t1} dt2 ... H(t1) H(t2) ... H(tn)``.
    Cost grows like ``q^n`` in the number of quadrature nodes.
    """
    if not 0 <= n <= 3:
        raise InvalidArgument(f"oracle order {n} outside [0, 3]")
    model.check_times(t, t0)

    def nested(upper: float, level: int) -> np.ndarray:
        if level == 0:
            return identity(model.dim)
        return -1j * quad_adaptive(
            lambda s: model.H_many([s])[0] @ nested(s, level - 1), t0, upper, spec
        )

    return nested(t, n)


@dataclass(frozen=True)
class OrderErrorRow:
    g: float
    order: int
    error: float


def order_error_sweep(
    model: HamiltonianModel,
    t: float,
    t0: float,
    g_values,
    orders,
    tol: float = DEFAULT_TOL,
) -> list[OrderErrorRow]:
    """``||S_m - u_exact||_F`` for every coupling in ``g_values`` and order in ``orders``."""
    rows = []
    top = max(orders)
    for g in g_values:
        m = model.with_coupling(g)
        exact = exact_propagator(m, t, t0, tol).u
        series = dyson_expansion(m, t, t0, top, tol, reference=exact)
        rows.extend(OrderErrorRow(float(g), k, series.errors[k]) for k in orders)
    return rows


def fitted_slopes(rows: list[OrderErrorRow]) -> dict[int, float]:
    """Least-squares slope of ``log2 error`` against ``log2 g`` per order."""
    slopes = {}
    for k in sorted({r.order for r in rows}):
        pts = [(math.log2(r.g), math.log2(r.error)) for r in rows if r.order == k]
        x = np.array([p[0] for p in pts])
        y = np.array([p[1] for p in pts])
        slopes[k] = float(np.polyfit(x, y, 1)[0])
    return slopes
