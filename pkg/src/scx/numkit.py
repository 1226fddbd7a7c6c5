"""Small dense complex matrices, matrix inverse/exponential and quadrature.

A ``CMatrix`` is a square ``complex128`` numpy array of dimension 1..8.  All
functions here are pure; inputs are never modified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np

from .errors import InvalidArgument, InvalidMatrix, NoConvergence, SingularMatrix

MAX_DIM = 8
PIVOT_RTOL = 1e-13

CMatrix = np.ndarray
MatrixLike = Union[np.ndarray, complex, float, list]


def cmatrix(value: MatrixLike) -> CMatrix:
    """Validate and copy ``value`` into a square complex matrix.

    Scalars become 1x1 matrices.
    """
    m = np.array(value, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {m.shape}")
    if not 1 <= m.shape[0] <= MAX_DIM:
        raise InvalidMatrix(f"dimension {m.shape[0]} outside [1, {MAX_DIM}]")
    if not np.all(np.isfinite(m)):
        raise InvalidMatrix("matrix has non-finite entries")
    return m


def identity(dim: int) -> CMatrix:
    return np.eye(dim, dtype=np.complex128)


def fro(m) -> float:
    """Frobenius norm (absolute value for scalars)."""
    return float(np.linalg.norm(np.asarray(m, dtype=np.complex128).ravel()))


def mat_inverse(m: MatrixLike) -> CMatrix:
    """Invert ``m`` by Gauss-Jordan elimination with partial (row) pivoting.

    Raises
    ------
    SingularMatrix
        If a pivot falls below ``1e-13 * ||m||_F``.
    """
    a = cmatrix(m)
    d = a.shape[0]
    scale = fro(a)
    threshold = PIVOT_RTOL * scale
    aug = np.concatenate([a, identity(d)], axis=1)
    for col in range(d):
        p = col + int(np.argmax(np.abs(aug[col:, col])))
        pivot = aug[p, col]
        if scale == 0.0 or abs(pivot) < threshold:
            raise SingularMatrix(
                f"pivot {abs(pivot):.3e} below {threshold:.3e} in column {col}"
            )
        if p != col:
            aug[[col, p]] = aug[[p, col]]
        aug[col] /= pivot
        others = np.arange(d) != col
        aug[others] -= np.outer(aug[others, col], aug[col])
    return aug[:, d:].copy()


def _sinhc(q: np.ndarray) -> np.ndarray:
    small = np.abs(q) < 1e-3
    safe = np.where(small, 1.0, q)
    q2 = q * q
    series = 1.0 + q2 / 6.0 + q2 * q2 / 120.0
    return np.where(small, series, np.sinh(safe) / safe)


def expm_batch(ms: np.ndarray) -> np.ndarray:
    """Matrix exponential of a stack ``(n, d, d)``; closed form for ``d <= 2``."""
    ms = np.asarray(ms, dtype=np.complex128)
    d = ms.shape[-1]
    if d == 1:
        return np.exp(ms)
    if d == 2:
        # m = s*I + N with N traceless, N^2 = delta*I
        s = 0.5 * (ms[..., 0, 0] + ms[..., 1, 1])
        n00 = ms[..., 0, 0] - s
        delta = n00 * n00 + ms[..., 0, 1] * ms[..., 1, 0]
        q = np.sqrt(delta)
        c = np.cosh(q)
        sc = _sinhc(q)
        es = np.exp(s)
        out = np.empty_like(ms)
        out[..., 0, 0] = es * (c + sc * n00)
        out[..., 1, 1] = es * (c - sc * n00)
        out[..., 0, 1] = es * sc * ms[..., 0, 1]
        out[..., 1, 0] = es * sc * ms[..., 1, 0]
        return out
    flat = ms.reshape(-1, d, d)
    out = np.stack([_expm_taylor(x) for x in flat])
    return out.reshape(ms.shape)


def _expm_taylor(m: np.ndarray, order: int = 18) -> np.ndarray:
    d = m.shape[0]
    norm = fro(m)
    squarings = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    x = m / 2.0**squarings
    result = np.eye(d, dtype=np.complex128)
    term = np.eye(d, dtype=np.complex128)
    for k in range(1, order + 1):
        term = term @ x / k
        result = result + term
    for _ in range(squarings):
        result = result @ result
    return result


def mat_exp(m: MatrixLike) -> CMatrix:
    """Return ``e^m``.

    ``d <= 2`` uses the closed form ``e^s (cosh q I + sinh(q)/q N)`` where
    ``m = s I + N`` and ``N^2 = q^2 I``; larger matrices use scaling and
    squaring of a degree-18 Taylor polynomial.
    """
    return expm_batch(cmatrix(m)[None])[0]


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-12
    max_panel_doublings: int = 12
    points_per_panel: int = 16

    def __post_init__(self):
        if not 1e-14 <= self.rel_tol <= 1e-2:
            raise InvalidArgument(f"rel_tol {self.rel_tol} outside [1e-14, 1e-2]")
        if self.max_panel_doublings < 1:
            raise InvalidArgument("max_panel_doublings must be >= 1")
        if self.points_per_panel < 1:
            raise InvalidArgument("points_per_panel must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def _composite(f, a: float, b: float, panels: int, x, w):
    h = (b - a) / panels
    nodes = (a + h * np.arange(panels))[:, None] + 0.5 * h * (x + 1.0)
    weights = np.tile(0.5 * h * w, panels)
    values = np.array([f(t) for t in nodes.ravel()], dtype=np.complex128)
    flat = values.reshape(values.shape[0], -1)
    total = (weights @ flat).reshape(values.shape[1:])
    magnitude = float(np.abs(weights) @ np.linalg.norm(flat, axis=1))
    return total, magnitude


def quad_adaptive(
    f: Callable[[float], MatrixLike],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
):
    """Integrate ``f`` over ``[a, b]`` with composite Gauss-Legendre panels.

    The panel count is doubled until two successive estimates agree to
    ``spec.rel_tol`` in Frobenius norm.  ``f`` may return a scalar or an
    array; the result has the same shape, dtype complex.

    Raises
    ------
    NoConvergence
        If ``spec.max_panel_doublings`` doublings do not reach the tolerance.
    """
    if not (math.isfinite(a) and math.isfinite(b)) or b < a:
        raise InvalidArgument(f"need finite a <= b, got [{a}, {b}]")
    if a == b:
        return np.zeros_like(np.asarray(f(a), dtype=np.complex128))
    x, w = gauss_legendre(spec.points_per_panel)
    prev, _ = _composite(f, a, b, 1, x, w)
    diff = math.inf
    for k in range(1, spec.max_panel_doublings + 1):
        cur, magnitude = _composite(f, a, b, 2**k, x, w)
        if not np.all(np.isfinite(cur)):
            raise NoConvergence("integrand produced non-finite values")
        diff = fro(cur - prev)
        if diff <= spec.rel_tol * fro(cur) + 1e-15 * magnitude:
            return cur
        prev = cur
    raise NoConvergence(
        f"quadrature on [{a}, {b}] stalled at difference {diff:.3e} "
        f"after {spec.max_panel_doublings} panel doublings"
    )
