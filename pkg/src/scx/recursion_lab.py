"""Two toy problems where the direction of iteration decides stability.

* ``x = 1 - a x`` solved by fixed-point iteration, either in the form
  ``x <- 1 - a x`` (converges for ``|a| < 1``) or ``x <- 1/a - x/a``
  (converges for ``|a| > 1``); both target ``1/(1+a)``.
* ``I_n = e^-1 * int_0^1 x^n e^x dx`` through ``I_n = 1 - n I_{n-1}``
  (forward, amplifies error by ``n!``) or ``I_{n-1} = (1 - I_n)/n``
  (backward, damps it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import InvalidArgument
from .numkit import QuadratureSpec, quad_adaptive

DIVERGENCE_GUARD = 1e12
ORACLE_QUAD = QuadratureSpec(rel_tol=1e-13, max_panel_doublings=14)


class Mode(str, Enum):
    WEAK = "weak"
    STRONG = "strong"


class Direction(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True)
class GeometricSeriesSpec:
    a: float
    mode: Mode
    n_terms: int

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not math.isfinite(self.a) or abs(self.a) == 1.0:
            raise InvalidArgument(f"need finite a with |a| != 1, got {self.a}")
        if self.mode is Mode.STRONG and self.a == 0.0:
            raise InvalidArgument("strong mode needs a != 0")
        if self.n_terms < 1:
            raise InvalidArgument("n_terms must be >= 1")


@dataclass(frozen=True)
class GeometricSeries:
    spec: GeometricSeriesSpec
    partial_sums: list[float]
    diverged: bool

    @property
    def limit(self) -> float:
        return 1.0 / (1.0 + self.spec.a)


def geometric_partial_sums(spec: GeometricSeriesSpec) -> GeometricSeries:
    """Iterate ``x = 1 - a x`` from ``x = 0`` in the form chosen by ``spec.mode``.

    The m-th iterate equals the partial sum of ``sum (-a)^k`` (weak) or
    ``sum (-1)^(k-1) a^-k`` (strong).  Iteration stops early, with
    ``diverged`` set, once an iterate exceeds ``1e12`` in magnitude; that
    iterate is dropped.
    """
    a = spec.a
    x = 0.0
    sums: list[float] = []
    for _ in range(spec.n_terms):
        x = 1.0 - a * x if spec.mode is Mode.WEAK else (1.0 - x) / a
        if not abs(x) <= DIVERGENCE_GUARD:
            return GeometricSeries(spec, sums, True)
        sums.append(x)
    return GeometricSeries(spec, sums, False)


def In_oracle(n: int) -> float:
    """``e^-1 * int_0^1 x^n e^x dx`` by adaptive quadrature (rel. tol 1e-13)."""
    if not 0 <= n <= 60:
        raise InvalidArgument(f"n={n} outside [0, 60]")
    val = quad_adaptive(lambda x: x**n * math.exp(x - 1.0), 0.0, 1.0, ORACLE_QUAD)
    return float(val.real)


@dataclass(frozen=True)
class RecursionTable:
    direction: Direction
    indices: list[int]
    values: list[float]
    seed_index: int
    seed_value: float

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise InvalidArgument("one value per index required")
        step = 1 if self.direction is Direction.FORWARD else -1
        if any(j - i != step for i, j in zip(self.indices, self.indices[1:])):
            raise InvalidArgument("indices must be consecutive in the recursion direction")

    def value_at(self, n: int) -> float:
        return self.values[self.indices.index(n)]

    @property
    def last(self) -> float:
        return self.values[-1]


def forward_recursion(n_max: int, seed_I0: float, n_start: int = 0) -> RecursionTable:
    """Run ``I_n = 1 - n I_{n-1}`` upward from ``I_{n_start} = seed_I0``.

    No stabilisation is applied.  Values past double overflow stay as inf/nan.
    """
    if n_max <= n_start or n_start < 0:
        raise InvalidArgument(f"need 0 <= n_start < n_max, got {n_start}, {n_max}")
    indices = [n_start]
    values = [float(seed_I0)]
    for n in range(n_start + 1, n_max + 1):
        values.append(1.0 - n * values[-1])
        indices.append(n)
    return RecursionTable(Direction.FORWARD, indices, values, n_start, float(seed_I0))


def backward_recursion(n_start: int, seed: float, n_stop: int) -> RecursionTable:
    """Run ``I_{n-1} = (1 - I_n)/n`` downward from ``I_{n_start} = seed``."""
    if not n_start > n_stop >= 0:
        raise InvalidArgument(f"need n_start > n_stop >= 0, got {n_start}, {n_stop}")
    indices = [n_start]
    values = [float(seed)]
    for n in range(n_start, n_stop, -1):
        values.append((1.0 - values[-1]) / n)
        indices.append(n - 1)
    return RecursionTable(Direction.BACKWARD, indices, values, n_start, float(seed))
