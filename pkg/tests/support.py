"""Shared test helpers and closed-form oracles."""

import math
from pathlib import Path

import numpy as np

from scx.propagator import constant_model, scalar_model, two_level_model

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)


def random_hpd(rng, d, shift=0.5):
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return x @ x.conj().T + shift * np.eye(d)


def random_model(rng):
    """Random scalar or two-level model with window [0, 2]."""
    kind = rng.integers(4)
    g = float(rng.uniform(0.3, 3.0))
    if kind == 0:
        return scalar_model("const", g, (0.0, 2.0), c=float(rng.uniform(0.5, 2.0)))
    if kind == 1:
        return scalar_model("poly", g, (0.0, 2.0), alpha=float(rng.uniform(0.0, 1.0)))
    if kind == 2:
        b = float(rng.uniform(-1.0, 1.0))
        return two_level_model(abs(b) + float(rng.uniform(0.2, 1.5)), b, g, (0.0, 2.0),
                               omega=float(rng.uniform(0.0, 2.0)))
    return constant_model(random_hpd(rng, 2), g, (0.0, 2.0))


def exact_scalar_const(g, t, t0=0.0):
    return np.exp(-1j * g * (t - t0))


def mvt_defect_closed_form(theta, s):
    """|exp(-i theta s) - (1 - exp(-i theta))/(i theta)| for u = exp(-i theta t/t_k)."""
    z = (1 - np.exp(-1j * theta)) / (1j * theta)
    return abs(np.exp(-1j * theta * s) - z)


def min_defect_closed_form(theta):
    return 1.0 - 2.0 * math.sin(theta / 2.0) / theta


GOLDEN = Path(__file__).parent / "golden"
MODELS = GOLDEN / "models"

# golden file name -> CLI arguments (without --out)
GOLDEN_CASES = {
    "recursion_backward.csv": ["demo", "recursion", "--direction", "backward", "--start", "25",
                               "--seed", "0", "--stop", "5"],
    "recursion_forward.csv": ["demo", "recursion", "--direction", "forward", "--stop", "20"],
    "sweep_order_scalar.csv": ["sweep", "--model", str(MODELS / "scalar_g1.json"), "--param", "g",
                               "--values", "0.1,0.2,0.4", "--probe", "order-error", "--t", "1"],
    "sweep_order_two_level.csv": ["sweep", "--model", str(MODELS / "two_level.json"), "--param", "g",
                                  "--values", "0.1,0.2,0.4", "--probe", "order-error", "--t", "1"],
    "dyson_scalar.csv": ["propagate", "--model", str(MODELS / "scalar_g05.json"), "--method", "dyson",
                         "--order", "2", "--t", "1"],
    "strong_scalar.csv": ["strong", "--model", str(MODELS / "scalar_g3.json"), "--grid", "1.0,0.7",
                          "--target", "0.5"],
}
