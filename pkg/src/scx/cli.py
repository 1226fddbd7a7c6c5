"""``scx`` command-line front end.

Exit status: 0 success, 1 usage error, 2 numeric/library failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import InvalidArgument, ParseError, ScxError, ValidationError
from .numkit import fro, identity
from .propagator import (
    HamiltonianModel,
    build_model,
    dyson_expansion,
    exact_propagator,
    fitted_slopes,
    order_error_sweep,
)
from .recursion_lab import (
    GeometricSeriesSpec,
    In_oracle,
    backward_recursion,
    forward_recursion,
    geometric_partial_sums,
)
from .strong_expansion import (
    TimeGrid,
    defect_rel,
    mvt_optimal_grid,
    solve_mvt_time,
    strong_unroll,
    term_scaling_probe,
)
from .tables import ResultTable, emit_table


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def load_model_config(path) -> HamiltonianModel:
    """Read a JSON model description and build the model.

    Raises
    ------
    ParseError
        Unreadable file or malformed JSON.
    ValidationError
        Any rejection by :func:`build_model`; ``path`` names the field.
    """
    try:
        config = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    family = config.get("family", "?") if isinstance(config, dict) else "?"
    try:
        return build_model(config)
    except ScxError as exc:
        raise ValidationError(f"{path}:{family}", exc) from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path}:{family}", InvalidArgument(str(exc))) from exc


def _reals(text: str, flag: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated reals, got {text!r}")
    if not values:
        raise UsageError(f"{flag}: empty list")
    return values


def _matrix_columns(prefix: str, dim: int) -> list[str]:
    if dim == 1:
        return [prefix]
    return [f"{prefix}{i}{j}" for i in range(dim) for j in range(dim)]


def _matrix_values(m) -> list[complex]:
    return [complex(z) for z in np.asarray(m).ravel()]


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _fmt_complex(z: complex) -> str:
    return f"{z.real:.6f}{z.imag:+.6f}i"


# -- subcommands ------------------------------------------------------------


def cmd_geometric(args) -> str:
    series = geometric_partial_sums(GeometricSeriesSpec(args.a, args.mode, args.terms))
    sums = series.partial_sums
    if args.out:
        rows = [(m, s, s - series.limit) for m, s in enumerate(sums, start=1)]
        emit_table(ResultTable(("m", "partial_sum", "error"), rows), args.out)
    final = sums[-1] if sums else float("nan")
    return (
        f"geometric mode={args.mode} a={_fmt(args.a)} terms={len(sums)} "
        f"final={final:.10g} limit={series.limit:.6f} "
        f"diverged={'yes' if series.diverged else 'no'}"
    )


def _oracle_or_nan(n: int) -> float:
    return In_oracle(n) if 0 <= n <= 60 else float("nan")


def cmd_recursion(args) -> str:
    if args.direction == "forward":
        if args.start is None:
            args.start = 0
        seed = args.seed
        if seed is None:
            seed = 1.0 - math.exp(-1.0) if args.start == 0 else In_oracle(args.start)
        if args.stop <= args.start:
            raise UsageError("--stop: forward recursion needs --stop > --start")
        table = forward_recursion(args.stop, seed, n_start=args.start)
    else:
        if args.start is None:
            raise UsageError("--start: required for backward recursion")
        seed = 0.0 if args.seed is None else args.seed
        if not args.start > args.stop >= 0:
            raise UsageError("--stop: backward recursion needs --start > --stop >= 0")
        table = backward_recursion(args.start, seed, args.stop)
    rows = []
    for n, v in zip(table.indices, table.values):
        ref = _oracle_or_nan(n)
        rows.append((n, v, ref, abs(v - ref)))
    emit_table(ResultTable(("n", "I", "oracle", "abs_error"), rows), args.out)
    n_last, v_last, ref_last, _ = rows[-1]
    return (
        f"recursion {args.direction} seed={seed!r} I_{n_last}={v_last:.15g} "
        f"oracle={ref_last:.15g} rows={len(rows)} -> {args.out}"
    )


def cmd_propagate(args) -> str:
    model = load_model_config(args.model)
    t0 = model.window[0] if args.t0 is None else args.t0
    exact = exact_propagator(model, args.t, t0, args.tol)
    cols = _matrix_columns("u", model.dim)
    if args.method == "exact":
        u = exact.u
        unitarity = fro(u.conj().T @ u - identity(model.dim))
        row = (args.t, t0, exact.steps, unitarity, *_matrix_values(u))
        table = ResultTable(("t", "t0", "steps", "unitarity_defect", *cols), [row])
        emit_table(table, args.out)
        return f"propagate exact t={_fmt(args.t)} steps={exact.steps} unitarity_defect={unitarity:.3e} -> {args.out}"
    if args.order is None:
        raise UsageError("--order: required for --method dyson")
    series = dyson_expansion(model, args.t, t0, args.order, args.tol, reference=exact.u)
    rows = [
        (n, series.term_norms[n], series.errors[n], *_matrix_values(series.partial_sums[n]))
        for n in range(args.order + 1)
    ]
    table = ResultTable(("order", "term_norm", "error", *cols), rows)
    emit_table(table, args.out)
    return f"propagate dyson order={args.order} t={_fmt(args.t)} error={series.errors[-1]:.3e} -> {args.out}"


def _seed(args, model: HamiltonianModel, t1: float, t0: float):
    if args.seed_mode == "exact":
        return exact_propagator(model, t1, t0).u
    if args.seed_re is None:
        raise UsageError("--seed-re: required with --seed-mode value")
    z = complex(args.seed_re, args.seed_im or 0.0)
    return z * identity(model.dim)


def cmd_strong(args) -> str:
    model = load_model_config(args.model)
    t0 = model.window[0] if args.t0 is None else args.t0
    points = _reals(args.grid, "--grid")
    if args.mvt_steps is not None:
        if args.mvt_steps < 2:
            raise UsageError("--mvt-steps: needs at least 2")
        grid = mvt_optimal_grid(model, points[0], args.mvt_steps, t0)
    else:
        if args.target is None:
            raise UsageError("--target: required unless --mvt-steps is given")
        try:
            grid = TimeGrid(t0, tuple(points), args.target)
        except InvalidArgument as exc:
            raise UsageError(f"--grid: {exc}")
    u1 = _seed(args, model, grid.points[0], t0)
    reference = exact_propagator(model, grid.target, t0).u
    series = strong_unroll(model, grid, u1, reference=reference)
    cols = _matrix_columns("sum", model.dim)
    rows = [
        (j, series.term_norms[j - 1], series.errors[j - 1], *_matrix_values(s))
        for j, s in enumerate(series.partial_sums, start=1)
    ]
    emit_table(ResultTable(("j", "term_norm", "error", *cols), rows), args.out)
    value = series.value
    shown = _fmt_complex(complex(value[0, 0])) if model.dim == 1 else f"||u||={fro(value):.6f}"
    times = ",".join(_fmt(t) for t in grid.points)
    return (
        f"strong grid={times} target={_fmt(grid.target)} u={shown} "
        f"error={series.errors[-1]:.3e} -> {args.out}"
    )


def cmd_mvt(args) -> str:
    model = load_model_config(args.model)
    t0 = model.window[0] if args.t0 is None else args.t0
    if args.candidate is None:
        report = solve_mvt_time(model, args.tk, t0=t0)
    else:
        report = defect_rel(model, args.tk, args.candidate, t0=t0)
    table = ResultTable(("t_k", "t_candidate", "defect_rel"),
                        [(args.tk, report.t_candidate, report.defect_rel)])
    emit_table(table, args.out)
    return f"mvt t_k={_fmt(args.tk)} t_candidate={report.t_candidate:.9f} defect_rel={report.defect_rel:.6e}"


def cmd_sweep(args) -> str:
    model = load_model_config(args.model)
    t0 = model.window[0] if args.t0 is None else args.t0
    values = _reals(args.values, "--values")
    if any(not v > 0 for v in values):
        raise UsageError("--values: couplings must be > 0")
    fmt = "csv+svg" if args.svg else "csv"
    if args.probe == "term-scaling":
        if args.grid is None:
            raise UsageError("--grid: required for --probe term-scaling")
        try:
            grid = TimeGrid(t0, tuple(_reals(args.grid, "--grid")), t0)
        except InvalidArgument as exc:
            raise UsageError(f"--grid: {exc}")
        factors = [v / model.g for v in values]
        rows = [
            (r.g, r.factor, r.j, r.term_norm, r.ratio, r.expected)
            for r in term_scaling_probe(model, grid, factors)
        ]
        table = ResultTable(("g", "factor", "j", "term_norm", "ratio", "expected"), rows)
        emit_table(table, args.out, fmt, args.svg, plot=("g", "term_norm"),
                   log_y=True, log_x=True, series="j")
        worst = max((abs(r[4] / r[5] - 1.0) for r in rows), default=0.0)
        return f"sweep term-scaling rows={len(rows)} max_rel_dev={worst:.3e} -> {args.out}"
    if args.t is None:
        raise UsageError("--t: required for --probe order-error")
    orders = list(range(1, args.order + 1))
    result = order_error_sweep(model, args.t, t0, values, orders)
    table = ResultTable(("g", "order", "error"), [(r.g, r.order, r.error) for r in result])
    emit_table(table, args.out, fmt, args.svg, plot=("g", "error"),
               log_y=True, log_x=True, series="order")
    if len(values) > 1:
        slopes = fitted_slopes(result)
        text = " ".join(f"m{k}={s:.3f}" for k, s in slopes.items())
    else:
        text = "n/a"
    return f"sweep order-error slopes {text} -> {args.out}"


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="scx", description="Weak- and strong-coupling expansion laboratory.")
    p.add_argument("--version", action="version", version=f"scx {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", help="geometric-series and recursion demonstrations")
    demo_sub = demo.add_subparsers(dest="demo", required=True)
    geo = demo_sub.add_parser("geometric", help="iterate x = 1 - a x")
    geo.add_argument("--a", type=float, required=True)
    geo.add_argument("--mode", choices=["weak", "strong"], required=True)
    geo.add_argument("--terms", type=int, required=True)
    geo.add_argument("--out")
    geo.set_defaults(func=cmd_geometric)

    rec = demo_sub.add_parser("recursion", help="forward/backward recursion for I_n")
    rec.add_argument("--direction", choices=["forward", "backward"], required=True)
    rec.add_argument("--start", type=int)
    rec.add_argument("--seed", type=float)
    rec.add_argument("--stop", type=int, required=True)
    rec.add_argument("--out", required=True)
    rec.set_defaults(func=cmd_recursion)

    prop = sub.add_parser("propagate", help="exact propagator or Dyson series")
    prop.add_argument("--model", required=True)
    prop.add_argument("--method", choices=["exact", "dyson"], required=True)
    prop.add_argument("--order", type=int)
    prop.add_argument("--t", type=float, required=True)
    prop.add_argument("--t0", type=float)
    prop.add_argument("--tol", type=float, default=1e-10)
    prop.add_argument("--out", required=True)
    prop.set_defaults(func=cmd_propagate)

    strong = sub.add_parser("strong", help="strong-coupling backward series")
    strong.add_argument("--model", required=True)
    strong.add_argument("--grid", required=True, help="t_1,...,t_{n-1}, descending")
    strong.add_argument("--target", type=float)
    strong.add_argument("--t0", type=float)
    strong.add_argument("--seed-mode", choices=["exact", "value"], default="exact")
    strong.add_argument("--seed-re", type=float)
    strong.add_argument("--seed-im", type=float)
    strong.add_argument("--mvt-steps", type=int,
                        help="build an n-point grid of defect-minimising times from t_1")
    strong.add_argument("--out", required=True)
    strong.set_defaults(func=cmd_strong)

    mvt = sub.add_parser("mvt", help="mean-value defect at a candidate or optimal time")
    mvt.add_argument("--model", required=True)
    mvt.add_argument("--tk", type=float, required=True)
    mvt.add_argument("--candidate", type=float)
    mvt.add_argument("--t0", type=float)
    mvt.add_argument("--out", required=True)
    mvt.set_defaults(func=cmd_mvt)

    sweep = sub.add_parser("sweep", help="coupling sweeps")
    sweep.add_argument("--model", required=True)
    sweep.add_argument("--param", choices=["g"], required=True)
    sweep.add_argument("--values", required=True)
    sweep.add_argument("--probe", choices=["term-scaling", "order-error"], required=True)
    sweep.add_argument("--grid")
    sweep.add_argument("--t", type=float)
    sweep.add_argument("--t0", type=float)
    sweep.add_argument("--order", type=int, default=3)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--svg")
    sweep.set_defaults(func=cmd_sweep)
    return p


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        summary = args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ScxError as exc:
        print(f"{exc.name}: {exc}", file=sys.stderr)
        return 2
    print(summary)
    return 0


def main() -> None:
    sys.exit(run_command())
