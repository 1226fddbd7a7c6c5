"""Result tables: CSV and minimal SVG line plots."""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape

from .errors import InvalidArgument, IoError


def _is_complex(v) -> bool:
    return isinstance(v, numbers.Complex) and not isinstance(v, numbers.Real)


@dataclass(frozen=True)
class ResultTable:
    """Named columns and rows of ints, floats or complex numbers.

    A column holding complex values is written as ``<name>_re,<name>_im``.
    """

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    complex_columns: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise InvalidArgument(
                    f"row {i} has {len(row)} values for {len(self.columns)} columns"
                )
        found = {
            name
            for k, name in enumerate(self.columns)
            if any(_is_complex(r[k]) for r in self.rows)
        }
        object.__setattr__(self, "complex_columns", frozenset(self.complex_columns) | found)

    def header(self) -> list[str]:
        out = []
        for name in self.columns:
            out += [f"{name}_re", f"{name}_im"] if name in self.complex_columns else [name]
        return out

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


def format_number(x) -> str:
    """Integers verbatim; floats with 17 significant digits (always round-trips).

    >>> format_number(0.05)
    '5.0000000000000003e-2'
    """
    if isinstance(x, numbers.Integral) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    mantissa, exponent = f"{x:.16e}".split("e")
    return f"{mantissa}e{int(exponent)}"


def to_csv(table: ResultTable) -> str:
    lines = [",".join(table.header())]
    for row in table.rows:
        cells = []
        for name, v in zip(table.columns, row):
            if name in table.complex_columns:
                z = complex(v)
                cells += [format_number(z.real), format_number(z.imag)]
            else:
                cells.append(format_number(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def svg_plot(
    table: ResultTable,
    x: str,
    y: str,
    log_y: bool = False,
    series: Optional[str] = None,
    log_x: bool = False,
    width: int = 640,
    height: int = 420,
) -> str:
    """Polyline plot of column ``y`` against ``x``, one line per ``series`` value."""
    xs = [abs(float(v)) if log_x else float(v) for v in table.column(x)]
    ys = [abs(float(v)) if log_y else float(v) for v in table.column(y)]
    keys = table.column(series) if series else [None] * len(xs)
    pts = [
        (math.log10(a) if log_x else a, math.log10(b) if log_y else b, k)
        for a, b, k in zip(xs, ys, keys)
        if math.isfinite(a) and math.isfinite(b)
        and (b > 0 or not log_y) and (a > 0 or not log_x)
    ]
    margin = 60
    pw, ph = width - 2 * margin, height - 2 * margin
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
    ]
    ylabel = f"log10 |{y}|" if log_y else y
    xlabel = f"log10 {x}" if log_x else x
    parts.append(
        f'<text x="{width / 2:.1f}" y="{height - 15}" text-anchor="middle">{escape(xlabel)}</text>'
    )
    parts.append(f'<text x="10" y="{margin - 20}">{escape(ylabel)}</text>')
    if pts:
        x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
        y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
        x1 = x1 if x1 > x0 else x0 + 1.0
        y1 = y1 if y1 > y0 else y0 + 1.0

        def sx(v):
            return margin + (v - x0) / (x1 - x0) * pw

        def sy(v):
            return height - margin - (v - y0) / (y1 - y0) * ph

        for label, val in ((f"{x0:.4g}", x0), (f"{x1:.4g}", x1)):
            parts.append(f'<text x="{sx(val):.1f}" y="{height - margin + 18}" '
                         f'text-anchor="middle">{label}</text>')
        for label, val in ((f"{y0:.4g}", y0), (f"{y1:.4g}", y1)):
            parts.append(f'<text x="{margin - 5}" y="{sy(val):.1f}" '
                         f'text-anchor="end">{label}</text>')
        palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
        groups: dict = {}
        for a, b, k in pts:
            groups.setdefault(k, []).append((a, b))
        for i, (k, line) in enumerate(groups.items()):
            coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in line)
            colour = palette[i % len(palette)]
            parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" '
                         f'points="{coords}"/>')
            if k is not None:
                parts.append(f'<text x="{width - margin + 4}" y="{margin + 16 * i}" '
                             f'fill="{colour}">{escape(f"{series}={k}")}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_table(
    table: ResultTable,
    path,
    format: str = "csv",
    svg_path=None,
    plot: Optional[Sequence[str]] = None,
    log_y: bool = False,
    series: Optional[str] = None,
    log_x: bool = False,
) -> None:
    """Write ``table`` as CSV; with ``format="csv+svg"`` also plot ``plot=(x, y)``."""
    if format not in ("csv", "csv+svg"):
        raise InvalidArgument(f"unknown format {format!r}")
    try:
        Path(path).write_text(to_csv(table), newline="")
        if format == "csv+svg":
            if plot is None:
                raise InvalidArgument("svg output needs the plotted (x, y) columns")
            target = Path(svg_path) if svg_path else Path(path).with_suffix(".svg")
            target.write_text(svg_plot(table, *plot, log_y=log_y, series=series, log_x=log_x))
    except OSError as exc:
        raise IoError(str(exc)) from exc
