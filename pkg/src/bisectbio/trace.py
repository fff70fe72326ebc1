"""Benchmark trace records, CSV emission, and a deterministic SVG plotter.

The SVG writer is hand-rolled (no plotting library) so that identical
inputs produce byte-identical output; floats are formatted with a fixed
precision and there are no timestamps or generated ids.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

__all__ = [
    "TraceRecord",
    "PlotSpec",
    "emit_trace_csv",
    "emit_svg_plot",
    "oracle_calls",
    "calls_to_target",
]

CSV_HEADER = "solver,iter,fn_evals,grad_evals,prox_calls,wall_seconds,f_gap,g_gap"

LOG_FLOOR = 1e-16


@dataclass
class TraceRecord:
    """One benchmark sample: cumulative oracle work and current gaps.

    ``f_gap`` is signed (candidates may undershoot the bilevel optimum);
    ``g_gap`` is clamped to be nonnegative.
    """

    solver: str
    iterate_index: int
    fn_evals: int
    grad_evals: int
    prox_calls: int
    wall_seconds: float
    f_gap: float
    g_gap: float

    def __post_init__(self):
        self.g_gap = max(0.0, self.g_gap)


def oracle_calls(record: TraceRecord) -> int:
    return record.fn_evals + record.grad_evals + record.prox_calls


def calls_to_target(
    records: list[TraceRecord],
    f_tol: float,
    g_tol: float,
    f_gap_mode: str = "signed",
) -> int | None:
    """Cumulative oracle calls at the first record meeting both gap targets.

    ``signed`` mode accepts any f_gap <= f_tol (matching the one-sided
    optimality target); ``abs`` requires |f_gap| <= f_tol.  Returns None when
    the trace never reaches the targets.
    """
    for rec in records:
        f_ok = (rec.f_gap <= f_tol) if f_gap_mode == "signed" else (abs(rec.f_gap) <= f_tol)
        if f_ok and rec.g_gap <= g_tol:
            return oracle_calls(rec)
    return None


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_trace_csv(records: list[TraceRecord]) -> str:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                (
                    r.solver,
                    str(r.iterate_index),
                    str(r.fn_evals),
                    str(r.grad_evals),
                    str(r.prox_calls),
                    _fmt(r.wall_seconds),
                    _fmt(r.f_gap),
                    _fmt(r.g_gap),
                )
            )
        )
    return "\n".join(lines) + "\n"


@dataclass
class PlotSpec:
    width: int = 980
    height: int = 420
    title: str = ""
    x_label: str = "oracle calls"


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _clamped_log10(v: float) -> float:
    if not v > 0.0:
        warnings.warn(
            "nonpositive value clamped to 1e-16 on the log axis", RuntimeWarning
        )
        v = LOG_FLOOR
    return math.log10(max(v, LOG_FLOOR))


def _panel(
    out: list[str],
    traces: dict[str, list[TraceRecord]],
    value_of,
    x0: float,
    y0: float,
    w: float,
    h: float,
    y_title: str,
    x_label: str,
) -> None:
    solvers = sorted(traces)
    points: dict[str, list[tuple[float, float]]] = {}
    xmax = 1.0
    logs: list[float] = []
    for s in solvers:
        pts = []
        for rec in traces[s]:
            x = float(oracle_calls(rec))
            y = _clamped_log10(value_of(rec))
            pts.append((x, y))
            logs.append(y)
            xmax = max(xmax, x)
        points[s] = pts
    if logs:
        ylo = math.floor(min(logs))
        yhi = math.ceil(max(logs))
        if yhi == ylo:
            yhi = ylo + 1
    else:
        ylo, yhi = -8, 0

    def sx(x: float) -> float:
        return x0 + (x / xmax) * w

    def sy(ylog: float) -> float:
        return y0 + h - ((ylog - ylo) / (yhi - ylo)) * h

    out.append(
        f'<rect x="{x0:.1f}" y="{y0:.1f}" width="{w:.1f}" height="{h:.1f}" '
        'fill="none" stroke="#000000" stroke-width="1"/>'
    )
    out.append(
        f'<text x="{x0 + w / 2:.1f}" y="{y0 - 8:.1f}" text-anchor="middle" '
        f'font-size="13">{y_title}</text>'
    )
    for d in range(ylo, yhi + 1):
        yy = sy(float(d))
        out.append(
            f'<line x1="{x0:.1f}" y1="{yy:.1f}" x2="{x0 + w:.1f}" y2="{yy:.1f}" '
            'stroke="#cccccc" stroke-width="0.5"/>'
        )
        out.append(
            f'<text x="{x0 - 6:.1f}" y="{yy + 4:.1f}" text-anchor="end" '
            f'font-size="10">1e{d}</text>'
        )
    for i in range(5):
        xv = xmax * i / 4.0
        xx = sx(xv)
        out.append(
            f'<text x="{xx:.1f}" y="{y0 + h + 14:.1f}" text-anchor="middle" '
            f'font-size="10">{xv:.6g}</text>'
        )
    out.append(
        f'<text x="{x0 + w / 2:.1f}" y="{y0 + h + 30:.1f}" text-anchor="middle" '
        f'font-size="12">{x_label}</text>'
    )
    for i, s in enumerate(solvers):
        pts = points[s]
        if not pts:
            continue
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        color = _PALETTE[i % len(_PALETTE)]
        out.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{coords}"/>'
        )
        out.append(
            f'<text x="{x0 + w - 4:.1f}" y="{y0 + 14 + 13 * i:.1f}" '
            f'text-anchor="end" font-size="11" fill="{color}">{s}</text>'
        )


def emit_svg_plot(traces: dict[str, list[TraceRecord]], spec: PlotSpec | None = None) -> str:
    """Two log-scale panels (lower gap, |upper gap|) versus oracle calls.

    One polyline per solver per panel; output is a deterministic function of
    the inputs.
    """
    spec = spec or PlotSpec()
    w, h = spec.width, spec.height
    margin = 54
    panel_w = (w - 3 * margin) / 2.0
    panel_h = h - 2 * margin - 10
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>',
    ]
    if spec.title:
        out.append(
            f'<text x="{w / 2:.1f}" y="18" text-anchor="middle" '
            f'font-size="14">{spec.title}</text>'
        )
    _panel(
        out,
        traces,
        lambda r: r.g_gap,
        margin,
        margin,
        panel_w,
        panel_h,
        "lower-level gap",
        spec.x_label,
    )
    _panel(
        out,
        traces,
        lambda r: abs(r.f_gap),
        2 * margin + panel_w,
        margin,
        panel_w,
        panel_h,
        "|upper-level gap|",
        spec.x_label,
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
