"""Minimal SVG line plots of trace columns (no plotting library needed)."""

from __future__ import annotations

import math
import warnings
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

X_AXES = ("iteration", "oracle_calls", "wall_seconds")
Y_AXES = ("f", "grad_norm", "alpha", "estimation_error")
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
          "#bcbd22", "#17becf")

WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 80, 200, 30, 50


def _series(trace, x_axis, y_axis, log_y):
    xcol = "k" if x_axis == "iteration" else x_axis
    try:
        x, y = trace[xcol], trace[y_axis]
    except KeyError as exc:
        raise ValueError(str(exc.args[0])) from None
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    if not len(x):
        raise ValueError(f"trace {trace.name!r} has no finite ({x_axis}, {y_axis}) points")
    if log_y:
        pos = y[y > 0]
        if not len(pos):
            raise ValueError(f"trace {trace.name!r}: no positive {y_axis} values for a log axis")
        if len(pos) < len(y):
            warnings.warn(f"trace {trace.name!r}: {len(y) - len(pos)} non-positive {y_axis} value(s) "
                          f"clamped to {pos.min():.3g} for the log axis", RuntimeWarning, stacklevel=3)
            y = np.maximum(y, pos.min())
        y = np.log10(y)
    return x, y


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def _fmt(v, log):
    if log:
        return f"1e{v:.0f}" if abs(v - round(v)) < 1e-9 else f"{10 ** v:.2g}"
    return f"{v:.4g}"


def plot_traces(traces, x_axis: str = "iteration", y_axis: str = "grad_norm", log_y: bool = False,
                path=None, title: str | None = None) -> str:
    """Draw one polyline per trace and return the SVG text (also written to ``path``).

    Non-positive values on a log axis are clamped to the smallest positive
    value of their trace, with a ``RuntimeWarning``.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("no traces to plot")
    if x_axis not in X_AXES:
        raise ValueError(f"x axis must be one of {X_AXES}")
    if y_axis not in Y_AXES:
        raise ValueError(f"y axis must be one of {Y_AXES}")
    series = [(tr.name, *_series(tr, x_axis, y_axis, log_y)) for tr in traces]

    xs = np.concatenate([s[1] for s in series])
    ys = np.concatenate([s[2] for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if log_y:
        y0, y1 = math.floor(y0), math.ceil(y1)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return TOP + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    if title:
        out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{TOP - 10}" text-anchor="middle">{escape(title)}</text>')
    for v in _ticks(x0, x1):
        out.append(f'<line x1="{px(v):.2f}" y1="{TOP + ph}" x2="{px(v):.2f}" y2="{TOP + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{px(v):.2f}" y="{TOP + ph + 16}" text-anchor="middle">{_fmt(v, False)}</text>')
    yt = list(range(int(y0), int(y1) + 1)) if log_y and y1 - y0 <= 12 else _ticks(y0, y1)
    for v in yt:
        out.append(f'<line x1="{LEFT - 4}" y1="{py(v):.2f}" x2="{LEFT}" y2="{py(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 6}" y="{py(v) + 4:.2f}" text-anchor="end">{_fmt(v, log_y)}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle">{x_axis}</text>')
    ylab = f"{y_axis} (log10)" if log_y else y_axis
    out.append(f'<text x="16" y="{TOP + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.2f})">{ylab}</text>')

    for i, (name, x, y) in enumerate(series):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = TOP + 14 + 16 * i
        lx = LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    svg = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(svg)
    return svg
