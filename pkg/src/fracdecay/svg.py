"""Minimal log-log SVG plots written by hand (no plotting dependency)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["loglog_svg"]

WIDTH, HEIGHT = 640, 440
MARGIN = (70, 20, 30, 50)  # left, right, top, bottom
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def loglog_svg(series, lines=(), *, title: str = "", xlabel: str = "t", ylabel: str = "norm") -> str:
    """Render ``series`` (label, t, v) as polylines on log-log axes.

    ``lines`` holds straight reference lines ``(label, t_lo, t_hi, v_lo, slope, dashed)``
    drawn from ``(t_lo, v_lo)`` with the given log-log slope.  Non-positive
    points are dropped.
    """
    pts = []
    for label, t, v in series:
        t = np.asarray(t, dtype=float)
        v = np.asarray(v, dtype=float)
        keep = (t > 0) & (v > 0) & np.isfinite(v)
        pts.append((label, np.log10(t[keep]), np.log10(v[keep])))
    segs = []
    for label, t_lo, t_hi, v_lo, slope, dashed in lines:
        if t_lo > 0 and t_hi > t_lo and v_lo > 0:
            x0, x1 = math.log10(t_lo), math.log10(t_hi)
            y0 = math.log10(v_lo)
            segs.append((label, x0, x1, y0, y0 + slope * (x1 - x0), dashed))
    xs = np.concatenate([p[1] for p in pts] + [np.array([s[1], s[2]]) for s in segs] or [np.zeros(1)])
    ys = np.concatenate([p[2] for p in pts] + [np.array([s[3], s[4]]) for s in segs] or [np.zeros(1)])
    if xs.size == 0:
        xs = ys = np.zeros(1)
    x_lo, x_hi = math.floor(xs.min()), math.ceil(xs.max())
    y_lo, y_hi = math.floor(ys.min()), math.ceil(ys.max())
    x_hi = max(x_hi, x_lo + 1)
    y_hi = max(y_hi, y_lo + 1)
    left, right, top, bottom = MARGIN
    pw, ph = WIDTH - left - right, HEIGHT - top - bottom

    def X(x):
        return left + (x - x_lo) / (x_hi - x_lo) * pw

    def Y(y):
        return top + (y_hi - y) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="white" stroke="black"/>',
    ]
    for k in range(x_lo, x_hi + 1):
        out.append(f'<line x1="{_fmt(X(k))}" y1="{top}" x2="{_fmt(X(k))}" y2="{top + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{_fmt(X(k))}" y="{top + ph + 15}" text-anchor="middle">1e{k}</text>')
    for k in range(y_lo, y_hi + 1):
        out.append(f'<line x1="{left}" y1="{_fmt(Y(k))}" x2="{left + pw}" y2="{_fmt(Y(k))}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 5}" y="{_fmt(Y(k) + 4)}" text-anchor="end">1e{k}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="15" y="{top + ph / 2}" text-anchor="middle" transform="rotate(-90 15 {top + ph / 2})">'
        f"{escape(ylabel)}</text>"
    )
    if title:
        out.append(f'<text x="{left + pw / 2}" y="{top - 8}" text-anchor="middle">{escape(title)}</text>')
    legend = []
    for i, (label, x, y) in enumerate(pts):
        color = COLORS[i % len(COLORS)]
        if x.size > 1:
            # thin the polyline to keep files small
            step = max(1, x.size // 2000)
            coords = " ".join(f"{_fmt(X(a))},{_fmt(Y(b))}" for a, b in zip(x[::step], y[::step]))
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        legend.append((label, color, False))
    for j, (label, x0, x1, y0, y1, dashed) in enumerate(segs):
        color = "black" if dashed else COLORS[(len(pts) + j) % len(COLORS)]
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        out.append(
            f'<line x1="{_fmt(X(x0))}" y1="{_fmt(Y(y0))}" x2="{_fmt(X(x1))}" y2="{_fmt(Y(y1))}" '
            f'stroke="{color}" stroke-width="1.2"{dash}/>'
        )
        legend.append((label, color, dashed))
    for i, (label, color, dashed) in enumerate(legend):
        y = top + 15 + 15 * i
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        out.append(f'<line x1="{left + pw - 170}" y1="{y - 4}" x2="{left + pw - 150}" y2="{y - 4}" stroke="{color}"{dash}/>')
        out.append(f'<text x="{left + pw - 145}" y="{y}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
