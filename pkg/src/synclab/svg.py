"""Plain-text SVG line plots."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


def _range(values: np.ndarray):
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi == lo:
        pad = 0.5 if lo == 0.0 else 0.05 * abs(lo)
        return lo - pad, hi + pad
    return lo, hi


def line_plot(x, ys: Sequence, labels: Sequence[str], title: str = "",
              xlabel: str = "", width: int = 640, height: int = 400,
              log_y: bool = False) -> str:
    """SVG document with one polyline per series over a shared x column."""
    x = np.asarray(x, dtype=float)
    return curves_plot([(x, y) for y in ys], labels, title, xlabel, width, height, log_y)


def curves_plot(curves: Sequence, labels: Sequence[str], title: str = "",
                xlabel: str = "", width: int = 640, height: int = 400,
                log_y: bool = False, equal_aspect: bool = False) -> str:
    """SVG document with one polyline per ``(x, y)`` curve, axes, ticks and a legend.

    Non-finite points break a polyline into separate pieces.
    """
    curves = [(np.asarray(cx, dtype=float), np.asarray(cy, dtype=float)) for cx, cy in curves]
    if log_y:
        curves = [(cx, np.where(cy > 0.0, np.log10(np.where(cy > 0.0, cy, 1.0)), np.nan)) for cx, cy in curves]
    left, right, top, bottom = 70, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom
    empty = np.zeros(1)
    x0, x1 = _range(np.concatenate([c[0] for c in curves]) if curves else empty)
    y0, y1 = _range(np.concatenate([c[1] for c in curves]) if curves else empty)
    if equal_aspect:
        span = max((x1 - x0) / pw, (y1 - y0) / ph)
        xc, yc = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        x0, x1 = xc - 0.5 * span * pw, xc + 0.5 * span * pw
        y0, y1 = yc - 0.5 * span * ph, yc + 0.5 * span * ph

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{_escape(title)}</text>',
           f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
           f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>']
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        out.append(f'<text x="{_fmt(px(xv))}" y="{top + ph + 16}" text-anchor="middle" '
                   f'font-size="10">{_tick_label(xv)}</text>')
        ylab = _tick_label(yv) if not log_y else f"1e{yv:.3g}"
        out.append(f'<text x="{left - 6}" y="{_fmt(py(yv) + 3)}" text-anchor="end" '
                   f'font-size="10">{ylab}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle" '
               f'font-size="12">{_escape(xlabel)}</text>')
    if y0 < 0.0 < y1:
        out.append(f'<line x1="{left}" y1="{_fmt(py(0.0))}" x2="{left + pw}" y2="{_fmt(py(0.0))}" '
                   f'stroke="#999" stroke-dasharray="4 3"/>')
    for i, ((cx, cy), label) in enumerate(zip(curves, labels)):
        color = _COLORS[i % len(_COLORS)]
        ok = np.isfinite(cx) & np.isfinite(cy)
        for piece in _runs(ok):
            pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(cx[piece], cy[piece]))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>')
        out.append(f'<text x="{left + pw - 4}" y="{top + 14 * (i + 1)}" text-anchor="end" '
                   f'font-size="11" fill="{color}">{_escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _runs(mask: np.ndarray):
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([0], breaks + 1))
    stops = np.concatenate((breaks + 1, [idx.size]))
    return [idx[a:b] for a, b in zip(starts, stops)]


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def downsample(n: int, max_points: int = 4000) -> np.ndarray:
    """Evenly spaced row indices, keeping the last row."""
    if n <= max_points:
        return np.arange(n)
    step = math.ceil(n / max_points)
    idx = np.arange(0, n, step)
    return idx if idx[-1] == n - 1 else np.append(idx, n - 1)
