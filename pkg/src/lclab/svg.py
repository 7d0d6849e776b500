"""Deterministic static SVG line charts, no external renderer.

Byte-identical output for identical input: coordinates are formatted
with fixed precision and series are drawn in the order given.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

WIDTH, HEIGHT = 720, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 170, 40, 50

PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def line_chart(
    series: Sequence[tuple],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> str:
    """Render series [(label, xs, ys, yerr-or-None), ...] as an SVG string.

    One polyline per series; yerr, when given, draws vertical whiskers.
    """
    xs_all = np.concatenate([np.asarray(s[1], dtype=np.float64) for s in series])
    ys_all = []
    for s in series:
        y = np.asarray(s[2], dtype=np.float64)
        ys_all.append(y)
        if len(s) > 3 and s[3] is not None:
            e = np.asarray(s[3], dtype=np.float64)
            ys_all += [y - e, y + e]
    ys_all = np.concatenate(ys_all)
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    y_lo, y_hi = float(ys_all.min()), float(ys_all.max())
    if y_lo > 0:
        y_lo = 0.0
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(x: float) -> float:
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{_esc(title)}</text>',
    ]
    # Axes
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" '
        f'y2="{MARGIN_T + plot_h}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T + plot_h}" '
        f'x2="{MARGIN_L + plot_w}" y2="{MARGIN_T + plot_h}" stroke="black"/>'
    )
    for xt in _ticks(x_lo, x_hi):
        parts.append(
            f'<text x="{_fmt(px(xt))}" y="{MARGIN_T + plot_h + 18}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11">'
            f"{xt:.6g}</text>"
        )
    for yt in _ticks(y_lo, y_hi):
        parts.append(
            f'<text x="{MARGIN_L - 6}" y="{_fmt(py(yt) + 4)}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11">'
            f"{yt:.4g}</text>"
        )
    if xlabel:
        parts.append(
            f'<text x="{MARGIN_L + plot_w // 2}" y="{HEIGHT - 12}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="13">'
            f"{_esc(xlabel)}</text>"
        )
    if ylabel:
        cy = MARGIN_T + plot_h // 2
        parts.append(
            f'<text x="18" y="{cy}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" '
            f'transform="rotate(-90 18 {cy})">{_esc(ylabel)}</text>'
        )
    for i, s in enumerate(series):
        label, xs, ys = s[0], np.asarray(s[1], float), np.asarray(s[2], float)
        yerr = np.asarray(s[3], float) if len(s) > 3 and s[3] is not None else None
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        if yerr is not None:
            for x, y, e in zip(xs, ys, yerr):
                parts.append(
                    f'<line x1="{_fmt(px(x))}" y1="{_fmt(py(y - e))}" '
                    f'x2="{_fmt(px(x))}" y2="{_fmt(py(y + e))}" '
                    f'stroke="{color}" stroke-width="1"/>'
                )
        ly = MARGIN_T + 14 + 18 * i
        lx = WIDTH - MARGIN_R + 12
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{_esc(label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(text: str) -> str:
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )
