"""Minimal self-contained SVG line/step chart writer (no plotting dependency)."""

from __future__ import annotations

import math

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
_W, _H = 720, 460
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _ticks(lo: float, hi: float, n: int = 6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= m * mag:
            step = m * mag
            break
    t0 = math.ceil(lo / step) * step
    out = []
    t = t0
    while t <= hi + 1e-12 * step:
        out.append(round(t, 12))
        t += step
    return out


def line_chart(
    series: list[tuple[str, list[float], list[float]]],
    title: str,
    xlabel: str,
    ylabel: str,
    step: bool = False,
    metadata: str = "",
) -> str:
    """Render named (x, y) series as an SVG string; ``step=True`` draws
    right-continuous step functions (sample paths)."""
    xs = [x for _, xv, _ in series for x in xv]
    ys = [y for _, _, yv in series for y in yv]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def py(y):
        return _H - _MB - (y - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f"<desc>{metadata}</desc>",
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2:.0f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
    ]
    for tx in _ticks(x_lo, x_hi):
        parts.append(
            f'<line x1="{px(tx):.1f}" y1="{_H-_MB}" x2="{px(tx):.1f}" y2="{_MT}" '
            f'stroke="#eee"/>'
            f'<text x="{px(tx):.1f}" y="{_H-_MB+16}" text-anchor="middle">{tx:g}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        parts.append(
            f'<line x1="{_ML}" y1="{py(ty):.1f}" x2="{_W-_MR}" y2="{py(ty):.1f}" '
            f'stroke="#eee"/>'
            f'<text x="{_ML-6}" y="{py(ty)+4:.1f}" text-anchor="end">{ty:g}</text>'
        )
    parts.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" height="{_H-_MT-_MB}" '
        f'fill="none" stroke="#333"/>'
        f'<text x="{(_ML+_W-_MR)/2:.0f}" y="{_H-12}" text-anchor="middle">{xlabel}</text>'
        f'<text x="18" y="{(_MT+_H-_MB)/2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(_MT+_H-_MB)/2:.0f})">{ylabel}</text>'
    )
    for i, (name, xv, yv) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = []
        for j, (x, y) in enumerate(zip(xv, yv)):
            if step and j > 0:
                pts.append(f"{px(x):.2f},{py(yv[j-1]):.2f}")
            pts.append(f"{px(x):.2f},{py(y):.2f}")
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.6" '
            f'points="{" ".join(pts)}"/>'
        )
        ly = _MT + 16 + 16 * i
        parts.append(
            f'<line x1="{_W-_MR-130}" y1="{ly-4}" x2="{_W-_MR-105}" y2="{ly-4}" '
            f'stroke="{color}" stroke-width="2"/>'
            f'<text x="{_W-_MR-100}" y="{ly}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
