"""Minimal deterministic SVG line plots.

Hand-rolled so that identical inputs produce byte-identical files: no
timestamps, no library version strings, fixed float formatting.
"""

from __future__ import annotations

__all__ = ["write_line_svg"]

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 30, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _fmt(v: float) -> str:
    return format(float(v), ".6g")


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    return [lo + span * i / (n - 1) for i in range(n)]


def write_line_svg(path, xs, series, labels=None, title="", xlabel="", ylabel=""):
    """Write a line plot of one or more y-series over shared x values."""
    xs = [float(x) for x in xs]
    series = [[float(y) for y in ys] for ys in series]
    if labels is None:
        labels = [f"series{i}" for i in range(len(series))]
    x_lo, x_hi = min(xs), max(xs)
    ally = [y for ys in series for y in ys]
    y_lo, y_hi = min(ally), max(ally)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    pw = _W - _ML - _MR
    ph = _H - _MT - _MB

    def px(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return _MT + (y_hi - y) / (y_hi - y_lo) * ph

    out = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
               f'viewBox="0 0 {_W} {_H}">')
    out.append(f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>')
    out.append(f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" '
               'stroke="black" stroke-width="1"/>')
    for tx in _ticks(x_lo, x_hi):
        X = _fmt(px(tx))
        out.append(f'<line x1="{X}" y1="{_MT + ph}" x2="{X}" y2="{_MT + ph + 5}" '
                   'stroke="black" stroke-width="1"/>')
        out.append(f'<text x="{X}" y="{_MT + ph + 18}" font-size="11" '
                   f'text-anchor="middle" font-family="sans-serif">{_fmt(tx)}</text>')
    for ty in _ticks(y_lo, y_hi):
        Y = _fmt(py(ty))
        out.append(f'<line x1="{_ML - 5}" y1="{Y}" x2="{_ML}" y2="{Y}" '
                   'stroke="black" stroke-width="1"/>')
        out.append(f'<text x="{_ML - 8}" y="{Y}" font-size="11" text-anchor="end" '
                   f'dominant-baseline="middle" font-family="sans-serif">{_fmt(ty)}</text>')
    for i, ys in enumerate(series):
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        color = _COLORS[i % len(_COLORS)]
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   'stroke-width="1.5"/>')
        out.append(f'<text x="{_W - _MR - 5}" y="{_MT + 15 + 14 * i}" font-size="11" '
                   f'text-anchor="end" fill="{color}" '
                   f'font-family="sans-serif">{labels[i]}</text>')
    if title:
        out.append(f'<text x="{_W // 2}" y="18" font-size="13" text-anchor="middle" '
                   f'font-family="sans-serif">{title}</text>')
    if xlabel:
        out.append(f'<text x="{_ML + pw // 2}" y="{_H - 12}" font-size="12" '
                   f'text-anchor="middle" font-family="sans-serif">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{_MT + ph // 2}" font-size="12" '
                   f'text-anchor="middle" font-family="sans-serif" '
                   f'transform="rotate(-90 16 {_MT + ph // 2})">{ylabel}</text>')
    out.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")
