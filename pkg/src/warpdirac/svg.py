"""Minimal static SVG 1.1 line plots (no plotting dependency)."""

from __future__ import annotations

from typing import NamedTuple, Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#2ca02c", "#ff7f0e", "#d62728", "#9467bd", "#7f7f7f")
WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=78, right=20, top=36, bottom=56)


class Series(NamedTuple):
    label: str
    x: np.ndarray
    y: np.ndarray
    dashed: bool = False


def _fmt(v: float) -> str:
    return format(float(v), ".6g")


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + step * 1e-9, step)


def line_plot(series: Sequence[Series], title: str, xlabel: str, ylabel: str) -> str:
    xs = np.concatenate([np.asarray(s.x, float) for s in series])
    ys = np.concatenate([np.asarray(s.y, float) for s in series])
    xlo, xhi = float(xs.min()), float(xs.max())
    ylo, yhi = float(ys.min()), float(ys.max())
    if yhi - ylo < 1e-300:
        ylo, yhi = ylo - 1.0, yhi + 1.0
    pad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad
    if xhi - xlo < 1e-300:
        xhi = xlo + 1.0
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - xlo) / (xhi - xlo) * pw

    def sy(v):
        return MARGIN["top"] + (yhi - v) / (yhi - ylo) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for tx in _ticks(xlo, xhi):
        X = _fmt(sx(tx))
        out.append(f'<line x1="{X}" y1="{MARGIN["top"] + ph}" x2="{X}" y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X}" y="{MARGIN["top"] + ph + 19}" text-anchor="middle" font-family="sans-serif" font-size="11">{_fmt(tx)}</text>')
    for ty in _ticks(ylo, yhi):
        Y = _fmt(sy(ty))
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{Y}" x2="{MARGIN["left"]}" y2="{Y}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{Y}" text-anchor="end" dominant-baseline="middle" font-family="sans-serif" font-size="11">{_fmt(ty)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 14}" text-anchor="middle" font-family="sans-serif" font-size="13">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" font-family="sans-serif" font-size="13" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2})">{escape(ylabel)}</text>')
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(np.asarray(s.x, float), np.asarray(s.y, float)))
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>')
        ly = MARGIN["top"] + 16 + 16 * i
        lx = MARGIN["left"] + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 22}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 28}" y="{ly}" dominant-baseline="middle" font-family="sans-serif" font-size="11">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
