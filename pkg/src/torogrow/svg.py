"""Minimal SVG 1.1 log-log line plots with deterministic output."""
from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def loglog_svg(series: dict[str, tuple[Sequence[float], Sequence[float]]], title: str = "",
               xlabel: str = "n", ylabel: str = "", width: int = 640, height: int = 420) -> str:
    """Render named ``(x, y)`` series on log-log axes; non-positive values are dropped."""
    margin_l, margin_r, margin_t, margin_b = 70, 150, 40, 50
    pts = {k: [(math.log10(x), math.log10(y)) for x, y in zip(xs, ys) if x > 0 and y > 0]
           for k, (xs, ys) in series.items()}
    allx = [p[0] for v in pts.values() for p in v] or [0.0, 1.0]
    ally = [p[1] for v in pts.values() for p in v] or [0.0, 1.0]
    x0, x1 = math.floor(min(allx)), math.ceil(max(allx))
    y0, y1 = math.floor(min(ally)), math.ceil(max(ally))
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    pw = width - margin_l - margin_r
    ph = height - margin_t - margin_b
    sx = lambda u: margin_l + (u - x0) / (x1 - x0) * pw
    sy = lambda v: margin_t + (y1 - v) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin_l}" y="{margin_t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for e in range(x0, x1 + 1):
        X = _fmt(sx(e))
        out.append(f'<line x1="{X}" y1="{margin_t}" x2="{X}" y2="{margin_t + ph}" stroke="#dddddd"/>')
        out.append(f'<text x="{X}" y="{margin_t + ph + 18}" font-size="12" text-anchor="middle">1e{e}</text>')
    for e in range(y0, y1 + 1):
        Y = _fmt(sy(e))
        out.append(f'<line x1="{margin_l}" y1="{Y}" x2="{margin_l + pw}" y2="{Y}" stroke="#dddddd"/>')
        out.append(f'<text x="{margin_l - 6}" y="{Y}" font-size="12" text-anchor="end" '
                   f'dominant-baseline="middle">1e{e}</text>')
    for i, (name, p) in enumerate(pts.items()):
        color = PALETTE[i % len(PALETTE)]
        if p:
            path = " ".join(f"{_fmt(sx(u))},{_fmt(sy(v))}" for u, v in p)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
            for u, v in p:
                out.append(f'<circle cx="{_fmt(sx(u))}" cy="{_fmt(sy(v))}" r="3" fill="{color}"/>')
        ly = margin_t + 16 + 18 * i
        lx = margin_l + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}" font-size="12">{escape(name)}</text>')
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="22" font-size="14" text-anchor="middle">{escape(title)}</text>')
    out.append(f'<text x="{margin_l + pw / 2:.1f}" y="{height - 10}" font-size="12" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{margin_t + ph / 2:.1f}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(-90 16 {margin_t + ph / 2:.1f})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
