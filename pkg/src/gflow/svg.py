"""Tiny dependency-free SVG plots (scatter and line charts).

Enough for eyeballing sample clouds, loss curves and sweep results;
deterministic output for a given input.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

_PALETTE = (
    "#4063d8", "#d86240", "#3f9b63", "#9558b2", "#c7a53c",
    "#46a3b4", "#b44665", "#6d6d6d",
)

_W, _H, _PAD = 640, 480, 48


def _limits(v):
    lo, hi = float(np.min(v)), float(np.max(v))
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    margin = 0.05 * (hi - lo)
    return lo - margin, hi + margin


def _mapper(lo, hi, out_lo, out_hi):
    scale = (out_hi - out_lo) / (hi - lo)
    return lambda v: out_lo + (np.asarray(v, dtype=np.float64) - lo) * scale


def _frame(title, xlo, xhi, ylo, yhi):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
        'fill="none" stroke="#999" stroke-width="1"/>',
    ]
    if title:
        parts.append(f'<text x="{_W // 2}" y="24" text-anchor="middle" font-size="14">{title}</text>')
    fmt = "{:.4g}".format
    parts.append(f'<text x="{_PAD}" y="{_H - _PAD + 16}" font-size="10">{fmt(xlo)}</text>')
    parts.append(f'<text x="{_W - _PAD}" y="{_H - _PAD + 16}" text-anchor="end" font-size="10">{fmt(xhi)}</text>')
    parts.append(f'<text x="{_PAD - 4}" y="{_H - _PAD}" text-anchor="end" font-size="10">{fmt(ylo)}</text>')
    parts.append(f'<text x="{_PAD - 4}" y="{_PAD + 10}" text-anchor="end" font-size="10">{fmt(yhi)}</text>')
    return parts


def svg_scatter(path, x, y, color_index=None, title: str = "") -> None:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xlo, xhi = _limits(x)
    ylo, yhi = _limits(y)
    mx = _mapper(xlo, xhi, _PAD, _W - _PAD)
    my = _mapper(ylo, yhi, _H - _PAD, _PAD)
    parts = _frame(title, xlo, xhi, ylo, yhi)
    if color_index is None:
        color_index = np.zeros(len(x), dtype=np.int64)
    for xi, yi, ci in zip(mx(x), my(y), np.asarray(color_index, dtype=np.int64)):
        color = _PALETTE[int(ci) % len(_PALETTE)]
        parts.append(f'<circle cx="{xi:.2f}" cy="{yi:.2f}" r="2" fill="{color}" fill-opacity="0.6"/>')
    parts.append("</svg>")
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text("\n".join(parts))


def svg_lines(path, series, title: str = "") -> None:
    """series: list of (label, x array, y array)."""
    all_x = np.concatenate([np.asarray(s[1], dtype=np.float64) for s in series])
    all_y = np.concatenate([np.asarray(s[2], dtype=np.float64) for s in series])
    xlo, xhi = _limits(all_x)
    ylo, yhi = _limits(all_y)
    mx = _mapper(xlo, xhi, _PAD, _W - _PAD)
    my = _mapper(ylo, yhi, _H - _PAD, _PAD)
    parts = _frame(title, xlo, xhi, ylo, yhi)
    for i, (label, xs, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{px:.2f},{py:.2f}" for px, py in zip(mx(xs), my(ys)))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if label:
            parts.append(
                f'<text x="{_W - _PAD - 4}" y="{_PAD + 14 + 14 * i}" text-anchor="end" '
                f'font-size="11" fill="{color}">{label}</text>'
            )
    parts.append("</svg>")
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text("\n".join(parts))
