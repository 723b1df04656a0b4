"""Minimal self-contained SVG log-log plotting (no plotting dependency)."""

from __future__ import annotations

import math

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _decades(lo, hi):
    return range(int(math.floor(lo)), int(math.ceil(hi)) + 1)


def write_loglog_svg(path, series, title="", xlabel="h", ylabel="error",
                     slopes=(), x_reversed=True):
    """Write a log-log plot; series = [(label, xs, ys), ...].

    The x axis is reversed by default (mesh size decreasing rightwards).
    `slopes` draws reference slope triangles anchored at the last point of
    the first series."""
    finite = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys)
              if x > 0 and y > 0 and math.isfinite(y)]
    if not finite:
        raise ValueError("nothing to plot")
    lx = [math.log10(x) for x, _ in finite]
    ly = [math.log10(y) for _, y in finite]
    x0, x1 = min(lx) - 0.1, max(lx) + 0.1
    y0, y1 = min(ly) - 0.3, max(ly) + 0.3

    def px(v):
        t = (math.log10(v) - x0) / (x1 - x0)
        if x_reversed:
            t = 1.0 - t
        return _ML + t * (_W - _ML - _MR)

    def py(v):
        t = (math.log10(v) - y0) / (y1 - y0)
        return _H - _MB - t * (_H - _MT - _MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<text x="{_W/2}" y="18" text-anchor="middle">{title}</text>']
    # frame
    out.append(f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" '
               f'height="{_H-_MT-_MB}" fill="none" stroke="black"/>')
    for d in _decades(x0, x1):
        v = 10.0 ** d
        if not (x0 <= d <= x1):
            continue
        xp = px(v)
        out.append(f'<line x1="{xp:.1f}" y1="{_MT}" x2="{xp:.1f}" y2="{_H-_MB}" '
                   'stroke="#dddddd" stroke-dasharray="4 3"/>')
        out.append(f'<text x="{xp:.1f}" y="{_H-_MB+16}" text-anchor="middle">'
                   f'1e{d}</text>')
    for d in _decades(y0, y1):
        v = 10.0 ** d
        if not (y0 <= d <= y1):
            continue
        yp = py(v)
        out.append(f'<line x1="{_ML}" y1="{yp:.1f}" x2="{_W-_MR}" y2="{yp:.1f}" '
                   'stroke="#dddddd" stroke-dasharray="4 3"/>')
        out.append(f'<text x="{_ML-6}" y="{yp+4:.1f}" text-anchor="end">1e{d}</text>')
    out.append(f'<text x="{_W/2}" y="{_H-12}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{_H/2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_H/2})">{ylabel}</text>')

    for i, (label, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = [(px(x), py(y)) for x, y in zip(xs, ys)
               if x > 0 and y > 0 and math.isfinite(y)]
        if not pts:
            continue
        path_d = " ".join(f"{'M' if j == 0 else 'L'}{x:.1f},{y:.1f}"
                          for j, (x, y) in enumerate(pts))
        out.append(f'<path d="{path_d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in pts:
            out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" fill="{color}"/>')
        out.append(f'<rect x="{_ML+10}" y="{_MT+8+16*i}" width="12" height="3" '
                   f'fill="{color}"/>')
        out.append(f'<text x="{_ML+28}" y="{_MT+14+16*i}">{label}</text>')

    if slopes and series:
        _, xs, ys = series[0]
        xa, ya = xs[-1], ys[-1]
        for s in slopes:
            xb = xa * 2.0
            yb = ya * (xb / xa) ** s
            x1p, y1p = px(xa), py(ya * 0.7)
            x2p, y2p = px(xb), py(yb * 0.7)
            out.append(f'<path d="M{x1p:.1f},{y1p:.1f} L{x2p:.1f},{y2p:.1f} '
                       f'L{x1p:.1f},{y2p:.1f} Z" fill="none" stroke="#555555"/>')
            out.append(f'<text x="{x1p+4:.1f}" y="{(y1p+y2p)/2:.1f}" '
                       f'fill="#555555">{s:g}</text>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(out) + "\n")
