"""Dependency-free SVG line plots for per-run telemetry."""

from __future__ import annotations

import math

WIDTH, HEIGHT = 900, 300
MARGIN = 45
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _scaled(vals, lo, hi, out_lo, out_hi):
    if hi == lo:
        hi = lo + 1.0
    return [out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo) for v in vals]


def _panel(title: str, ts, ys, y_offset: int, color: str) -> str:
    pts = [(t, y) for t, y in zip(ts, ys) if math.isfinite(y)]
    parts = [f'<text x="{MARGIN}" y="{y_offset + 16}" font-size="13" '
             f'font-family="monospace">{title}</text>']
    frame = (f'<rect x="{MARGIN}" y="{y_offset + 22}" width="{WIDTH - 2 * MARGIN}" '
             f'height="{HEIGHT - 60}" fill="none" stroke="#999"/>')
    parts.append(frame)
    if not pts:
        return "\n".join(parts)
    t_lo, t_hi = pts[0][0], pts[-1][0]
    y_lo = min(p[1] for p in pts)
    y_hi = max(p[1] for p in pts)
    xs = _scaled([p[0] for p in pts], t_lo, t_hi, MARGIN, WIDTH - MARGIN)
    ys_px = _scaled([p[1] for p in pts], y_lo, y_hi,
                    y_offset + HEIGHT - 38, y_offset + 22)
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys_px))
    parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                 f'stroke-width="1.2"/>')
    parts.append(f'<text x="{WIDTH - MARGIN}" y="{y_offset + 16}" font-size="11" '
                 f'text-anchor="end" font-family="monospace">'
                 f'min={y_lo:.6g} max={y_hi:.6g}</text>')
    return "\n".join(parts)


def run_curves_svg(ts, series: dict[str, list[float]]) -> str:
    """One stacked panel per named series, sharing the time axis."""
    total_h = HEIGHT * len(series)
    body = []
    for k, (name, ys) in enumerate(series.items()):
        body.append(_panel(name, ts, ys, k * HEIGHT, COLORS[k % len(COLORS)]))
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{total_h}" viewBox="0 0 {WIDTH} {total_h}">\n'
            f'<rect width="{WIDTH}" height="{total_h}" fill="white"/>\n'
            + "\n".join(body) + "\n</svg>\n")
