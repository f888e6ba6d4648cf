"""Minimal self-contained SVG line charts with a logarithmic y-axis."""

import math
from xml.sax.saxutils import escape

__all__ = ["semilog_svg"]

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"]


def semilog_svg(series, title="", xlabel="iteration", ylabel="", width=640, height=420):
    """Render ``{label: (xs, ys)}`` as an SVG string; nonpositive ``ys`` are skipped."""
    pts = [(x, y) for xs, ys in series.values() for x, y in zip(xs, ys)
           if y is not None and y > 0 and math.isfinite(y)]
    left, right, top, bottom = 70, 160, 40, 50
    pw, ph = width - left - right, height - top - bottom
    if pts:
        xmin = min(p[0] for p in pts)
        xmax = max(p[0] for p in pts)
        lo = math.floor(math.log10(min(p[1] for p in pts)))
        hi = math.ceil(math.log10(max(p[1] for p in pts)))
    else:
        xmin, xmax, lo, hi = 0, 1, -1, 0
    if xmax == xmin:
        xmax = xmin + 1
    if hi == lo:
        hi = lo + 1

    def sx(x):
        return left + (x - xmin) / (xmax - xmin) * pw

    def sy(y):
        return top + (hi - math.log10(y)) / (hi - lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for d in range(lo, hi + 1):
        y = top + (hi - d) / (hi - lo) * ph
        out.append(f'<line x1="{left}" y1="{y:.1f}" x2="{left + pw}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">1e{d}</text>')
    nt = 5
    for i in range(nt + 1):
        xv = xmin + i * (xmax - xmin) / nt
        x = sx(xv)
        out.append(f'<text x="{x:.1f}" y="{top + ph + 16}" text-anchor="middle">{xv:g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{left + pw / 2}" y="22" text-anchor="middle" font-size="13">{escape(title)}</text>')
    for i, (label, (xs, ys)) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = [f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys)
                  if y is not None and y > 0 and math.isfinite(y)]
        if coords:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(coords)}"/>')
        ly = top + 14 * i + 8
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
