"""Minimal static SVG line charts (no plotting dependency)."""

from __future__ import annotations

from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def _nice_range(lo, hi):
    if hi <= lo:
        pad = abs(lo) * 0.1 or 0.05
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.08
    return lo - pad, hi + pad


def line_chart(series, x_labels, *, title="", y_label="", hline=None, width=720, height=420) -> str:
    """Render ``{name: [y, ...]}`` against categorical x positions.

    ``hline`` draws a dashed horizontal reference (e.g. the nominal level).
    Returns the SVG document as a string.
    """
    left, right, top, bottom = 64, 150, 36, 56
    pw, ph = width - left - right, height - top - bottom
    values = [v for ys in series.values() for v in ys]
    if hline is not None:
        values.append(hline)
    lo, hi = _nice_range(min(values), max(values))
    k = max(len(x_labels) - 1, 1)

    def px(i):
        return left + pw * i / k

    def py(v):
        return top + ph * (1.0 - (v - lo) / (hi - lo))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for t in range(6):
        v = lo + (hi - lo) * t / 5
        out.append(f'<line x1="{left - 4}" y1="{py(v):.1f}" x2="{left}" y2="{py(v):.1f}" stroke="#444"/>')
        out.append(f'<text x="{left - 6}" y="{py(v) + 4:.1f}" text-anchor="end">{v:.3g}</text>')
    step = max(1, len(x_labels) // 12)
    for i, lab in enumerate(x_labels):
        if i % step == 0 or i == len(x_labels) - 1:
            out.append(f'<text x="{px(i):.1f}" y="{top + ph + 16}" text-anchor="middle">{escape(str(lab))}</text>')
    if y_label:
        out.append(
            f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(y_label)}</text>'
        )
    if hline is not None:
        out.append(
            f'<line x1="{left}" y1="{py(hline):.1f}" x2="{left + pw}" y2="{py(hline):.1f}" '
            'stroke="#888" stroke-dasharray="5,4"/>'
        )
    for j, (name, ys) in enumerate(series.items()):
        color = PALETTE[j % len(PALETTE)]
        pts = " ".join(f"{px(i):.1f},{py(v):.1f}" for i, v in enumerate(ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        ly = top + 14 + 16 * j
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 32}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly + 4}">{escape(str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
