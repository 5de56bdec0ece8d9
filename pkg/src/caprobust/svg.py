"""Minimal SVG charts: a labelled scatter and a bar chart."""

from __future__ import annotations

from xml.sax.saxutils import escape

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 20, 30, 60


def _ticks(lo: float, hi: float, k: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (k - 1) for i in range(k)]


def _scale(lo, hi, a, b):
    span = hi - lo or 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def _frame(title: str, xlabel: str, ylabel: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{H - BOTTOM}" x2="{W - RIGHT}" y2="{H - BOTTOM}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{H - BOTTOM}" stroke="black"/>',
        f'<text x="{(LEFT + W - RIGHT) / 2}" y="{H - 15}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="18" y="{(TOP + H - BOTTOM) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(TOP + H - BOTTOM) / 2})">{escape(ylabel)}</text>',
    ]


def scatter_svg(points, title="", xlabel="", ylabel="", highlight=()) -> str:
    """``points`` is a sequence of (x, y); indices in ``highlight`` are drawn larger in red."""
    pts = [(float(x), float(y)) for x, y in points]
    out = _frame(title, xlabel, ylabel)
    if pts:
        xs, ys = [p[0] for p in pts], [p[1] for p in pts]
        pad_x = (max(xs) - min(xs)) * 0.05 or 1.0
        pad_y = (max(ys) - min(ys)) * 0.05 or 1.0
        x0, x1, y0, y1 = min(xs) - pad_x, max(xs) + pad_x, min(ys) - pad_y, max(ys) + pad_y
        sx = _scale(x0, x1, LEFT, W - RIGHT)
        sy = _scale(y0, y1, H - BOTTOM, TOP)
        for v in _ticks(x0, x1):
            out.append(f'<text x="{sx(v):.1f}" y="{H - BOTTOM + 16}" text-anchor="middle">{v:.4g}</text>')
        for v in _ticks(y0, y1):
            out.append(f'<text x="{LEFT - 6}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.4g}</text>')
        for i, (x, y) in enumerate(pts):
            if i in highlight:
                out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="6" fill="#d62728" stroke="black"/>')
            else:
                out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" fill="#1f77b4"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bar_svg(labels, values, title="", ylabel="") -> str:
    """Vertical bars around a zero baseline; negative values point down."""
    vals = [float(v) for v in values]
    out = _frame(title, "", ylabel)
    if vals:
        lo, hi = min(0.0, *vals), max(0.0, *vals)
        if lo == hi:
            hi = lo + 1.0
        sy = _scale(lo, hi, H - BOTTOM, TOP)
        slot = (W - LEFT - RIGHT) / len(vals)
        for v in _ticks(lo, hi):
            out.append(f'<text x="{LEFT - 6}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.4g}</text>')
        base = sy(0.0)
        for i, (lab, v) in enumerate(zip(labels, vals)):
            x = LEFT + i * slot + slot * 0.15
            top, bot = min(sy(v), base), max(sy(v), base)
            out.append(f'<rect x="{x:.2f}" y="{top:.2f}" width="{slot * 0.7:.2f}" height="{bot - top:.2f}" fill="#1f77b4"/>')
            out.append(f'<text x="{x + slot * 0.35:.2f}" y="{H - BOTTOM + 16}" text-anchor="middle">{escape(str(lab))}</text>')
        out.append(f'<line x1="{LEFT}" y1="{base:.2f}" x2="{W - RIGHT}" y2="{base:.2f}" stroke="grey"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
