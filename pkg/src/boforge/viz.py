"""Hand-emitted SVG convergence chart (best-so-far or hypervolume vs trial)."""
from __future__ import annotations

from typing import Sequence

WIDTH, HEIGHT = 640, 400
MARGIN = 50


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def convergence_svg(trace: Sequence, directions: Sequence) -> str:
    """Single self-contained SVG line chart of the trace progress column."""
    ys = [row.progress for row in trace]
    xs = list(range(len(ys)))
    label = "best so far" if len(directions) == 1 else "front hypervolume"
    if not ys:
        ys, xs = [0.0], [0]
    ylo, yhi = min(ys), max(ys)
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    xhi = max(xs[-1], 1)
    plot_w = WIDTH - 2 * MARGIN
    plot_h = HEIGHT - 2 * MARGIN

    def px(x: float) -> float:
        return MARGIN + plot_w * x / xhi

    def py(y: float) -> float:
        return HEIGHT - MARGIN - plot_h * (y - ylo) / (yhi - ylo)

    pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-size="14">trial index</text>',
        f'<text x="16" y="{HEIGHT // 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 16 {HEIGHT // 2})">{label}</text>',
        f'<text x="{MARGIN}" y="{MARGIN - 8}" font-size="12">{_fmt(yhi)}</text>',
        f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 16}" font-size="12">{_fmt(ylo)}</text>',
        f'<polyline fill="none" stroke="#1f6feb" stroke-width="2" points="{pts}"/>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"
