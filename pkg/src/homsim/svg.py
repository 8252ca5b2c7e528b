"""Minimal SVG line plots and heatmaps, no plotting library required."""

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT, MARGIN = 480, 360, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _frame(title, xlabel, ylabel, body):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">\n'
        f'<rect x="{MARGIN}" y="{MARGIN / 2}" width="{WIDTH - 1.5 * MARGIN}" height="{HEIGHT - 1.5 * MARGIN}" '
        'fill="none" stroke="black"/>\n'
        f'<text x="{WIDTH / 2}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>\n'
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 8}" text-anchor="middle" font-size="11">{escape(xlabel)}</text>\n'
        f'<text x="12" y="{HEIGHT / 2}" font-size="11" transform="rotate(-90 12 {HEIGHT / 2})" '
        f'text-anchor="middle">{escape(ylabel)}</text>\n{body}</svg>\n'
    )


def _scale(values, lo, hi, out_lo, out_hi):
    span = hi - lo if hi > lo else 1.0
    return out_lo + (np.asarray(values) - lo) / span * (out_hi - out_lo)


def line_plot(path, x, series, title="", xlabel="", ylabel=""):
    """``series`` maps a label to y values sampled at ``x``."""
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(y, dtype=float) for y in series.values()]
    y_lo = min(float(np.min(y)) for y in ys)
    y_hi = max(float(np.max(y)) for y in ys)
    x0, x1 = MARGIN, WIDTH - MARGIN / 2
    y0, y1 = HEIGHT - MARGIN, MARGIN / 2
    body = []
    px = _scale(x, x.min(), x.max(), x0, x1)
    for k, (label, y) in enumerate(zip(series, ys)):
        py = _scale(y, y_lo, y_hi, y0, y1)
        pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(px, py))
        color = COLORS[k % len(COLORS)]
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        body.append(f'<text x="{x1 - 5}" y="{y1 + 15 + 14 * k}" text-anchor="end" font-size="10" '
                    f'fill="{color}">{escape(str(label))}</text>')
    body.append(f'<text x="{x0}" y="{y0 + 14}" font-size="9">{x.min():.4g}</text>')
    body.append(f'<text x="{x1}" y="{y0 + 14}" font-size="9" text-anchor="end">{x.max():.4g}</text>')
    body.append(f'<text x="{x0 - 3}" y="{y0}" font-size="9" text-anchor="end">{y_lo:.3g}</text>')
    body.append(f'<text x="{x0 - 3}" y="{y1 + 8}" font-size="9" text-anchor="end">{y_hi:.3g}</text>')
    Path(path).write_text(_frame(title, xlabel, ylabel, "\n".join(body) + "\n"))
    return Path(path)


def heatmap(path, matrix, title="", xlabel="", ylabel="", max_cells=96):
    """Grey-scale density plot, rows drawn bottom-up; downsampled to ``max_cells`` per side."""
    m = np.asarray(matrix, dtype=float)
    step_r = max(1, int(np.ceil(m.shape[0] / max_cells)))
    step_c = max(1, int(np.ceil(m.shape[1] / max_cells)))
    m = m[::step_r, ::step_c]
    top = m.max() if m.max() > 0 else 1.0
    nr, nc = m.shape
    cw = (WIDTH - 1.5 * MARGIN) / nc
    ch = (HEIGHT - 1.5 * MARGIN) / nr
    cells = []
    for i in range(nr):
        for j in range(nc):
            level = int(255 * (1.0 - m[i, j] / top))
            if level >= 255:
                continue
            y = HEIGHT - MARGIN - (i + 1) * ch
            cells.append(f'<rect x="{MARGIN + j * cw:.2f}" y="{y:.2f}" width="{cw + 0.1:.2f}" '
                         f'height="{ch + 0.1:.2f}" fill="rgb({level},{level},{level})"/>')
    Path(path).write_text(_frame(title, xlabel, ylabel, "\n".join(cells) + "\n"))
    return Path(path)
