"""Plain-text SVG output: tessellations, sampled cells and simplex heatmaps."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

# Fill per vertex count of an interior face.
FACE_TINTS = {3: "#e4572e", 4: "#f3f3f3", 5: "#76b041", 6: "#2e86ab"}
BOUNDARY_TINT = "#d0d0d0"

# Heatmap colour ramp: 256 linear steps between these anchors.
_RAMP_ANCHORS = np.array(
    [[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]],
    dtype=float,
)


def color_ramp(t: float) -> str:
    """Colour for ``t`` in [0, 1], quantized to 256 steps."""
    t = min(max(t, 0.0), 1.0)
    k = round(t * 255) / 255 * (len(_RAMP_ANCHORS) - 1)
    i = min(int(k), len(_RAMP_ANCHORS) - 2)
    c = _RAMP_ANCHORS[i] + (k - i) * (_RAMP_ANCHORS[i + 1] - _RAMP_ANCHORS[i])
    return "#%02x%02x%02x" % tuple(int(round(v)) for v in c)


def _doc(width: float, height: float, body: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _points(xy: np.ndarray) -> str:
    return " ".join(f"{x:.3f},{y:.3f}" for x, y in xy)


def tessellation_svg(arr, size: float = 640.0, inner_half_width: float | None = None) -> str:
    """Draw every bounded face of an arrangement, interior faces tinted by vertex count."""
    R = arr.R
    scale = size / (2 * R)

    def tr(xy):
        xy = np.asarray(xy)
        return np.column_stack([(xy[:, 0] + R) * scale, (R - xy[:, 1]) * scale])

    body = [f'<rect width="{size:g}" height="{size:g}" fill="white"/>']
    for f in arr.faces():
        fill = BOUNDARY_TINT if f.touches_boundary else FACE_TINTS.get(f.vertex_count, "black")
        body.append(
            f'<polygon points="{_points(tr(f.vertices))}" fill="{fill}" '
            f'stroke="#222" stroke-width="0.6" data-n="{f.vertex_count}"/>'
        )
    if inner_half_width:
        a = (R - inner_half_width) * scale
        s = 2 * inner_half_width * scale
        body.append(
            f'<rect x="{a:.3f}" y="{a:.3f}" width="{s:.3f}" height="{s:.3f}" '
            'fill="none" stroke="black" stroke-dasharray="4 3"/>'
        )
    return _doc(size, size, body)


def cells_svg(samples: Sequence, cell_size: float = 160.0, columns: int = 4) -> str:
    """Sampled cells side by side, each scaled to its own tile and labelled."""
    k = len(samples)
    cols = max(1, min(columns, k))
    rows = max(1, math.ceil(k / cols))
    pad = 12.0
    body = [f'<rect width="{cols * cell_size:g}" height="{rows * cell_size:g}" fill="white"/>']
    for idx, s in enumerate(samples):
        v = np.asarray(s.polygon.vertices)
        lo, hi = v.min(axis=0), v.max(axis=0)
        span = max(float(np.max(hi - lo)), 1e-12)
        sc = (cell_size - 2 * pad - 14) / span
        ox = (idx % cols) * cell_size + pad
        oy = (idx // cols) * cell_size + pad
        pts = np.column_stack([ox + (v[:, 0] - lo[0]) * sc, oy + (hi[1] - v[:, 1]) * sc])
        n = len(v)
        body.append(
            f'<polygon points="{_points(pts)}" fill="{FACE_TINTS.get(n, "#999")}" '
            'stroke="#222" stroke-width="1"/>'
        )
        body.append(
            f'<text x="{ox:.1f}" y="{oy + cell_size - 2 * pad:.1f}" font-size="11" '
            f'font-family="sans-serif">{escape(s.label)} (n={n})</text>'
        )
    return _doc(cols * cell_size, rows * cell_size, body)


def heatmap_svg(
    points: Sequence[tuple[float, float]],
    values: Sequence[float],
    step: float,
    title: str = "",
    size: float = 480.0,
) -> str:
    """Heatmap over the (p, q) simplex: one square per grid point plus a colour bar."""
    margin = 40.0
    bar = 70.0
    plot = size - 2 * margin
    vals = np.asarray(values, dtype=float)
    vmin, vmax = float(vals.min()), float(vals.max())
    rng = vmax - vmin if vmax > vmin else 1.0

    def px(p, q):
        return margin + p * plot, margin + (1 - q) * plot

    body = [f'<rect width="{size + bar:g}" height="{size:g}" fill="white"/>']
    cell = step * plot
    for (p, q), v in zip(points, vals):
        x, y = px(p, q)
        body.append(
            f'<rect x="{x - cell / 2:.3f}" y="{y - cell / 2:.3f}" width="{cell:.3f}" '
            f'height="{cell:.3f}" fill="{color_ramp((v - vmin) / rng)}">'
            f"<title>p={p:.4g} q={q:.4g} value={v:.6g}</title></rect>"
        )
    corners = [px(0, 0), px(1, 0), px(0, 1)]
    body.append(
        f'<polygon points="{_points(np.array(corners))}" fill="none" stroke="black" stroke-width="1.2"/>'
    )
    x0, y0 = px(0, 0)
    body.append(f'<text x="{x0 + plot / 2:.1f}" y="{size - 8:.1f}" font-size="12" font-family="sans-serif">p</text>')
    body.append(f'<text x="8" y="{margin + plot / 2:.1f}" font-size="12" font-family="sans-serif">q</text>')
    if title:
        body.append(
            f'<text x="{margin:.1f}" y="22" font-size="14" font-family="sans-serif">{escape(title)}</text>'
        )
    # colour bar
    bx = size + 10
    steps = 64
    h = plot / steps
    for i in range(steps):
        t = 1 - i / (steps - 1)
        body.append(
            f'<rect x="{bx:.1f}" y="{margin + i * h:.3f}" width="16" height="{h + 0.5:.3f}" fill="{color_ramp(t)}"/>'
        )
    body.append(f'<text x="{bx + 20:.1f}" y="{margin + 8:.1f}" font-size="10" font-family="sans-serif">{vmax:.4g}</text>')
    body.append(
        f'<text x="{bx + 20:.1f}" y="{margin + plot:.1f}" font-size="10" font-family="sans-serif">{vmin:.4g}</text>'
    )
    return _doc(size + bar, size, body)
