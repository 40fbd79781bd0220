"""Deterministic SVG rendering of a recorded physical-space trajectory:
boundary and obstacles, the walked path colored by steering decision, reset
markers and (optionally) the future-overlay points.

Output bytes are a pure function of the trace: fixed float formatting, no
timestamps or generated ids.
"""

from __future__ import annotations

from .environment import SpaceMap
from .simulation import TrialTrace

SCALE = 60.0  # px per meter
MARGIN = 20.0

PATH_COLORS = {0: "#555555", 1: "#1f77b4", -1: "#d62728"}  # none, left, right
OVERLAY_STRIDE = 60


def _fmt(v: float) -> str:
    return f"{v:.4f}"


class _Canvas:
    def __init__(self, space: SpaceMap):
        x0, y0, x1, y1 = space.boundary.bbox
        self.x0 = x0
        self.y1 = y1
        self.width = (x1 - x0) * SCALE + 2 * MARGIN
        self.height = (y1 - y0) * SCALE + 2 * MARGIN

    def pt(self, x: float, y: float) -> tuple[str, str]:
        return _fmt((x - self.x0) * SCALE + MARGIN), _fmt((self.y1 - y) * SCALE + MARGIN)


def render_trajectory_svg(space: SpaceMap, trace: TrialTrace,
                          include_overlays: bool = False) -> str:
    cv = _Canvas(space)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(cv.width)}" '
        f'height="{_fmt(cv.height)}" viewBox="0 0 {_fmt(cv.width)} {_fmt(cv.height)}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]

    def poly_points(poly) -> str:
        return " ".join(",".join(cv.pt(v.x, v.y)) for v in poly.vertices)

    parts.append(
        f'<polygon class="boundary" points="{poly_points(space.boundary)}" '
        'fill="none" stroke="black" stroke-width="2"/>'
    )
    for obs in space.obstacles:
        parts.append(
            f'<polygon class="obstacle" points="{poly_points(obs)}" '
            'fill="#cccccc" stroke="black" stroke-width="1"/>'
        )

    # split the walked path into runs of constant curvature sign
    n = len(trace.physical_x)
    i = 0
    while i < n:
        sign = int(trace.curvature_sign[i])
        j = i
        while j + 1 < n and int(trace.curvature_sign[j + 1]) == sign:
            j += 1
        pts = " ".join(
            ",".join(cv.pt(trace.physical_x[k], trace.physical_y[k]))
            for k in range(i, j + 1)
        )
        parts.append(
            f'<polyline class="path" points="{pts}" fill="none" '
            f'stroke="{PATH_COLORS[sign]}" stroke-width="1"/>'
        )
        i = j + 1

    if include_overlays:
        for k, p in enumerate(trace.overlay_points):
            if k % OVERLAY_STRIDE:
                continue
            x, y = cv.pt(p.x, p.y)
            parts.append(
                f'<circle class="overlay" cx="{x}" cy="{y}" r="2" '
                'fill="#ff7f0e" fill-opacity="0.5"/>'
            )

    for p in trace.reset_positions:
        x, y = cv.pt(p.x, p.y)
        parts.append(f'<circle class="reset" cx="{x}" cy="{y}" r="4" fill="red"/>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
