"""SVG rendering of layer plans: 1 user unit = 1 mm, y axis up.

Fiber paths are stroked at the fiber width so adjacent bundles touch;
unused loop space and junction voids are filled gray underneath.
"""

from __future__ import annotations

import numpy as np

from .pathplan import LayerPathPlan

# per-loop stroke palette, cycled
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#17becf", "#8c564b", "#e377c2")

FILL_COLOR = "#cccccc"
VERTEX_COLOR = "#222222"
RIM_COLOR = "#555555"


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def _points_attr(points: np.ndarray) -> str:
    return " ".join(f"{_fmt(p[0])},{_fmt(p[1])}" for p in points)


def layer_svg(plan: LayerPathPlan, fiber_width: float,
              marks: bool = False) -> str:
    pts = [p.points for p in plan.paths] + list(plan.fills)
    if len(plan.rim_points):
        pts.append(plan.rim_points)
    allpts = np.concatenate(pts) if pts else np.zeros((1, 2))
    lo = allpts.min(axis=0) - 2.0 * fiber_width
    hi = allpts.max(axis=0) + 2.0 * fiber_width
    size = hi - lo
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(size[0])}mm" height="{_fmt(size[1])}mm" '
        f'viewBox="{_fmt(lo[0])} {_fmt(-hi[1])} {_fmt(size[0])} {_fmt(size[1])}">',
        f'  <!-- layer {plan.layer}, sheet {plan.sheet}, '
        f'loops {list(plan.x)} -->',
        '  <g transform="scale(1,-1)">',
    ]
    if plan.fills:
        lines.append(f'    <g id="fills" fill="{FILL_COLOR}" stroke="none">')
        for poly in plan.fills:
            lines.append(f'      <polygon points="{_points_attr(poly)}" />')
        lines.append('    </g>')
    lines.append(
        f'    <g id="paths" fill="none" stroke-width="{_fmt(fiber_width)}" '
        'stroke-linecap="round" stroke-linejoin="round">')
    for path in plan.paths:
        color = PALETTE[path.loop % len(PALETTE)]
        tag = "polygon" if path.closed else "polyline"
        lines.append(
            f'      <{tag} points="{_points_attr(path.points)}" '
            f'stroke="{color}"><title>{path.key}</title></{tag}>')
    lines.append('    </g>')
    if marks and len(plan.rim_points):
        lines.append(f'    <g id="rim-points" fill="{RIM_COLOR}" stroke="none">')
        for p in plan.rim_points:
            lines.append(f'      <circle cx="{_fmt(p[0])}" cy="{_fmt(p[1])}" '
                         f'r="{_fmt(fiber_width / 5.0)}" />')
        lines.append('    </g>')
    if marks:
        lines.append(f'    <g id="junctions" fill="{VERTEX_COLOR}" stroke="none">')
        for vid, lo_box, hi_box in plan.junction_boxes:
            c = 0.5 * (lo_box + hi_box)
            lines.append(f'      <circle cx="{_fmt(c[0])}" cy="{_fmt(c[1])}" '
                         f'r="{_fmt(fiber_width / 3.0)}" />')
        lines.append('    </g>')
    lines.append('  </g>')
    lines.append('</svg>')
    return "\n".join(lines) + "\n"


def path_records(plan: LayerPathPlan) -> str:
    """Line-oriented polyline export:
    ``layer loop_instance closed x1 y1 x2 y2 ...`` per bundle path."""
    lines = [f"# fiberloom-paths 1 layer={plan.layer} sheet={plan.sheet} "
             f"x={','.join(str(v) for v in plan.x)}"]
    for path in plan.paths:
        coords = " ".join(f"{_fmt(p[0])} {_fmt(p[1])}" for p in path.points)
        lines.append(f"{plan.layer} {path.key} {int(path.closed)} {coords}")
    return "\n".join(lines) + "\n"
