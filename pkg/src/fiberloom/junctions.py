"""Junction geometry: sides, wedges, rim-line distances and bow curves.

Every junction side carries a rim line perpendicular to its edge axis; a
fiber path runs straight up to a rim point and curves through a wedge
(the region between two angularly adjacent sides).  The rim distances
are chosen so the outermost bow of every wedge meets the minimum turning
radius: symmetric wedges first, then the wedge with the largest distance
is frozen and its neighbours are re-solved with one leg fixed, a
four-edge junction scales its remaining wedge, and finally per-side
demands are reconciled upward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bezier import (Curve, CubicBezier, QuadBezier, construct_cubic,
                     max_curvature, min_radius, scale_isosceles_for_radius,
                     select_bow_kind)
from .errors import GeometryError
from .graph import FiberGraph

STRAIGHT_TOL = 1e-9  # angular gap within this of pi counts as straight
LEG_BISECT_TOL = 1e-4  # mm


def rot90(vec: np.ndarray) -> np.ndarray:
    """Counterclockwise quarter turn (the left normal of a direction)."""
    return np.array([-vec[1], vec[0]])


def line_intersection(p1: np.ndarray, d1: np.ndarray,
                      p2: np.ndarray, d2: np.ndarray) -> np.ndarray | None:
    """Intersection of two parameterized lines, None if parallel."""
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) < 1e-12:
        return None
    t = ((p2[0] - p1[0]) * d2[1] - (p2[1] - p1[1]) * d2[0]) / denom
    return p1 + t * d1


@dataclass
class Side:
    """One edge's stake in a junction: axis frame, slots and rim line."""

    vertex: int
    far_vertex: int
    edge: int
    n_slots: int
    direction: np.ndarray  # unit, junction center toward the far vertex
    normal: np.ndarray     # left normal of direction
    halfspan: float        # lateral distance of the outermost slot centers
    edge_length: float
    a: float = 0.0         # final rim-line distance from the center
    a_demands: dict[int, float] = field(default_factory=dict)  # wedge -> a

    def slot_lateral(self, slot: int, fiber_width: float) -> float:
        # slot 0 is leftmost looking from the junction center outward
        return self.halfspan - slot * fiber_width

    def rim_point(self, slot: int, center: np.ndarray,
                  fiber_width: float) -> np.ndarray:
        lam = self.slot_lateral(slot, fiber_width)
        return center + self.a * self.direction + lam * self.normal

    def rim_ends(self, center: np.ndarray, fiber_width: float) -> np.ndarray:
        reach = self.halfspan + fiber_width / 2.0
        base = center + self.a * self.direction
        return np.array([base - reach * self.normal, base + reach * self.normal])


@dataclass
class Wedge:
    """The region between two angularly adjacent sides.

    ``side_a`` is the clockwise boundary (its leftmost slot faces the
    wedge), ``side_b`` the counterclockwise one (rightmost slot).
    """

    index: int
    side_a: int
    side_b: int
    gap: float
    has_bow: bool
    apex: np.ndarray | None = None  # tangent-line intersection
    u_a: float = 0.0
    u_b: float = 0.0
    kind: str = "quadratic"
    v_a: float = 0.0
    v_b: float = 0.0
    corrected: bool = False
    reference: Curve | None = None

    @property
    def angle(self) -> float:
        return self.gap


@dataclass
class JunctionLayout:
    vertex: int
    center: np.ndarray
    fiber_width: float
    r_min: float
    sides: list[Side]
    wedges: list[Wedge]
    side_by_edge: dict[int, int]
    wedge_by_pair: dict[tuple[int, int], int]

    def side_of(self, edge: int) -> Side:
        return self.sides[self.side_by_edge[edge]]

    def wedge_for(self, edge_a: int, edge_b: int) -> Wedge | None:
        key = (edge_a, edge_b) if edge_a < edge_b else (edge_b, edge_a)
        idx = self.wedge_by_pair.get(key)
        return None if idx is None else self.wedges[idx]

    def rim_point(self, edge: int, slot: int) -> np.ndarray:
        return self.side_of(edge).rim_point(slot, self.center, self.fiber_width)

    def hull(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box of all rim-line endpoints."""
        pts = np.concatenate([s.rim_ends(self.center, self.fiber_width)
                              for s in self.sides])
        return pts.min(axis=0), pts.max(axis=0)

    def contains(self, point: np.ndarray, pad: float = 1e-9) -> bool:
        lo, hi = self.hull()
        return bool(np.all(point >= lo - pad) and np.all(point <= hi + pad))


def _wedge_curve(wedge: Wedge, sides: list[Side], v_a: float,
                 v_b: float) -> Curve:
    dir_a = sides[wedge.side_a].direction
    dir_b = sides[wedge.side_b].direction
    rim_a = wedge.apex + v_a * dir_a
    rim_b = wedge.apex + v_b * dir_b
    if wedge.kind == "quadratic":
        return QuadBezier(rim_a, wedge.apex, rim_b)
    curve, _, _ = construct_cubic(rim_a, wedge.apex, rim_b)
    return curve


def _bisect_free_leg(wedge: Wedge, sides: list[Side], fixed_is_a: bool,
                     v_fixed: float, r_min: float, v_hint: float,
                     edge_cap: float) -> float:
    """Smallest free leg so the asymmetric wedge bow meets ``r_min``.

    Keeps the feasible bracket end, so the returned leg always satisfies
    the radius when re-evaluated.
    """
    if v_fixed <= 0:
        raise GeometryError(
            f"wedge with non-positive fixed leg {v_fixed:.3f} mm")

    def radius(v_free: float) -> float:
        v_a = v_fixed if fixed_is_a else v_free
        v_b = v_free if fixed_is_a else v_fixed
        try:
            return min_radius(_wedge_curve(wedge, sides, v_a, v_b))
        except GeometryError:
            return 0.0  # degenerate candidate counts as far too tight

    if abs(v_fixed - v_hint) < 1e-12 and radius(v_hint) >= r_min:
        return v_hint
    lo = 1e-3 * max(v_hint, 1.0)
    hi = max(v_hint, 2.0 * v_fixed, 1.0)
    cap = 100.0 * edge_cap
    while radius(hi) < r_min:
        hi *= 2.0
        if hi > cap:
            raise GeometryError(
                f"minimum radius {r_min} mm unreachable within {cap:.0f} mm")
    if radius(lo) >= r_min:
        return lo
    while hi - lo > LEG_BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if radius(mid) >= r_min:
            hi = mid
        else:
            lo = mid
    return hi


def parameterize_junction(graph: FiberGraph, vertex: int, r_min: float,
                          fiber_width: float) -> JunctionLayout:
    """Rim distances and reference bows for one junction.

    Degree-one stubs get a zero-distance rim line (fibers end on the
    vertex); junctions of more than four edges are not supported.
    """
    center = graph.vertices[vertex].position
    edge_ids = graph.angular_edge_order(vertex)
    if len(edge_ids) > 4:
        raise GeometryError(
            f"junction {vertex} has {len(edge_ids)} edges; at most 4 supported")
    sides: list[Side] = []
    side_by_edge: dict[int, int] = {}
    for eid in edge_ids:
        edge = graph.edges[eid]
        direction = graph.edge_direction(vertex, eid)
        far = graph.vertices[edge.other(vertex)].position
        sides.append(Side(
            vertex=vertex,
            far_vertex=edge.other(vertex),
            edge=eid,
            n_slots=edge.target,
            direction=direction,
            normal=rot90(direction),
            halfspan=(edge.target - 1) / 2.0 * fiber_width,
            edge_length=float(np.linalg.norm(far - center)),
        ))
        side_by_edge[eid] = len(sides) - 1

    layout = JunctionLayout(vertex, center, fiber_width, r_min, sides, [],
                            side_by_edge, {})
    if len(sides) < 2:
        return layout

    angles = [math.atan2(s.direction[1], s.direction[0]) for s in sides]
    wedges: list[Wedge] = []
    for i in range(len(sides)):
        j = (i + 1) % len(sides)
        if len(sides) == 2 and i == 1:
            gap = 2.0 * math.pi - wedges[0].gap
        else:
            gap = (angles[j] - angles[i]) % (2.0 * math.pi)
            if gap == 0.0 and i != j:
                gap = 2.0 * math.pi if len(sides) == 1 else 0.0
        wedge = Wedge(index=len(wedges), side_a=i, side_b=j, gap=gap,
                      has_bow=gap < math.pi - STRAIGHT_TOL)
        if wedge.has_bow:
            a_line = center + sides[i].halfspan * sides[i].normal
            b_line = center - sides[j].halfspan * sides[j].normal
            apex = line_intersection(a_line, sides[i].direction,
                                     b_line, sides[j].direction)
            if apex is None:
                wedge.has_bow = False
            else:
                wedge.apex = apex
                wedge.u_a = float((apex - center) @ sides[i].direction)
                wedge.u_b = float((apex - center) @ sides[j].direction)
        wedges.append(wedge)
        pair = tuple(sorted((sides[i].edge, sides[j].edge)))
        if pair not in layout.wedge_by_pair:
            layout.wedge_by_pair[pair] = wedge.index
        elif wedge.has_bow and not wedges[layout.wedge_by_pair[pair]].has_bow:
            layout.wedge_by_pair[pair] = wedge.index
    layout.wedges = wedges

    bow_wedges = [w for w in wedges if w.has_bow]
    # symmetric first pass: equal legs sized for the radius
    sym_legs: dict[int, float] = {}
    for w in bow_wedges:
        w.kind = select_bow_kind(w.gap)
        v = scale_isosceles_for_radius(w.gap, r_min, w.kind)
        sym_legs[w.index] = v
        w.v_a = w.v_b = v
        sides[w.side_a].a_demands[w.index] = max(w.u_a + v, 0.0)
        sides[w.side_b].a_demands[w.index] = max(w.u_b + v, 0.0)

    if bow_wedges:
        def wedge_a(w: Wedge) -> float:
            return max(sides[w.side_a].a_demands[w.index],
                       sides[w.side_b].a_demands[w.index])

        fixed = max(bow_wedges, key=lambda w: (wedge_a(w), -w.index))
        solved = {fixed.index}
        # neighbours share one side with the fixed wedge; re-solve their
        # free leg with the shared rim distance imposed
        for w in bow_wedges:
            if w.index in solved:
                continue
            shared_b = w.side_b == fixed.side_a
            shared_a = w.side_a == fixed.side_b
            if not (shared_a or shared_b):
                continue
            if shared_b:
                imposed = sides[fixed.side_a].a_demands[fixed.index]
                w.v_b = imposed - w.u_b
                free_side = w.side_a
                if w.v_b <= 0:
                    w.v_b = fiber_width / 4.0
                    w.corrected = True
                w.v_a = _bisect_free_leg(w, sides, fixed_is_a=False,
                                         v_fixed=w.v_b, r_min=r_min,
                                         v_hint=sym_legs[w.index],
                                         edge_cap=sides[free_side].edge_length)
            else:
                imposed = sides[fixed.side_b].a_demands[fixed.index]
                w.v_a = imposed - w.u_a
                free_side = w.side_b
                if w.v_a <= 0:
                    w.v_a = fiber_width / 4.0
                    w.corrected = True
                w.v_b = _bisect_free_leg(w, sides, fixed_is_a=True,
                                         v_fixed=w.v_a, r_min=r_min,
                                         v_hint=sym_legs[w.index],
                                         edge_cap=sides[free_side].edge_length)
            sides[w.side_a].a_demands[w.index] = max(w.u_a + w.v_a, 0.0)
            sides[w.side_b].a_demands[w.index] = max(w.u_b + w.v_b, 0.0)
            solved.add(w.index)
        # four-edge junction: the opposite wedge inherits both rim
        # distances and is scaled up as a whole until the radius holds
        for w in bow_wedges:
            if w.index in solved:
                continue
            w.v_a = _imposed_leg(sides[w.side_a], w, w.u_a)
            w.v_b = _imposed_leg(sides[w.side_b], w, w.u_b)
            if w.v_a <= 0 or w.v_b <= 0:
                w.v_a = max(w.v_a, fiber_width / 4.0)
                w.v_b = max(w.v_b, fiber_width / 4.0)
                w.corrected = True
            radius = min_radius(_wedge_curve(w, sides, w.v_a, w.v_b))
            gamma = 1.0
            if radius < r_min:
                gamma = (r_min / radius) * (1.0 + 1e-9)
                w.corrected = True
            w.v_a *= gamma
            w.v_b *= gamma
            for _ in range(8):
                if min_radius(_wedge_curve(w, sides, w.v_a, w.v_b)) >= r_min:
                    break
                w.v_a *= 1.0 + 1e-9
                w.v_b *= 1.0 + 1e-9
            sides[w.side_a].a_demands[w.index] = max(w.u_a + w.v_a, 0.0)
            sides[w.side_b].a_demands[w.index] = max(w.u_b + w.v_b, 0.0)
            solved.add(w.index)

    # reconcile per-side demands: the rim line sits at the largest one
    for side in sides:
        side.a = max(side.a_demands.values(), default=0.0)
    for w in bow_wedges:
        new_a = sides[w.side_a].a - w.u_a
        new_b = sides[w.side_b].a - w.u_b
        if new_a > w.v_a + 1e-12 or new_b > w.v_b + 1e-12:
            w.corrected = True
        w.v_a, w.v_b = new_a, new_b
        w.reference = _wedge_curve(w, sides, w.v_a, w.v_b)
    return layout


def _imposed_leg(side: Side, wedge: Wedge, u: float) -> float:
    demands = [a for idx, a in side.a_demands.items() if idx != wedge.index]
    if not demands:
        return 0.0
    return max(demands) - u


def build_solitary_bow(rim_a: np.ndarray, axis_a: np.ndarray,
                       rim_b: np.ndarray, axis_b: np.ndarray) -> CubicBezier:
    """Fallback cubic between two rim points.

    ``axis_*`` are the junction-center-to-far-vertex vectors of the two
    sides (not normalized; the inner control arm scales with them and
    inversely with the rim distance).
    """
    span = float(np.linalg.norm(rim_b - rim_a))
    if span < 1e-12:
        raise GeometryError("solitary bow between coincident rim points")
    i1 = rim_a - (1.0 / 3.0) / span * axis_a
    i2 = rim_b - (1.0 / 3.0) / span * axis_b
    return CubicBezier(rim_a, i1, i2, rim_b)


def build_edge_bow_curve(rim_a: np.ndarray, dir_a: np.ndarray,
                         rim_b: np.ndarray, dir_b: np.ndarray,
                         layout: JunctionLayout) -> Curve | None:
    """Tangent-intersection bow between two rim points, or None when the
    intersection leaves the junction hull (caller builds a solitary bow)."""
    apex = line_intersection(rim_a, dir_a, rim_b, dir_b)
    if apex is None or not layout.contains(apex):
        return None
    leg_a = float(np.linalg.norm(rim_a - apex))
    leg_b = float(np.linalg.norm(rim_b - apex))
    if leg_a < 1e-9 or leg_b < 1e-9:
        return None
    cosang = float((rim_a - apex) @ (rim_b - apex)) / (leg_a * leg_b)
    angle = math.acos(max(-1.0, min(1.0, cosang)))
    if angle >= math.pi - STRAIGHT_TOL:
        return None
    if select_bow_kind(angle) == "quadratic":
        return QuadBezier(rim_a, apex, rim_b)
    curve, _, _ = construct_cubic(rim_a, apex, rim_b)
    return curve


def build_s_bow_curve(rim_a: np.ndarray, dir_a: np.ndarray,
                      rim_b: np.ndarray, dir_b: np.ndarray,
                      h1: np.ndarray, h2: np.ndarray,
                      layout: JunctionLayout) -> CubicBezier | None:
    """Crossing bow threaded between two diagonal edge bows.

    The inner control points are the intersections of the line through
    the bow midpoints with the rim tangents; returns None when they
    degenerate (caller falls back to an edge or solitary bow).
    """
    h_dir = h2 - h1
    n = float(np.linalg.norm(h_dir))
    if n < 1e-9:
        return None
    h_dir = h_dir / n
    i1 = line_intersection(h1, h_dir, rim_a, dir_a)
    i2 = line_intersection(h1, h_dir, rim_b, dir_b)
    if i1 is None or i2 is None:
        return None
    if float(np.linalg.norm(i2 - i1)) < 1e-9:
        return None
    if not (layout.contains(i1) and layout.contains(i2)):
        return None
    return CubicBezier(rim_a, i1, i2, rim_b)
