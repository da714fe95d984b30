"""Turn one layer's loop counts into concrete fiber bundle paths.

Straight lanes run between junction rim lines; connections are realized
as edge bows (with offset bows filling inward), crossing bows threaded
between their diagonal edge bows, solitary fallback cubics, or plain
straight connectors.  Concentric instances of a closed loop are joined
into a single open path (interlooping).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bezier import (Curve, OFFSET_SAMPLES, CubicBezier, OffsetPolyline,
                     min_radius, offset_curve, polyline_curvature)
from .errors import GeometryError
from .graph import FiberGraph, Loop, Sheet
from .junctions import (JunctionLayout, build_edge_bow_curve,
                        build_s_bow_curve, build_solitary_bow,
                        parameterize_junction, rot90)
from .pattern import LayerSolution

INTERLOOP_BISECT_TOL = 1e-3  # mm, on the shift parameter b
INTERLOOP_SAMPLES = 512


def junction_layouts(graph: FiberGraph, r_min: float,
                     fiber_width: float) -> dict[int, JunctionLayout]:
    """Layer-independent rim parameterization of every junction."""
    return {v.id: parameterize_junction(graph, v.id, r_min, fiber_width)
            for v in graph.vertices}


# ---------------------------------------------------------------------------
# lane assignment


@dataclass
class Traversal:
    edge: int
    enter_vertex: int
    exit_vertex: int
    lane: int | None = None  # 0 = leftmost travelling edge.v1 -> edge.v2


@dataclass
class LoopInstance:
    key: str
    sheet: int
    loop: Loop
    instance: int
    traversals: list[Traversal]

    @property
    def closed(self) -> bool:
        return self.loop.closed

    def connection_count(self) -> int:
        return len(self.loop.connections)


def _slot_to_lane(graph: FiberGraph, edge: int, vertex: int, slot: int) -> int:
    e = graph.edges[edge]
    return slot if vertex == e.v1 else e.target - 1 - slot


def _lane_to_slot(graph: FiberGraph, edge: int, vertex: int, lane: int) -> int:
    return _slot_to_lane(graph, edge, vertex, lane)  # involution


def _instance_traversals(graph: FiberGraph, loop: Loop) -> list[Traversal]:
    conns = [graph.connections[c] for c in loop.connections]
    edges = list(loop.edge_path)
    travs = []
    for i, eid in enumerate(edges):
        if loop.closed:
            enter = conns[(i - 1) % len(conns)].mid_vertex
            exit_ = conns[i].mid_vertex
        else:
            exit_ = conns[i].mid_vertex if i < len(conns) else None
            enter = conns[i - 1].mid_vertex if i > 0 else None
            e = graph.edges[eid]
            if enter is None:
                enter = e.other(exit_)
            if exit_ is None:
                exit_ = e.other(enter)
        travs.append(Traversal(eid, enter, exit_))
    return travs


def build_instances(graph: FiberGraph, sheet: Sheet,
                    x: tuple[int, ...]) -> list[LoopInstance]:
    instances = []
    for loop, count in zip(sheet.loops, x):
        for k in range(count):
            instances.append(LoopInstance(
                key=f"{loop.id}.{k}", sheet=sheet.id, loop=loop, instance=k,
                traversals=_instance_traversals(graph, loop)))
    return instances


class LaneAssignment:
    """Per-layer allocation of edge lanes to loop instances.

    Within one wedge the realized bows are strictly nested: the k-th
    one pairs slot k of one side with slot k from the other side's wedge
    end.  An instance's wedge slot may differ from junction to junction
    (inner at one turn, outer at the next); the chain is therefore
    seeded at its first wedge connection and the lane propagated along
    the loop, which also resolves the crossing-placement ambiguity.
    """

    def __init__(self, graph: FiberGraph, layouts: dict[int, JunctionLayout]):
        self.graph = graph
        self.layouts = layouts
        self.edge_lanes: dict[int, dict[int, str]] = {
            e.id: {} for e in graph.edges}
        self.wedge_slots: dict[tuple[int, int], set[int]] = {}

    def _claim(self, trav: Traversal, lane: int, key: str,
               vertex: int) -> None:
        if trav.lane is not None:
            if trav.lane != lane:
                raise GeometryError(
                    f"lane conflict for {key} on edge {trav.edge} at "
                    f"junction {vertex}: slots demand lanes {trav.lane} "
                    f"and {lane}")
            return
        if not 0 <= lane < self.graph.edges[trav.edge].target:
            raise GeometryError(
                f"edge {trav.edge} over capacity at junction {vertex}")
        taken = self.edge_lanes[trav.edge]
        if lane in taken:
            raise GeometryError(
                f"lane {lane} on edge {trav.edge} already used by "
                f"{taken[lane]} (wanted by {key}, junction {vertex})")
        taken[lane] = key
        trav.lane = lane

    def _free_lanes(self, edge: int) -> list[int]:
        taken = self.edge_lanes[edge]
        return [i for i in range(self.graph.edges[edge].target)
                if i not in taken]

    def _wedge_sides(self, vertex: int, wedge):
        layout = self.layouts[vertex]
        return layout.sides[wedge.side_a], layout.sides[wedge.side_b]

    def _wedge_lane(self, vertex: int, wedge, k: int, edge: int) -> int:
        side_a, side_b = self._wedge_sides(vertex, wedge)
        if edge == side_a.edge:
            slot = k
        elif edge == side_b.edge:
            slot = side_b.n_slots - 1 - k
        else:
            raise GeometryError(f"edge {edge} not part of the wedge")
        return _slot_to_lane(self.graph, edge, vertex, slot)

    def _wedge_slot_of(self, vertex: int, wedge, edge: int, lane: int) -> int:
        side_a, side_b = self._wedge_sides(vertex, wedge)
        slot = _lane_to_slot(self.graph, edge, vertex, lane)
        if edge == side_a.edge:
            return slot
        return side_b.n_slots - 1 - slot

    def _take_wedge_slot(self, vertex: int, wedge, k: int, key: str) -> None:
        side_a, side_b = self._wedge_sides(vertex, wedge)
        cap = min(side_a.n_slots, side_b.n_slots)
        if not 0 <= k < cap:
            raise GeometryError(
                f"wedge at junction {vertex} over capacity (slot {k} of "
                f"{cap}) for {key}")
        used = self.wedge_slots.setdefault((vertex, wedge.index), set())
        if k in used:
            raise GeometryError(
                f"wedge slot {k} at junction {vertex} double-booked by {key}")
        used.add(k)

    def used_wedge_slots(self, vertex: int, wedge_index: int) -> set[int]:
        return self.wedge_slots.get((vertex, wedge_index), set())

    def assign(self, instance: LoopInstance) -> None:
        graph = self.graph
        travs = instance.traversals
        conns = [graph.connections[c] for c in instance.loop.connections]
        wedges = []
        for conn in conns:
            layout = self.layouts[conn.mid_vertex]
            wedges.append(layout.wedge_for(conn.edge1, conn.edge2))
        n_conn = len(conns)

        seed = next((j for j, w in enumerate(wedges) if w is not None), None)
        if seed is None:
            free = self._free_lanes(travs[0].edge)
            if not free:
                raise GeometryError(
                    f"edge {travs[0].edge} has no free lane for {instance.key}")
            n = graph.edges[travs[0].edge].target
            lane = min(free, key=lambda i: (abs(i - (n - 1) / 2.0), i))
            self._claim(travs[0], lane, instance.key, travs[0].enter_vertex)
            seed_trav = 0
        else:
            conn, wedge = conns[seed], wedges[seed]
            vertex = conn.mid_vertex
            side_a, side_b = self._wedge_sides(vertex, wedge)
            cap = min(side_a.n_slots, side_b.n_slots)
            used = self.wedge_slots.setdefault((vertex, wedge.index), set())
            t_in = travs[seed]
            t_out = travs[(seed + 1) % len(travs)]
            k = next(
                (k for k in range(cap) if k not in used
                 and self._wedge_lane(vertex, wedge, k, t_in.edge)
                 not in self.edge_lanes[t_in.edge]
                 and self._wedge_lane(vertex, wedge, k, t_out.edge)
                 not in self.edge_lanes[t_out.edge]),
                None)
            if k is None:
                raise GeometryError(
                    f"no free bow slot at junction {vertex} for {instance.key}")
            self._claim(t_in, self._wedge_lane(vertex, wedge, k, t_in.edge),
                        instance.key, vertex)
            self._claim(t_out, self._wedge_lane(vertex, wedge, k, t_out.edge),
                        instance.key, vertex)
            self._take_wedge_slot(vertex, wedge, k, instance.key)
            seed_trav = seed

        # forward propagation across the remaining connections
        if seed is not None:
            span = range(seed + 1, n_conn) if not instance.closed else \
                [(seed + 1 + i) % n_conn for i in range(n_conn - 1)]
            for j in span:
                self._propagate(instance, conns[j], wedges[j], j,
                                forward=True)
            for j in range(seed - 1, -1, -1):
                self._propagate(instance, conns[j], wedges[j], j,
                                forward=False)
        else:
            for j in range(seed_trav, n_conn):
                self._propagate(instance, conns[j], wedges[j], j,
                                forward=True)

    def _propagate(self, instance: LoopInstance, conn, wedge, j: int,
                   forward: bool) -> None:
        travs = instance.traversals
        t_in = travs[j]
        t_out = travs[(j + 1) % len(travs)]
        known, target = (t_in, t_out) if forward else (t_out, t_in)
        if known.lane is None:
            raise GeometryError(
                f"propagation order broke for {instance.key} at "
                f"connection {conn.id}")
        vertex = conn.mid_vertex
        if wedge is not None:
            k = self._wedge_slot_of(vertex, wedge, known.edge, known.lane)
            lane = self._wedge_lane(vertex, wedge, k, target.edge)
            # on a closed-loop wrap this only verifies the seeded lane
            self._claim(target, lane, instance.key, vertex)
            self._take_wedge_slot(vertex, wedge, k, instance.key)
        else:
            if target.lane is not None:
                return
            lane = self._continuation_lane(instance, conn, known, target,
                                           vertex)
            self._claim(target, lane, instance.key, vertex)

    def _continuation_lane(self, instance: LoopInstance, conn, known,
                           target, vertex: int) -> int:
        free = self._free_lanes(target.edge)
        if not free:
            raise GeometryError(
                f"edge {target.edge} has no free lane for {instance.key} "
                f"at junction {vertex}")
        layout = self.layouts[vertex]
        slot = _lane_to_slot(self.graph, known.edge, vertex, known.lane)
        anchor = layout.rim_point(known.edge, slot)
        best = min(
            free,
            key=lambda lane: (float(np.linalg.norm(layout.rim_point(
                target.edge,
                _lane_to_slot(self.graph, target.edge, vertex, lane))
                - anchor)), lane))
        return best


def resolve_crossing_assignment(graph: FiberGraph,
                                layouts: dict[int, JunctionLayout],
                                sheet: Sheet,
                                x: tuple[int, ...]) -> list[LoopInstance]:
    """Allocate a lane to every loop-instance edge traversal.

    Wedge bows fix slots outright (filling inward from the wedge);
    crossing and open ends continue the instance's slot at the adjacent
    junction, which resolves the placement ambiguity of crossings.
    """
    assignment = LaneAssignment(graph, layouts)
    instances = build_instances(graph, sheet, x)
    for instance in instances:
        assignment.assign(instance)
    return instances


# ---------------------------------------------------------------------------
# geometry assembly


@dataclass(eq=False)
class Bow:
    """All realizations of one connection at one junction in one layer."""

    kind: str  # edge | solitary | s_shape | straight
    connection: int
    vertex: int
    instances: list[str]
    reference: Curve | None
    offsets: list[OffsetPolyline]
    corrected: bool = False


@dataclass(eq=False)
class BundlePath:
    key: str
    sheet: int
    loop: int
    instance: int
    closed: bool
    points: np.ndarray
    edge_spans: list[tuple[int, int, int]] = field(default_factory=list)
    # (edge id, index of entry rim point, index of exit rim point)

    @property
    def endpoints(self) -> tuple[np.ndarray, np.ndarray] | None:
        if self.closed:
            return None
        return self.points[0], self.points[-1]


@dataclass(eq=False)
class LayerPathPlan:
    layer: int
    sheet: int
    x: tuple[int, ...]
    paths: list[BundlePath]
    bows: list[Bow]
    connectors: list[np.ndarray]
    fills: list[np.ndarray]
    junction_boxes: list[tuple[int, np.ndarray, np.ndarray]]
    rim_points: np.ndarray
    warnings: list[str]


def _dedupe(points: np.ndarray) -> np.ndarray:
    if len(points) < 2:
        return points
    keep = np.ones(len(points), dtype=bool)
    d = np.hypot(*(np.diff(points, axis=0).T))
    keep[1:] = d > 1e-9
    return points[keep]


def _orient(polyline: np.ndarray, start: np.ndarray) -> np.ndarray:
    if np.linalg.norm(polyline[0] - start) <= np.linalg.norm(polyline[-1] - start):
        return polyline
    return polyline[::-1]


class _LayerBuilder:
    def __init__(self, graph: FiberGraph, layouts: dict[int, JunctionLayout],
                 solution: LayerSolution, fiber_width: float, r_min: float):
        self.graph = graph
        self.layouts = layouts
        self.solution = solution
        self.w = fiber_width
        self.r_min = r_min
        self.sheet = graph.sheets[solution.sheet]
        self.warnings: list[str] = []
        self.bows: dict[tuple[int, int], Bow] = {}  # (vertex, connection)
        self.bow_polylines: dict[tuple[int, int, str], np.ndarray] = {}
        self.assignment = LaneAssignment(graph, layouts)
        self.instances = build_instances(graph, self.sheet, solution.x)
        for inst in self.instances:
            self.assignment.assign(inst)

    # -- rim helpers

    def rim(self, vertex: int, edge: int, lane: int) -> np.ndarray:
        slot = _lane_to_slot(self.graph, edge, vertex, lane)
        return self.layouts[vertex].rim_point(edge, slot)

    # -- bow construction

    def _edge_bow_polyline(self, conn, wedge, vertex: int, inst_key: str,
                           k: int) -> np.ndarray:
        bow = self.bows.get((vertex, conn.id))
        if bow is None:
            bow = Bow("edge", conn.id, vertex, [], wedge.reference, [],
                      corrected=wedge.corrected)
            self.bows[(vertex, conn.id)] = bow
        bow.instances.append(inst_key)
        if bow.reference is None:
            layout = self.layouts[vertex]
            side_a = layout.sides[wedge.side_a]
            side_b = layout.sides[wedge.side_b]
            rim_a = layout.rim_point(side_a.edge, k)
            rim_b = layout.rim_point(side_b.edge, side_b.n_slots - 1 - k)
            if np.linalg.norm(rim_b - rim_a) <= 1e-9:
                poly = np.array([rim_a])
            else:
                poly = np.array([rim_a, rim_b])
        else:
            off = offset_curve(bow.reference, k * self.w,
                               source=f"v{vertex}c{conn.id}")
            bow.offsets.append(off)
            poly = off.points
        self.bow_polylines[(vertex, conn.id, inst_key)] = poly
        return poly

    def _crossing_polyline(self, conn, vertex: int, inst: LoopInstance,
                           t_in: Traversal, t_out: Traversal) -> np.ndarray:
        layout = self.layouts[vertex]
        slot_in = _lane_to_slot(self.graph, t_in.edge, vertex, t_in.lane)
        slot_out = _lane_to_slot(self.graph, t_out.edge, vertex, t_out.lane)
        rim_in = layout.rim_point(t_in.edge, slot_in)
        rim_out = layout.rim_point(t_out.edge, slot_out)
        bow = self.bows.get((vertex, conn.id))
        if bow is not None and bow.reference is not None:
            # later instances ride as offsets of the first crossing bow
            k = len(bow.instances)
            for sign in (1.0, -1.0):
                off = offset_curve(bow.reference, sign * k * self.w,
                                   source=f"v{vertex}c{conn.id}")
                if (np.linalg.norm(off.points[0] - rim_in) < 1e-6
                        and np.linalg.norm(off.points[-1] - rim_out) < 1e-6) or (
                        np.linalg.norm(off.points[-1] - rim_in) < 1e-6
                        and np.linalg.norm(off.points[0] - rim_out) < 1e-6):
                    bow.instances.append(inst.key)
                    bow.offsets.append(off)
                    poly = off.points
                    self.bow_polylines[(vertex, conn.id, inst.key)] = poly
                    return poly
            self.warnings.append(
                f"crossing {conn.id} at junction {vertex}: instance "
                f"{inst.key} not parallel to the reference bow")
        curve, kind = self._crossing_curve(conn, vertex, rim_in, rim_out,
                                           t_in, t_out, slot_in)
        if bow is None:
            bow = Bow(kind, conn.id, vertex, [], curve, [])
            self.bows[(vertex, conn.id)] = bow
        bow.instances.append(inst.key)
        if curve is None:
            poly = np.array([rim_in, rim_out])
        else:
            off = offset_curve(curve, 0.0, source=f"v{vertex}c{conn.id}")
            bow.offsets.append(off)
            poly = off.points
        self.bow_polylines[(vertex, conn.id, inst.key)] = poly
        return poly

    def _crossing_curve(self, conn, vertex: int, rim_in: np.ndarray,
                        rim_out: np.ndarray, t_in: Traversal,
                        t_out: Traversal,
                        slot_in: int) -> tuple[Curve | None, str]:
        layout = self.layouts[vertex]
        graph = self.graph
        dir_in = layout.side_of(t_in.edge).direction
        dir_out = layout.side_of(t_out.edge).direction
        h_pair = self._defining_bows(conn, vertex, t_in, slot_in)
        if h_pair is not None:
            h1, h2 = h_pair
            curve = build_s_bow_curve(rim_in, dir_in, rim_out, dir_out,
                                      h1, h2, layout)
            if curve is not None:
                return curve, "s_shape"
        curve = build_edge_bow_curve(rim_in, dir_in, rim_out, dir_out, layout)
        if curve is not None:
            return curve, "edge"
        if np.linalg.norm(rim_out - rim_in) <= 1e-9:
            return None, "straight"
        center = layout.center
        axis_in = graph.vertices[layout.side_of(t_in.edge).far_vertex].position - center
        axis_out = graph.vertices[layout.side_of(t_out.edge).far_vertex].position - center
        solitary = build_solitary_bow(rim_in, axis_in, rim_out, axis_out)
        # a near-straight crossing degenerates to a clean segment
        if min_radius(solitary) < self.r_min:
            chord = rim_out - rim_in
            if abs(chord @ rot90(dir_in)) < 1e-9 * np.linalg.norm(chord):
                return None, "straight"
        return solitary, "solitary"

    def _defining_bows(self, conn, vertex: int, t_in: Traversal,
                       slot_in: int) -> tuple[np.ndarray, np.ndarray] | None:
        """Midpoints H1, H2 of the diagonal edge bows flanking a crossing.

        Of the two diagonal wedge pairs, the one whose bows are realized
        in this layer defines the crossing; with both pairs realized the
        entry slot's side decides.
        """
        layout = self.layouts[vertex]
        order = self.graph.angular_edge_order(vertex)
        if len(order) != 4:
            return None
        i = order.index(t_in.edge)
        opposite_edge = order[(i + 2) % 4]
        j = order.index(opposite_edge)
        ccw_pair = (layout.wedge_for(t_in.edge, order[(i + 1) % 4]),
                    layout.wedge_for(opposite_edge, order[(j + 1) % 4]))
        cw_pair = (layout.wedge_for(t_in.edge, order[(i - 1) % 4]),
                   layout.wedge_for(opposite_edge, order[(j - 1) % 4]))

        def realized(pair):
            return all(
                w is not None
                and self.assignment.used_wedge_slots(vertex, w.index)
                for w in pair)

        candidates = [p for p in (ccw_pair, cw_pair) if realized(p)]
        if not candidates:
            return None
        if len(candidates) == 2:
            n_in = self.graph.edges[t_in.edge].target
            toward_ccw = slot_in <= (n_in - 1) / 2.0
            pair = ccw_pair if toward_ccw else cw_pair
        else:
            pair = candidates[0]
        hs = []
        for wedge in pair:
            side_a = layout.sides[wedge.side_a]
            side_b = layout.sides[wedge.side_b]
            k = max(self.assignment.used_wedge_slots(vertex, wedge.index))
            rim_a = layout.rim_point(side_a.edge, k)
            rim_b = layout.rim_point(side_b.edge, side_b.n_slots - 1 - k)
            hs.append(0.5 * (rim_a + rim_b))
        return hs[0], hs[1]

    # -- path assembly

    def build_paths(self) -> list[BundlePath]:
        paths = []
        for inst in self.instances:
            paths.append(self._build_path(inst))
        return paths

    def _connection_polyline(self, inst: LoopInstance, j: int) -> np.ndarray:
        conn = self.graph.connections[inst.loop.connections[j]]
        vertex = conn.mid_vertex
        travs = inst.traversals
        t_in = travs[j]
        t_out = travs[(j + 1) % len(travs)]
        layout = self.layouts[vertex]
        wedge = layout.wedge_for(conn.edge1, conn.edge2)
        if wedge is not None and wedge.has_bow:
            k = _lane_to_slot(self.graph, t_in.edge, vertex, t_in.lane) \
                if layout.sides[wedge.side_a].edge == t_in.edge else \
                _lane_to_slot(self.graph, t_out.edge, vertex, t_out.lane)
            poly = self._edge_bow_polyline(conn, wedge, vertex, inst.key, k)
        elif wedge is not None:
            # straight pass-through (collinear wedge)
            rim_in = self.rim(vertex, t_in.edge, t_in.lane)
            rim_out = self.rim(vertex, t_out.edge, t_out.lane)
            bow = self.bows.get((vertex, conn.id))
            if bow is None:
                bow = Bow("straight", conn.id, vertex, [], None, [])
                self.bows[(vertex, conn.id)] = bow
            bow.instances.append(inst.key)
            poly = np.array([rim_in, rim_out])
            self.bow_polylines[(vertex, conn.id, inst.key)] = poly
        else:
            poly = self._crossing_polyline(conn, vertex, inst, t_in, t_out)
        start = self.rim(vertex, t_in.edge, t_in.lane)
        return _orient(poly, start)

    def _build_path(self, inst: LoopInstance) -> BundlePath:
        travs = inst.traversals
        pieces: list[np.ndarray] = []
        spans: list[tuple[int, int, int]] = []
        count = 0

        def add(piece: np.ndarray) -> tuple[int, int]:
            nonlocal count
            pieces.append(piece)
            first = count
            count += len(piece)
            return first, count - 1

        n_conn = inst.connection_count()
        for j, trav in enumerate(travs):
            entry = self.rim(trav.enter_vertex, trav.edge, trav.lane)
            exit_ = self.rim(trav.exit_vertex, trav.edge, trav.lane)
            i0, i1 = add(np.array([entry, exit_]))
            spans.append((trav.edge, i0, i1))
            if j < n_conn and (inst.closed or j < len(travs) - 1):
                add(self._connection_polyline(inst, j))
        points = _dedupe(np.concatenate(pieces))
        if inst.closed and np.linalg.norm(points[0] - points[-1]) < 1e-9:
            points = points[:-1]
        # spans reference pre-dedupe indices; remap by nearest match
        spans = self._remap_spans(spans, np.concatenate(pieces), points)
        return BundlePath(inst.key, inst.sheet, inst.loop.id, inst.instance,
                          inst.closed, points, spans)

    @staticmethod
    def _remap_spans(spans, raw, deduped):
        # indices survive dedupe as the nearest remaining point
        mapping = np.zeros(len(raw), dtype=int)
        j = 0
        for i, p in enumerate(raw):
            while j < len(deduped) - 1 and \
                    np.linalg.norm(deduped[j + 1] - p) <= \
                    np.linalg.norm(deduped[j] - p):
                j += 1
            mapping[i] = j
        return [(e, int(mapping[i0]), int(mapping[i1]))
                for e, i0, i1 in spans]


# ---------------------------------------------------------------------------
# interlooping


def interloop_base_curve(b: float, fiber_width: float) -> CubicBezier:
    """Canonical lane-shift cubic: right angles at both inner control
    points, inner segment one fiber width long."""
    return CubicBezier(np.array([0.0, 0.0]), np.array([b, 0.0]),
                       np.array([b, fiber_width]),
                       np.array([2.0 * b, fiber_width]))


def find_interloop_b(fiber_width: float, r_min: float,
                     n_offsets: int = 0) -> float:
    """Shift length so the worst lane-shift curve meets the radius.

    ``n_offsets`` is the largest offset (in fiber widths) that must stay
    printable; 0 checks only the reference curve.
    """

    def worst_radius(b: float) -> float:
        base = interloop_base_curve(b, fiber_width)
        if n_offsets == 0:
            return min_radius(base)
        try:
            off = offset_curve(base, n_offsets * fiber_width,
                               samples=INTERLOOP_SAMPLES)
        except GeometryError:
            return 0.0  # offset folds onto itself: far too tight
        k = np.max(np.abs(polyline_curvature(off.points)))
        return math.inf if k == 0 else 1.0 / float(k)

    lo = fiber_width / 2.0
    hi = max(4.0 * fiber_width, r_min)
    while worst_radius(hi) < r_min:
        hi *= 2.0
        if hi > 1e4 * r_min:
            raise GeometryError("lane-shift radius search diverged")
    while worst_radius(lo) >= r_min and lo > 1e-6:
        lo *= 0.5
    while hi - lo > INTERLOOP_BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if worst_radius(mid) >= r_min:
            hi = mid
        else:
            lo = mid
    return hi


def interloop(paths: list[BundlePath], fiber_width: float, r_min: float,
              warnings: list[str]) -> tuple[list[BundlePath], list[np.ndarray]]:
    """Join concentric closed-loop instances into single open paths."""
    by_loop: dict[tuple[int, int], list[BundlePath]] = {}
    out = []
    for p in paths:
        if p.closed:
            by_loop.setdefault((p.sheet, p.loop), []).append(p)
        else:
            out.append(p)
    connectors: list[np.ndarray] = []
    for (sheet, loop_id), rings in sorted(by_loop.items()):
        rings.sort(key=lambda p: p.instance)
        if len(rings) < 2:
            out.extend(rings)
            continue
        merged = _join_rings(rings, fiber_width, r_min, warnings, connectors)
        out.extend(merged)
    return out, connectors


def _straight_vectors(ring: BundlePath, edge: int):
    for e, i0, i1 in ring.edge_spans:
        if e == edge:
            return ring.points[i0], ring.points[i1]
    raise GeometryError(f"ring {ring.key} does not traverse edge {edge}")


def _join_rings(rings: list[BundlePath], w: float, r_min: float,
                warnings: list[str],
                connectors: list[np.ndarray]) -> list[BundlePath]:
    first = rings[0]
    edges = [e for e, _, _ in first.edge_spans]
    if len(set(edges)) != len(edges):
        warnings.append(
            f"loop {first.loop}: repeated edges, interlooping skipped")
        return rings
    b = find_interloop_b(w, r_min, n_offsets=len(rings) - 2)
    lengths = {e: float(np.linalg.norm(np.subtract(*_straight_vectors(first, e))))
               for e in edges}
    seam_edge = max(edges, key=lambda e: (lengths[e], -e))
    if lengths[seam_edge] < 2.0 * b + w:
        warnings.append(
            f"loop {first.loop}: no straight segment long enough for the "
            f"lane-shift window ({2 * b + w:.1f} mm), interlooping skipped")
        return rings
    s0, t0 = _straight_vectors(first, seam_edge)
    direction = (t0 - s0) / np.linalg.norm(t0 - s0)
    s1, _ = _straight_vectors(rings[1], seam_edge)
    shift = s1 - s0
    if abs(np.linalg.norm(shift) - w) > 1e-6:
        warnings.append(
            f"loop {first.loop}: lanes not adjacent on edge {seam_edge}, "
            "interlooping skipped")
        return rings
    sign = 1.0 if float(shift @ rot90(direction)) > 0 else -1.0
    base = _seam_base_curve(first, seam_edge, b, shift, direction)
    arcs = []
    cuts = []
    for ring in rings:
        s, t = _straight_vectors(ring, seam_edge)
        mid = 0.5 * (s + t)
        cuts.append((mid - b * direction, mid + b * direction))
        arcs.append(_ring_arc(ring, seam_edge, mid, b, direction))
    pieces = [arcs[0]]
    for j in range(len(rings) - 1):
        conn = offset_curve(base, sign * j * w, samples=OFFSET_SAMPLES)
        poly = conn.points
        if np.linalg.norm(poly[0] - cuts[j][0]) > 1e-6 or \
                np.linalg.norm(poly[-1] - cuts[j + 1][1]) > 1e-6:
            raise GeometryError(
                f"lane-shift connector endpoints drifted on edge {seam_edge}")
        connectors.append(poly)
        pieces.append(poly)
        pieces.append(arcs[j + 1])
    points = _dedupe(np.concatenate(pieces))
    key = f"{rings[0].loop}.0-{len(rings) - 1}"
    merged = BundlePath(key, rings[0].sheet, rings[0].loop, 0, False, points,
                        [])
    return [merged]


def _seam_base_curve(ring: BundlePath, edge: int, b: float,
                     shift: np.ndarray, direction: np.ndarray) -> CubicBezier:
    s, t = _straight_vectors(ring, edge)
    mid = 0.5 * (s + t)
    e1 = mid - b * direction
    return CubicBezier(e1, mid, mid + shift, mid + shift + b * direction)


def _ring_arc(ring: BundlePath, edge: int, mid: np.ndarray, b: float,
              direction: np.ndarray) -> np.ndarray:
    for e, i0, i1 in ring.edge_spans:
        if e != edge:
            continue
        cut_in = mid - b * direction
        cut_out = mid + b * direction
        pts = ring.points
        # ring points run entry(i0) -> exit(i1); the retained arc runs
        # from the window end, through the exit rim, around the ring,
        # back to the entry rim and the window start
        arc = np.concatenate([[cut_out], pts[i1:], pts[:i0 + 1], [cut_in]])
        return _dedupe(arc)
    raise GeometryError(f"ring {ring.key} does not traverse edge {edge}")


# ---------------------------------------------------------------------------
# fills, assembly entry point, checks


def _fill_polygons(graph: FiberGraph, layouts: dict[int, JunctionLayout],
                   assignment: LaneAssignment, w: float) -> list[np.ndarray]:
    fills = []
    for edge in graph.edges:
        used = assignment.edge_lanes[edge.id]
        p_layout = layouts[edge.v1]
        q_layout = layouts[edge.v2]
        for lane in range(edge.target):
            if lane in used:
                continue
            slot_p = _lane_to_slot(graph, edge.id, edge.v1, lane)
            slot_q = _lane_to_slot(graph, edge.id, edge.v2, lane)
            p = p_layout.rim_point(edge.id, slot_p)
            q = q_layout.rim_point(edge.id, slot_q)
            n = rot90((q - p) / np.linalg.norm(q - p)) * (w / 2.0)
            fills.append(np.array([p - n, p + n, q + n, q - n]))
    for vid, layout in sorted(layouts.items()):
        if len(layout.sides) < 2:
            continue
        poly = []
        for side in layout.sides:
            ends = side.rim_ends(layout.center, w)
            poly.append(ends[0])
            poly.append(ends[1])
        fills.append(np.array(poly))
    return fills


def assemble_layer(graph: FiberGraph, solution: LayerSolution,
                   fiber_width: float, r_min: float,
                   layouts: dict[int, JunctionLayout] | None = None) -> LayerPathPlan:
    """Concrete bundle paths for one optimized layer."""
    if layouts is None:
        layouts = junction_layouts(graph, r_min, fiber_width)
    builder = _LayerBuilder(graph, layouts, solution, fiber_width, r_min)
    paths = builder.build_paths()
    paths, connectors = interloop(paths, fiber_width, r_min, builder.warnings)
    fills = _fill_polygons(graph, layouts, builder.assignment, fiber_width)
    boxes = []
    rims = []
    for vid, layout in sorted(layouts.items()):
        if len(layout.sides) >= 2:
            lo, hi = layout.hull()
            boxes.append((vid, lo, hi))
        for side in layout.sides:
            for slot in range(side.n_slots):
                rims.append(side.rim_point(slot, layout.center, fiber_width))
    return LayerPathPlan(
        layer=solution.layer, sheet=solution.sheet, x=solution.x,
        paths=paths, bows=sorted(builder.bows.values(),
                                 key=lambda b: (b.vertex, b.connection)),
        connectors=connectors, fills=fills, junction_boxes=boxes,
        rim_points=np.array(rims), warnings=builder.warnings)


@dataclass
class PlanCheck:
    curvature_violations: list[tuple[str, int, float]]
    overlap_violations: list[tuple[int, str, str, float]]

    @property
    def ok(self) -> bool:
        return not self.curvature_violations and not self.overlap_violations


def _point_segment_distances(points: np.ndarray, seg_a: np.ndarray,
                             seg_b: np.ndarray) -> np.ndarray:
    d = seg_b - seg_a
    seg_len2 = np.einsum("ij,ij->i", d, d)
    seg_len2[seg_len2 == 0.0] = 1e-30
    rel = points[:, None, :] - seg_a[None, :, :]
    t = np.clip(np.einsum("pij,ij->pi", rel, d) / seg_len2, 0.0, 1.0)
    proj = seg_a[None, :, :] + t[..., None] * d[None, :, :]
    return np.min(np.hypot(*(points[:, None, :] - proj).transpose(2, 0, 1)),
                  axis=1)


def check_plan(plan: LayerPathPlan, r_min: float,
               fiber_width: float) -> PlanCheck:
    """Sampled curvature and junction-overlap report for a layer plan."""
    kappa_limit = (1.0 / r_min) * (1.0 + 1e-3)
    curvature_violations = []
    for path in plan.paths:
        pts = path.points
        if path.closed:
            pts = np.concatenate([pts, pts[:2]])
        if len(pts) < 3:
            continue
        k = polyline_curvature(_dedupe(pts))
        bad = np.nonzero(np.abs(k) > kappa_limit)[0]
        for i in bad:
            curvature_violations.append((path.key, int(i) + 1, float(k[i])))
    overlap_violations = []
    limit = fiber_width * (1.0 - 1e-2)
    for vertex, lo, hi in plan.junction_boxes:
        lo = lo - fiber_width / 2.0
        hi = hi + fiber_width / 2.0
        clipped = []
        for path in plan.paths:
            pts = path.points
            inside = np.all((pts >= lo) & (pts <= hi), axis=1)
            if not inside.any():
                continue
            mask = inside.copy()
            mask[:-1] |= inside[1:]
            mask[1:] |= inside[:-1]
            runs = _runs(mask)
            segs_a, segs_b, spts = [], [], []
            for r0, r1 in runs:
                chunk = pts[r0:r1 + 1]
                if len(chunk) >= 2:
                    segs_a.append(chunk[:-1])
                    segs_b.append(chunk[1:])
                spts.append(chunk)
            if spts:
                clipped.append((path.key,
                                np.concatenate(spts),
                                np.concatenate(segs_a) if segs_a else None,
                                np.concatenate(segs_b) if segs_b else None))
        for i in range(len(clipped)):
            for j in range(i + 1, len(clipped)):
                key_i, pts_i, a_i, b_i = clipped[i]
                key_j, pts_j, a_j, b_j = clipped[j]
                dmin = math.inf
                if a_j is not None:
                    dmin = min(dmin, float(np.min(
                        _point_segment_distances(pts_i, a_j, b_j))))
                if a_i is not None:
                    dmin = min(dmin, float(np.min(
                        _point_segment_distances(pts_j, a_i, b_i))))
                if dmin < limit:
                    overlap_violations.append((vertex, key_i, key_j, dmin))
    return PlanCheck(curvature_violations, overlap_violations)


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    runs = []
    start = None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        elif not m and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(mask) - 1))
    return runs
