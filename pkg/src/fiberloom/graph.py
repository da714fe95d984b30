"""Structural graph model: vertices, edges, connections, loops, sheets.

Connections are derived from the edges (one per unordered edge pair that
shares a middle vertex).  Loops chain connections and are grouped into
sheets; each sheet carries the incidence matrices the optimizer consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

Pair = tuple[int, int]


@dataclass(frozen=True)
class Vertex:
    id: int
    x: float
    y: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class Edge:
    """An edge between two vertices.

    ``target`` is the desired number of parallel fiber bundles.
    ``phys_width`` is the printed width of a single bundle on this edge;
    ``None`` falls back to the global fiber width.
    """

    id: int
    v1: int
    v2: int
    target: int
    phys_width: float | None = None

    def vertices(self) -> Pair:
        return (self.v1, self.v2)

    def other(self, vertex: int) -> int:
        if vertex == self.v1:
            return self.v2
        if vertex == self.v2:
            return self.v1
        raise ValueError(f"vertex {vertex} not on edge {self.id}")


@dataclass(frozen=True)
class Connection:
    """An uninterrupted fiber bond between two edges sharing a vertex."""

    id: int
    edge1: int
    edge2: int
    mid_vertex: int
    target: float

    @property
    def edge_pair(self) -> Pair:
        return (self.edge1, self.edge2)

    def other_edge(self, edge: int) -> int:
        if edge == self.edge1:
            return self.edge2
        if edge == self.edge2:
            return self.edge1
        raise ValueError(f"edge {edge} not part of connection {self.id}")


@dataclass(frozen=True)
class Loop:
    """An ordered chain of connections, the unit a fiber path realizes.

    ``edge_path`` stores the traversal as edge ids without the repeated
    closing edge; for a closed loop the chain wraps around.
    """

    id: int
    connections: tuple[int, ...]
    closed: bool
    edge_path: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Sheet:
    """A set of mutually compatible loops with incidence matrices.

    ``C`` is connection-by-loop usage, ``E`` edge-by-loop traversal counts
    and ``V`` vertex-by-loop pass-through counts.
    """

    id: int
    loops: tuple[Loop, ...]
    C: np.ndarray
    E: np.ndarray
    V: np.ndarray

    @property
    def n_loops(self) -> int:
        return len(self.loops)


class FiberGraph:
    """Validated graph with derived connections and sheet matrices."""

    def __init__(self, vertices: list[Vertex], edges: list[Edge],
                 connections: list[Connection], sheets: list[Sheet]):
        self.vertices = tuple(vertices)
        self.edges = tuple(edges)
        self.connections = tuple(connections)
        self.sheets = tuple(sheets)
        self.connection_targets = np.array([c.target for c in connections])
        if self.connection_targets.size and np.all(
                self.connection_targets == self.connection_targets.astype(np.int64)):
            self.connection_targets = self.connection_targets.astype(np.int64)
        self.edge_targets = np.array([e.target for e in edges], dtype=np.int64)
        self._conn_by_pair = {(c.edge1, c.edge2): c for c in connections}
        self._vertex_edges: dict[int, list[int]] = {v.id: [] for v in vertices}
        for e in edges:
            self._vertex_edges[e.v1].append(e.id)
            self._vertex_edges[e.v2].append(e.id)

    @property
    def n_connections(self) -> int:
        return len(self.connections)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_sheets(self) -> int:
        return len(self.sheets)

    def vertex_edges(self, vertex: int) -> list[int]:
        return list(self._vertex_edges[vertex])

    def degree(self, vertex: int) -> int:
        return len(self._vertex_edges[vertex])

    def connection_for(self, edge_a: int, edge_b: int) -> Connection:
        key = (edge_a, edge_b) if edge_a < edge_b else (edge_b, edge_a)
        try:
            return self._conn_by_pair[key]
        except KeyError:
            raise InputError(f"edges {edge_a} and {edge_b} form no connection")

    def edge_direction(self, vertex: int, edge_id: int) -> np.ndarray:
        """Unit vector from ``vertex`` along ``edge_id`` toward its far end."""
        e = self.edges[edge_id]
        p = self.vertices[vertex].position
        o = self.vertices[e.other(vertex)].position
        d = o - p
        n = float(np.hypot(*d))
        if n == 0.0:
            raise InputError(f"edge {edge_id} has coincident endpoints")
        return d / n

    def angular_edge_order(self, vertex: int) -> list[int]:
        """Incident edges sorted counterclockwise by direction angle.

        Collinear ties are broken by edge id.
        """
        items = []
        for eid in self._vertex_edges[vertex]:
            d = self.edge_direction(vertex, eid)
            items.append((math.atan2(d[1], d[0]), eid))
        items.sort()
        return [eid for _, eid in items]

    def crossing_pairs(self, vertex: int) -> list[Pair]:
        """Pairs of non-adjacent edges at a four-edge junction.

        Junctions with five or more edges are not supported.
        """
        order = self.angular_edge_order(vertex)
        if len(order) > 4:
            raise InputError(
                f"junction {vertex} has {len(order)} edges; at most 4 are supported")
        if len(order) < 4:
            return []
        p1 = tuple(sorted((order[0], order[2])))
        p2 = tuple(sorted((order[1], order[3])))
        return sorted([p1, p2])

    def is_crossing_connection(self, conn: Connection) -> bool:
        return conn.edge_pair in self.crossing_pairs(conn.mid_vertex)

    def loop_membership(self) -> dict[int, list[Pair]]:
        """connection id -> sorted [(sheet id, loop id)] that use it."""
        member: dict[int, list[Pair]] = {c.id: [] for c in self.connections}
        for sheet in self.sheets:
            for loop in sheet.loops:
                for cid in sorted(set(loop.connections)):
                    member[cid].append((sheet.id, loop.id))
        return member


def _shared_vertex(e1: Edge, e2: Edge) -> int | None:
    shared = set(e1.vertices()) & set(e2.vertices())
    if len(shared) > 1:
        raise InputError(
            f"edges {e1.id} and {e2.id} connect the same vertex pair")
    return shared.pop() if shared else None


def derive_connections(edges: list[Edge],
                       overrides: dict[Pair, float] | None = None) -> list[Connection]:
    """One connection per unordered pair of edges sharing a vertex.

    Targets default to the maximum of the two edge targets; ``overrides``
    maps an (edge1, edge2) pair to a replacement target.  Connections are
    ordered by (edge1 id, edge2 id), which fixes their ids.
    """
    pairs: list[tuple[Edge, Edge, int]] = []
    by_id = sorted(edges, key=lambda e: e.id)
    for i, e1 in enumerate(by_id):
        for e2 in by_id[i + 1:]:
            mid = _shared_vertex(e1, e2)
            if mid is not None:
                pairs.append((e1, e2, mid))
    normalized: dict[Pair, float] = {}
    for key, value in (overrides or {}).items():
        a, b = key
        normalized[(a, b) if a < b else (b, a)] = value
    known = {(e1.id, e2.id) for e1, e2, _ in pairs}
    for key in normalized:
        if key not in known:
            raise InputError(f"connection target override {key} matches no connection")
    connections = []
    for cid, (e1, e2, mid) in enumerate(pairs):
        target = normalized.get((e1.id, e2.id), max(e1.target, e2.target))
        connections.append(Connection(cid, e1.id, e2.id, mid, target))
    return connections


class _PairLookup:
    def __init__(self, connections: list[Connection]):
        self.by_pair = {(c.edge1, c.edge2): c for c in connections}

    def get(self, a: int, b: int) -> Connection:
        key = (a, b) if a < b else (b, a)
        if key not in self.by_pair:
            raise InputError(f"edges {a} and {b} share no vertex (no connection)")
        return self.by_pair[key]


def loop_from_edges(edge_ids: list[int], edges: list[Edge],
                    connections: list[Connection], loop_id: int = 0) -> Loop:
    """Build a loop from an ordered edge path.

    A repeated first edge marks the loop as closed and appends the closing
    connection between the last and first edge.
    """
    if not edge_ids:
        raise InputError("loop needs at least one edge")
    path = list(edge_ids)
    closed = len(path) > 1 and path[0] == path[-1]
    if closed:
        path = path[:-1]
    if len(path) < 2:
        raise InputError("loop needs at least two edges")
    edges_by_id = {e.id: e for e in edges}
    for eid in path:
        if eid not in edges_by_id:
            raise InputError(f"loop references unknown edge {eid}")
    lookup = _PairLookup(connections)
    steps = list(zip(path, path[1:]))
    if closed:
        steps.append((path[-1], path[0]))
    chain = []
    for a, b in steps:
        if a == b:
            raise InputError(f"loop repeats edge {a} consecutively")
        if _shared_vertex(edges_by_id[a], edges_by_id[b]) is None:
            raise InputError(f"loop edges {a} and {b} do not share a vertex")
        chain.append(lookup.get(a, b).id)
    return Loop(loop_id, tuple(chain), closed, tuple(path))


def loop_from_connections(conn_ids: list[int], closed: bool,
                          connections: list[Connection], loop_id: int = 0) -> Loop:
    """Build a loop from an ordered connection chain, recovering the edge path."""
    if not conn_ids:
        raise InputError("loop needs at least one connection")
    by_id = {c.id: c for c in connections}
    for cid in conn_ids:
        if cid not in by_id:
            raise InputError(f"loop references unknown connection {cid}")
    chain = [by_id[c] for c in conn_ids]
    if closed and len(chain) < 3:
        raise InputError("a closed loop needs at least three connections")
    if len(chain) == 1:
        c = chain[0]
        return Loop(loop_id, (c.id,), False, (c.edge1, c.edge2))

    def shared_edge(a: Connection, b: Connection) -> int:
        common = set(a.edge_pair) & set(b.edge_pair)
        if len(common) != 1:
            raise InputError(
                f"connections {a.id} and {b.id} do not chain (no unique shared edge)")
        return common.pop()

    if closed:
        path = [shared_edge(chain[-1], chain[0])]
        for a, b in zip(chain, chain[1:]):
            path.append(shared_edge(a, b))
    else:
        first_shared = shared_edge(chain[0], chain[1])
        path = [chain[0].other_edge(first_shared)]
        for a, b in zip(chain, chain[1:]):
            path.append(shared_edge(a, b))
        path.append(chain[-1].other_edge(path[-1]))
    return Loop(loop_id, tuple(conn_ids), closed, tuple(path))


def build_sheet_matrices(loops: list[Loop], n_connections: int, n_edges: int,
                         n_vertices: int,
                         connections: list[Connection]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Incidence matrices (C, E, V) for one sheet's loops."""
    n_l = len(loops)
    C = np.zeros((n_connections, n_l), dtype=np.int64)
    E = np.zeros((n_edges, n_l), dtype=np.int64)
    V = np.zeros((n_vertices, n_l), dtype=np.int64)
    mid = {c.id: c.mid_vertex for c in connections}
    for j, loop in enumerate(loops):
        for cid in loop.connections:
            C[cid, j] += 1
            V[mid[cid], j] += 1
        for eid in loop.edge_path:
            E[eid, j] += 1
    return C, E, V


def build_sheet(loops: list[Loop], sheet_id: int, n_connections: int,
                n_edges: int, n_vertices: int,
                connections: list[Connection]) -> Sheet:
    C, E, V = build_sheet_matrices(loops, n_connections, n_edges, n_vertices,
                                   connections)
    return Sheet(sheet_id, tuple(loops), C, E, V)


def validate_sheet_compatibility(sheet: Sheet, graph: FiberGraph) -> list[str]:
    """Report crossing-direction conflicts within one sheet.

    At a four-edge junction only one of the two crossing directions can be
    printed per layer; a sheet whose loops reference both is invalid.
    """
    used: set[int] = set()
    for loop in sheet.loops:
        used.update(loop.connections)
    violations = []
    for vertex in graph.vertices:
        pairs = graph.crossing_pairs(vertex.id)
        if not pairs:
            continue
        hit = []
        for pair in pairs:
            for cid in used:
                if graph.connections[cid].edge_pair == pair:
                    hit.append(pair)
                    break
        if len(hit) == 2:
            violations.append(
                f"sheet {sheet.id}: junction {vertex.id} uses both crossing "
                f"directions {hit[0]} and {hit[1]}")
    return violations


def _validate_vertices(vertices: list[Vertex]) -> None:
    ids = [v.id for v in vertices]
    if ids != list(range(len(vertices))):
        raise InputError("vertex ids must be unique and contiguous from 0")
    for v in vertices:
        if not (math.isfinite(v.x) and math.isfinite(v.y)):
            raise InputError(f"vertex {v.id} has a non-finite position")


def _validate_edges(edges: list[Edge], n_vertices: int) -> None:
    ids = [e.id for e in edges]
    if ids != list(range(len(edges))):
        raise InputError("edge ids must be unique and contiguous from 0")
    seen: set[Pair] = set()
    for e in edges:
        if e.v1 == e.v2:
            raise InputError(f"edge {e.id} connects a vertex to itself")
        if not (0 <= e.v1 < n_vertices and 0 <= e.v2 < n_vertices):
            raise InputError(f"edge {e.id} references an unknown vertex")
        if not isinstance(e.target, int) or e.target < 1:
            raise InputError(f"edge {e.id} target must be a positive integer")
        if e.phys_width is not None and not e.phys_width > 0:
            raise InputError(f"edge {e.id} width must be positive")
        key = (min(e.v1, e.v2), max(e.v1, e.v2))
        if key in seen:
            raise InputError(f"edge {e.id} duplicates vertex pair {key}")
        seen.add(key)


def build_graph(vertices: list[Vertex], edges: list[Edge],
                sheet_loops: list[list[Loop]],
                overrides: dict[Pair, float] | None = None,
                check_compatibility: bool = True) -> FiberGraph:
    """Assemble and validate the full graph.

    ``sheet_loops`` holds per-sheet loop lists (already built against the
    derived connections, see :func:`loop_from_edges`).
    """
    _validate_vertices(vertices)
    _validate_edges(edges, len(vertices))
    connections = derive_connections(edges, overrides)
    sheets = [build_sheet(loops, sid, len(connections), len(edges),
                          len(vertices), connections)
              for sid, loops in enumerate(sheet_loops)]
    graph = FiberGraph(vertices, edges, connections, sheets)
    if check_compatibility:
        problems = []
        for sheet in sheets:
            problems.extend(validate_sheet_compatibility(sheet, graph))
        if problems:
            raise InputError("; ".join(problems))
    return graph
