"""Per-layer fiber pattern optimization with history weighting.

Each layer maximizes a linear objective over the loop counts of every
sheet and keeps the best sheet.  The objective weights each loop by the
p-th power of the residual between the accumulated connection usage and
the growing connection target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, InputError
from .graph import FiberGraph, Sheet
from .ilp import IntegerProgram, solve


@dataclass(frozen=True)
class OptimizationParams:
    n_layers: int
    p: float = 2.0
    min_connections: np.ndarray | None = None
    vertex_upper: np.ndarray | None = None
    vertex_lower: np.ndarray | None = None
    clamp_residuals: bool = True
    require_edge_bows: bool = False

    def __post_init__(self):
        if self.n_layers < 0:
            raise InputError("layer count must be non-negative")
        if not self.p > 0:
            raise InputError("exponent p must be positive")


@dataclass(frozen=True)
class LayerSolution:
    layer: int
    sheet: int
    x: tuple[int, ...]
    objective: float
    weights: tuple[float, ...]


@dataclass
class PatternHistory:
    layers: list[LayerSolution] = field(default_factory=list)
    connection_sums: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.layers)

    def pattern_counts(self) -> dict[tuple[int, tuple[int, ...]], int]:
        counts: dict[tuple[int, tuple[int, ...]], int] = {}
        for sol in self.layers:
            key = (sol.sheet, sol.x)
            counts[key] = counts.get(key, 0) + 1
        return counts


def _accumulate(graph: FiberGraph, layers: list[LayerSolution]) -> np.ndarray:
    total = np.zeros(graph.n_connections,
                     dtype=graph.connection_targets.dtype)
    for sol in layers:
        sheet = graph.sheets[sol.sheet]
        total = total + sheet.C @ np.asarray(sol.x, dtype=sheet.C.dtype)
    return total


def objective_vector(graph: FiberGraph, sheet: Sheet, layer: int,
                     history: PatternHistory,
                     p: float, clamp_residuals: bool = True) -> np.ndarray:
    """Loop weights for one sheet at layer ``layer`` (1-based)."""
    if len(history) != layer - 1:
        raise InputError(
            f"history holds {len(history)} layers, expected {layer - 1}")
    sums = history.connection_sums
    if sums is None:
        sums = _accumulate(graph, history.layers)
    residual = layer * graph.connection_targets - sums
    if clamp_residuals:
        residual = np.maximum(residual, 0)
    elif float(p) != int(p) and np.any(residual < 0):
        raise InputError(
            "negative residual with non-integer p; enable residual clamping")
    p_int = int(p) if float(p) == int(p) else None
    powered = residual ** p_int if p_int is not None else \
        residual.astype(float) ** p
    return sheet.C.T @ powered


def adjacency_lower_bounds(graph: FiberGraph) -> np.ndarray:
    """Per-connection lower bound of 1 for angularly adjacent connections.

    Used by the require_edge_bows flag; crossing connections keep bound 0.
    """
    bounds = np.ones(graph.n_connections, dtype=np.int64)
    for conn in graph.connections:
        if graph.is_crossing_connection(conn):
            bounds[conn.id] = 0
    return bounds


def _layer_program(graph: FiberGraph, sheet: Sheet, weights: np.ndarray,
                   params: OptimizationParams) -> IntegerProgram:
    leq = [(row.tolist(), int(b))
           for row, b in zip(sheet.E, graph.edge_targets)]
    geq = []
    min_conn = params.min_connections
    if params.require_edge_bows:
        floor = adjacency_lower_bounds(graph)
        min_conn = floor if min_conn is None else np.maximum(min_conn, floor)
    if min_conn is not None:
        if len(min_conn) != graph.n_connections:
            raise InputError("min_connections length must match connection count")
        for row, b in zip(sheet.C, min_conn):
            if b > 0:
                geq.append((row.tolist(), b.item() if hasattr(b, "item") else b))
    if params.vertex_upper is not None:
        for row, b in zip(sheet.V, params.vertex_upper):
            leq.append((row.tolist(), b.item() if hasattr(b, "item") else b))
    if params.vertex_lower is not None:
        for row, b in zip(sheet.V, params.vertex_lower):
            if b > 0:
                geq.append((row.tolist(), b.item() if hasattr(b, "item") else b))
    objective = [w.item() if hasattr(w, "item") else w for w in weights]
    return IntegerProgram(objective, leq, geq)


def solve_layer(graph: FiberGraph, params: OptimizationParams,
                history: PatternHistory, layer: int) -> LayerSolution:
    """Best loop configuration over all sheets for one layer.

    Sheet ties break to the lowest sheet index; within a sheet the solver
    returns the lexicographically greatest optimum.
    """
    best: LayerSolution | None = None
    infeasible = []
    for sheet in graph.sheets:
        weights = objective_vector(graph, sheet, layer, history, params.p,
                                   params.clamp_residuals)
        program = _layer_program(graph, sheet, weights, params)
        solution = solve(program)
        if not solution.optimal:
            infeasible.append(sheet.id)
            continue
        if best is None or solution.objective_value > best.objective:
            best = LayerSolution(layer, sheet.id, solution.x,
                                 solution.objective_value,
                                 tuple(np.asarray(weights).tolist()))
    if best is None:
        raise InfeasibleError(
            f"layer {layer}: no sheet admits a feasible configuration "
            f"(sheets {infeasible} hit edge bounds or lower bounds)")
    return best


def solve_all_layers(graph: FiberGraph,
                     params: OptimizationParams) -> PatternHistory:
    """Sequential fold of solve_layer over all layers."""
    history = PatternHistory(
        [], np.zeros(graph.n_connections, dtype=graph.connection_targets.dtype))
    for layer in range(1, params.n_layers + 1):
        solution = solve_layer(graph, params, history, layer)
        history.layers.append(solution)
        sheet = graph.sheets[solution.sheet]
        history.connection_sums = history.connection_sums + \
            sheet.C @ np.asarray(solution.x, dtype=sheet.C.dtype)
    return history


@dataclass(frozen=True)
class ConnectionReportRow:
    connection: int
    vertices: tuple[int, int, int]  # far vertex, mid vertex, far vertex
    loops: tuple[tuple[int, int], ...]  # (sheet, loop) pairs
    per_layer: tuple[float, ...]
    total: float
    scaled_target: float

    def sum_vs_target(self) -> str:
        return f"{self.total:g} vs. {self.scaled_target:g}"

    def usage_string(self) -> str:
        return " ".join(f"{u:g}" for u in self.per_layer)


def connection_report(history: PatternHistory,
                      graph: FiberGraph) -> list[ConnectionReportRow]:
    """Per-connection usage per layer and the final sum against n * target."""
    n = len(history)
    per_layer = np.zeros((graph.n_connections, n))
    for j, sol in enumerate(history.layers):
        sheet = graph.sheets[sol.sheet]
        per_layer[:, j] = sheet.C @ np.asarray(sol.x)
    membership = graph.loop_membership()
    rows = []
    for conn in graph.connections:
        e1 = graph.edges[conn.edge1]
        e2 = graph.edges[conn.edge2]
        rows.append(ConnectionReportRow(
            connection=conn.id,
            vertices=(e1.other(conn.mid_vertex), conn.mid_vertex,
                      e2.other(conn.mid_vertex)),
            loops=tuple(membership[conn.id]),
            per_layer=tuple(per_layer[conn.id].tolist()),
            total=float(per_layer[conn.id].sum()),
            scaled_target=float(n * conn.target),
        ))
    return rows
