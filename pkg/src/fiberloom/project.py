"""Project file parsing: one human-editable YAML document per design.

The file carries the graph (vertices, edges, sheets with loops given as
edge or connection lists), optional connection-target overrides and the
process parameters.  Validation errors name the offending field.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .errors import InputError
from .graph import (Edge, FiberGraph, Loop, Vertex, build_graph,
                    derive_connections, loop_from_connections,
                    loop_from_edges)
from .pattern import OptimizationParams

SCHEMA_VERSION = 1

_PARAM_FIELDS = {"fiber_width", "min_radius", "layers", "p",
                 "require_edge_bows", "clamp_residuals"}
_TOP_FIELDS = {"schema", "name", "params", "vertices", "edges",
               "connections", "sheets", "min_connections", "vertex_bounds"}


@dataclass(frozen=True)
class Project:
    name: str
    graph: FiberGraph
    params: OptimizationParams
    fiber_width: float
    min_radius: float


def _fail(path: str, message: str) -> None:
    raise InputError(f"{path}: {message}")


def _expect_mapping(value, path: str, allowed: set[str]) -> dict:
    if not isinstance(value, dict):
        _fail(path, "must be a mapping")
    for key in value:
        if key not in allowed:
            _fail(f"{path}.{key}", "unknown field")
    return value


def _number(value, path: str, minimum=None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, "must be a number")
    if minimum is not None and value <= minimum:
        _fail(path, f"must be greater than {minimum}")
    return value


def _integer(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, "must be an integer")
    if minimum is not None and value < minimum:
        _fail(path, f"must be at least {minimum}")
    return value


def _point(value, path: str) -> tuple[float, float]:
    if not (isinstance(value, list) and len(value) == 2
            and all(isinstance(c, (int, float)) and not isinstance(c, bool)
                    for c in value)):
        _fail(path, "must be a pair of numbers")
    return float(value[0]), float(value[1])


def _parse_vertices(items, path: str) -> list[Vertex]:
    if not isinstance(items, list) or not items:
        _fail(path, "must be a non-empty list")
    vertices = []
    for i, item in enumerate(items):
        here = f"{path}[{i}]"
        _expect_mapping(item, here, {"id", "at"})
        vid = _integer(item.get("id"), f"{here}.id", minimum=0)
        x, y = _point(item.get("at"), f"{here}.at")
        vertices.append(Vertex(vid, x, y))
    return vertices


def _parse_edges(items, path: str) -> list[Edge]:
    if not isinstance(items, list) or not items:
        _fail(path, "must be a non-empty list")
    edges = []
    for i, item in enumerate(items):
        here = f"{path}[{i}]"
        _expect_mapping(item, here, {"id", "ends", "target", "width"})
        eid = _integer(item.get("id"), f"{here}.id", minimum=0)
        ends = item.get("ends")
        if not (isinstance(ends, list) and len(ends) == 2):
            _fail(f"{here}.ends", "must be a pair of vertex ids")
        v1 = _integer(ends[0], f"{here}.ends[0]", minimum=0)
        v2 = _integer(ends[1], f"{here}.ends[1]", minimum=0)
        target = _integer(item.get("target"), f"{here}.target", minimum=1)
        width = None
        if "width" in item:
            width = float(_number(item["width"], f"{here}.width", minimum=0))
        edges.append(Edge(eid, v1, v2, target, width))
    return edges


def _parse_overrides(items, path: str) -> dict[tuple[int, int], float]:
    if items is None:
        return {}
    if not isinstance(items, list):
        _fail(path, "must be a list")
    overrides = {}
    for i, item in enumerate(items):
        here = f"{path}[{i}]"
        _expect_mapping(item, here, {"edges", "target"})
        pair = item.get("edges")
        if not (isinstance(pair, list) and len(pair) == 2):
            _fail(f"{here}.edges", "must be a pair of edge ids")
        a = _integer(pair[0], f"{here}.edges[0]", minimum=0)
        b = _integer(pair[1], f"{here}.edges[1]", minimum=0)
        target = _number(item.get("target"), f"{here}.target", minimum=0)
        overrides[(a, b)] = target
    return overrides


def _parse_sheets(items, path: str, edges: list[Edge], connections):
    if not isinstance(items, list) or not items:
        _fail(path, "must be a non-empty list")
    sheets = []
    for i, sheet_item in enumerate(items):
        here = f"{path}[{i}]"
        _expect_mapping(sheet_item, here, {"loops", "name"})
        loop_items = sheet_item.get("loops")
        if not isinstance(loop_items, list):
            _fail(f"{here}.loops", "must be a list")
        loops: list[Loop] = []
        for j, loop_item in enumerate(loop_items):
            loop_path = f"{here}.loops[{j}]"
            _expect_mapping(loop_item, loop_path,
                            {"edges", "connections", "closed"})
            has_edges = "edges" in loop_item
            has_conns = "connections" in loop_item
            if has_edges == has_conns:
                _fail(loop_path, "needs exactly one of 'edges' or 'connections'")
            try:
                if has_edges:
                    ids = [_integer(e, f"{loop_path}.edges[{k}]", minimum=0)
                           for k, e in enumerate(loop_item["edges"])]
                    loop = loop_from_edges(ids, edges, connections, loop_id=j)
                else:
                    ids = [_integer(c, f"{loop_path}.connections[{k}]",
                                    minimum=0)
                           for k, c in enumerate(loop_item["connections"])]
                    closed = loop_item.get("closed", False)
                    if not isinstance(closed, bool):
                        _fail(f"{loop_path}.closed", "must be a boolean")
                    loop = loop_from_connections(ids, closed, connections,
                                                 loop_id=j)
            except InputError as exc:
                _fail(loop_path, str(exc))
            loops.append(loop)
        sheets.append(loops)
    return sheets


def _parse_vector(value, path: str, length: int) -> np.ndarray | None:
    if value is None:
        return None
    if not (isinstance(value, list) and len(value) == length):
        _fail(path, f"must be a list of {length} numbers")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def parse_project(data: dict, source: str = "<project>") -> Project:
    _expect_mapping(data, source, _TOP_FIELDS)
    schema = data.get("schema")
    if schema != SCHEMA_VERSION:
        _fail(f"{source}.schema", f"expected schema version {SCHEMA_VERSION}")
    name = data.get("name", "unnamed")
    if not isinstance(name, str):
        _fail(f"{source}.name", "must be a string")
    params_item = _expect_mapping(data.get("params", {}), f"{source}.params",
                                  _PARAM_FIELDS)
    fiber_width = float(_number(params_item.get("fiber_width", 2.0),
                                f"{source}.params.fiber_width", minimum=0))
    min_radius = float(_number(params_item.get("min_radius", 10.0),
                               f"{source}.params.min_radius", minimum=0))
    layers = _integer(params_item.get("layers", 1), f"{source}.params.layers",
                      minimum=0)
    p = params_item.get("p", 2)
    _number(p, f"{source}.params.p", minimum=0)
    require_bows = params_item.get("require_edge_bows", False)
    clamp = params_item.get("clamp_residuals", True)
    for flag, fname in ((require_bows, "require_edge_bows"),
                        (clamp, "clamp_residuals")):
        if not isinstance(flag, bool):
            _fail(f"{source}.params.{fname}", "must be a boolean")

    vertices = _parse_vertices(data.get("vertices"), f"{source}.vertices")
    edges = _parse_edges(data.get("edges"), f"{source}.edges")
    overrides = _parse_overrides(data.get("connections"),
                                 f"{source}.connections")
    try:
        connections = derive_connections(edges, overrides)
    except InputError as exc:
        _fail(f"{source}.edges", str(exc))
    sheet_loops = _parse_sheets(data.get("sheets"), f"{source}.sheets",
                                edges, connections)

    min_conn = _parse_vector(data.get("min_connections"),
                             f"{source}.min_connections", len(connections))
    bounds_item = data.get("vertex_bounds")
    upper = lower = None
    if bounds_item is not None:
        _expect_mapping(bounds_item, f"{source}.vertex_bounds",
                        {"upper", "lower"})
        upper = _parse_vector(bounds_item.get("upper"),
                              f"{source}.vertex_bounds.upper", len(vertices))
        lower = _parse_vector(bounds_item.get("lower"),
                              f"{source}.vertex_bounds.lower", len(vertices))

    try:
        graph = build_graph(vertices, edges, sheet_loops, overrides)
    except InputError as exc:
        _fail(source, str(exc))
    params = OptimizationParams(
        n_layers=layers, p=p, min_connections=min_conn, vertex_upper=upper,
        vertex_lower=lower, clamp_residuals=clamp,
        require_edge_bows=require_bows)
    return Project(name, graph, params, fiber_width, min_radius)


def load_project(path: str | Path) -> Project:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InputError(f"{path}: not valid YAML: {exc}")
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be a mapping")
    return parse_project(data, source=path.name)


def dump_project(project: Project) -> dict:
    """Serialize back to the file schema (round-trip safe)."""
    graph = project.graph
    data: dict = {
        "schema": SCHEMA_VERSION,
        "name": project.name,
        "params": {
            "fiber_width": project.fiber_width,
            "min_radius": project.min_radius,
            "layers": project.params.n_layers,
            "p": project.params.p,
            "require_edge_bows": project.params.require_edge_bows,
            "clamp_residuals": project.params.clamp_residuals,
        },
        "vertices": [{"id": v.id, "at": [v.x, v.y]} for v in graph.vertices],
        "edges": [
            {"id": e.id, "ends": [e.v1, e.v2], "target": e.target,
             **({"width": e.phys_width} if e.phys_width is not None else {})}
            for e in graph.edges],
        "sheets": [
            {"loops": [
                {"connections": list(loop.connections), "closed": loop.closed}
                for loop in sheet.loops]}
            for sheet in graph.sheets],
    }
    defaults = {c.id: max(graph.edges[c.edge1].target,
                          graph.edges[c.edge2].target)
                for c in graph.connections}
    overrides = [
        {"edges": [c.edge1, c.edge2], "target": c.target}
        for c in graph.connections if c.target != defaults[c.id]]
    if overrides:
        data["connections"] = overrides
    if project.params.min_connections is not None:
        data["min_connections"] = [
            v.item() for v in project.params.min_connections]
    if project.params.vertex_upper is not None or \
            project.params.vertex_lower is not None:
        bounds = {}
        if project.params.vertex_upper is not None:
            bounds["upper"] = [v.item() for v in project.params.vertex_upper]
        if project.params.vertex_lower is not None:
            bounds["lower"] = [v.item() for v in project.params.vertex_lower]
        data["vertex_bounds"] = bounds
    return data
