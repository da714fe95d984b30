"""Command line front end.

    fiberloom derive    <project>                      graph report
    fiberloom optimize  <project> [--layers N] [--p X] pattern sequence
    fiberloom enumerate <project> [--layer N]          feasible set table
    fiberloom plan      <project> [--layer N | --all]  SVG + path export

Exit codes: 0 ok, 2 invalid input, 3 infeasible layer, 4 geometry
failure, 5 enumeration refused.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import FiberloomError, InputError
from .graph import FiberGraph
from .ilp import IntegerProgram, enumerate_feasible
from .pattern import (LayerSolution, OptimizationParams, PatternHistory,
                      connection_report, objective_vector, solve_all_layers)
from .pathplan import assemble_layer, check_plan, junction_layouts
from .project import Project, load_project
from .svgout import layer_svg, path_records

PATTERN_SCHEMA = 1


def _num(value):
    return int(value) if float(value) == int(value) else float(value)


def _table(rows: list[list[str]], header: list[str]) -> str:
    widths = [max(len(str(r[i])) for r in [header] + rows)
              for i in range(len(header))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    out = [fmt.format(*header)]
    out.extend(fmt.format(*[str(c) for c in row]) for row in rows)
    return "\n".join(out)


def _matrix_text(matrix: np.ndarray) -> str:
    return "\n".join("  " + " ".join(f"{v:g}" for v in row)
                     for row in np.atleast_2d(matrix))


# ---------------------------------------------------------------------------
# derive


def cmd_derive(project: Project) -> int:
    graph = project.graph
    membership = graph.loop_membership()

    def loops_str(cid: int) -> str:
        return ", ".join(f"{s}:{l}" if graph.n_sheets > 1 else str(l)
                         for s, l in membership[cid])

    edge_conns = {e.id: [] for e in graph.edges}
    edge_loops = {e.id: set() for e in graph.edges}
    for c in graph.connections:
        edge_conns[c.edge1].append(c.id)
        edge_conns[c.edge2].append(c.id)
    for sheet in graph.sheets:
        for loop in sheet.loops:
            for eid in loop.edge_path:
                edge_loops[eid].add((sheet.id, loop.id))

    print("edges:")
    rows = [[e.id, e.v1, e.v2, e.target,
             ", ".join(str(c) for c in edge_conns[e.id]),
             ", ".join(f"{s}:{l}" if graph.n_sheets > 1 else str(l)
                       for s, l in sorted(edge_loops[e.id]))]
            for e in graph.edges]
    print(_table(rows, ["id", "v1", "v2", "target", "connections", "loops"]))

    print("\nconnections:")
    rows = [[c.id, c.edge1, c.edge2, c.mid_vertex, f"{c.target:g}",
             loops_str(c.id)] for c in graph.connections]
    print(_table(rows, ["id", "edge1", "edge2", "mid", "target", "loops"]))

    for sheet in graph.sheets:
        print(f"\nloops (sheet {sheet.id}):")
        rows = []
        for loop in sheet.loops:
            edge_list = ", ".join(str(e) for e in loop.edge_path)
            if loop.closed:
                edge_list += f" (,{loop.edge_path[0]})"
            rows.append([loop.id,
                         ", ".join(str(c) for c in loop.connections),
                         edge_list, "yes" if loop.closed else "no"])
        print(_table(rows, ["id", "connections", "edges", "closed"]))
        print(f"\nC (connections x loops, sheet {sheet.id}):")
        print(_matrix_text(sheet.C))
        print(f"\nE (edges x loops, sheet {sheet.id}):")
        print(_matrix_text(sheet.E))
    return 0


# ---------------------------------------------------------------------------
# optimize


def _history_records(project: Project, history: PatternHistory) -> dict:
    rows = connection_report(history, project.graph)
    return {
        "schema": PATTERN_SCHEMA,
        "project": project.name,
        "p": _num(project.params.p),
        "layers": [
            {"n": sol.layer, "sheet": sol.sheet, "x": list(sol.x),
             "objective": _num(sol.objective),
             "weights": [_num(w) for w in sol.weights]}
            for sol in history.layers],
        "connection_report": [
            {"connection": r.connection, "vertices": list(r.vertices),
             "loops": [list(sl) for sl in r.loops],
             "per_layer": [_num(u) for u in r.per_layer],
             "total": _num(r.total), "scaled_target": _num(r.scaled_target)}
            for r in rows],
    }


def cmd_optimize(project: Project, out_dir: Path | None,
                 record_format: str) -> int:
    history = solve_all_layers(project.graph, project.params)
    records = _history_records(project, history)
    if record_format == "records":
        print(json.dumps(records, indent=None, separators=(",", ":")))
    else:
        rows = [[sol.layer, sol.sheet,
                 "(" + ",".join(str(v) for v in sol.x) + ")",
                 "(" + ",".join(f"{w:g}" for w in sol.weights) + ")",
                 f"{sol.objective:g}"]
                for sol in history.layers]
        print(_table(rows, ["n", "sheet", "x*", "c", "objective"]))
        print("\nconnection report:")
        rows = []
        for r in connection_report(history, project.graph):
            positions = [project.graph.vertices[v] for v in r.vertices]
            rows.append([
                r.connection,
                " - ".join(f"({p.x:g},{p.y:g})" for p in positions),
                ", ".join(f"{s}:{l}" if project.graph.n_sheets > 1 else str(l)
                          for s, l in r.loops),
                r.sum_vs_target(), r.usage_string()])
        print(_table(rows, ["cid", "A - C - B", "loops", "sum vs. n*target",
                            "usage in layers"]))
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_atomic(out_dir / "pattern.json",
                      json.dumps(records, indent=2) + "\n")
    return 0


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# enumerate


def cmd_enumerate(project: Project, layer: int) -> int:
    graph = project.graph
    params = project.params
    if layer < 1:
        raise InputError("--layer must be at least 1")
    history = solve_all_layers(
        project.graph, replace(params, n_layers=layer - 1))
    for sheet in graph.sheets:
        weights = objective_vector(graph, sheet, layer, history, params.p,
                                   params.clamp_residuals)
        program = IntegerProgram(
            [w.item() for w in np.asarray(weights)],
            [(row.tolist(), int(b))
             for row, b in zip(sheet.E, graph.edge_targets)])
        points = enumerate_feasible(program)
        print(f"sheet {sheet.id}, layer {layer}:")
        if not points:
            print("  (no feasible configurations)")
            continue
        maximal = _maximal_points(points)
        rows = []
        for x, value in sorted(points, reverse=True):
            note = "" if x in maximal else "dominated"
            rows.append(["(" + ",".join(str(v) for v in x) + ")",
                         f"{value:g}", note])
        print(_table(rows, ["x", "objective", "note"]))
    return 0


def _maximal_points(points) -> set:
    xs = [x for x, _ in points]
    maximal = set()
    for x in xs:
        dominated = any(
            y != x and all(a >= b for a, b in zip(y, x)) for y in xs)
        if not dominated:
            maximal.add(x)
    return maximal


# ---------------------------------------------------------------------------
# plan


def _load_pattern(path: Path, graph: FiberGraph) -> list[LayerSolution]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read pattern report {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}")
    if not isinstance(data, dict) or data.get("schema") != PATTERN_SCHEMA:
        raise InputError(f"{path}: expected pattern schema {PATTERN_SCHEMA}")
    layers = []
    for item in data.get("layers", []):
        sheet = item["sheet"]
        if not 0 <= sheet < graph.n_sheets:
            raise InputError(f"{path}: sheet {sheet} out of range")
        x = tuple(int(v) for v in item["x"])
        if len(x) != graph.sheets[sheet].n_loops:
            raise InputError(
                f"{path}: layer {item['n']} has {len(x)} loop counts, "
                f"sheet {sheet} defines {graph.sheets[sheet].n_loops}")
        layers.append(LayerSolution(
            int(item["n"]), sheet, x, float(item.get("objective", 0.0)),
            tuple(item.get("weights", ()))))
    return layers


def cmd_plan(project: Project, pattern_path: Path, out_dir: Path,
             layer_arg: int | None, do_all: bool, marks: bool) -> int:
    solutions = _load_pattern(pattern_path, project.graph)
    if not solutions:
        raise InputError(f"{pattern_path}: pattern report holds no layers")
    if do_all:
        picked = solutions
    else:
        layer = layer_arg if layer_arg is not None else 1
        if not 1 <= layer <= len(solutions):
            raise InputError(
                f"--layer {layer} outside the report's range "
                f"1..{len(solutions)}")
        picked = [solutions[layer - 1]]
    out_dir.mkdir(parents=True, exist_ok=True)
    layouts = junction_layouts(project.graph, project.min_radius,
                               project.fiber_width)

    def build(sol: LayerSolution):
        plan = assemble_layer(project.graph, sol, project.fiber_width,
                              project.min_radius, layouts)
        report = check_plan(plan, project.min_radius, project.fiber_width)
        return plan, report

    threads = min(int(os.environ.get("FIBERLOOM_THREADS", "1") or 1),
                  len(picked))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(build, picked))
    else:
        results = [build(sol) for sol in picked]

    clean = True
    for sol, (plan, report) in zip(picked, results):
        stem = f"layer_{sol.layer:03d}"
        _write_atomic(out_dir / f"{stem}.svg",
                      layer_svg(plan, project.fiber_width, marks=marks))
        _write_atomic(out_dir / f"{stem}.paths", path_records(plan))
        status = "clean" if report.ok else (
            f"{len(report.curvature_violations)} curvature / "
            f"{len(report.overlap_violations)} overlap violations")
        print(f"layer {sol.layer}: sheet {sol.sheet} x="
              f"({','.join(str(v) for v in sol.x)}) "
              f"paths={len(plan.paths)} {status}")
        for warning in plan.warnings:
            print(f"  warning: {warning}")
        for key, idx, kappa in report.curvature_violations[:10]:
            print(f"  curvature violation: path {key} point {idx} "
                  f"|k|={abs(kappa):.5f}")
        for vertex, a, b, d in report.overlap_violations[:10]:
            print(f"  overlap violation: junction {vertex} paths {a}/{b} "
                  f"distance {d:.3f}")
        clean = clean and report.ok
    return 0 if clean else 0  # report-only: violations do not fail the run


# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fiberloom",
        description="Layered fiber pattern optimization and path planning")
    sub = parser.add_subparsers(dest="command", required=True)

    p_derive = sub.add_parser("derive", help="print the derived graph tables")
    p_derive.add_argument("project")

    p_opt = sub.add_parser("optimize", help="optimize the layer sequence")
    p_opt.add_argument("project")
    p_opt.add_argument("--layers", type=int, default=None)
    p_opt.add_argument("--p", type=float, default=None)
    p_opt.add_argument("--require-edge-bows", action="store_true",
                       default=None)
    p_opt.add_argument("--out", type=Path, default=None,
                       help="directory for pattern.json")
    p_opt.add_argument("--format", choices=("table", "records"),
                       default="table")

    p_enum = sub.add_parser("enumerate",
                            help="list feasible configurations for a layer")
    p_enum.add_argument("project")
    p_enum.add_argument("--layer", type=int, default=1)
    p_enum.add_argument("--p", type=float, default=None)

    p_plan = sub.add_parser("plan", help="build paths, SVG and exports")
    p_plan.add_argument("project")
    p_plan.add_argument("--pattern", type=Path, default=None,
                        help="pattern.json from optimize (default OUT/pattern.json)")
    group = p_plan.add_mutually_exclusive_group()
    group.add_argument("--layer", type=int, default=None)
    group.add_argument("--all", action="store_true")
    p_plan.add_argument("--out", type=Path, default=Path("."))
    p_plan.add_argument("--marks", action="store_true",
                        help="mark vertices and rim points in the SVG")
    return parser


def _apply_overrides(project: Project, args) -> Project:
    params = project.params
    updates = {}
    if getattr(args, "layers", None) is not None:
        updates["n_layers"] = args.layers
    if getattr(args, "p", None) is not None:
        updates["p"] = _num(args.p)
    if getattr(args, "require_edge_bows", None):
        updates["require_edge_bows"] = True
    if updates:
        params = replace(params, **updates)
    return Project(project.name, project.graph, params,
                   project.fiber_width, project.min_radius)


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        project = _apply_overrides(load_project(args.project), args)
        if args.command == "derive":
            return cmd_derive(project)
        if args.command == "optimize":
            return cmd_optimize(project, args.out, args.format)
        if args.command == "enumerate":
            return cmd_enumerate(project, args.layer)
        if args.command == "plan":
            pattern = args.pattern
            if pattern is None:
                pattern = args.out / "pattern.json"
            return cmd_plan(project, pattern, args.out, args.layer,
                            bool(args.all), args.marks)
        raise InputError(f"unknown command {args.command}")
    except FiberloomError as exc:
        print(f"fiberloom: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
