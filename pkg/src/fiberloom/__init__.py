"""Layered fiber pattern optimization and spline-based tool path planning."""

from .errors import (FiberloomError, GeometryError, InfeasibleError,
                     InputError, IntractableError)
from .graph import (Connection, Edge, FiberGraph, Loop, Sheet, Vertex,
                    build_graph, build_sheet, build_sheet_matrices,
                    derive_connections, loop_from_connections,
                    loop_from_edges, validate_sheet_compatibility)
from .ilp import IlpSolution, IntegerProgram, enumerate_feasible, solve
from .pattern import (LayerSolution, OptimizationParams, PatternHistory,
                      connection_report, objective_vector, solve_all_layers,
                      solve_layer)

__version__ = "0.1.0"
