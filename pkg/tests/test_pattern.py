"""Layer optimization tests against the published six-layer tables."""

import numpy as np
import pytest

from fiberloom.errors import InfeasibleError, InputError
from fiberloom.pattern import (OptimizationParams, PatternHistory,
                               connection_report, objective_vector,
                               solve_all_layers, solve_layer)

# layer -> (x*, weights) for p=2; the layer-2 weights come from evaluating
# the residual formula directly (the printed table contains a typo there,
# inconsistent with its own optimum)
SIX_LAYER_GOLD = [
    ((2, 1, 0), (26, 26, 24)),
    ((1, 2, 0), (40, 68, 58)),
    ((1, 1, 1), (90, 90, 108)),
    ((2, 1, 0), (146, 146, 134)),
    ((1, 2, 0), (180, 232, 212)),
    ((1, 1, 1), (274, 274, 306)),
]


class TestObjectiveVector:
    def test_first_layer_weights(self, minimal_graph):
        sheet = minimal_graph.sheets[0]
        history = PatternHistory()
        assert objective_vector(minimal_graph, sheet, 1, history, 1.0).tolist() \
            == [10, 10, 12]
        assert objective_vector(minimal_graph, sheet, 1, history, 2.0).tolist() \
            == [26, 26, 24]

    def test_third_layer_weights(self, minimal_graph):
        params = OptimizationParams(n_layers=2, p=2.0)
        history = solve_all_layers(minimal_graph, params)
        assert [sol.x for sol in history.layers] == [(2, 1, 0), (1, 2, 0)]
        weights = objective_vector(minimal_graph, minimal_graph.sheets[0], 3,
                                   history, 2.0)
        assert weights.tolist() == [90, 90, 108]

    def test_second_layer_weights_by_direct_residual(self, minimal_graph):
        sheet = minimal_graph.sheets[0]
        history = PatternHistory()
        history.layers.append(
            solve_layer(minimal_graph, OptimizationParams(n_layers=1), history, 1))
        weights = objective_vector(minimal_graph, sheet, 2, history, 2.0)
        # residual = 2 * targets - C (2,1,0), squared, folded through C
        residual = 2 * minimal_graph.connection_targets - sheet.C @ [2, 1, 0]
        assert weights.tolist() == (sheet.C.T @ residual ** 2).tolist()
        assert weights.tolist() == [40, 68, 58]

    def test_non_integer_p_with_negative_residual_is_an_error(self, minimal_graph):
        sheet = minimal_graph.sheets[0]
        history = PatternHistory()
        # force a negative residual by faking an oversized first layer
        from fiberloom.pattern import LayerSolution
        history.layers.append(LayerSolution(1, 0, (5, 5, 5), 0.0, (0, 0, 0)))
        with pytest.raises(InputError, match="clamping"):
            objective_vector(minimal_graph, sheet, 2, history, p=1.5,
                             clamp_residuals=False)
        clamped = objective_vector(minimal_graph, sheet, 2, history, p=1.5,
                                   clamp_residuals=True)
        residual = np.maximum(
            2 * minimal_graph.connection_targets - sheet.C @ [5, 5, 5], 0)
        assert clamped.tolist() == (sheet.C.T @ residual.astype(float) ** 1.5).tolist()


class TestSolveLayers:
    def test_six_layer_sequence_with_default_power(self, minimal_graph):
        history = solve_all_layers(minimal_graph, OptimizationParams(n_layers=6))
        assert [sol.x for sol in history.layers] == [x for x, _ in SIX_LAYER_GOLD]
        assert [sol.weights for sol in history.layers] == \
            [tuple(float(w) for w in ws) for _, ws in SIX_LAYER_GOLD]

    def test_zero_layers(self, minimal_graph):
        history = solve_all_layers(minimal_graph, OptimizationParams(n_layers=0))
        assert len(history) == 0
        assert np.all(history.connection_sums == 0)

    def test_p1_layers_stay_within_the_three_configurations(self, minimal_graph):
        history = solve_all_layers(minimal_graph,
                                   OptimizationParams(n_layers=6, p=1.0))
        configs = {(2, 1, 0), (1, 2, 0), (1, 1, 1)}
        assert all(sol.x in configs for sol in history.layers)
        # frozen from the lexicographic tie rule
        assert [sol.x for sol in history.layers] == [
            (1, 1, 1), (2, 1, 0), (1, 2, 0), (1, 1, 1), (1, 1, 1), (2, 1, 0)]

    def test_history_consistency(self, minimal_graph):
        history = solve_all_layers(minimal_graph, OptimizationParams(n_layers=6))
        sheet = minimal_graph.sheets[0]
        recomputed = sum((sheet.C @ np.asarray(sol.x) for sol in history.layers),
                        np.zeros(minimal_graph.n_connections, dtype=np.int64))
        assert np.array_equal(history.connection_sums, recomputed)

    def test_layer_objective_beats_every_enumerated_point(self, minimal_graph):
        from fiberloom.ilp import IntegerProgram, enumerate_feasible
        params = OptimizationParams(n_layers=3)
        history = PatternHistory(
            [], np.zeros(minimal_graph.n_connections, dtype=np.int64))
        sheet = minimal_graph.sheets[0]
        for layer in range(1, 4):
            sol = solve_layer(minimal_graph, params, history, layer)
            weights = objective_vector(minimal_graph, sheet, layer, history, 2.0)
            program = IntegerProgram(
                weights.tolist(),
                [(r.tolist(), int(b)) for r, b in
                 zip(sheet.E, minimal_graph.edge_targets)])
            assert sol.objective == max(v for _, v in enumerate_feasible(program))
            history.layers.append(sol)
            history.connection_sums = history.connection_sums + sheet.C @ np.asarray(sol.x)

    def test_single_loop_sheet_fills_to_capacity(self, minimal_graph):
        from fiberloom.graph import build_graph, derive_connections, loop_from_edges
        from conftest import MINIMAL_EDGES, MINIMAL_VERTICES
        conns = derive_connections(MINIMAL_EDGES)
        ring = loop_from_edges([0, 4, 5, 6, 0], MINIMAL_EDGES, conns)
        graph = build_graph(MINIMAL_VERTICES, MINIMAL_EDGES, [[ring]])
        for p in (1.0, 2.0, 3.0):
            sol = solve_layer(graph, OptimizationParams(n_layers=1, p=p),
                              PatternHistory(), 1)
            assert sol.x == (2,)

    def test_infeasible_lower_bound_reports_layer(self, minimal_graph):
        params = OptimizationParams(
            n_layers=1,
            min_connections=np.full(minimal_graph.n_connections, 5))
        with pytest.raises(InfeasibleError, match="layer 1"):
            solve_all_layers(minimal_graph, params)

    def test_vertex_bounds_constrain_passes(self, minimal_graph):
        # vertex 1 is crossed by 3 connections of the (2,1,0) pattern
        upper = np.full(len(minimal_graph.vertices), 2)
        params = OptimizationParams(n_layers=1, vertex_upper=upper)
        sol = solve_layer(minimal_graph, params, PatternHistory(), 1)
        sheet = minimal_graph.sheets[0]
        assert np.all(sheet.V @ np.asarray(sol.x) <= upper)


class TestConnectionReport:
    def test_six_layer_sums_and_usage(self, minimal_graph):
        history = solve_all_layers(minimal_graph, OptimizationParams(n_layers=6))
        rows = connection_report(history, minimal_graph)
        assert rows[0].sum_vs_target() == "2 vs. 12"
        assert rows[0].usage_string() == "0 0 1 0 0 1"
        assert rows[2].sum_vs_target() == "10 vs. 12"
        assert rows[2].usage_string() == "2 1 2 2 1 2"
        assert rows[1].sum_vs_target() == "8 vs. 18"
        assert rows[4].usage_string() == "1 2 1 1 2 1"

    def test_empty_history_is_all_zero(self, minimal_graph):
        rows = connection_report(PatternHistory(), minimal_graph)
        assert all(r.total == 0 for r in rows)
        assert all(r.scaled_target == 0 for r in rows)

    def test_sums_match_incremental_accumulation(self, minimal_graph):
        history = solve_all_layers(minimal_graph, OptimizationParams(n_layers=4))
        rows = connection_report(history, minimal_graph)
        assert np.array_equal([r.total for r in rows], history.connection_sums)
