"""Graph model tests against the published minimal-example tables."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiberloom.errors import InputError
from fiberloom.graph import (Edge, Vertex, build_graph, build_sheet,
                             derive_connections, loop_from_connections,
                             loop_from_edges, validate_sheet_compatibility)

from conftest import MINIMAL_EDGES, MINIMAL_VERTICES, make_minimal_graph

# (id, edge1, edge2, target, mid vertex) of the minimal example
EXPECTED_CONNECTIONS = [
    (0, 0, 1, 2, 1),
    (1, 0, 4, 3, 1),
    (2, 0, 6, 2, 0),
    (3, 1, 2, 2, 2),
    (4, 1, 4, 3, 1),
    (5, 2, 3, 2, 3),
    (6, 3, 4, 3, 4),
    (7, 3, 5, 2, 4),
    (8, 4, 5, 3, 4),
    (9, 5, 6, 2, 5),
]

EXPECTED_C = np.array([
    [0, 0, 1],
    [1, 0, 0],
    [1, 0, 1],
    [0, 1, 1],
    [0, 1, 0],
    [0, 1, 1],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 0],
    [1, 0, 1],
])

EXPECTED_E = np.array([
    [1, 0, 1],
    [0, 1, 1],
    [0, 1, 1],
    [0, 1, 1],
    [1, 1, 0],
    [1, 0, 1],
    [1, 0, 1],
])


class TestDeriveConnections:
    def test_minimal_example_matches_published_table(self):
        conns = derive_connections(MINIMAL_EDGES)
        got = [(c.id, c.edge1, c.edge2, c.target, c.mid_vertex) for c in conns]
        assert got == EXPECTED_CONNECTIONS

    def test_single_edge_yields_nothing(self):
        assert derive_connections([Edge(0, 0, 1, 2)]) == []

    @pytest.mark.parametrize("k", [2, 3, 5, 8])
    def test_star_graph_pair_count(self, k):
        edges = [Edge(i, 0, i + 1, 1) for i in range(k)]
        conns = derive_connections(edges)
        # brute-force oracle: every unordered pair shares the hub
        expected = {(i, j) for i in range(k) for j in range(i + 1, k)}
        assert {(c.edge1, c.edge2) for c in conns} == expected
        assert len(conns) == k * (k - 1) // 2

    def test_count_equals_degree_census(self):
        graph = make_minimal_graph()
        expected = sum(graph.degree(v.id) * (graph.degree(v.id) - 1) // 2
                       for v in graph.vertices)
        assert len(graph.connections) == expected

    def test_target_is_max_of_edge_targets_unless_overridden(self):
        conns = derive_connections(MINIMAL_EDGES, overrides={(0, 4): 7.5})
        by_pair = {(c.edge1, c.edge2): c.target for c in conns}
        assert by_pair[(0, 4)] == 7.5
        assert by_pair[(1, 4)] == 3
        with pytest.raises(InputError):
            derive_connections(MINIMAL_EDGES, overrides={(0, 3): 1})


class TestLoops:
    def test_closed_loop_from_edges(self):
        conns = derive_connections(MINIMAL_EDGES)
        loop = loop_from_edges([0, 4, 5, 6, 0], MINIMAL_EDGES, conns)
        assert loop.connections == (1, 8, 9, 2)
        assert loop.closed
        assert loop.edge_path == (0, 4, 5, 6)

    def test_outer_loop_from_edges(self):
        conns = derive_connections(MINIMAL_EDGES)
        loop = loop_from_edges([0, 1, 2, 3, 5, 6, 0], MINIMAL_EDGES, conns)
        assert loop.connections == (0, 3, 5, 7, 9, 2)
        assert loop.closed

    def test_open_two_edge_loop(self):
        conns = derive_connections(MINIMAL_EDGES)
        loop = loop_from_edges([0, 1], MINIMAL_EDGES, conns)
        assert loop.connections == (0,)
        assert not loop.closed
        assert loop.edge_path == (0, 1)

    def test_non_chaining_edges_name_the_pair(self):
        conns = derive_connections(MINIMAL_EDGES)
        with pytest.raises(InputError, match="0 and 2"):
            loop_from_edges([0, 2, 6], MINIMAL_EDGES, conns)

    def test_connection_list_round_trips_edge_list(self):
        conns = derive_connections(MINIMAL_EDGES)
        for path in ([0, 4, 5, 6, 0], [1, 2, 3, 4, 1], [0, 1, 2, 3, 5, 6, 0]):
            via_edges = loop_from_edges(path, MINIMAL_EDGES, conns)
            via_conns = loop_from_connections(list(via_edges.connections),
                                              via_edges.closed, conns)
            assert via_conns.edge_path == via_edges.edge_path
            assert via_conns.connections == via_edges.connections


class TestSheetMatrices:
    def test_minimal_example_matrices(self, minimal_graph):
        sheet = minimal_graph.sheets[0]
        assert np.array_equal(sheet.C, EXPECTED_C)
        assert np.array_equal(sheet.E, EXPECTED_E)
        assert np.array_equal(minimal_graph.connection_targets,
                              [2, 3, 2, 2, 3, 2, 3, 2, 3, 2])
        assert np.array_equal(minimal_graph.edge_targets, [2, 2, 2, 2, 3, 2, 2])

    def test_all_loops_connection_vector(self, minimal_graph):
        C = minimal_graph.sheets[0].C
        assert np.array_equal(C @ [1, 1, 1], [1, 1, 2, 2, 1, 2, 1, 1, 1, 2])

    def test_zero_loops_gives_zero_columns(self, minimal_graph):
        sheet = build_sheet([], 1, minimal_graph.n_connections,
                            minimal_graph.n_edges, len(minimal_graph.vertices),
                            list(minimal_graph.connections))
        assert sheet.C.shape == (10, 0)
        assert sheet.E.shape == (7, 0)

    def test_columns_match_independent_recount(self, minimal_graph):
        # recount straight from the loop definitions
        sheet = minimal_graph.sheets[0]
        for j, loop in enumerate(sheet.loops):
            for cid in range(minimal_graph.n_connections):
                assert sheet.C[cid, j] == loop.connections.count(cid)
            for eid in range(minimal_graph.n_edges):
                assert sheet.E[eid, j] == loop.edge_path.count(eid)

    def test_vertex_matrix_counts_mid_vertices(self, minimal_graph):
        sheet = minimal_graph.sheets[0]
        for j, loop in enumerate(sheet.loops):
            for v in minimal_graph.vertices:
                expected = sum(
                    1 for cid in loop.connections
                    if minimal_graph.connections[cid].mid_vertex == v.id)
                assert sheet.V[v.id, j] == expected


def _cross_junction():
    vertices = [Vertex(0, 0.0, 0.0), Vertex(1, 50.0, 0.0), Vertex(2, 0.0, 50.0),
                Vertex(3, -50.0, 0.0), Vertex(4, 0.0, -50.0)]
    edges = [Edge(0, 0, 1, 1), Edge(1, 0, 2, 1), Edge(2, 0, 3, 1),
             Edge(3, 0, 4, 1)]
    return vertices, edges


class TestSheetCompatibility:
    def test_both_crossing_directions_is_a_violation(self):
        vertices, edges = _cross_junction()
        conns = derive_connections(edges)
        horizontal = loop_from_edges([0, 2], edges, conns, loop_id=0)
        vertical = loop_from_edges([1, 3], edges, conns, loop_id=1)
        graph = build_graph(vertices, edges, [[horizontal, vertical]],
                            check_compatibility=False)
        violations = validate_sheet_compatibility(graph.sheets[0], graph)
        assert len(violations) == 1
        assert "junction 0" in violations[0]
        with pytest.raises(InputError):
            build_graph(vertices, edges, [[horizontal, vertical]])

    def test_minimal_example_has_no_violations(self, minimal_graph):
        # max degree of the minimal example is 3, so no crossings exist
        assert max(minimal_graph.degree(v.id)
                   for v in minimal_graph.vertices) == 3
        sheet = minimal_graph.sheets[0]
        assert validate_sheet_compatibility(sheet, minimal_graph) == []

    def test_five_edge_junction_is_rejected(self):
        vertices = [Vertex(0, 0.0, 0.0)] + [
            Vertex(i + 1, math.cos(a), math.sin(a))
            for i, a in enumerate(np.linspace(0, 2 * math.pi, 5, endpoint=False))]
        edges = [Edge(i, 0, i + 1, 1) for i in range(5)]
        conns = derive_connections(edges)
        loop = loop_from_edges([0, 1], edges, conns)
        with pytest.raises(InputError, match="5 edges"):
            build_graph(vertices, edges, [[loop]])


class TestValidation:
    def test_duplicate_vertex_pair_rejected(self):
        vertices = [Vertex(0, 0.0, 0.0), Vertex(1, 1.0, 0.0)]
        edges = [Edge(0, 0, 1, 1), Edge(1, 1, 0, 1)]
        with pytest.raises(InputError, match="duplicates"):
            build_graph(vertices, edges, [[]])

    def test_degree_one_stub_is_legal_and_produces_no_connections(self):
        vertices = [Vertex(0, 0.0, 0.0), Vertex(1, 1.0, 0.0)]
        edges = [Edge(0, 0, 1, 1)]
        graph = build_graph(vertices, edges, [[]])
        assert graph.connections == ()


@settings(max_examples=50, deadline=None)
@given(angle=st.floats(min_value=-math.pi, max_value=math.pi,
                       allow_nan=False, allow_infinity=False))
def test_crossing_classification_is_rotation_invariant(angle):
    vertices, edges = _cross_junction()
    base = build_graph(vertices, edges, [[]])
    c, s = math.cos(angle), math.sin(angle)
    rotated = [Vertex(v.id, c * v.x - s * v.y, s * v.x + c * v.y)
               for v in vertices]
    turned = build_graph(rotated, edges, [[]])
    assert base.crossing_pairs(0) == turned.crossing_pairs(0)
