"""Shared fixtures: the minimal rectangle example used across the suite.

A 100 x 200 mm rectangle with a horizontal middle edge.  Seven edges, ten
derived connections, three loops in a single sheet (two small rectangles
and the outer boundary).
"""

import pytest

from fiberloom.graph import (Edge, Vertex, build_graph, derive_connections,
                             loop_from_edges)

MINIMAL_VERTICES = [
    Vertex(0, 0.0, 0.0),
    Vertex(1, 0.0, 100.0),
    Vertex(2, 0.0, 200.0),
    Vertex(3, 100.0, 200.0),
    Vertex(4, 100.0, 100.0),
    Vertex(5, 100.0, 0.0),
]

MINIMAL_EDGES = [
    Edge(0, 0, 1, 2),
    Edge(1, 1, 2, 2),
    Edge(2, 2, 3, 2),
    Edge(3, 3, 4, 2),
    Edge(4, 1, 4, 3),
    Edge(5, 4, 5, 2),
    Edge(6, 0, 5, 2),
]

# closed loops given as edge paths with the first edge repeated
MINIMAL_LOOP_EDGES = [
    [0, 4, 5, 6, 0],
    [1, 2, 3, 4, 1],
    [0, 1, 2, 3, 5, 6, 0],
]


def make_minimal_graph():
    connections = derive_connections(MINIMAL_EDGES)
    loops = [loop_from_edges(path, MINIMAL_EDGES, connections, loop_id=i)
             for i, path in enumerate(MINIMAL_LOOP_EDGES)]
    return build_graph(MINIMAL_VERTICES, MINIMAL_EDGES, [loops])


@pytest.fixture(scope="session")
def minimal_graph():
    return make_minimal_graph()
