from __future__ import annotations

import numpy as np
import pytest

from adversarial_fleet.core.graph import grid_document, load_graph, next_hop, shortest_distance
from adversarial_fleet.utils.errors import GraphError
from tests.conftest import bfs_oracle


def test_grid_corner_to_opposite_corner(grid3):
    assert shortest_distance(grid3, 0, 8) == 4


def test_distance_to_self_is_zero(grid3, digraph30):
    for g in (grid3, digraph30):
        for v in g.node_ids:
            assert shortest_distance(g, v, v) == 0


def test_adjacent_nodes(grid3):
    assert shortest_distance(grid3, 0, 1) == 1
    assert shortest_distance(grid3, 4, 7) == 1


def test_distances_match_bfs_oracle(digraph30):
    for source in digraph30.node_ids:
        oracle = bfs_oracle(digraph30, source)
        for target in digraph30.node_ids:
            assert shortest_distance(digraph30, source, target) == oracle[target]


def test_triangle_inequality(digraph30):
    d = digraph30.dist
    through = d[:, :, None] + d[None, :, :]
    assert np.all(d[:, None, :] <= through)


def test_one_way_pair_is_not_strongly_connected():
    doc = {"nodes": [{"id": 0, "x": 0, "y": 0}, {"id": 1, "x": 1, "y": 0}], "edges": [{"from": 0, "to": 1}]}
    with pytest.raises(GraphError, match="not strongly connected"):
        load_graph(doc)


def test_duplicate_node_rejected():
    doc = {"nodes": [{"id": 0, "x": 0, "y": 0}, {"id": 0, "x": 1, "y": 0}], "edges": []}
    with pytest.raises(GraphError, match="duplicate node id: 0"):
        load_graph(doc)


def test_unknown_endpoint_rejected():
    doc = {"nodes": [{"id": 0, "x": 0, "y": 0}], "edges": [{"from": 0, "to": 9}]}
    with pytest.raises(GraphError, match="unknown node 9"):
        load_graph(doc)


def test_weighted_edge_rejected():
    doc = grid_document(2)
    doc["edges"][0]["weight"] = 3
    with pytest.raises(GraphError, match="weighted"):
        load_graph(doc)


def test_self_loop_tolerated():
    doc = grid_document(2)
    doc["edges"].append({"from": 0, "to": 0})
    g = load_graph(doc)
    assert shortest_distance(g, 0, 3) == 2
    assert next_hop(g, 0, 3) == 1


def test_unknown_node_query(grid3):
    with pytest.raises(GraphError):
        shortest_distance(grid3, 0, 99)
    with pytest.raises(GraphError):
        next_hop(grid3, 99, 0)


def test_next_hop_at_target(grid3):
    assert next_hop(grid3, 5, 5) == 5


def test_next_hop_tie_breaks_on_lowest_id(grid3):
    # from the corner both 1 and 3 lead to the centre
    assert next_hop(grid3, 0, 4) == 1
    assert next_hop(grid3, 8, 0) == 5


def test_walk_reaches_target_in_distance_steps(digraph30):
    rng = np.random.default_rng(3)
    for _ in range(100):
        origin, target = (int(v) for v in rng.integers(30, size=2))
        node, steps = origin, 0
        while node != target:
            nxt = next_hop(digraph30, node, target)
            assert nxt in digraph30.adjacency[node]
            assert shortest_distance(digraph30, nxt, target) == shortest_distance(digraph30, node, target) - 1
            node, steps = nxt, steps + 1
        assert steps == shortest_distance(digraph30, origin, target)


def test_itinerary_is_an_edge_walk(grid8):
    itinerary = grid8.itinerary(0, 63)
    assert len(itinerary) == shortest_distance(grid8, 0, 63) == 14
    for a, b in zip(itinerary.nodes, itinerary.nodes[1:]):
        assert b in grid8.adjacency[a]


def test_loading_twice_is_deterministic(digraph30):
    again = load_graph(digraph30.to_document())
    np.testing.assert_array_equal(again.dist, digraph30.dist)


@pytest.mark.parametrize("k, nodes, edges", [(2, 4, 8), (15, 225, 840)])
def test_grid_document_counts(k, nodes, edges):
    doc = grid_document(k)
    assert len(doc["nodes"]) == nodes
    assert len(doc["edges"]) == edges
    load_graph(doc)


def test_grid_side_below_two_rejected():
    with pytest.raises(GraphError):
        grid_document(1)


def test_load_from_file(tmp_path, grid3):
    import json

    path = tmp_path / "graph.json"
    path.write_text(json.dumps(grid3.to_document()))
    assert shortest_distance(load_graph(path), 0, 8) == 4
