"""
Directed road network with unit travel time per edge.

Node ids are integers. Internally every node also has a dense index
(its position in ascending id order), which is what the distance matrix
and the pmf vectors are keyed on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

import networkx as nx
import numpy as np

from adversarial_fleet.utils.errors import GraphError
from adversarial_fleet.utils.helpers import read_json

logger = logging.getLogger(__name__)


@dataclass
class Itinerary:
    """Node walk from an origin to a target; `cursor` indexes the next hop."""

    nodes: list[int]
    cursor: int = 1

    @property
    def origin(self) -> int:
        return self.nodes[0]

    @property
    def target(self) -> int:
        return self.nodes[-1]

    @property
    def remaining(self) -> int:
        return len(self.nodes) - self.cursor

    @property
    def finished(self) -> bool:
        return self.cursor >= len(self.nodes)

    def advance(self) -> int:
        """Move to the next hop and return it."""
        if self.finished:
            raise IndexError("itinerary already at its target")
        node = self.nodes[self.cursor]
        self.cursor += 1
        return node

    def __len__(self) -> int:
        return len(self.nodes) - 1


@dataclass(eq=False)
class RoadGraph:
    """
    Immutable road graph with precomputed all-pairs hop distances.

    Build it with `load_graph` or `build_graph`; the constructor does no
    validation of its own.
    """

    node_ids: tuple[int, ...]
    coords: np.ndarray
    edges: tuple[tuple[int, int], ...]
    adjacency: dict[int, tuple[int, ...]]
    dist: np.ndarray
    _index: dict[int, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self._index:
            self._index = {node: i for i, node in enumerate(self.node_ids)}
        self.coords.setflags(write=False)
        self.dist.setflags(write=False)

    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)

    def index(self, node: int) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise GraphError(f"unknown node id: {node}") from None

    def __contains__(self, node: object) -> bool:
        return node in self._index

    def neighbors(self, node: int) -> tuple[int, ...]:
        self.index(node)
        return self.adjacency[node]

    def distance(self, i: int, j: int) -> int:
        return shortest_distance(self, i, j)

    def next_hop(self, current: int, target: int) -> int:
        return next_hop(self, current, target)

    def itinerary(self, origin: int, target: int) -> Itinerary:
        """Shortest-path itinerary built by repeated `next_hop`."""
        nodes = [origin]
        node = origin
        while node != target:
            node = next_hop(self, node, target)
            nodes.append(node)
        return Itinerary(nodes)

    def euclidean_matrix(self) -> np.ndarray:
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        return np.sqrt((diff ** 2).sum(axis=-1))

    def to_document(self) -> dict[str, Any]:
        return {
            "nodes": [
                {"id": node, "x": float(x), "y": float(y)}
                for node, (x, y) in zip(self.node_ids, self.coords)
            ],
            "edges": [{"from": a, "to": b} for a, b in self.edges],
        }


def build_graph(nodes: Iterable[tuple[int, float, float]], edges: Iterable[tuple[int, int]]) -> RoadGraph:
    """
    Validate nodes and edges and precompute hop distances.

    Args:
        nodes: (id, x, y) triples
        edges: directed (from, to) pairs

    Returns:
        RoadGraph

    Raises:
        GraphError: duplicate node, unknown endpoint, or not strongly connected
    """
    coords_by_id: dict[int, tuple[float, float]] = {}
    for node, x, y in nodes:
        if node in coords_by_id:
            raise GraphError(f"duplicate node id: {node}")
        coords_by_id[node] = (float(x), float(y))
    if not coords_by_id:
        raise GraphError("graph has no nodes")

    edge_list: list[tuple[int, int]] = []
    for a, b in edges:
        for endpoint in (a, b):
            if endpoint not in coords_by_id:
                raise GraphError(f"edge ({a}, {b}) references unknown node {endpoint}")
        edge_list.append((a, b))

    node_ids = tuple(sorted(coords_by_id))
    digraph = nx.DiGraph()
    digraph.add_nodes_from(node_ids)
    digraph.add_edges_from(edge_list)

    if not nx.is_strongly_connected(digraph):
        components = sorted(nx.strongly_connected_components(digraph), key=min)
        source, other = min(components[0]), min(components[1])
        if not nx.has_path(digraph, source, other):
            a, b = source, other
        else:
            a, b = other, source
        raise GraphError(f"graph is not strongly connected: node {b} is unreachable from node {a}")

    index = {node: i for i, node in enumerate(node_ids)}
    n = len(node_ids)
    dist = np.zeros((n, n), dtype=np.int64)
    # unweighted all-pairs lengths are one BFS per source
    for source, lengths in nx.all_pairs_shortest_path_length(digraph):
        row = index[source]
        for target, hops in lengths.items():
            dist[row, index[target]] = hops

    adjacency = {node: tuple(sorted(set(digraph.successors(node)))) for node in node_ids}
    coords = np.array([coords_by_id[node] for node in node_ids], dtype=float)

    logger.info("Road graph loaded: %d nodes, %d directed edges", n, len(edge_list))
    return RoadGraph(
        node_ids=node_ids,
        coords=coords,
        edges=tuple(edge_list),
        adjacency=adjacency,
        dist=dist,
        _index=index,
    )


def load_graph(spec: str | Path | Mapping[str, Any]) -> RoadGraph:
    """
    Load a graph document.

    The document holds a `nodes` table of {id, x, y} and an `edges` table of
    {from, to}. Every edge takes exactly one time step, so an edge carrying a
    weight other than 1 is rejected.

    Args:
        spec: Path to a JSON document, or the already parsed document

    Returns:
        Validated RoadGraph
    """
    document = read_json(spec) if isinstance(spec, (str, Path)) else spec
    if not isinstance(document, Mapping) or "nodes" not in document or "edges" not in document:
        raise GraphError("graph document needs 'nodes' and 'edges' tables")

    nodes = []
    for k, row in enumerate(document["nodes"]):
        try:
            nodes.append((int(row["id"]), float(row["x"]), float(row["y"])))
        except (KeyError, TypeError, ValueError):
            raise GraphError(f"nodes[{k}]: expected {{id, x, y}}, got {row!r}") from None

    edges = []
    for k, row in enumerate(document["edges"]):
        try:
            a, b = int(row["from"]), int(row["to"])
        except (KeyError, TypeError, ValueError):
            raise GraphError(f"edges[{k}]: expected {{from, to}}, got {row!r}") from None
        for key in ("weight", "time", "length"):
            if key in row and float(row[key]) != 1.0:
                raise GraphError(f"edges[{k}] ({a}, {b}): weighted edges are not supported ({key}={row[key]})")
        edges.append((a, b))

    return build_graph(nodes, edges)


def grid_document(k: int) -> dict[str, Any]:
    """
    k x k grid with bidirectional edges and unit spacing.

    Node id is row * k + col, placed at (col, row).
    """
    if k < 2:
        raise GraphError(f"grid side must be at least 2, got {k}")
    nodes = [{"id": r * k + c, "x": float(c), "y": float(r)} for r in range(k) for c in range(k)]
    edges = []
    for r in range(k):
        for c in range(k):
            node = r * k + c
            if c + 1 < k:
                edges += [{"from": node, "to": node + 1}, {"from": node + 1, "to": node}]
            if r + 1 < k:
                edges += [{"from": node, "to": node + k}, {"from": node + k, "to": node}]
    return {"nodes": nodes, "edges": edges}


def grid_graph(k: int) -> RoadGraph:
    return load_graph(grid_document(k))


def shortest_distance(g: RoadGraph, i: int, j: int) -> int:
    """Hop count of a shortest directed path from i to j."""
    return int(g.dist[g.index(i), g.index(j)])


def next_hop(g: RoadGraph, current: int, target: int) -> int:
    """
    Next node on a shortest path from `current` to `target`.

    Among equally good neighbors the lowest node id wins. Returns `current`
    when it already is the target.
    """
    ci, ti = g.index(current), g.index(target)
    if ci == ti:
        return current
    remaining = g.dist[ci, ti]
    for h in g.adjacency[current]:
        if g.dist[g._index[h], ti] == remaining - 1:
            return h
    raise GraphError(f"no shortest-path successor from {current} towards {target}")
