from __future__ import annotations

from collections import deque

import numpy as np
import pytest

from adversarial_fleet.core.demand import DemandModel
from adversarial_fleet.core.graph import RoadGraph, build_graph, grid_graph

# expectations estimated from a San Francisco taxi trace
SF_TRACE_ESTIMATES = {
    "e_eta": 1.02,
    "e_xi_rho": 17.47,
    "e_vrand_rho": 17.62,
    "e_rho_delta": 16.27,
    "wd": 1.09,
}


@pytest.fixture(scope="session")
def grid3() -> RoadGraph:
    return grid_graph(3)


@pytest.fixture(scope="session")
def grid5() -> RoadGraph:
    return grid_graph(5)


@pytest.fixture(scope="session")
def grid8() -> RoadGraph:
    return grid_graph(8)


@pytest.fixture(scope="session")
def uniform5(grid5) -> DemandModel:
    return DemandModel.uniform(grid5)


def random_digraph(n: int, extra_edges: int, seed: int) -> RoadGraph:
    """Strongly connected digraph: a directed ring plus random chords."""
    rng = np.random.default_rng(seed)
    nodes = [(i, float(rng.random()), float(rng.random())) for i in range(n)]
    edges = {(i, (i + 1) % n) for i in range(n)}
    while len(edges) < n + extra_edges:
        a, b = (int(v) for v in rng.integers(n, size=2))
        if a != b:
            edges.add((a, b))
    return build_graph(nodes, sorted(edges))


def bfs_oracle(g: RoadGraph, source: int) -> dict[int, int]:
    seen = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in g.adjacency[u]:
            if v not in seen:
                seen[v] = seen[u] + 1
                queue.append(v)
    return seen


@pytest.fixture(scope="session")
def digraph30() -> RoadGraph:
    return random_digraph(30, extra_edges=40, seed=11)
