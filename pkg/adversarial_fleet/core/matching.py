"""
Min-cost rectangular assignment of available agents to outstanding requests.

The solver is a forward auction with epsilon scaling. Costs are integers,
and the last scaling phase runs with epsilon < 1/n, which makes the final
assignment exactly optimal.

Ties between optimal matchings are resolved towards lower ids on the
larger side: among equal-cost optima the one whose matched ids on the
larger side have the smallest sum is returned. This is encoded as an
integer perturbation of the costs, so it never changes which total cost
is optimal.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from adversarial_fleet.core.demand import Request
from adversarial_fleet.core.fleet import FleetState
from adversarial_fleet.core.graph import RoadGraph
from adversarial_fleet.utils.errors import AssignmentError

logger = logging.getLogger(__name__)

SCALING_FACTOR = 4.0


@dataclass
class CostMatrix:
    """Rows are agent ids, columns request ids, entries in time steps."""

    rows: list[int]
    cols: list[int]
    cost: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int64))

    @property
    def empty(self) -> bool:
        return len(self.rows) == 0 or len(self.cols) == 0

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.cols)

    def entry(self, agent_id: int, request_id: int) -> int:
        return int(self.cost[self.rows.index(agent_id), self.cols.index(request_id)])


@dataclass
class Matching:
    pairs: list[tuple[int, int]]
    total_cost: int

    def __len__(self) -> int:
        return len(self.pairs)


def _validate(cost: np.ndarray) -> np.ndarray:
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.size == 0:
        raise AssignmentError("cost matrix is empty")
    if not np.all(np.isfinite(cost)):
        raise AssignmentError("cost matrix has non-finite entries")
    if np.any(cost < 0):
        raise AssignmentError("cost matrix has negative entries")
    if not np.all(cost == np.round(cost)):
        raise AssignmentError("auction solver requires integer costs")
    return cost.astype(np.int64)


def auction_square(benefit: np.ndarray, scaling: float = SCALING_FACTOR) -> np.ndarray:
    """
    Maximize total benefit on a square integer matrix.

    Gauss-Seidel forward auction: the lowest-indexed unassigned bidder bids
    for its best object and raises that object's price by the gap to its
    second best plus epsilon. Prices carry over between scaling phases.

    Args:
        benefit: n x n integer benefits
        scaling: Factor epsilon shrinks by between phases

    Returns:
        Array `owner_of_bidder` with the object each bidder ends up holding
    """
    n = benefit.shape[0]
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    benefit = benefit.astype(float)
    prices = np.zeros(n)
    final_eps = 1.0 / (n + 1)
    spread = float(benefit.max() - benefit.min())
    eps = max(spread / 2.0, final_eps)
    phases = 0
    while True:
        phases += 1
        held = np.full(n, -1, dtype=np.int64)
        owner = np.full(n, -1, dtype=np.int64)
        queue = deque(range(n))
        while queue:
            i = queue.popleft()
            values = benefit[i] - prices
            j = int(np.argmax(values))
            best = values[j]
            values[j] = -np.inf
            second = values.max()
            prices[j] += best - second + eps
            previous = owner[j]
            if previous >= 0:
                held[previous] = -1
                queue.append(int(previous))
            owner[j] = i
            held[i] = j
        if eps <= final_eps:
            break
        eps = max(eps / scaling, final_eps)
    logger.debug("auction solved %dx%d in %d phases", n, n, phases)
    return held


def _solve_positions(cost: np.ndarray) -> list[tuple[int, int]]:
    """Optimal (row, col) position pairs with cardinality min(m, n)."""
    m, n = cost.shape
    transposed = m > n
    if transposed:
        cost = cost.T
        m, n = n, m
    # bidders are the smaller side (m), objects the larger side (n)
    scale = m * n + 1
    perturbed = cost * scale + np.arange(n)[None, :] if m < n else cost * scale

    if m < n:
        # a bidder is matched within its m cheapest objects in any optimum
        keep = min(n, m)
        candidates = np.unique(np.argsort(perturbed, axis=1, kind="stable")[:, :keep])
    else:
        candidates = np.arange(n)
    size = len(candidates)
    square = np.zeros((size, size), dtype=np.int64)
    square[:m] = -perturbed[:, candidates]
    held = auction_square(square)

    pairs = [(i, int(candidates[held[i]])) for i in range(m)]
    if transposed:
        pairs = [(col, row) for row, col in pairs]
    return sorted(pairs)


def solve_assignment(c: CostMatrix) -> Matching:
    """
    Minimum-total-cost matching of cardinality min(#rows, #cols).

    Args:
        c: Cost matrix with integer, non-negative, finite entries

    Returns:
        Matching of (agent id, request id) pairs in cost-matrix row order

    Raises:
        AssignmentError: empty matrix, negative, non-finite or non-integer costs
    """
    if c.empty:
        raise AssignmentError("cost matrix is empty")
    cost = _validate(c.cost)
    if cost.shape != c.shape:
        raise AssignmentError(f"cost matrix shape {cost.shape} does not match {c.shape} labels")
    positions = _solve_positions(cost)
    pairs = [(c.rows[i], c.cols[j]) for i, j in positions]
    total = int(sum(cost[i, j] for i, j in positions))
    return Matching(pairs=pairs, total_cost=total)


def build_costs(fs: FleetState, outstanding: Sequence[Request], g: RoadGraph) -> CostMatrix:
    """
    Dispatcher-visible trip lengths d(agent, pickup) + d(pickup, dropoff).

    Rows are available agents in id order; columns are unassigned
    outstanding requests in id order.
    """
    agents = sorted(fs.available(), key=lambda a: a.id)
    requests = sorted((r for r in outstanding if r.agent is None), key=lambda r: r.id)
    rows = [a.id for a in agents]
    cols = [r.id for r in requests]
    if not rows or not cols:
        return CostMatrix(rows=rows, cols=cols, cost=np.zeros((len(rows), len(cols)), dtype=np.int64))
    loc = np.array([g.index(a.location) for a in agents])
    pick = np.array([g.index(r.pickup) for r in requests])
    drop = np.array([g.index(r.dropoff) for r in requests])
    cost = g.dist[loc[:, None], pick[None, :]] + g.dist[pick, drop][None, :]
    return CostMatrix(rows=rows, cols=cols, cost=cost.astype(np.int64))
