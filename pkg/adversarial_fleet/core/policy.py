"""
Dispatch policies: random assignment and instantaneous (min-cost) assignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from adversarial_fleet.core.demand import Request
from adversarial_fleet.core.fleet import FleetState
from adversarial_fleet.core.graph import RoadGraph
from adversarial_fleet.core.matching import CostMatrix, build_costs, solve_assignment


class PolicyKind(str, Enum):
    RANDOM_ASSIGNMENT = "random-assignment"
    INSTANTANEOUS_ASSIGNMENT = "instantaneous-assignment"


@dataclass
class DispatchDecision:
    """New (agent id, request id) assignments for one step."""

    pairs: list[tuple[int, int]] = field(default_factory=list)
    # fraction of the available pool that was adversarial when each pair was made
    pool_adversary_fraction: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)

    def cost(self, costs: CostMatrix) -> int:
        return sum(costs.entry(a, r) for a, r in self.pairs)


def _unassigned(outstanding: Sequence[Request]) -> list[Request]:
    return sorted((r for r in outstanding if r.agent is None), key=lambda r: r.id)


def dispatch_random(fs: FleetState, outstanding: Sequence[Request], rng: np.random.Generator) -> DispatchDecision:
    """
    Serve outstanding requests in id order, each with an agent drawn uniformly
    from the remaining available pool, until the pool runs out.
    """
    pool = sorted(fs.available(), key=lambda a: a.id)
    decision = DispatchDecision()
    for request in _unassigned(outstanding):
        if not pool:
            break
        adversaries = sum(1 for a in pool if a.adversarial)
        agent = pool.pop(int(rng.integers(len(pool))))
        decision.pairs.append((agent.id, request.id))
        decision.pool_adversary_fraction.append(adversaries / (len(pool) + 1))
    return decision


def dispatch_instantaneous(fs: FleetState, outstanding: Sequence[Request], g: RoadGraph) -> DispatchDecision:
    """Match available agents to outstanding requests at minimum total trip length."""
    costs = build_costs(fs, outstanding, g)
    if costs.empty:
        return DispatchDecision()
    matching = solve_assignment(costs)
    fraction = sum(1 for a in fs.available() if a.adversarial) / len(costs.rows)
    return DispatchDecision(pairs=list(matching.pairs), pool_adversary_fraction=[fraction] * len(matching))


class Dispatcher:
    """Applies the scenario's policy each step."""

    def __init__(self, kind: PolicyKind | str):
        self.kind = PolicyKind(kind)

    def decide(
        self,
        fs: FleetState,
        outstanding: Sequence[Request],
        g: RoadGraph,
        rng: np.random.Generator,
    ) -> DispatchDecision:
        if self.kind is PolicyKind.RANDOM_ASSIGNMENT:
            return dispatch_random(fs, outstanding, rng)
        return dispatch_instantaneous(fs, outstanding, g)

    def __repr__(self) -> str:
        return f"Dispatcher({self.kind.value})"
