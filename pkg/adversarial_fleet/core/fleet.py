"""
Agent dynamics.

Cooperative agents walk shortest paths. Adversarial agents follow the
bounded-delay model: on each leg of a trip they first dwell in place for
e <= delta steps and then walk the shortest path, so a leg of length d
takes exactly d + e steps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from adversarial_fleet.core.demand import DemandModel, Request
from adversarial_fleet.core.graph import Itinerary, RoadGraph
from adversarial_fleet.utils.errors import AssignmentError, ConfigError

logger = logging.getLogger(__name__)

INTEGRALITY_TOLERANCE = 1e-9


class AgentKind(str, Enum):
    COOPERATIVE = "cooperative"
    ADVERSARIAL = "adversarial"


class DelayMode(str, Enum):
    FIXED_MAXIMUM = "fixed-maximum"
    UNIFORM = "uniform"


class Leg(str, Enum):
    PICKUP = "pickup"
    DROPOFF = "dropoff"


@dataclass(frozen=True)
class DelayPolicy:
    """
    How adversaries realize their per-leg delay.

    Args:
        mode: fixed-maximum (always delta) or uniform on {0, ..., delta}
        delta: Maximum delay per leg, in time steps
        symmetric: Cooperative agents dwell too (worst-case symmetric fleet)
    """

    mode: DelayMode = DelayMode.FIXED_MAXIMUM
    delta: int = 0
    symmetric: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", DelayMode(self.mode))
        if int(self.delta) != self.delta or self.delta < 0:
            raise ConfigError(f"delta must be a non-negative integer, got {self.delta}")
        object.__setattr__(self, "delta", int(self.delta))

    def applies_to(self, kind: AgentKind) -> bool:
        return kind is AgentKind.ADVERSARIAL or self.symmetric

    def draw(self, rng: np.random.Generator) -> int:
        if self.mode is DelayMode.FIXED_MAXIMUM:
            return self.delta
        return int(rng.integers(0, self.delta + 1))


@dataclass
class AgentState:
    id: int
    location: int
    kind: AgentKind
    remaining: int = 0
    request: Request | None = None
    itinerary: Itinerary | None = None
    pending_delay: int = 0
    leg: Leg | None = None
    dropoff_delay: int = 0
    realized_delay: tuple[int, int] = (0, 0)
    assigned_at: int = 0
    served: int = 0

    @property
    def assignment(self) -> int | None:
        return self.request.id if self.request is not None else None

    @property
    def available(self) -> bool:
        return self.request is None

    @property
    def adversarial(self) -> bool:
        return self.kind is AgentKind.ADVERSARIAL


@dataclass(frozen=True)
class FleetEvent:
    t: int
    event: str
    agent: int
    request: int


@dataclass(frozen=True)
class Completion:
    request_id: int
    agent_id: int
    kind: AgentKind
    assigned_at: int
    completed_at: int
    wasted_delay: int

    @property
    def service_time(self) -> int:
        return self.completed_at - self.assigned_at


@dataclass
class StepOutcome:
    completed: list[Completion] = field(default_factory=list)
    pickups: list[int] = field(default_factory=list)
    events: list[FleetEvent] = field(default_factory=list)

    @property
    def completed_ids(self) -> list[int]:
        return [c.request_id for c in self.completed]


@dataclass
class FleetState:
    agents: list[AgentState]
    t: int = 0

    @property
    def size(self) -> int:
        return len(self.agents)

    @property
    def adversarial_count(self) -> int:
        return sum(1 for a in self.agents if a.adversarial)

    @property
    def adversarial_fraction(self) -> float:
        return self.adversarial_count / self.size

    def available(self) -> list[AgentState]:
        return [a for a in self.agents if a.available]

    def busy(self) -> list[AgentState]:
        return [a for a in self.agents if not a.available]


def adversary_count(n: int, f: float) -> int:
    """Number of adversaries for fleet size n and proportion f; f*n must be integral."""
    if not 0.0 <= f <= 1.0:
        raise ConfigError(f"adversarial proportion must lie in [0, 1], got {f}")
    raw = f * n
    k = int(round(raw))
    if abs(raw - k) > INTEGRALITY_TOLERANCE:
        raise ConfigError(f"F*N = {f}*{n} = {raw:g} is not an integer number of adversaries")
    return k


def init_fleet(n: int, f: float, m: DemandModel, rng: np.random.Generator) -> FleetState:
    """
    Place n idle agents at initial locations drawn from p_xi.

    Args:
        n: Fleet size
        f: Proportion of adversarial agents (f*n must be an integer)
        m: Demand model supplying p_xi
        rng: Seeded generator

    Returns:
        FleetState at t = 0
    """
    if n < 1:
        raise ConfigError(f"fleet size must be at least 1, got {n}")
    k = adversary_count(n, f)
    locations = [m.draw("p_xi", rng) for _ in range(n)]
    adversaries = set(rng.choice(n, size=k, replace=False).tolist()) if k else set()
    agents = [
        AgentState(
            id=i,
            location=locations[i],
            kind=AgentKind.ADVERSARIAL if i in adversaries else AgentKind.COOPERATIVE,
        )
        for i in range(n)
    ]
    return FleetState(agents=agents)


def assign(
    agent: AgentState,
    r: Request,
    g: RoadGraph,
    dp: DelayPolicy,
    rng: np.random.Generator,
    t: int = 0,
) -> AgentState:
    """
    Commit an available agent to a request.

    `remaining` is set to the undelayed trip length, which is all the
    dispatcher knows; the agent stays busy until it actually delivers.

    Raises:
        AssignmentError: agent busy or request already assigned
    """
    if not agent.available:
        raise AssignmentError(f"agent {agent.id} is busy with request {agent.assignment}")
    if r.agent is not None:
        raise AssignmentError(f"request {r.id} is already assigned to agent {r.agent}")

    e_pick = e_drop = 0
    if dp.applies_to(agent.kind):
        e_pick = dp.draw(rng)
        e_drop = dp.draw(rng)

    r.agent = agent.id
    agent.request = r
    agent.leg = Leg.PICKUP
    agent.itinerary = g.itinerary(agent.location, r.pickup)
    agent.pending_delay = e_pick
    agent.dropoff_delay = e_drop
    agent.realized_delay = (e_pick, e_drop)
    agent.remaining = len(agent.itinerary) + g.distance(r.pickup, r.dropoff)
    agent.assigned_at = t
    return agent


def _settle(agent: AgentState, g: RoadGraph, t: int, outcome: StepOutcome) -> None:
    """Close every leg the agent has finished as of time t."""
    request = agent.request
    if agent.leg is Leg.PICKUP and agent.pending_delay == 0 and agent.itinerary.finished:
        request.mark_picked_up()
        outcome.pickups.append(request.id)
        outcome.events.append(FleetEvent(t, "pickup", agent.id, request.id))
        agent.leg = Leg.DROPOFF
        agent.itinerary = g.itinerary(request.pickup, request.dropoff)
        agent.pending_delay = agent.dropoff_delay

    if agent.leg is Leg.DROPOFF and agent.pending_delay == 0 and agent.itinerary.finished:
        outcome.completed.append(
            Completion(
                request_id=request.id,
                agent_id=agent.id,
                kind=agent.kind,
                assigned_at=agent.assigned_at,
                completed_at=t,
                wasted_delay=sum(agent.realized_delay),
            )
        )
        outcome.events.append(FleetEvent(t, "dropoff", agent.id, request.id))
        agent.request = None
        agent.itinerary = None
        agent.leg = None
        agent.remaining = 0
        agent.dropoff_delay = 0
        agent.served += 1


def step(fs: FleetState, g: RoadGraph) -> tuple[FleetState, StepOutcome]:
    """
    Advance every busy agent by one time step.

    A busy agent either burns one step of dwell or moves one hop. Idle
    agents stay where they are. Events are stamped with the time at which
    they take effect, so a trip assigned at t with length d completes at t+d.
    """
    outcome = StepOutcome()
    for agent in fs.agents:
        if agent.available:
            continue
        # zero-length legs of a fresh assignment close before any motion
        _settle(agent, g, fs.t, outcome)
        if agent.available:
            continue
        if agent.pending_delay > 0:
            agent.pending_delay -= 1
        else:
            agent.location = agent.itinerary.advance()
        agent.remaining = max(agent.remaining - 1, 0)
        _settle(agent, g, fs.t + 1, outcome)
    fs.t += 1
    return fs, outcome
