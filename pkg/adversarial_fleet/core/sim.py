"""
Discrete-time simulation engine.

Each step runs: sample arrivals -> dispatch -> move the fleet -> record.
A request that arrives at step t can be assigned at step t.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import pandas as pd

from adversarial_fleet.core.demand import DemandModel, Request, sample_arrivals
from adversarial_fleet.core.fleet import (
    AgentKind,
    DelayMode,
    DelayPolicy,
    FleetEvent,
    adversary_count,
    assign,
    init_fleet,
    step,
)
from adversarial_fleet.core.graph import RoadGraph
from adversarial_fleet.core.matching import build_costs
from adversarial_fleet.core.policy import Dispatcher, PolicyKind, dispatch_instantaneous, dispatch_random
from adversarial_fleet.utils.errors import ConfigError
from adversarial_fleet.utils.helpers import derive_run_seed, run_streams

logger = logging.getLogger(__name__)

# order of the per-run random streams; never reorder
ARRIVALS, FLEET, DELAYS, DISPATCH, AUDIT = range(5)

ASSIGNMENT_CLASSES = ("cooperative_first", "cooperative_next", "adversarial_first", "adversarial_next")


@dataclass
class Scenario:
    """
    One experiment configuration with its graph and demand already resolved.

    `scripted_arrivals` maps a step to (pickup, dropoff) pairs and replaces
    sampling from the demand model when given.
    """

    graph: RoadGraph
    demand: DemandModel
    policy: PolicyKind = PolicyKind.RANDOM_ASSIGNMENT
    fleet_size: int = 1
    adversarial_fraction: float = 0.0
    delta: int = 0
    delay_mode: DelayMode = DelayMode.FIXED_MAXIMUM
    horizon: int = 720
    runs: int = 1
    seed: int = 0
    symmetric: bool = False
    workers: int = 1
    audit_dominance: bool = False
    record_events: bool = False
    scripted_arrivals: Mapping[int, Sequence[tuple[int, int]]] | None = None

    def __post_init__(self):
        self.policy = PolicyKind(self.policy)
        self.delay_mode = DelayMode(self.delay_mode)
        if self.fleet_size < 1:
            raise ConfigError(f"fleet size must be at least 1, got {self.fleet_size}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be at least 1, got {self.horizon}")
        if self.runs < 1:
            raise ConfigError(f"runs must be at least 1, got {self.runs}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        adversary_count(self.fleet_size, self.adversarial_fraction)
        self.delay_policy()
        self.demand.validate_for(self.graph)

    def delay_policy(self) -> DelayPolicy:
        return DelayPolicy(mode=self.delay_mode, delta=self.delta, symmetric=self.symmetric)

    def describe(self) -> dict[str, Any]:
        return {
            "policy": self.policy.value,
            "fleet_size": self.fleet_size,
            "adversarial_fraction": self.adversarial_fraction,
            "adversaries": adversary_count(self.fleet_size, self.adversarial_fraction),
            "delta": self.delta,
            "delay_mode": self.delay_mode.value,
            "horizon": self.horizon,
            "runs": self.runs,
            "seed": self.seed,
            "symmetric": self.symmetric,
            "graph_nodes": self.graph.num_nodes,
            "graph_edges": len(self.graph.edges),
        }


@dataclass
class SimulationMetrics:
    """Per-run series and counters."""

    outstanding: np.ndarray
    unpicked: np.ndarray
    entered: np.ndarray
    completed_series: np.ndarray
    in_flight: np.ndarray
    wasted_delay_total: int = 0
    adversary_served: int = 0
    service_time_total: int = 0
    completed: int = 0
    assignments_by_class: dict[str, int] = field(default_factory=lambda: dict.fromkeys(ASSIGNMENT_CLASSES, 0))
    adversary_assignment_fraction: list[float] = field(default_factory=list)
    pool_adversary_fraction: list[float] = field(default_factory=list)
    dispatch_cost_total: int = 0
    audited_steps: int = 0
    dominance_violations: int = 0
    events: list[FleetEvent] = field(default_factory=list)

    @classmethod
    def empty(cls, horizon: int) -> "SimulationMetrics":
        zeros = lambda: np.zeros(horizon, dtype=np.int64)
        return cls(
            outstanding=zeros(),
            unpicked=zeros(),
            entered=zeros(),
            completed_series=zeros(),
            in_flight=zeros(),
        )

    @property
    def total_assignments(self) -> int:
        return sum(self.assignments_by_class.values())

    @property
    def adversary_assignments(self) -> int:
        return self.assignments_by_class["adversarial_first"] + self.assignments_by_class["adversarial_next"]

    def summary(self) -> dict[str, Any]:
        return {
            "terminal_outstanding": int(self.outstanding[-1]),
            "terminal_unpicked": int(self.unpicked[-1]),
            "entered": int(self.entered[-1]),
            "completed": self.completed,
            "wasted_delay_total": self.wasted_delay_total,
            "service_time_total": self.service_time_total,
            "assignments_by_class": dict(self.assignments_by_class),
            "adversary_assignment_fraction": (
                self.adversary_assignment_fraction[-1] if self.adversary_assignment_fraction else 0.0
            ),
            "dominance_violations": self.dominance_violations,
        }


@dataclass(frozen=True)
class StabilityThresholds:
    slope: float = 0.02
    ratio: float = 2.0
    min_length: int = 100


@dataclass(frozen=True)
class StabilityVerdict:
    label: str
    slope: float
    terminal_mean: float
    midpoint_mean: float

    @property
    def stable(self) -> bool:
        return self.label == "stable-like"


@dataclass
class AggregateSeries:
    mean_outstanding: np.ndarray
    std_outstanding: np.ndarray
    mean_unpicked: np.ndarray
    terminal: list[dict[str, Any]]
    seeds: list[int]
    metrics: list[SimulationMetrics] = field(default_factory=list, repr=False)

    @property
    def runs(self) -> int:
        return len(self.terminal)

    @property
    def horizon(self) -> int:
        return len(self.mean_outstanding)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t": np.arange(self.horizon),
                "mean_outstanding": self.mean_outstanding,
                "std_outstanding": self.std_outstanding,
                "mean_unpicked": self.mean_unpicked,
            }
        )

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
        return path


def _arrivals(sc: Scenario, t: int, rng: np.random.Generator, first_id: int) -> list[Request]:
    if sc.scripted_arrivals is None:
        return sample_arrivals(sc.demand, t, rng, first_id)
    pairs = sc.scripted_arrivals.get(t, ())
    return [Request(id=first_id + k, pickup=p, dropoff=d, entry_time=t) for k, (p, d) in enumerate(pairs)]


def run_once(sc: Scenario, seed: int) -> SimulationMetrics:
    """
    Simulate one run of `sc.horizon` steps.

    Arrivals, fleet placement, delays, dispatch and the dominance audit each
    draw from their own stream split off `seed`, so two policies run with
    the same seed see the same requests and the same initial fleet.
    """
    g = sc.graph
    streams = run_streams(seed, 5)
    fs = init_fleet(sc.fleet_size, sc.adversarial_fraction, sc.demand, streams[FLEET])
    dispatcher = Dispatcher(sc.policy)
    dp = sc.delay_policy()
    metrics = SimulationMetrics.empty(sc.horizon)

    pending: dict[int, Request] = {}
    next_id = 0
    adversary_assigned = 0
    for t in range(sc.horizon):
        arrivals = _arrivals(sc, t, streams[ARRIVALS], next_id)
        for request in arrivals:
            pending[request.id] = request
        next_id += len(arrivals)

        outstanding = list(pending.values())
        decision = dispatcher.decide(fs, outstanding, g, streams[DISPATCH])
        if decision.pairs:
            costs = build_costs(fs, outstanding, g)
            decision_cost = decision.cost(costs)
            metrics.dispatch_cost_total += decision_cost
            if sc.audit_dominance:
                matched = dispatch_instantaneous(fs, outstanding, g).cost(costs)
                drawn = dispatch_random(fs, outstanding, streams[AUDIT]).cost(costs)
                metrics.audited_steps += 1
                if matched > drawn:
                    metrics.dominance_violations += 1

        for (agent_id, request_id), pool_fraction in zip(decision.pairs, decision.pool_adversary_fraction):
            agent = fs.agents[agent_id]
            request = pending.pop(request_id)
            label = f"{agent.kind.value}_{'first' if agent.served == 0 else 'next'}"
            assign(agent, request, g, dp, streams[DELAYS], t=t)
            metrics.assignments_by_class[label] += 1
            adversary_assigned += agent.adversarial
            metrics.adversary_assignment_fraction.append(adversary_assigned / metrics.total_assignments)
            metrics.pool_adversary_fraction.append(pool_fraction)
            if sc.record_events:
                metrics.events.append(FleetEvent(t, "assign", agent_id, request_id))
        metrics.outstanding[t] = len(pending)

        fs, outcome = step(fs, g)
        for done in outcome.completed:
            metrics.completed += 1
            metrics.service_time_total += done.service_time
            if done.kind is AgentKind.ADVERSARIAL:
                metrics.adversary_served += 1
                metrics.wasted_delay_total += done.wasted_delay
        if sc.record_events:
            metrics.events.extend(outcome.events)

        busy = fs.busy()
        metrics.in_flight[t] = len(busy)
        metrics.unpicked[t] = len(pending) + sum(1 for a in busy if not a.request.picked_up)
        metrics.entered[t] = next_id
        metrics.completed_series[t] = metrics.completed

    logger.debug("run seed=%d: terminal outstanding %d, completed %d",
                 seed, metrics.outstanding[-1], metrics.completed)
    return metrics


def aggregate(results: Sequence[SimulationMetrics], seeds: Sequence[int]) -> AggregateSeries:
    """Reduce runs in seed order; population standard deviation across runs."""
    outstanding = np.vstack([m.outstanding for m in results]).astype(float)
    unpicked = np.vstack([m.unpicked for m in results]).astype(float)
    return AggregateSeries(
        mean_outstanding=outstanding.mean(axis=0),
        std_outstanding=outstanding.std(axis=0),
        mean_unpicked=unpicked.mean(axis=0),
        terminal=[dict(m.summary(), seed=int(s)) for m, s in zip(results, seeds)],
        seeds=[int(s) for s in seeds],
        metrics=list(results),
    )


def run_ensemble(sc: Scenario, seeds: Sequence[int] | None = None) -> AggregateSeries:
    """
    Run `sc.runs` independent simulations and aggregate them.

    Args:
        sc: Scenario
        seeds: Explicit run seeds; derived from the master seed when omitted

    Returns:
        AggregateSeries (identical whatever the worker count)
    """
    if seeds is None:
        seeds = [derive_run_seed(sc.seed, k) for k in range(sc.runs)]
    seeds = list(seeds)
    logger.info("Running %d x %s, N=%d, F=%g, delta=%d, T=%d",
                len(seeds), sc.policy.value, sc.fleet_size, sc.adversarial_fraction, sc.delta, sc.horizon)
    if sc.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=sc.workers) as pool:
            results = list(pool.map(run_once, repeat(sc), seeds))
    else:
        results = [run_once(sc, s) for s in seeds]
    return aggregate(results, seeds)


def classify_stability(
    series: AggregateSeries | np.ndarray,
    thresholds: StabilityThresholds = StabilityThresholds(),
) -> StabilityVerdict:
    """
    Finite-horizon stand-in for "outstanding requests stay bounded".

    Unstable-like when the least-squares slope of mean outstanding over the
    final half exceeds `thresholds.slope` AND the final value exceeds
    `thresholds.ratio` times the midpoint reference, the average over the
    first half of the horizon.
    """
    mean = np.asarray(series.mean_outstanding if isinstance(series, AggregateSeries) else series, dtype=float)
    if len(mean) < thresholds.min_length:
        raise ConfigError(f"series has {len(mean)} steps; classification needs at least {thresholds.min_length}")
    half = len(mean) // 2
    tail = mean[half:]
    slope = float(np.polyfit(np.arange(len(tail), dtype=float), tail, 1)[0])
    terminal, midpoint = float(mean[-1]), float(mean[:half].mean())
    growing = slope > thresholds.slope and terminal > thresholds.ratio * midpoint
    return StabilityVerdict(
        label="unstable-like" if growing else "stable-like",
        slope=slope,
        terminal_mean=terminal,
        midpoint_mean=midpoint,
    )


def sweep_label(policy: PolicyKind, n: int, f: float) -> str:
    short = "ra" if PolicyKind(policy) is PolicyKind.RANDOM_ASSIGNMENT else "ia"
    return f"{short}_N{n}_F{f:.4f}"


def run_sweep(
    base: Scenario,
    combinations: Sequence[tuple[PolicyKind, int, float]],
) -> dict[str, AggregateSeries]:
    """
    Run an ensemble per (policy, N, F) on the base scenario's graph and demand.

    Combinations whose F*N is not an integer are skipped with a warning.
    """
    results: dict[str, AggregateSeries] = {}
    for policy, n, f in combinations:
        try:
            adversary_count(n, f)
        except ConfigError as e:
            logger.warning("Skipping %s: %s", sweep_label(policy, n, f), e)
            continue
        sc = Scenario(
            graph=base.graph,
            demand=base.demand,
            policy=policy,
            fleet_size=n,
            adversarial_fraction=f,
            delta=base.delta,
            delay_mode=base.delay_mode,
            horizon=base.horizon,
            runs=base.runs,
            seed=base.seed,
            symmetric=base.symmetric,
            workers=base.workers,
        )
        results[sweep_label(policy, n, f)] = run_ensemble(sc)
    return results


def sweep_frame(results: Mapping[str, AggregateSeries]) -> pd.DataFrame:
    """Mean outstanding per step, one column per sweep combination."""
    columns = {label: series.mean_outstanding for label, series in results.items()}
    horizon = len(next(iter(results.values())).mean_outstanding) if results else 0
    return pd.DataFrame({"t": np.arange(horizon), **columns})


def write_events(path: str | Path, events: Sequence[FleetEvent]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [(e.t, e.event, e.agent, e.request) for e in events],
        columns=["t", "event", "agent", "request"],
    )
    frame.to_csv(path, index=False, lineterminator="\n")
    return path
