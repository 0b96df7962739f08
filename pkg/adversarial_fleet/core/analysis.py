"""
Closed-form stability quantities.

- D_max / D_min: largest and smallest expected per-request service time
- cooperative fleet bound: N' >= E[eta] * D_max
- instability threshold on F for random assignment:
  F > (N' - E[eta] * D_min) / (2 * delta * E[eta])
- adversary-robust fleet bound: N >= E[eta] * D_max + 2 * delta * E[eta] * F_max
- coupon-collector time for every cooperative agent to get a first request
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Mapping

import numpy as np
import ot

from adversarial_fleet.core.demand import DemandModel, expected_eta, expected_graph_distance, pmf_vector
from adversarial_fleet.core.graph import RoadGraph
from adversarial_fleet.utils.errors import ConfigError, DataError, UndefinedThresholdError

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-9
# bounds are real numbers computed from rounded inputs; keep float noise
# from pushing an exact integer bound up by one
CEILING_SLACK = 1e-9


class GroundMetric(str, Enum):
    GRAPH_HOPS = "graph-hops"
    EUCLIDEAN = "euclidean"


@dataclass
class TransportPlan:
    """Optimal coupling: rows follow the source pmf, columns the target pmf."""

    coupling: np.ndarray
    cost: float
    source_nodes: tuple[int, ...]
    target_nodes: tuple[int, ...]


@dataclass(frozen=True)
class FleetComposition:
    size: int
    adversarial: int
    cooperative: int


@dataclass(frozen=True)
class RecoveryPlan:
    """Fleet before and after sizing for adversaries at a fixed proportion."""

    f: float
    baseline: FleetComposition
    robust: FleetComposition

    @property
    def added_cooperative(self) -> int:
        return self.robust.cooperative - self.baseline.cooperative

    @property
    def added_agents(self) -> int:
        return self.robust.size - self.baseline.size


@dataclass(frozen=True)
class StabilityReport:
    e_eta: float
    e_xi_rho: float
    e_vrand_rho: float
    e_rho_delta: float
    wd: float
    delta: int
    f_max: float
    metric: str = GroundMetric.GRAPH_HOPS.value

    @property
    def d_max(self) -> float:
        return max(self.e_xi_rho, self.e_vrand_rho) + self.e_rho_delta

    @property
    def d_min(self) -> float:
        return self.wd + self.e_rho_delta

    @property
    def bounds_consistent(self) -> bool:
        return self.d_min <= self.d_max

    @property
    def n_coop_bound(self) -> float:
        return self.e_eta * self.d_max

    @property
    def n_coop(self) -> int:
        return _ceil(self.n_coop_bound)

    def n_robust_bound_for(self, f_max: float) -> float:
        return self.e_eta * self.d_max + 2.0 * self.delta * self.e_eta * f_max

    def n_robust_for(self, f_max: float) -> int:
        if not 0.0 <= f_max <= 1.0:
            raise ConfigError(f"F_max must lie in [0, 1], got {f_max}")
        return _ceil(self.n_robust_bound_for(f_max))

    @property
    def n_robust_bound(self) -> float:
        return self.n_robust_bound_for(self.f_max)

    @property
    def n_robust(self) -> int:
        return self.n_robust_for(self.f_max)

    def threshold_at(self, n_prime: float) -> float:
        return _threshold(n_prime, self.e_eta, self.d_min, self.delta)

    @property
    def f_threshold(self) -> float:
        return self.threshold_at(self.n_coop)

    def to_document(self) -> dict[str, Any]:
        doc = asdict(self)
        doc.update(
            d_max=self.d_max,
            d_min=self.d_min,
            bounds_consistent=self.bounds_consistent,
            n_coop_bound=self.n_coop_bound,
            n_coop=self.n_coop,
            n_robust_bound=self.n_robust_bound,
            n_robust=self.n_robust,
            f_threshold=self.f_threshold,
        )
        return doc


def _ceil(value: float) -> int:
    return int(math.ceil(value - CEILING_SLACK))


def _threshold(n_prime: float, e_eta: float, d_min: float, delta: float) -> float:
    if delta <= 0:
        raise UndefinedThresholdError("instability threshold is undefined for delta = 0")
    if e_eta <= 0:
        raise UndefinedThresholdError("instability threshold is undefined for E[eta] = 0")
    return (n_prime - e_eta * d_min) / (2.0 * delta * e_eta)


def _ground_costs(g: RoadGraph, metric: GroundMetric) -> np.ndarray:
    if metric is GroundMetric.GRAPH_HOPS:
        return g.dist.astype(float)
    return g.euclidean_matrix()


def wasserstein(
    p: Mapping[int, float],
    q: Mapping[int, float],
    g: RoadGraph,
    metric: GroundMetric | str = GroundMetric.GRAPH_HOPS,
) -> TransportPlan:
    """
    Exact first Wasserstein distance between two pmfs on the graph's nodes.

    Solved as a transportation problem with the network simplex in `ot.emd`,
    restricted to the two supports.

    Args:
        p: Source pmf (mass moves from here)
        q: Target pmf
        g: Road graph supplying the ground metric
        metric: graph-hops (directed hop counts) or euclidean (node coordinates)

    Returns:
        TransportPlan with the optimal coupling and its cost

    Raises:
        DataError: pmf not normalized or off-graph support
    """
    metric = GroundMetric(metric)
    for name, pmf in (("p", p), ("q", q)):
        total = float(sum(pmf.values()))
        if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
            raise DataError(f"{name}: pmf sums to {total!r}, expected 1")
        if any(v < 0 for v in pmf.values()):
            raise DataError(f"{name}: negative probability")
    pv = pmf_vector(g, p, "p")
    qv = pmf_vector(g, q, "q")
    src = np.flatnonzero(pv > 0)
    dst = np.flatnonzero(qv > 0)
    a = pv[src] / pv[src].sum()
    b = qv[dst] / qv[dst].sum()
    ground = _ground_costs(g, metric)[np.ix_(src, dst)]
    coupling = ot.emd(a, b, ground)
    return TransportPlan(
        coupling=coupling,
        cost=float(np.sum(coupling * ground)),
        source_nodes=tuple(g.node_ids[i] for i in src),
        target_nodes=tuple(g.node_ids[j] for j in dst),
    )


def report_from_estimates(
    e_eta: float,
    e_xi_rho: float,
    e_vrand_rho: float,
    e_rho_delta: float,
    wd: float,
    delta: int,
    f_max: float,
    metric: GroundMetric | str = GroundMetric.GRAPH_HOPS,
) -> StabilityReport:
    """Build a report from already estimated expectations (no graph needed)."""
    if delta < 0:
        raise ConfigError(f"delta must be non-negative, got {delta}")
    if not 0.0 <= f_max <= 1.0:
        raise ConfigError(f"F_max must lie in [0, 1], got {f_max}")
    report = StabilityReport(
        e_eta=float(e_eta),
        e_xi_rho=float(e_xi_rho),
        e_vrand_rho=float(e_vrand_rho),
        e_rho_delta=float(e_rho_delta),
        wd=float(wd),
        delta=int(delta),
        f_max=float(f_max),
        metric=GroundMetric(metric).value,
    )
    if not report.bounds_consistent:
        logger.warning("D_min (%.4f) exceeds D_max (%.4f)", report.d_min, report.d_max)
    # every report carries a threshold, so delta = 0 is rejected here
    _threshold(report.n_coop, report.e_eta, report.d_min, report.delta)
    return report


def compute_report(
    m: DemandModel,
    g: RoadGraph,
    delta: int,
    f_max: float,
    metric: GroundMetric | str = GroundMetric.GRAPH_HOPS,
) -> StabilityReport:
    """
    Every stability quantity for a demand model on a graph.

    Raises:
        UndefinedThresholdError: delta = 0 or E[eta] = 0
    """
    m.validate_for(g)
    return report_from_estimates(
        e_eta=expected_eta(m),
        e_xi_rho=expected_graph_distance(g, m.p_xi, m.p_rho),
        e_vrand_rho=expected_graph_distance(g, m.p_vrand, m.p_rho),
        e_rho_delta=expected_graph_distance(g, m.p_rho, m.p_delta),
        wd=wasserstein(m.p_delta, m.p_rho, g, metric).cost,
        delta=delta,
        f_max=f_max,
        metric=metric,
    )


def instability_threshold(
    n_prime: float,
    m: DemandModel,
    g: RoadGraph,
    delta: int,
    metric: GroundMetric | str = GroundMetric.GRAPH_HOPS,
) -> float:
    """
    Proportion of adversaries above which random assignment with a fleet
    of n_prime agents is provably unstable.
    """
    e_eta = expected_eta(m)
    if delta <= 0 or e_eta <= 0:
        # raises before the transport problem is solved
        return _threshold(n_prime, e_eta, 0.0, delta)
    d_min = wasserstein(m.p_delta, m.p_rho, g, metric).cost + expected_graph_distance(g, m.p_rho, m.p_delta)
    return _threshold(n_prime, e_eta, d_min, delta)


def composition(n: int, f: float) -> FleetComposition:
    """Fleet of n agents keeping proportion f, adversaries rounded half up."""
    adversarial = int(math.floor(f * n + 0.5))
    return FleetComposition(size=n, adversarial=adversarial, cooperative=n - adversarial)


def recovery_plan(report: StabilityReport, f: float) -> RecoveryPlan:
    """Cooperative-bound fleet versus adversary-robust fleet at proportion f."""
    return RecoveryPlan(
        f=f,
        baseline=composition(report.n_coop, f),
        robust=composition(report.n_robust_for(f), f),
    )


def coupon_collector_time(n_coop: int) -> float:
    """Expected draws until each of n_coop cooperative agents was drawn once: n * H_n."""
    if n_coop < 1:
        raise ConfigError("coupon collector needs at least one cooperative agent")
    return float(n_coop * sum(1.0 / k for k in range(1, n_coop + 1)))


def simulate_coupon_collector(n_coop: int, trials: int, rng: np.random.Generator) -> float:
    """Monte-Carlo mean of draws-until-all-collected."""
    if n_coop < 1:
        raise ConfigError("coupon collector needs at least one cooperative agent")
    batch = 8 * n_coop
    total = 0
    for _ in range(trials):
        draws = rng.integers(n_coop, size=batch)
        while True:
            values, first = np.unique(draws, return_index=True)
            if len(values) == n_coop:
                break
            draws = np.concatenate([draws, rng.integers(n_coop, size=batch)])
        total += int(first.max()) + 1
    return total / trials
