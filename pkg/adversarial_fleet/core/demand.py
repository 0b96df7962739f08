"""
Request model: estimation from historical traces and seeded sampling.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import pandas as pd

from adversarial_fleet.core.graph import RoadGraph
from adversarial_fleet.utils.errors import DataError
from adversarial_fleet.utils.helpers import pmf_from_document, pmf_to_document, read_json, write_json

logger = logging.getLogger(__name__)

PMF_TOLERANCE = 1e-9


@dataclass
class Request:
    """A pickup-and-delivery request; `picked_up` flips once, at pickup."""

    id: int
    pickup: int
    dropoff: int
    entry_time: int
    picked_up: bool = False
    agent: int | None = None

    def mark_picked_up(self) -> None:
        if self.picked_up:
            raise DataError(f"request {self.id} picked up twice")
        self.picked_up = True


@dataclass(frozen=True)
class TraceRecord:
    minute: int
    pickup: int
    dropoff: int


@dataclass(frozen=True)
class RequestTrace:
    records: tuple[TraceRecord, ...]

    def __len__(self) -> int:
        return len(self.records)


class _Sampler:
    """Inverse-CDF sampler over a fixed ascending support ordering."""

    def __init__(self, pmf: Mapping[int, float]):
        self.support = np.array(sorted(pmf), dtype=np.int64)
        self.cdf = np.cumsum([pmf[k] for k in self.support])

    def draw(self, rng: np.random.Generator) -> int:
        u = rng.random()
        k = int(np.searchsorted(self.cdf, u, side="right"))
        return int(self.support[min(k, len(self.support) - 1)])


def _check_pmf(pmf: Mapping[int, float], name: str) -> dict[int, float]:
    if not pmf:
        raise DataError(f"{name}: empty distribution")
    clean = {}
    for k, p in pmf.items():
        p = float(p)
        if not np.isfinite(p) or p < 0:
            raise DataError(f"{name}: probability of {k} is {p}")
        if p > 0:
            clean[int(k)] = p
    total = sum(clean.values())
    if abs(total - 1.0) > PMF_TOLERANCE:
        raise DataError(f"{name}: probabilities sum to {total!r}, expected 1")
    return clean


@dataclass(frozen=True)
class DemandModel:
    """
    Request distributions: arrivals per step (eta), pickups (rho),
    drop-offs (delta) and initial agent locations (xi).

    `p_vrand`, the location of an agent that just became free, defaults to
    the drop-off distribution.
    """

    p_eta: Mapping[int, float]
    p_rho: Mapping[int, float]
    p_delta: Mapping[int, float]
    p_xi: Mapping[int, float]
    p_vrand_override: Mapping[int, float] | None = None
    _samplers: dict[str, _Sampler] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("p_eta", "p_rho", "p_delta", "p_xi"):
            object.__setattr__(self, name, _check_pmf(getattr(self, name), name))
        if self.p_vrand_override is not None:
            object.__setattr__(self, "p_vrand_override", _check_pmf(self.p_vrand_override, "p_vrand"))
        if any(k < 0 for k in self.p_eta):
            raise DataError("p_eta: arrival counts must be non-negative")
        samplers = {name: _Sampler(getattr(self, name)) for name in ("p_eta", "p_rho", "p_delta", "p_xi")}
        object.__setattr__(self, "_samplers", samplers)

    @property
    def p_vrand(self) -> Mapping[int, float]:
        return self.p_vrand_override if self.p_vrand_override is not None else self.p_delta

    def draw(self, name: str, rng: np.random.Generator) -> int:
        return self._samplers[name].draw(rng)

    def validate_for(self, g: RoadGraph) -> None:
        for name in ("p_rho", "p_delta", "p_xi"):
            pmf_vector(g, getattr(self, name), name)
        pmf_vector(g, self.p_vrand, "p_vrand")

    @classmethod
    def uniform(cls, g: RoadGraph, eta: Mapping[int, float] | None = None) -> "DemandModel":
        """Uniform pickups, drop-offs and initial locations over every node."""
        nodes = {node: 1.0 / g.num_nodes for node in g.node_ids}
        return cls(p_eta=dict(eta or {1: 1.0}), p_rho=dict(nodes), p_delta=dict(nodes), p_xi=dict(nodes))

    def to_document(self) -> dict[str, Any]:
        doc = {
            "p_eta": pmf_to_document(self.p_eta),
            "p_rho": pmf_to_document(self.p_rho),
            "p_delta": pmf_to_document(self.p_delta),
            "p_xi": pmf_to_document(self.p_xi),
        }
        if self.p_vrand_override is not None:
            doc["p_vrand"] = pmf_to_document(self.p_vrand_override)
        return doc

    @classmethod
    def from_document(cls, doc: Mapping[str, Any]) -> "DemandModel":
        missing = [k for k in ("p_eta", "p_rho", "p_delta", "p_xi") if k not in doc]
        if missing:
            raise DataError(f"demand model document is missing {', '.join(missing)}")
        vrand = doc.get("p_vrand")
        return cls(
            p_eta=pmf_from_document(doc["p_eta"], "p_eta"),
            p_rho=pmf_from_document(doc["p_rho"], "p_rho"),
            p_delta=pmf_from_document(doc["p_delta"], "p_delta"),
            p_xi=pmf_from_document(doc["p_xi"], "p_xi"),
            p_vrand_override=pmf_from_document(vrand, "p_vrand") if vrand is not None else None,
        )

    def save(self, path: str | Path) -> Path:
        return write_json(path, self.to_document())

    @classmethod
    def load(cls, path: str | Path) -> "DemandModel":
        return cls.from_document(read_json(path))


def pmf_vector(g: RoadGraph, pmf: Mapping[int, float], name: str = "pmf") -> np.ndarray:
    """Dense probability vector over the graph's node index."""
    vec = np.zeros(g.num_nodes)
    for node, p in pmf.items():
        if node not in g:
            raise DataError(f"{name}: node {node} is not in the graph")
        vec[g.index(node)] = p
    return vec


def load_trace(path: str | Path, g: RoadGraph | None = None) -> RequestTrace:
    """
    Read a `minute,pickup_node,dropoff_node` trace.

    A first line that does not parse as integers is treated as a header.
    Errors name the 1-based line of the offending record.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=False, keep_default_na=False)
    except FileNotFoundError as e:
        raise DataError(f"trace file not found: {path}") from e
    except pd.errors.EmptyDataError as e:
        raise DataError(f"trace file is empty: {path}") from e
    except pd.errors.ParserError as e:
        raise DataError(f"{path}: {e}") from e

    records = []
    for row_index, row in enumerate(frame.itertuples(index=False)):
        line = row_index + 1
        values = [str(v).strip() for v in row if str(v).strip() != ""]
        if not values:
            continue
        if len(values) != 3:
            raise DataError(f"expected 3 fields, got {len(values)}", line=line)
        try:
            minute, pickup, dropoff = (int(v) for v in values)
        except ValueError:
            if row_index == 0:
                continue
            raise DataError(f"non-integer field in {values}", line=line) from None
        if minute < 0:
            raise DataError(f"negative minute {minute}", line=line)
        if g is not None:
            for node in (pickup, dropoff):
                if node not in g:
                    raise DataError(f"node {node} is not in the graph", line=line)
        records.append(TraceRecord(minute, pickup, dropoff))
    return RequestTrace(tuple(records))


def _relative_frequency(values: np.ndarray) -> dict[int, float]:
    keys, counts = np.unique(values, return_counts=True)
    total = counts.sum()
    return {int(k): float(c) / total for k, c in zip(keys, counts)}


def estimate_demand(
    trace: RequestTrace,
    g: RoadGraph,
    p_xi: Mapping[int, float] | None = None,
    p_vrand: Mapping[int, float] | None = None,
) -> DemandModel:
    """
    Estimate request distributions by relative frequency.

    Arrival counts are taken per minute over the whole covered minute range,
    so minutes without requests add mass at zero. Unless overridden, initial
    agent locations follow the drop-off distribution.

    Args:
        trace: Historical requests
        g: Road graph the nodes must belong to
        p_xi: Optional override for the initial-location pmf
        p_vrand: Optional override for the free-agent location pmf

    Returns:
        DemandModel
    """
    if len(trace) == 0:
        raise DataError("cannot estimate demand from an empty trace")
    minutes = np.array([r.minute for r in trace.records], dtype=np.int64)
    pickups = np.array([r.pickup for r in trace.records], dtype=np.int64)
    dropoffs = np.array([r.dropoff for r in trace.records], dtype=np.int64)
    for k, r in enumerate(trace.records):
        for node in (r.pickup, r.dropoff):
            if node not in g:
                raise DataError(f"record {k}: node {node} is not in the graph")

    per_minute = np.bincount(minutes - minutes.min())
    p_delta = _relative_frequency(dropoffs)
    model = DemandModel(
        p_eta=_relative_frequency(per_minute),
        p_rho=_relative_frequency(pickups),
        p_delta=p_delta,
        p_xi=dict(p_xi) if p_xi is not None else dict(p_delta),
        p_vrand_override=dict(p_vrand) if p_vrand is not None else None,
    )
    model.validate_for(g)
    logger.info("Demand estimated from %d requests over %d minutes: E[eta]=%.4f",
                len(trace), len(per_minute), expected_eta(model))
    return model


def expected_eta(m: DemandModel) -> float:
    return float(sum(k * p for k, p in m.p_eta.items()))


def expected_graph_distance(
    g: RoadGraph, from_dist: Mapping[int, float], to_dist: Mapping[int, float]
) -> float:
    """E[d(u, v)] for independent u ~ from_dist and v ~ to_dist."""
    p = pmf_vector(g, from_dist, "from_dist")
    q = pmf_vector(g, to_dist, "to_dist")
    return float(p @ g.dist @ q)


def sample_arrivals(m: DemandModel, t: int, rng: np.random.Generator, first_id: int = 0) -> list[Request]:
    """
    Draw the requests entering at step t.

    The count comes from p_eta, then each request draws its pickup and its
    drop-off independently. Ids are consecutive from `first_id`.
    """
    count = m.draw("p_eta", rng)
    requests = []
    for k in range(count):
        pickup = m.draw("p_rho", rng)
        dropoff = m.draw("p_delta", rng)
        requests.append(Request(id=first_id + k, pickup=pickup, dropoff=dropoff, entry_time=t))
    return requests
