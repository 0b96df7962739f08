"""
Scenario configuration documents.

One YAML document drives `analyze`, `simulate` and `sweep`, so the
theoretical bounds and the empirical runs always share their parameters.
Unknown keys are rejected at every level.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from adversarial_fleet.core.analysis import GroundMetric
from adversarial_fleet.core.demand import DemandModel, estimate_demand, load_trace
from adversarial_fleet.core.fleet import DelayMode
from adversarial_fleet.core.graph import RoadGraph, grid_graph, load_graph
from adversarial_fleet.core.policy import PolicyKind
from adversarial_fleet.core.sim import Scenario, StabilityThresholds
from adversarial_fleet.utils.errors import ConfigError, DataError
from adversarial_fleet.utils.helpers import pmf_from_document

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = {
    "graph", "demand", "policy", "fleet_size", "adversarial_fraction", "delta", "delay_mode",
    "horizon", "runs", "seed", "symmetric", "workers", "audit_dominance",
    "analysis", "stability", "sweep", "output",
}
ESTIMATE_KEYS = {"e_eta", "e_xi_rho", "e_vrand_rho", "e_rho_delta", "wd"}


def _section(doc: Any, allowed: set[str], where: str) -> dict[str, Any]:
    if doc is None:
        return {}
    if not isinstance(doc, Mapping):
        raise ConfigError(f"{where}: expected a mapping, got {type(doc).__name__}")
    unknown = sorted(set(map(str, doc)) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    return dict(doc)


def _int(value: Any, name: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name}: must be at least {minimum}, got {value}")
    return value


def _float(value: Any, name: str, lo: float | None = None, hi: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    value = float(value)
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        raise ConfigError(f"{name}: must lie in [{lo}, {hi}], got {value}")
    return value


def _enum(enum_type, value: Any, name: str):
    try:
        return enum_type(value)
    except ValueError:
        choices = ", ".join(e.value for e in enum_type)
        raise ConfigError(f"{name}: expected one of {choices}, got {value!r}") from None


@dataclass
class AnalysisOptions:
    metric: GroundMetric = GroundMetric.GRAPH_HOPS
    f_max: float | None = None
    f_values: list[float] = field(default_factory=list)
    estimates: dict[str, float] | None = None


@dataclass
class SweepOptions:
    policies: list[PolicyKind] = field(default_factory=list)
    fractions: list[float] = field(default_factory=list)
    fleet_sizes: list[int | str] = field(default_factory=list)


@dataclass
class OutputOptions:
    dir: Path = Path("out")
    series: str = "series.csv"
    summary: str = "summary.json"
    report: str = "report.json"
    sweep: str = "sweep.csv"
    events: str | None = None

    def path(self, name: str) -> Path:
        return self.dir / name


@dataclass
class ScenarioConfig:
    """Validated scenario document; paths are resolved against `base_dir`."""

    base_dir: Path
    graph: dict[str, Any]
    demand: dict[str, Any]
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
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)
    stability: StabilityThresholds = field(default_factory=StabilityThresholds)
    sweep: SweepOptions = field(default_factory=SweepOptions)
    output: OutputOptions = field(default_factory=OutputOptions)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        path = Path(path)
        try:
            with path.open("r", encoding="utf-8") as fh:
                doc = yaml.safe_load(fh)
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {path}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: invalid YAML ({e})") from e
        return cls.from_document(doc, base_dir=path.parent)

    @classmethod
    def from_document(cls, doc: Any, base_dir: str | Path = ".") -> "ScenarioConfig":
        doc = _section(doc, TOP_LEVEL_KEYS, "config")
        base_dir = Path(base_dir)

        graph = _section(doc.get("graph"), {"path", "grid"}, "graph")
        if len(graph) != 1:
            raise ConfigError("graph: give exactly one of 'path' or 'grid'")
        if "grid" in graph:
            graph["grid"] = _int(graph["grid"], "graph.grid", minimum=2)

        demand = _section(doc.get("demand"), {"trace", "model", "uniform", "eta"}, "demand")
        sources = [k for k in ("trace", "model", "uniform") if demand.get(k)]
        if len(sources) != 1:
            raise ConfigError("demand: give exactly one of 'trace', 'model' or 'uniform: true'")
        if "eta" in demand:
            if sources != ["uniform"]:
                raise ConfigError("demand.eta only applies to 'uniform: true'")
            try:
                demand["eta"] = pmf_from_document(demand["eta"], "demand.eta")
            except DataError as e:
                raise ConfigError(str(e)) from e

        analysis_doc = _section(doc.get("analysis"), {"metric", "f_max", "f_values", "estimates"}, "analysis")
        analysis = AnalysisOptions(
            metric=_enum(GroundMetric, analysis_doc.get("metric", GroundMetric.GRAPH_HOPS.value), "analysis.metric"),
            f_max=(_float(analysis_doc["f_max"], "analysis.f_max", 0.0, 1.0) if "f_max" in analysis_doc else None),
            f_values=[_float(f, "analysis.f_values", 0.0, 1.0) for f in analysis_doc.get("f_values", [])],
        )
        if "estimates" in analysis_doc:
            estimates = _section(analysis_doc["estimates"], ESTIMATE_KEYS, "analysis.estimates")
            missing = sorted(ESTIMATE_KEYS - set(estimates))
            if missing:
                raise ConfigError(f"analysis.estimates: missing {', '.join(missing)}")
            analysis.estimates = {k: _float(v, f"analysis.estimates.{k}", 0.0) for k, v in estimates.items()}

        stability_doc = _section(doc.get("stability"), {"slope", "ratio", "min_length"}, "stability")
        defaults = StabilityThresholds()
        stability = StabilityThresholds(
            slope=_float(stability_doc.get("slope", defaults.slope), "stability.slope"),
            ratio=_float(stability_doc.get("ratio", defaults.ratio), "stability.ratio", 0.0),
            min_length=_int(stability_doc.get("min_length", defaults.min_length), "stability.min_length", 2),
        )

        sweep_doc = _section(doc.get("sweep"), {"policies", "fractions", "fleet_sizes"}, "sweep")
        sizes = []
        for n in sweep_doc.get("fleet_sizes", []):
            sizes.append(n if n in ("coop", "robust") else _int(n, "sweep.fleet_sizes", minimum=1))
        sweep = SweepOptions(
            policies=[_enum(PolicyKind, p, "sweep.policies") for p in sweep_doc.get("policies", [])],
            fractions=[_float(f, "sweep.fractions", 0.0, 1.0) for f in sweep_doc.get("fractions", [])],
            fleet_sizes=sizes,
        )

        output_doc = _section(doc.get("output"), {"dir", "series", "summary", "report", "sweep", "events"}, "output")
        output = OutputOptions(**{k: v for k, v in output_doc.items() if k != "dir"})
        output.dir = base_dir / output_doc.get("dir", "out")

        symmetric = doc.get("symmetric", False)
        audit = doc.get("audit_dominance", False)
        for name, flag in (("symmetric", symmetric), ("audit_dominance", audit)):
            if not isinstance(flag, bool):
                raise ConfigError(f"{name}: expected true or false, got {flag!r}")

        return cls(
            base_dir=base_dir,
            graph=graph,
            demand=demand,
            policy=_enum(PolicyKind, doc.get("policy", PolicyKind.RANDOM_ASSIGNMENT.value), "policy"),
            fleet_size=_int(doc.get("fleet_size", 1), "fleet_size", minimum=1),
            adversarial_fraction=_float(doc.get("adversarial_fraction", 0.0), "adversarial_fraction", 0.0, 1.0),
            delta=_int(doc.get("delta", 0), "delta", minimum=0),
            delay_mode=_enum(DelayMode, doc.get("delay_mode", DelayMode.FIXED_MAXIMUM.value), "delay_mode"),
            horizon=_int(doc.get("horizon", 720), "horizon", minimum=1),
            runs=_int(doc.get("runs", 1), "runs", minimum=1),
            seed=_int(doc.get("seed", 0), "seed", minimum=0),
            symmetric=symmetric,
            workers=_int(doc.get("workers", 1), "workers", minimum=1),
            audit_dominance=audit,
            analysis=analysis,
            stability=stability,
            sweep=sweep,
            output=output,
        )

    @property
    def f_max(self) -> float:
        return self.analysis.f_max if self.analysis.f_max is not None else self.adversarial_fraction

    def resolve_graph(self) -> RoadGraph:
        if "grid" in self.graph:
            return grid_graph(self.graph["grid"])
        return load_graph(self.base_dir / self.graph["path"])

    def resolve_demand(self, g: RoadGraph) -> DemandModel:
        if self.demand.get("trace"):
            return estimate_demand(load_trace(self.base_dir / self.demand["trace"], g), g)
        if self.demand.get("model"):
            model = DemandModel.load(self.base_dir / self.demand["model"])
            model.validate_for(g)
            return model
        return DemandModel.uniform(g, eta=self.demand.get("eta"))

    def scenario(self, g: RoadGraph, m: DemandModel, record_events: bool = False) -> Scenario:
        return Scenario(
            graph=g,
            demand=m,
            policy=self.policy,
            fleet_size=self.fleet_size,
            adversarial_fraction=self.adversarial_fraction,
            delta=self.delta,
            delay_mode=self.delay_mode,
            horizon=self.horizon,
            runs=self.runs,
            seed=self.seed,
            symmetric=self.symmetric,
            workers=self.workers,
            audit_dominance=self.audit_dominance,
            record_events=record_events,
        )

    def to_document(self) -> dict[str, Any]:
        """Fully resolved config, echoed into every output for provenance."""
        demand = dict(self.demand)
        if "eta" in demand:
            demand["eta"] = {str(k): v for k, v in sorted(demand["eta"].items())}
        return {
            "graph": dict(self.graph),
            "demand": demand,
            "policy": self.policy.value,
            "fleet_size": self.fleet_size,
            "adversarial_fraction": self.adversarial_fraction,
            "delta": self.delta,
            "delay_mode": self.delay_mode.value,
            "horizon": self.horizon,
            "runs": self.runs,
            "seed": self.seed,
            "symmetric": self.symmetric,
            "workers": self.workers,
            "audit_dominance": self.audit_dominance,
            "analysis": {
                "metric": self.analysis.metric.value,
                "f_max": self.f_max,
                "f_values": list(self.analysis.f_values),
                "estimates": self.analysis.estimates,
            },
            "stability": {
                "slope": self.stability.slope,
                "ratio": self.stability.ratio,
                "min_length": self.stability.min_length,
            },
            "sweep": {
                "policies": [p.value for p in self.sweep.policies],
                "fractions": list(self.sweep.fractions),
                "fleet_sizes": list(self.sweep.fleet_sizes),
            },
        }
