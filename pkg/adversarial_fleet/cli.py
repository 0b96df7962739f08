"""
Command-line entry point.

Subcommands: estimate | analyze | simulate | sweep | gridgen | solve.
Exit codes: 0 success, 1 config error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from adversarial_fleet import __version__
from adversarial_fleet.config import ScenarioConfig
from adversarial_fleet.core.analysis import (
    GroundMetric,
    StabilityReport,
    compute_report,
    recovery_plan,
    report_from_estimates,
)
from adversarial_fleet.core.demand import estimate_demand, expected_eta, expected_graph_distance, load_trace
from adversarial_fleet.core.graph import grid_document, load_graph
from adversarial_fleet.core.matching import CostMatrix, solve_assignment
from adversarial_fleet.core.sim import classify_stability, run_ensemble, run_sweep, sweep_frame, write_events
from adversarial_fleet.utils.errors import AssignmentError, ConfigError, DataError
from adversarial_fleet.utils.helpers import configure_logging, write_json

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 1, 2


def _load_config(args: argparse.Namespace) -> ScenarioConfig:
    cfg = ScenarioConfig.load(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "runs", None) is not None:
        if args.runs < 1:
            raise ConfigError(f"--runs must be at least 1, got {args.runs}")
        cfg.runs = args.runs
    if getattr(args, "horizon", None) is not None:
        if args.horizon < 1:
            raise ConfigError(f"--horizon must be at least 1, got {args.horizon}")
        cfg.horizon = args.horizon
    if getattr(args, "metric", None) is not None:
        cfg.analysis.metric = GroundMetric(args.metric)
    if getattr(args, "out", None) is not None:
        cfg.output.dir = Path(args.out)
    return cfg


def _report(cfg: ScenarioConfig) -> StabilityReport:
    if cfg.analysis.estimates is not None:
        return report_from_estimates(
            **cfg.analysis.estimates, delta=cfg.delta, f_max=cfg.f_max, metric=cfg.analysis.metric
        )
    g = cfg.resolve_graph()
    return compute_report(cfg.resolve_demand(g), g, cfg.delta, cfg.f_max, cfg.analysis.metric)


def _print_report(report: StabilityReport, f_values: Sequence[float]) -> None:
    rows = [
        ("E[eta]", report.e_eta),
        ("E[d(xi, rho)]", report.e_xi_rho),
        ("E[d(v_rand, rho)]", report.e_vrand_rho),
        ("E[d(rho, delta)]", report.e_rho_delta),
        ("WD(p_delta, p_rho)", report.wd),
        ("D_max", report.d_max),
        ("D_min", report.d_min),
        ("N' (cooperative)", report.n_coop),
        ("F threshold", report.f_threshold),
        (f"N robust (F_max={report.f_max:g})", report.n_robust),
    ]
    print("\n📊 Stability report")
    print("-" * 44)
    for name, value in rows:
        shown = f"{value:.4f}" if isinstance(value, float) else str(value)
        print(f"{name:<30}{shown:>14}")
    for f in f_values:
        plan = recovery_plan(report, f)
        print(
            f"F={f:g}: N {plan.baseline.size} -> {plan.robust.size} "
            f"(adversarial {plan.baseline.adversarial} -> {plan.robust.adversarial}, "
            f"+{plan.added_cooperative} cooperative)"
        )


def cmd_estimate(args: argparse.Namespace) -> int:
    g = load_graph(args.graph)
    model = estimate_demand(load_trace(args.trace, g), g)
    path = model.save(args.out)
    print(f"E[eta]            = {expected_eta(model):.4f}")
    print(f"E[d(xi, rho)]     = {expected_graph_distance(g, model.p_xi, model.p_rho):.4f}")
    print(f"E[d(v_rand, rho)] = {expected_graph_distance(g, model.p_vrand, model.p_rho):.4f}")
    print(f"E[d(rho, delta)]  = {expected_graph_distance(g, model.p_rho, model.p_delta):.4f}")
    print(f"✅ Demand model saved to: {path}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    report = _report(cfg)
    document = {
        "report": report.to_document(),
        "recovery": [
            {
                "f": plan.f,
                "baseline": vars(plan.baseline),
                "robust": vars(plan.robust),
                "added_cooperative": plan.added_cooperative,
            }
            for plan in (recovery_plan(report, f) for f in cfg.analysis.f_values)
        ],
        "config": cfg.to_document(),
    }
    path = write_json(cfg.output.path(cfg.output.report), document)
    _print_report(report, cfg.analysis.f_values)
    print(f"✅ Report written to: {path}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    g = cfg.resolve_graph()
    sc = cfg.scenario(g, cfg.resolve_demand(g), record_events=cfg.output.events is not None)
    series = run_ensemble(sc)
    verdict = classify_stability(series, cfg.stability)
    logger.info("Classification: %s (slope %.4f)", verdict.label, verdict.slope)

    series_path = series.write_csv(cfg.output.path(cfg.output.series))
    summary = {
        "classification": verdict.label,
        "slope": verdict.slope,
        "terminal_mean_outstanding": verdict.terminal_mean,
        "midpoint_mean_outstanding": verdict.midpoint_mean,
        "terminal_std_outstanding": float(series.std_outstanding[-1]),
        "runs": series.terminal,
        "scenario": sc.describe(),
        "config": cfg.to_document(),
    }
    summary_path = write_json(cfg.output.path(cfg.output.summary), summary)
    if cfg.output.events is not None:
        write_events(cfg.output.path(cfg.output.events), series.metrics[0].events)

    print(f"Classification: {verdict.label} (slope {verdict.slope:.4f} requests/step)")
    print(f"✅ Series written to: {series_path}")
    print(f"✅ Summary written to: {summary_path}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    if not (cfg.sweep.policies and cfg.sweep.fractions and cfg.sweep.fleet_sizes):
        raise ConfigError("sweep: policies, fractions and fleet_sizes must all be non-empty")
    g = cfg.resolve_graph()
    m = cfg.resolve_demand(g)
    needs_report = any(isinstance(n, str) for n in cfg.sweep.fleet_sizes)
    report = compute_report(m, g, cfg.delta, cfg.f_max, cfg.analysis.metric) if needs_report else None

    combinations = []
    for policy in cfg.sweep.policies:
        for f in cfg.sweep.fractions:
            for n in cfg.sweep.fleet_sizes:
                if n == "coop":
                    n = report.n_coop
                elif n == "robust":
                    n = report.n_robust_for(f)
                combinations.append((policy, n, f))

    results = run_sweep(cfg.scenario(g, m), combinations)
    if not results:
        raise ConfigError("sweep: no combination has an integer number of adversaries")
    path = cfg.output.path(cfg.output.sweep)
    path.parent.mkdir(parents=True, exist_ok=True)
    sweep_frame(results).to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    verdicts = {label: classify_stability(series, cfg.stability) for label, series in results.items()}
    write_json(
        cfg.output.path(cfg.output.summary),
        {
            "combinations": {
                label: {"classification": v.label, "slope": v.slope, "terminal_mean_outstanding": v.terminal_mean}
                for label, v in verdicts.items()
            },
            "config": cfg.to_document(),
        },
    )
    for label, v in verdicts.items():
        print(f"{label:<28}{v.label:>16}  slope {v.slope:.4f}")
    print(f"✅ Sweep written to: {path}")
    return EXIT_OK


def cmd_gridgen(args: argparse.Namespace) -> int:
    if args.k < 2:
        raise ConfigError(f"grid side must be at least 2, got {args.k}")
    document = grid_document(args.k)
    path = write_json(args.out, document)
    print(f"✅ {args.k}x{args.k} grid ({len(document['nodes'])} nodes, {len(document['edges'])} edges) saved to: {path}")
    return EXIT_OK


def read_cost_matrix(path: str | Path) -> CostMatrix:
    """Headerless delimited matrix; rows are agents, columns requests, both 0-based."""
    try:
        frame = pd.read_csv(path, header=None, sep=r"[,;\s]+", engine="python")
    except FileNotFoundError as e:
        raise DataError(f"cost matrix file not found: {path}") from e
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise DataError(f"{path}: {e}") from e
    cost = frame.to_numpy()
    if not np.issubdtype(cost.dtype, np.number):
        raise DataError(f"{path}: cost matrix has non-numeric entries")
    return CostMatrix(rows=list(range(cost.shape[0])), cols=list(range(cost.shape[1])), cost=cost)


def cmd_solve(args: argparse.Namespace) -> int:
    costs = read_cost_matrix(args.costs)
    try:
        matching = solve_assignment(costs)
    except AssignmentError as e:
        raise DataError(str(e)) from e
    for agent, request in matching.pairs:
        print(f"{agent},{request}")
    print(f"total_cost={matching.total_cost}")
    if args.out is not None:
        write_json(args.out, {"pairs": [list(p) for p in matching.pairs], "total_cost": matching.total_cost})
        print(f"✅ Matching written to: {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adversarial-fleet",
        description="Pickup-and-delivery fleet simulator and stability analysis under bounded-delay adversaries",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="Only warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="Estimate a demand model from a request trace")
    p.add_argument("trace", help="CSV of minute,pickup_node,dropoff_node")
    p.add_argument("graph", help="Graph JSON document")
    p.add_argument("--out", required=True, help="Demand model JSON to write")
    p.set_defaults(func=cmd_estimate)

    for name, func, help_text in (
        ("analyze", cmd_analyze, "Compute fleet-size and adversarial-proportion thresholds"),
        ("simulate", cmd_simulate, "Run a simulation ensemble and classify stability"),
        ("sweep", cmd_sweep, "Run an ensemble per policy x F x N combination"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="Scenario YAML document")
        p.add_argument("--seed", type=int, help="Master seed override")
        p.add_argument("--runs", type=int, help="Number of runs override")
        p.add_argument("--horizon", type=int, help="Horizon override (time steps)")
        p.add_argument("--metric", choices=[m.value for m in GroundMetric], help="Wasserstein ground metric")
        p.add_argument("--out", help="Output directory override")
        p.set_defaults(func=func)

    p = sub.add_parser("gridgen", help="Write a k x k bidirectional grid graph")
    p.add_argument("k", type=int, help="Grid side length (>= 2)")
    p.add_argument("--out", required=True, help="Graph JSON to write")
    p.set_defaults(func=cmd_gridgen)

    p = sub.add_parser("solve", help="Solve a standalone min-cost assignment")
    p.add_argument("costs", help="Delimited integer cost matrix (rows = agents)")
    p.add_argument("--out", help="Optional JSON file for the matching")
    p.set_defaults(func=cmd_solve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(-1 if args.quiet else args.verbose)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"❌ Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as e:
        print(f"❌ Data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
