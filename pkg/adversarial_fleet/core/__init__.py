# Core module initialization
from adversarial_fleet.core.analysis import StabilityReport, compute_report
from adversarial_fleet.core.demand import DemandModel
from adversarial_fleet.core.graph import RoadGraph, grid_graph, load_graph
from adversarial_fleet.core.matching import solve_assignment
from adversarial_fleet.core.sim import Scenario, classify_stability, run_ensemble, run_once

__all__ = [
    'DemandModel',
    'RoadGraph',
    'Scenario',
    'StabilityReport',
    'classify_stability',
    'compute_report',
    'grid_graph',
    'load_graph',
    'run_ensemble',
    'run_once',
    'solve_assignment',
]
