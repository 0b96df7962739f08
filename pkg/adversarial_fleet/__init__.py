# Package initialization
__version__ = "0.1.0"

from adversarial_fleet.core import (
    DemandModel,
    RoadGraph,
    Scenario,
    StabilityReport,
    classify_stability,
    compute_report,
    grid_graph,
    load_graph,
    run_ensemble,
    run_once,
    solve_assignment,
)

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
