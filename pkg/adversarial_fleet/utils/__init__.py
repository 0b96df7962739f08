# Utils module initialization
from adversarial_fleet.utils.errors import AssignmentError, ConfigError, DataError, GraphError, UndefinedThresholdError
from adversarial_fleet.utils.helpers import configure_logging, derive_run_seed

__all__ = [
    'AssignmentError',
    'ConfigError',
    'DataError',
    'GraphError',
    'UndefinedThresholdError',
    'configure_logging',
    'derive_run_seed',
]
