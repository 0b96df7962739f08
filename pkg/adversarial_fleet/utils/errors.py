"""
Exception types raised across the package.

Everything derives from ValueError so callers that only care about
"bad input" can keep catching that.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid scenario or analysis configuration."""


class UndefinedThresholdError(ConfigError):
    """The instability threshold is undefined (zero delay or zero demand)."""


class DataError(ValueError):
    """Invalid input data: traces, pmfs, graph documents, cost files."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GraphError(DataError):
    """Road graph document failed validation, or a query named an unknown node."""


class AssignmentError(ValueError):
    """Dispatch contract violated (busy agent, reassigned request, bad cost matrix)."""
