"""
Exception types raised by the swarm landing library.
"""

from typing import List, Optional


class SwarmSimError(Exception):
    """Base class for all library errors."""


class ScenarioSyntaxError(SwarmSimError, ValueError):
    """Scenario file is not valid JSON."""

    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        self.path = path
        self.line = line
        self.column = column
        location = ""
        if path:
            location = f"{path}:"
        if line is not None:
            location += f"{line}:{column}:"
        super().__init__(f"{location} {message}".strip())


class ScenarioValidationError(SwarmSimError, ValueError):
    """Scenario violates one or more invariants."""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"invalid scenario ({len(self.violations)} violation(s)):\n{lines}")


class GeometryError(SwarmSimError, ValueError):
    """Degenerate geometric input."""


class EstimationError(SwarmSimError, ValueError):
    """Not enough usable observations for an estimate."""


class MetricsError(SwarmSimError, ValueError):
    """A metric was requested over an empty selection."""


class CalibrationError(SwarmSimError):
    """Noise calibration cannot reach the requested target."""
