"""
Scenario file loading, serialization and sweep expansion.

Scenario files are JSON objects. Every key is optional except those needed to
override a default; unknown keys are rejected. `schema_version` defaults to the
current version when absent and is always written on output.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from .constants import SCHEMA_VERSION
from .core import log_verbose
from .errors import ScenarioSyntaxError, ScenarioValidationError
from .models import Scenario, build_scenario


class ScenarioLoader:
    """Reads and writes scenario documents."""

    def __init__(self, verbose: bool = False):
        self.verbose = verbose

    def _log_verbose(self, message: str):
        if self.verbose:
            log_verbose("Loader", message)

    def load(self, path: Union[str, Path]) -> Scenario:
        path = Path(path)
        self._log_verbose(f"Loading scenario from {path}")
        # OSError (missing file, permissions) propagates to the caller untouched
        text = path.read_text(encoding="utf-8")
        scenario = self.loads(text, source=str(path))
        self._log_verbose(f"Loaded scenario seed={scenario.seed} speed={scenario.rover.speed} "
                          f"hash={scenario.scenario_hash()[:12]}")
        return scenario

    def loads(self, text: str, source: Optional[str] = None) -> Scenario:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScenarioSyntaxError(e.msg, path=source, line=e.lineno, column=e.colno) from e
        if not isinstance(data, dict):
            raise ScenarioValidationError(
                [f"scenario: top-level value must be a JSON object, got {type(data).__name__}"])
        return build_scenario(data)

    def dumps(self, scenario: Scenario) -> str:
        data: Dict[str, Any] = scenario.model_dump(mode="json")
        data["schema_version"] = SCHEMA_VERSION
        return json.dumps(data, indent=2) + "\n"

    def dump(self, scenario: Scenario, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(self.dumps(scenario), encoding="utf-8")
        self._log_verbose(f"Wrote scenario to {path}")
        return path


def parse_scenario(path: Union[str, Path], verbose: bool = False) -> Scenario:
    return ScenarioLoader(verbose=verbose).load(path)


def dump_scenario(scenario: Scenario) -> str:
    return ScenarioLoader().dumps(scenario)


def expand_sweep(scenario: Scenario, speeds: Optional[List[float]] = None) -> List[Scenario]:
    """One scenario per rover speed, in the order given.

    Explicit `speeds` win over the scenario's own sweep block; with neither, the
    scenario is returned as the only element.
    """
    if speeds is None:
        if scenario.sweep is None:
            return [scenario]
        speeds = list(scenario.sweep.speeds)
    return [scenario.with_speed(speed) for speed in speeds]


def parse_speeds(text: str) -> List[float]:
    """Parse a comma-separated speed list such as "0,0.5,1.0,1.5"."""
    speeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            value = float(part)
        except ValueError:
            raise ScenarioValidationError([f"speeds: '{part}' is not a number"]) from None
        if not math.isfinite(value) or value < 0:
            raise ScenarioValidationError([f"speeds: speed must be a finite value >= 0, got {part}"])
        speeds.append(value)
    if not speeds:
        raise ScenarioValidationError(["speeds: at least one speed is required"])
    return speeds
