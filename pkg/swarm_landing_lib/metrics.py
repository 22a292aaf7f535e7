"""
Evaluation quantities computed from simulation traces.

All errors are measured against ground truth: each drone's slot target is
placed on the true pad pose of the same tick, so the numbers do not depend on
what the leader believed.
"""

import math
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field

from .constants import AGENT_IDS, LEADER_ID, LEFT_ID, RIGHT_ID, SIGMA_BRACKET, SUCCESS_THRESHOLD
from .core import ConfigModel, distance, log_verbose
from .errors import CalibrationError, MetricsError
from .formation import slot_errors, slot_targets
from .mission import Phase
from .models import Scenario
from .sim_engine import SimEngine, SimTrace, TickRecord

Window = Literal["phase", "final"]

LANDING_PHASES = (Phase.DESCEND, Phase.TOUCHDOWN)

ROW_LABELS = {
    LEADER_ID: "Leader drone",
    LEFT_ID: "Drone 2L",
    RIGHT_ID: "Drone 3R",
}


def tick_slot_errors(trace: SimTrace, record: TickRecord) -> Dict[str, float]:
    """Horizontal distance of every drone from its slot on the true pad pose, meters."""
    targets = slot_targets(record.rover.pose, record.rover.pad_height, trace.scenario.formation, 0.0)
    return slot_errors(record.agents, targets)


def slot_error_series(trace: SimTrace, agent_id: str) -> List[float]:
    return [tick_slot_errors(trace, r)[agent_id] for r in trace.ticks]


def window_indices(trace: SimTrace, agent_id: str, window: Window = "phase") -> List[int]:
    """Tick indices that count toward an agent's landing error.

    "phase": Descend and Touchdown ticks while the agent flies, plus its motor-off tick.
    "final": the motor-off tick alone (the last tick if the agent never landed).
    """
    touchdown = trace.touchdown_index(agent_id)
    if window == "final":
        if touchdown is not None:
            return [touchdown]
        return [len(trace.ticks) - 1] if trace.ticks else []
    if window != "phase":
        raise ValueError(f"unknown RMSE window '{window}', expected 'phase' or 'final'")
    indices = []
    for i, record in enumerate(trace.ticks):
        if record.phase not in LANDING_PHASES:
            continue
        if record.agent(agent_id).motors_on or i == touchdown:
            indices.append(i)
    return indices


def rms(values: Sequence[float]) -> float:
    if len(values) == 0:
        raise MetricsError("RMS of an empty selection")
    a = np.asarray(values, dtype=float)
    return float(np.sqrt(np.mean(a * a)))


def landing_rmse(trace: SimTrace, window: Window = "phase") -> Dict[str, float]:
    """Per-drone landing RMSE in centimeters over the selected window."""
    out = {}
    for agent_id in trace.agent_ids:
        indices = window_indices(trace, agent_id, window)
        if not indices:
            raise MetricsError(f"agent '{agent_id}' has no ticks in the '{window}' window "
                               f"(final phase {trace.final_phase.value})")
        errors = [tick_slot_errors(trace, trace.ticks[i])[agent_id] for i in indices]
        out[agent_id] = 100.0 * rms(errors)
    return out


def overall_rmse(per_drone_cm: Dict[str, float]) -> float:
    """RMS across drones of their per-drone RMSEs."""
    return rms(list(per_drone_cm.values()))


def min_pairwise_distance(trace: SimTrace) -> Optional[float]:
    best = math.inf
    for record in trace.ticks:
        agents = record.agents
        for i, a in enumerate(agents):
            for b in agents[i + 1:]:
                best = min(best, distance(a.position, b.position))
    return None if math.isinf(best) else best


def max_tick_displacement(trace: SimTrace) -> float:
    """Largest per-tick move of any drone, starting from the scenario's initial positions."""
    previous = {d.id: d.initial_state().position for d in trace.scenario.drones}
    worst = 0.0
    for record in trace.ticks:
        for a in record.agents:
            worst = max(worst, distance(a.position, previous[a.id]))
            previous[a.id] = a.position
    return worst


class RunReport(ConfigModel):
    seed: int
    scenario_hash: str
    rover_speed: float = Field(ge=0, description="m/s")
    window: Window = "phase"
    rmse_cm: Dict[str, Optional[float]]
    overall_rmse_cm: Optional[float] = None
    final_error_cm: Dict[str, Optional[float]]
    min_pairwise_distance: Optional[float] = Field(None, description="m")
    landed: Dict[str, bool]
    time_to_land: Optional[float] = Field(None, description="s, None unless the whole swarm landed")
    final_phase: str
    aborted: bool = False
    success: bool = False


def run_report(trace: SimTrace, window: Window = "phase") -> RunReport:
    ids = trace.agent_ids
    try:
        rmse: Dict[str, Optional[float]] = dict(landing_rmse(trace, window))
        overall = overall_rmse(rmse)
    except MetricsError:
        rmse = {agent_id: None for agent_id in ids}
        overall = None

    landed = {agent_id: trace.landed(agent_id) for agent_id in ids}
    final_error: Dict[str, Optional[float]] = {}
    for agent_id in ids:
        index = trace.touchdown_index(agent_id)
        final_error[agent_id] = (None if index is None else
                                 100.0 * tick_slot_errors(trace, trace.ticks[index])[agent_id])
    success = (all(landed.values()) and
               all(e is not None and e <= 100.0 * SUCCESS_THRESHOLD for e in final_error.values()))
    return RunReport(
        seed=trace.seed,
        scenario_hash=trace.scenario_hash,
        rover_speed=trace.scenario.rover.speed,
        window=window,
        rmse_cm=rmse,
        overall_rmse_cm=overall,
        final_error_cm=final_error,
        min_pairwise_distance=min_pairwise_distance(trace),
        landed=landed,
        time_to_land=trace.time_to_land(),
        final_phase=trace.final_phase.value,
        aborted=trace.aborted,
        success=success,
    )


class SpeedRow(ConfigModel):
    speed: float
    runs: int
    rmse_cm: Dict[str, Optional[float]]
    overall_rmse_cm: Optional[float] = None
    successes: int = 0
    aborted: int = 0


class BatchSummary(ConfigModel):
    window: Window = "phase"
    agent_ids: Tuple[str, ...] = AGENT_IDS
    rows: Tuple[SpeedRow, ...]


def _mean(values: Iterable[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def summarize_batch(reports: Sequence[RunReport]) -> BatchSummary:
    """Mean per-drone RMSE per rover speed; runs without a landing window are skipped."""
    if not reports:
        raise MetricsError("cannot summarize an empty batch")
    agent_ids = tuple(reports[0].rmse_cm)
    windows = {r.window for r in reports}
    if len(windows) != 1:
        raise MetricsError(f"reports mix RMSE windows {sorted(windows)}")

    by_speed: Dict[float, List[RunReport]] = {}
    for report in reports:
        by_speed.setdefault(report.rover_speed, []).append(report)

    rows = []
    for speed in sorted(by_speed):
        group = by_speed[speed]
        rows.append(SpeedRow(
            speed=speed,
            runs=len(group),
            rmse_cm={agent_id: _mean(r.rmse_cm.get(agent_id) for r in group) for agent_id in agent_ids},
            overall_rmse_cm=_mean(r.overall_rmse_cm for r in group),
            successes=sum(1 for r in group if r.success),
            aborted=sum(1 for r in group if r.aborted),
        ))
    return BatchSummary(window=windows.pop(), agent_ids=agent_ids, rows=tuple(rows))


def _cell(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.2f}"


def format_table(summary: BatchSummary) -> str:
    """Plain-text table: one column per rover speed, one row per drone."""
    header = ["Rover speed, m/s"] + [f"{row.speed:g}" for row in summary.rows]
    lines = [header]
    for agent_id in summary.agent_ids:
        label = f"{ROW_LABELS.get(agent_id, agent_id)} RMSE, cm"
        lines.append([label] + [_cell(row.rmse_cm.get(agent_id)) for row in summary.rows])
    lines.append(["Overall RMSE, cm"] + [_cell(row.overall_rmse_cm) for row in summary.rows])
    lines.append(["Successful landings"] + [f"{row.successes}/{row.runs}" for row in summary.rows])

    first = max(len(line[0]) for line in lines)
    widths = [max(len(line[i]) for line in lines) for i in range(1, len(header))]
    out = [f"RMSE window: {summary.window}"]
    for line in lines:
        cells = [line[0].ljust(first)] + [c.rjust(w) for c, w in zip(line[1:], widths)]
        out.append("  ".join(cells).rstrip())
    return "\n".join(out) + "\n"


def batch_overall_rmse(traces: Sequence[SimTrace], window: Window = "phase") -> float:
    """Mean overall RMSE (cm) of a batch; a run without a landing window counts as infinite."""
    values = []
    for trace in traces:
        report = run_report(trace, window)
        values.append(math.inf if report.overall_rmse_cm is None else report.overall_rmse_cm)
    return float(np.mean(values))


def calibrate_noise(target_static_rmse: float, scenario: Scenario, runs: int = 10,
                    seed_base: Optional[int] = None, tolerance: float = 0.10,
                    max_iterations: int = 30, threads: int = 0,
                    bracket: Tuple[float, float] = SIGMA_BRACKET,
                    engine: Optional[SimEngine] = None,
                    verbose: bool = False) -> float:
    """Bisect sigma_pos until the static batch-mean overall RMSE is within `tolerance` of the target.

    The same seeds are used for every candidate sigma, so the search is deterministic.
    """
    if target_static_rmse < 0 or not math.isfinite(target_static_rmse):
        raise CalibrationError(f"target RMSE must be a finite value >= 0, got {target_static_rmse}")
    if target_static_rmse == 0:
        return 0.0

    engine = engine or SimEngine()
    static = scenario.with_speed(0.0)
    seed_base = static.seed if seed_base is None else seed_base

    def log(message: str):
        if verbose:
            log_verbose("Calibrate", message)

    def measure(sigma: float) -> float:
        traces = engine.run_batch(static.with_noise(sigma), runs, seed_base, threads)
        value = batch_overall_rmse(traces)
        log(f"sigma_pos={sigma:.6f} -> overall RMSE {value:.3f} cm")
        return value

    low, high = bracket
    band = tolerance * target_static_rmse
    at_low = measure(low)
    if abs(at_low - target_static_rmse) <= band:
        return low
    if at_low > target_static_rmse:
        raise CalibrationError(f"target {target_static_rmse} cm is below the RMSE floor "
                               f"{at_low:.3f} cm at sigma_pos={low}")
    at_high = measure(high)
    if abs(at_high - target_static_rmse) <= band:
        return high
    if at_high < target_static_rmse:
        raise CalibrationError(f"target {target_static_rmse} cm is unreachable: RMSE at "
                               f"sigma_pos={high} is only {at_high:.3f} cm")

    for _ in range(max_iterations):
        mid = 0.5 * (low + high)
        value = measure(mid)
        if abs(value - target_static_rmse) <= band:
            log(f"calibrated sigma_pos={mid:.6f}")
            return mid
        if value < target_static_rmse:
            low = mid
        else:
            high = mid
    raise CalibrationError(f"no sigma_pos in {bracket} reached {target_static_rmse} cm "
                           f"within {tolerance:.0%} after {max_iterations} iterations")
