"""
Fixed-timestep simulation of one landing attempt.

Per tick, in this order: rover step, camera frame (when due), mission update,
APF setpoints for every flying drone, drone dynamics. The only randomness is a
single numpy Generator seeded from the run seed, consumed by the camera model.
"""

import math
import os
import time
from collections import deque
from dataclasses import dataclass, replace
from multiprocessing import Pool
from typing import Any, Deque, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from .apf_planner import obstacles_from_agents, plan_step
from .constants import ENV_THREADS, TOUCHDOWN_GRACE
from .core import ZERO, AgentState, RoverState, Vec3, log_verbose
from .errors import ScenarioValidationError
from .mission import MissionPhase, MissionUpdate, PadTracker, Phase, update
from .models import Scenario, build_scenario
from .vehicles import carried_state, drone_step, rover_step, tag_world_pose
from .vision_model import TagObservation, detect_tag

EVENT_PHASE = "phase"
EVENT_TOUCHDOWN = "touchdown"
EVENT_ABORTED = "aborted"


@dataclass(frozen=True)
class TickRecord:
    t: float
    agents: Tuple[AgentState, ...]
    rover: RoverState
    phase: Phase
    observation: Optional[TagObservation] = None

    def agent(self, agent_id: str) -> AgentState:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)


@dataclass(frozen=True)
class SimEvent:
    t: float
    kind: str
    detail: str
    agent_id: Optional[str] = None


@dataclass(frozen=True)
class SimTrace:
    scenario: Scenario
    seed: int
    scenario_hash: str
    ticks: Tuple[TickRecord, ...]
    events: Tuple[SimEvent, ...] = ()

    @property
    def agent_ids(self) -> Tuple[str, ...]:
        return tuple(d.id for d in self.scenario.drones)

    @property
    def final_phase(self) -> Phase:
        return self.ticks[-1].phase if self.ticks else Phase.SEARCH

    @property
    def aborted(self) -> bool:
        return self.final_phase is Phase.ABORTED

    def touchdown_index(self, agent_id: str) -> Optional[int]:
        """Index of the tick on which the agent's motors went off, if they did."""
        for i, record in enumerate(self.ticks):
            if not record.agent(agent_id).motors_on:
                return i
        return None

    def landed(self, agent_id: str) -> bool:
        return self.touchdown_index(agent_id) is not None

    def time_to_land(self) -> Optional[float]:
        for event in self.events:
            if event.kind == EVENT_PHASE and event.detail.endswith(Phase.TOUCHDOWN.value):
                return event.t
        return None


def validate_scenario(scenario: Union[Scenario, Mapping[str, Any]]) -> Scenario:
    """Return a valid Scenario or raise ScenarioValidationError listing every violation."""
    if not isinstance(scenario, Scenario):
        return build_scenario(dict(scenario))
    violations = scenario.violations()
    if violations:
        raise ScenarioValidationError(violations)
    return scenario


def tick_count(duration: float, dt: float) -> int:
    return int(math.floor(duration / dt + 1e-9))


class SimEngine:
    """Runs scenarios; one instance can be reused, runs share no state."""

    def __init__(self, verbose: bool = False):
        self.verbose = verbose

    def _log_verbose(self, message: str):
        if self.verbose:
            log_verbose("Engine", message)

    def _log_batch(self, message: str):
        if self.verbose:
            log_verbose("Batch", message)

    def run(self, scenario: Scenario, seed: Optional[int] = None) -> SimTrace:
        scenario = validate_scenario(scenario)
        seed = scenario.seed if seed is None else seed
        if seed != scenario.seed:
            scenario = scenario.with_seed(seed)
        started = time.perf_counter()
        self._log_verbose(f"Run seed={seed} speed={scenario.rover.speed} "
                          f"sigma_pos={scenario.noise.sigma_pos} dt={scenario.dt}")

        rng = np.random.default_rng(seed)
        dt = scenario.dt
        cam = scenario.camera
        platform = scenario.platform
        tag_offset = platform.tag_offset_vec
        schedule = scenario.rover.schedule(scenario.duration)
        params = {d.id: d.params for d in scenario.drones}
        leader_id = scenario.leader_id

        rover = scenario.rover.initial_state(platform)
        agents: List[AgentState] = [d.initial_state() for d in scenario.drones]
        tracker = PadTracker(scenario.mission, cam.mount, tag_offset, platform.tag_size,
                             verbose=self.verbose)
        phase = MissionPhase(Phase.SEARCH, 0.0)
        pad_frame: Dict[str, Vec3] = {}
        pending: Deque[Tuple[AgentState, TagObservation]] = deque()
        last_frame: Optional[int] = None
        stop_at: Optional[float] = None

        ticks: List[TickRecord] = []
        events: List[SimEvent] = []
        for k in range(tick_count(scenario.duration, dt)):
            t = (k + 1) * dt

            # 1. platform
            rover = rover_step(rover, schedule.command_at(k * dt), dt)
            agents = [carried_state(a, pad_frame[a.id], rover, dt) if a.id in pad_frame else a
                      for a in agents]

            # 2. leader camera
            observation = None
            frame = int(math.floor(t * cam.rate + 1e-9))
            if frame != last_frame:
                last_frame = frame
                leader = next(a for a in agents if a.id == leader_id)
                tag_pose, tag_height = tag_world_pose(rover, tag_offset)
                observation = detect_tag(leader, tag_pose, tag_height, cam, scenario.noise, rng,
                                         now=t, platform_speed=rover.linear_speed)
                if observation is not None:
                    pending.append((leader, observation))
            while pending and pending[0][1].timestamp + cam.latency <= t + 1e-12:
                captured_by, obs = pending.popleft()
                tracker.ingest(captured_by, obs)

            # 3. mission
            result = update(phase, agents, tracker.estimate(t), scenario.mission, t, scenario.formation)
            if result.shutdown:
                agents = self._shut_down(agents, result.shutdown, rover, pad_frame)
                for agent_id in result.shutdown:
                    events.append(SimEvent(t, EVENT_TOUCHDOWN, "motors off", agent_id))
                    self._log_verbose(f"t={t:.3f} touchdown {agent_id}")
            if result.phase.phase is not phase.phase:
                kind = EVENT_ABORTED if result.phase.phase is Phase.ABORTED else EVENT_PHASE
                detail = f"{phase.phase.value}->{result.phase.phase.value}"
                events.append(SimEvent(t, kind, detail))
                self._log_verbose(f"t={t:.3f} {detail}")
            phase = result.phase

            # 4. setpoints from one snapshot, 5. dynamics
            agents = self._advance(agents, result, scenario, params, dt)

            ticks.append(TickRecord(t, tuple(agents), rover, phase.phase, observation))

            if phase.phase is Phase.ABORTED:
                break
            if phase.phase is Phase.TOUCHDOWN and stop_at is None:
                stop_at = t + TOUCHDOWN_GRACE
            if stop_at is not None and t >= stop_at - 1e-9:
                break

        self._log_verbose(f"Run seed={seed} finished in phase {phase.phase.value} after "
                          f"{len(ticks)} ticks ({time.perf_counter() - started:.2f}s wall)")
        return SimTrace(scenario=scenario, seed=seed, scenario_hash=scenario.scenario_hash(),
                        ticks=tuple(ticks), events=tuple(events))

    @staticmethod
    def _shut_down(agents: List[AgentState], ids: Tuple[str, ...], rover: RoverState,
                   pad_frame: Dict[str, Vec3]) -> List[AgentState]:
        out = []
        for a in agents:
            if a.id in ids:
                # freeze where it is, then ride the pad
                pad_frame[a.id] = rover.pose.inverse_transform(a.position)
                a = replace(a, motors_on=False)
            out.append(a)
        return out

    @staticmethod
    def _advance(agents: List[AgentState], result: MissionUpdate, scenario: Scenario,
                 params: Mapping[str, Any], dt: float) -> List[AgentState]:
        out = []
        for a in agents:
            if not a.motors_on:
                out.append(a)
                continue
            goal = result.goals.get(a.id)
            if goal is None:
                setpoint = ZERO
            else:
                obstacles = obstacles_from_agents(agents, a.id)
                setpoint = plan_step(a, goal, obstacles, scenario.apf, result.feedforward)
            out.append(drone_step(a, setpoint, params[a.id], dt))
        return out

    def run_batch(self, scenario: Scenario, n_runs: int, seed_base: Optional[int] = None,
                  threads: int = 0) -> List[SimTrace]:
        """Run i uses seed seed_base + i; results come back in run order."""
        if n_runs < 1:
            raise ValueError(f"n_runs must be >= 1, got {n_runs}")
        scenario = validate_scenario(scenario)
        seed_base = scenario.seed if seed_base is None else seed_base
        seeds = [seed_base + i for i in range(n_runs)]
        workers = min(max(threads, 0), n_runs, os.cpu_count() or 1)
        self._log_batch(f"{n_runs} run(s), seeds {seeds[0]}..{seeds[-1]}, workers={workers or 'serial'}")

        if workers <= 1:
            return [self.run(scenario, seed) for seed in seeds]
        with Pool(processes=workers) as pool:
            return pool.starmap(_run_one, [(scenario, seed, self.verbose) for seed in seeds])


def _run_one(scenario: Scenario, seed: int, verbose: bool) -> SimTrace:
    return SimEngine(verbose=verbose).run(scenario, seed)


def run(scenario: Scenario) -> SimTrace:
    return SimEngine().run(scenario)


def run_batch(scenario: Scenario, n_runs: int, seed_base: Optional[int] = None,
              threads: int = 0) -> List[SimTrace]:
    return SimEngine().run_batch(scenario, n_runs, seed_base, threads)


def threads_from_env(default: int = 0) -> int:
    """Batch parallelism from SWARMSIM_THREADS (0 = serial); bad values fall back to `default`."""
    raw = os.getenv(ENV_THREADS, "")
    try:
        return max(int(raw), 0) if raw.strip() else default
    except ValueError:
        return default
