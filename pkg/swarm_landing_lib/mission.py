"""
Swarm landing state machine and leader-side pad tracking.

The leader is the only agent with a camera. Its observations are composed with
its mocap pose into world-frame pad estimates; followers only ever see goals
derived from those estimates.

Phases advance Search -> Follow -> Descend -> Touchdown. Descend may fall back to
Follow when the formation error grows past `regression_threshold`, Follow and
Descend fall back to Search when the estimate is lost, and any live phase can
abort. Touchdown and Aborted are absorbing.
"""

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Deque, Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import Field, model_validator

from .constants import TAG_SIZE
from .core import ZERO, AgentState, ConfigModel, Pose2D, Vec3, log_verbose, normalize_angle
from .errors import EstimationError
from .formation import FormationSpec, formation_error, slot_errors, slot_targets
from .vision_model import TagObservation, finite_difference_velocity, frame_motion


class Phase(str, Enum):
    SEARCH = "Search"
    FOLLOW = "Follow"
    DESCEND = "Descend"
    TOUCHDOWN = "Touchdown"
    ABORTED = "Aborted"


ALLOWED_TRANSITIONS: Dict[Phase, frozenset] = {
    Phase.SEARCH: frozenset({Phase.FOLLOW, Phase.ABORTED}),
    Phase.FOLLOW: frozenset({Phase.DESCEND, Phase.SEARCH, Phase.ABORTED}),
    Phase.DESCEND: frozenset({Phase.TOUCHDOWN, Phase.FOLLOW, Phase.SEARCH, Phase.ABORTED}),
    Phase.TOUCHDOWN: frozenset(),
    Phase.ABORTED: frozenset(),
}


def can_transition(source: Phase, target: Phase) -> bool:
    return target in ALLOWED_TRANSITIONS[source]


@dataclass(frozen=True)
class MissionPhase:
    phase: Phase = Phase.SEARCH
    entered_at: float = 0.0

    @property
    def terminal(self) -> bool:
        return not ALLOWED_TRANSITIONS[self.phase]

    def advance(self, target: Phase, now: float) -> "MissionPhase":
        if not can_transition(self.phase, target):
            raise ValueError(f"illegal phase transition {self.phase.value} -> {target.value}")
        return MissionPhase(target, now)


class MissionParams(ConfigModel):
    follow_altitude: float = Field(1.0, gt=0, description="m above the pad surface")
    landing_threshold: float = Field(0.10, gt=0, description="max formation error to start descending, m")
    touchdown_tolerance: float = Field(0.03, gt=0, description="m above the pad surface")
    descent_rate: float = Field(0.4, gt=0, description="m/s")
    search_timeout: float = Field(10.0, gt=0, description="s in Search before aborting")
    regression_threshold: float = Field(0.35, gt=0, description="formation error that sends Descend back to Follow, m")
    search_altitude: float = Field(1.70, gt=0, description="hold altitude while searching, m (world)")
    hold_time: float = Field(0.5, gt=0, description="how long an estimate is extrapolated without frames, s")
    velocity_window: int = Field(15, ge=2, description="frames used for the pad velocity estimate")

    @model_validator(mode="after")
    def _check_hysteresis(self) -> "MissionParams":
        if self.regression_threshold <= self.landing_threshold:
            raise ValueError("mission: regression_threshold must be > landing_threshold")
        return self


@dataclass(frozen=True)
class PadEstimate:
    pose: Pose2D
    height: float
    velocity: Vec3 = ZERO
    timestamp: float = 0.0
    yaw_rate: float = 0.0


@dataclass(frozen=True)
class MissionUpdate:
    phase: MissionPhase
    goals: Dict[str, Vec3]
    shutdown: Tuple[str, ...] = ()
    feedforward: Vec3 = ZERO


def estimate_pad_pose(leader: AgentState, obs: TagObservation, camera_mount: Vec3 = ZERO,
                      tag_offset: Vec3 = ZERO) -> Tuple[Pose2D, float]:
    """World pad pose and surface height from one observation and the leader's mocap pose."""
    camera = leader.position + camera_mount.rotate_z(obs.camera_yaw)
    tag = camera + obs.relative_position.rotate_z(obs.camera_yaw)
    theta = normalize_angle(obs.tag_yaw + obs.camera_yaw)
    lever = Vec3(tag_offset.x, tag_offset.y).rotate_z(theta)
    return Pose2D(tag.x - lever.x, tag.y - lever.y, theta), tag.z - tag_offset.z


class PadTracker:
    """Hold-and-extrapolate pad estimator fed by the leader's camera frames."""

    def __init__(self, params: MissionParams, camera_mount: Vec3 = ZERO, tag_offset: Vec3 = ZERO,
                 tag_size: float = TAG_SIZE, verbose: bool = False):
        self.params = params
        self.camera_mount = camera_mount
        self.tag_offset = tag_offset
        self.tag_size = tag_size
        self.verbose = verbose
        self._times: Deque[float] = deque(maxlen=params.velocity_window)
        self._centers: Deque[Vec3] = deque(maxlen=params.velocity_window)
        self._yaw_rates: Deque[float] = deque(maxlen=params.velocity_window - 1)
        self._last_pose: Optional[Pose2D] = None
        self._last_obs: Optional[TagObservation] = None
        self._height_sum = 0.0
        self._height_count = 0

    def _log_verbose(self, message: str):
        if self.verbose:
            log_verbose("Mission", message)

    @property
    def frames(self) -> int:
        return self._height_count

    def reset(self):
        self._times.clear()
        self._centers.clear()
        self._yaw_rates.clear()
        self._last_pose = None
        self._last_obs = None

    def ingest(self, leader: AgentState, obs: TagObservation):
        if self._times and obs.timestamp <= self._times[-1]:
            raise EstimationError(f"observation at t={obs.timestamp} is not newer than t={self._times[-1]}")
        if self._times and obs.timestamp - self._times[-1] > self.params.hold_time:
            self._log_verbose(f"Reacquired tag at t={obs.timestamp:.3f}, restarting velocity window")
            self.reset()

        pose, height = estimate_pad_pose(leader, obs, self.camera_mount, self.tag_offset)
        if self._last_obs is not None:
            motion = frame_motion(self._last_obs, obs, self.tag_size)
            turn = normalize_angle(motion.rotation + obs.camera_yaw - self._last_obs.camera_yaw)
            self._yaw_rates.append(turn / (obs.timestamp - self._last_obs.timestamp))

        self._times.append(obs.timestamp)
        self._centers.append(Vec3(pose.x, pose.y, height))
        self._last_pose = pose
        self._last_obs = obs
        # rigid platform: every frame contributes to the height
        self._height_sum += height
        self._height_count += 1

    def estimate(self, now: float) -> Optional[PadEstimate]:
        """Pad estimate extrapolated to `now`, or None once the hold window has elapsed."""
        if self._last_pose is None:
            return None
        last_t = self._times[-1]
        age = now - last_t
        if age > self.params.hold_time:
            return None
        if len(self._times) >= 2:
            v = finite_difference_velocity(list(self._times), list(self._centers))
            velocity = Vec3(v.x, v.y, 0.0)
        else:
            velocity = ZERO
        yaw_rate = sum(self._yaw_rates) / len(self._yaw_rates) if self._yaw_rates else 0.0
        age = max(age, 0.0)
        pose = Pose2D(self._last_pose.x + velocity.x * age,
                      self._last_pose.y + velocity.y * age,
                      self._last_pose.theta + yaw_rate * age)
        return PadEstimate(pose=pose, height=self._height_sum / self._height_count,
                           velocity=velocity, timestamp=last_t, yaw_rate=yaw_rate)


def _hold_goals(agents: Iterable[AgentState], altitude: float) -> Dict[str, Vec3]:
    return {a.id: Vec3(a.position.x, a.position.y, altitude) for a in agents}


def _descent_altitude(phase: MissionPhase, params: MissionParams, now: float) -> float:
    """Altitude above the pad of the descent reference, floored at the surface."""
    return max(0.0, params.follow_altitude - params.descent_rate * (now - phase.entered_at))


def _follow(phase: MissionPhase, flying: List[AgentState], estimate: PadEstimate,
            formation: FormationSpec, params: MissionParams, now: float) -> MissionUpdate:
    targets = slot_targets(estimate.pose, estimate.height, formation, params.follow_altitude)
    if formation_error(flying, targets) <= params.landing_threshold:
        phase = phase.advance(Phase.DESCEND, now)
        targets = slot_targets(estimate.pose, estimate.height, formation,
                               _descent_altitude(phase, params, now))
        feedforward = estimate.velocity + Vec3(0.0, 0.0, -params.descent_rate)
    else:
        feedforward = estimate.velocity
    return MissionUpdate(phase, {a.id: targets[a.id] for a in flying}, (), feedforward)


def _descend(phase: MissionPhase, flying: List[AgentState], estimate: PadEstimate,
             formation: FormationSpec, params: MissionParams, now: float) -> MissionUpdate:
    altitude = _descent_altitude(phase, params, now)
    targets = slot_targets(estimate.pose, estimate.height, formation, altitude)
    if formation_error(flying, targets) > params.regression_threshold:
        phase = phase.advance(Phase.FOLLOW, now)
        targets = slot_targets(estimate.pose, estimate.height, formation, params.follow_altitude)
        return MissionUpdate(phase, {a.id: targets[a.id] for a in flying}, (), estimate.velocity)

    errors = slot_errors(flying, targets)
    surface = estimate.height + params.touchdown_tolerance
    shutdown = tuple(a.id for a in flying
                     if a.position.z <= surface and errors[a.id] <= params.landing_threshold)
    if shutdown and len(shutdown) == len(flying):
        phase = phase.advance(Phase.TOUCHDOWN, now)
    vertical = -params.descent_rate if altitude > 0.0 else 0.0
    goals = {a.id: targets[a.id] for a in flying if a.id not in shutdown}
    return MissionUpdate(phase, goals, shutdown, estimate.velocity + Vec3(0.0, 0.0, vertical))


def update(phase: MissionPhase, swarm: Sequence[AgentState], pad_estimate: Optional[PadEstimate],
           params: MissionParams, now: float,
           formation: Optional[FormationSpec] = None) -> MissionUpdate:
    """Advance the mission by one control tick.

    Goals are issued only to agents whose motors are on. In Follow and Descend
    they are exactly the formation slot targets at the current pad estimate.
    """
    formation = formation or FormationSpec()
    flying = [a for a in swarm if a.motors_on]

    if phase.terminal:
        return MissionUpdate(phase, {})
    if not flying:
        return MissionUpdate(phase, {})

    if pad_estimate is None:
        if phase.phase is Phase.SEARCH:
            if now - phase.entered_at >= params.search_timeout:
                return MissionUpdate(phase.advance(Phase.ABORTED, now),
                                     _hold_goals(flying, params.search_altitude))
            return MissionUpdate(phase, _hold_goals(flying, params.search_altitude))
        return MissionUpdate(phase.advance(Phase.SEARCH, now),
                             _hold_goals(flying, params.search_altitude))

    if phase.phase is Phase.SEARCH:
        phase = phase.advance(Phase.FOLLOW, now)
        targets = slot_targets(pad_estimate.pose, pad_estimate.height, formation,
                               params.follow_altitude)
        return MissionUpdate(phase, {a.id: targets[a.id] for a in flying}, (), pad_estimate.velocity)
    if phase.phase is Phase.FOLLOW:
        return _follow(phase, flying, pad_estimate, formation, params, now)
    return _descend(phase, flying, pad_estimate, formation, params, now)


def phase_sequence(phases: Iterable[Phase]) -> List[Phase]:
    """Collapse a per-tick phase series into its sequence of distinct phases."""
    sequence: List[Phase] = []
    for p in phases:
        if not sequence or sequence[-1] is not p:
            sequence.append(p)
    return sequence


def respects_transition_graph(phases: Iterable[Phase]) -> bool:
    sequence = phase_sequence(phases)
    return all(can_transition(a, b) for a, b in zip(sequence, sequence[1:]))
