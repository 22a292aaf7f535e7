"""
Discrete-time motion models: velocity-setpoint drone and differential-drive rover.
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

from pydantic import Field

from .constants import FOLLOWER_MASS
from .core import AgentState, ConfigModel, Pose2D, RoverState, Vec3


class DroneParams(ConfigModel):
    v_max_xy: float = Field(2.0, gt=0, description="horizontal speed limit, m/s")
    v_max_z: float = Field(1.0, gt=0, description="vertical speed limit, m/s")
    response_tau: float = Field(0.15, gt=0, description="first-order velocity tracking constant, s")
    collision_radius: float = Field(0.08, gt=0, description="m")
    mass: float = Field(FOLLOWER_MASS, gt=0, description="kg, bookkeeping only")


@dataclass(frozen=True)
class RoverCommand:
    linear: float = 0.0
    angular: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.linear) and math.isfinite(self.angular)):
            raise ValueError(f"non-finite rover command ({self.linear}, {self.angular})")


@dataclass(frozen=True)
class CommandSchedule:
    """Piecewise-constant rover commands: segment i holds from its start time to the next."""
    segments: Tuple[Tuple[float, RoverCommand], ...]
    duration: float
    heading: float = 0.0

    def command_at(self, t: float) -> RoverCommand:
        if t >= self.duration:
            return RoverCommand()
        current = RoverCommand()
        for start, command in self.segments:
            if t + 1e-12 < start:
                break
            current = command
        return current


def clamp_velocity(v: Vec3, params: DroneParams) -> Vec3:
    """Horizontal and vertical limits applied separately."""
    horizontal = math.hypot(v.x, v.y)
    x, y = v.x, v.y
    if horizontal > params.v_max_xy:
        k = params.v_max_xy / horizontal
        x, y = x * k, y * k
    z = max(-params.v_max_z, min(params.v_max_z, v.z))
    return Vec3(x, y, z)


def drone_step(state: AgentState, setpoint: Vec3, params: DroneParams, dt: float) -> AgentState:
    """Velocity relaxes toward the clamped setpoint, position integrates the new velocity."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not state.motors_on:
        return state
    target = clamp_velocity(setpoint, params)
    decay = math.exp(-dt / params.response_tau)
    velocity = target + (state.velocity - target).scale(decay)
    # clamp absorbs rounding
    velocity = clamp_velocity(velocity, params)
    return state.with_motion(state.position + velocity.scale(dt), velocity)


def _sinc(h: float) -> float:
    return 1.0 if h == 0.0 else math.sin(h) / h


def rover_step(state: RoverState, cmd: RoverCommand, dt: float) -> RoverState:
    """Exact unicycle arc integration, straight line as the zero-rate limit."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    theta = state.pose.theta
    half = 0.5 * cmd.angular * dt
    # chord form of the arc: stable as the turn rate goes to zero
    chord = cmd.linear * dt * _sinc(half)
    pose = Pose2D(state.pose.x + chord * math.cos(theta + half),
                  state.pose.y + chord * math.sin(theta + half),
                  theta + cmd.angular * dt)
    return RoverState(pose=pose, linear_speed=cmd.linear, angular_speed=cmd.angular,
                      pad_height=state.pad_height)


def straight_line_mission(speed: float, heading: float = 0.0, duration: float = 30.0) -> CommandSchedule:
    """Constant (speed, 0) commands along `heading` (the rover starts facing it)."""
    if speed < 0:
        raise ValueError(f"speed must be >= 0, got {speed}")
    return CommandSchedule(segments=((0.0, RoverCommand(speed, 0.0)),), duration=duration, heading=heading)


def arc_mission(speed: float, yaw_rate: float, duration: float = 30.0,
                heading: float = 0.0) -> CommandSchedule:
    if speed < 0:
        raise ValueError(f"speed must be >= 0, got {speed}")
    return CommandSchedule(segments=((0.0, RoverCommand(speed, yaw_rate)),), duration=duration,
                           heading=heading)


def carried_state(agent: AgentState, local: Vec3, rover: RoverState, dt: float) -> AgentState:
    """A landed agent rides the pad: pose from the pad frame, velocity from the displacement."""
    position = rover.pose.transform(local)
    velocity = (position - agent.position).scale(1.0 / dt)
    return agent.with_motion(position, velocity)


def tag_world_pose(rover: RoverState, tag_offset: Vec3) -> Tuple[Pose2D, float]:
    """World pose and height of the tag mounted at `tag_offset` (pad frame)."""
    center = rover.pose.transform(tag_offset)
    return Pose2D(center.x, center.y, rover.pose.theta), rover.pad_height + tag_offset.z


def schedule_positions(start: RoverState, schedule: CommandSchedule, dt: float) -> List[RoverState]:
    """Roll the rover forward over the whole schedule (used for plots and checks)."""
    states = []
    state = start
    steps = int(round(schedule.duration / dt))
    for k in range(steps):
        state = rover_step(state, schedule.command_at(k * dt), dt)
        states.append(state)
    return states
