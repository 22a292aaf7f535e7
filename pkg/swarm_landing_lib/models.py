"""
Scenario models: everything one simulation run is a pure function of.
"""

import hashlib
import json
import math
from typing import Any, Dict, List, Optional, Tuple

from pydantic import Field, ValidationError, model_validator

from .apf_planner import APFParams
from .constants import (AGENT_IDS, LEADER_MASS, PAD_CAPACITY, PAD_HEIGHT,
                        ROVER_BODY_RADIUS, SCHEMA_VERSION, TAG_OFFSET, TAG_SIZE)
from .core import AgentState, ConfigModel, Pose2D, RoverState, Vec3
from .errors import ScenarioValidationError
from .formation import FormationSpec
from .mission import MissionParams
from .vehicles import CommandSchedule, DroneParams, arc_mission, straight_line_mission
from .vision_model import CameraModel, NoiseModel


class PlatformParams(ConfigModel):
    pad_height: float = Field(PAD_HEIGHT, gt=0, description="pad surface above the floor, m")
    body_radius: float = Field(ROVER_BODY_RADIUS, gt=0, description="m")
    tag_size: float = Field(TAG_SIZE, gt=0, description="tag side, m")
    tag_offset: Tuple[float, float, float] = Field(TAG_OFFSET, description="tag centre in the pad frame, m")
    capacity: int = Field(PAD_CAPACITY, ge=1, description="drones the pad can carry")

    @property
    def tag_offset_vec(self) -> Vec3:
        return Vec3.from_seq(self.tag_offset)


class RoverMission(ConfigModel):
    speed: float = Field(0.0, ge=0, description="commanded linear speed, m/s")
    heading: float = Field(0.0, description="initial heading, rad")
    yaw_rate: float = Field(0.0, description="commanded turn rate, rad/s (0 = straight line)")
    start: Tuple[float, float] = (0.0, 0.0)

    def schedule(self, duration: float) -> CommandSchedule:
        if self.yaw_rate == 0.0:
            return straight_line_mission(self.speed, self.heading, duration)
        return arc_mission(self.speed, self.yaw_rate, duration, self.heading)

    def initial_state(self, platform: PlatformParams) -> RoverState:
        return RoverState(pose=Pose2D(self.start[0], self.start[1], self.heading),
                          pad_height=platform.pad_height)


class DroneSpec(ConfigModel):
    id: str = Field(min_length=1)
    position: Tuple[float, float, float]
    params: DroneParams = Field(default_factory=DroneParams)

    def initial_state(self) -> AgentState:
        return AgentState(id=self.id, position=Vec3.from_seq(self.position))


def default_drones() -> Tuple[DroneSpec, ...]:
    """Delta swarm parked behind the platform at hold altitude, leader in the middle."""
    leader, left, right = AGENT_IDS
    return (
        DroneSpec(id=leader, position=(-1.5, 0.0, 1.7), params=DroneParams(mass=LEADER_MASS)),
        DroneSpec(id=left, position=(-1.5, 0.3, 1.7)),
        DroneSpec(id=right, position=(-1.5, -0.3, 1.7)),
    )


class SweepSpec(ConfigModel):
    speeds: Tuple[float, ...] = Field(min_length=1, description="rover speeds, m/s")
    runs: int = Field(10, ge=1, description="runs per speed")
    seed_base: Optional[int] = Field(None, ge=0, description="defaults to the scenario seed")

    @model_validator(mode="after")
    def _check_speeds(self) -> "SweepSpec":
        for s in self.speeds:
            if s < 0:
                raise ValueError(f"sweep.speeds: speed must be >= 0, got {s}")
        return self


class Scenario(ConfigModel):
    schema_version: int = Field(SCHEMA_VERSION, ge=1, le=SCHEMA_VERSION)
    seed: int = Field(0, ge=0)
    dt: float = Field(0.01, gt=0, description="control tick, s")
    duration: float = Field(30.0, gt=0, description="s")
    drones: Tuple[DroneSpec, ...] = Field(default_factory=default_drones)
    rover: RoverMission = Field(default_factory=RoverMission)
    platform: PlatformParams = Field(default_factory=PlatformParams)
    apf: APFParams = Field(default_factory=APFParams)
    formation: FormationSpec = Field(default_factory=FormationSpec)
    mission: MissionParams = Field(default_factory=MissionParams)
    camera: CameraModel = Field(default_factory=CameraModel)
    noise: NoiseModel = Field(default_factory=NoiseModel)
    sweep: Optional[SweepSpec] = None

    @model_validator(mode="after")
    def _check_invariants(self) -> "Scenario":
        violations = self.violations()
        if violations:
            raise ValueError("; ".join(violations))
        return self

    def violations(self) -> List[str]:
        """Cross-field invariants, one message per violated rule."""
        problems = []
        if self.duration < self.dt:
            problems.append(f"duration: must be >= dt ({self.duration} < {self.dt})")

        ids = [d.id for d in self.drones]
        if len(set(ids)) != len(ids):
            problems.append(f"drones: ids must be unique, got {ids}")
        if set(ids) != set(self.formation.offsets):
            problems.append(f"drones: ids {sorted(ids)} must match formation slots "
                            f"{sorted(self.formation.offsets)}")
        if len(self.formation.offsets) > self.platform.capacity:
            problems.append(f"formation: {len(self.formation.offsets)} slots exceed pad capacity "
                            f"{self.platform.capacity}")

        for i, a in enumerate(self.drones):
            for b in self.drones[i + 1:]:
                gap = math.dist(a.position, b.position)
                need = a.params.collision_radius + b.params.collision_radius
                if gap < need:
                    problems.append(f"drones: '{a.id}' and '{b.id}' start {gap:.3f} m apart, "
                                    f"need >= {need:.3f} m (2 x collision_radius)")

        radius = max((d.params.collision_radius for d in self.drones), default=0.0)
        spacing = self.formation.min_spacing()
        if spacing < 2.0 * radius:
            problems.append(f"formation: slot spacing {spacing:.3f} m is below 2 x collision_radius")

        leader = next((d for d in self.drones if d.id == self.formation.leader_id), None)
        if leader is None:
            problems.append(f"drones: no drone with the formation leader id '{self.formation.leader_id}'")
        else:
            pad = (self.rover.start[0], self.rover.start[1], self.platform.pad_height)
            reach = math.dist(leader.position, pad)
            if reach > self.camera.max_range:
                problems.append(f"drones: leader starts {reach:.3f} m from the pad, "
                                f"acquisition needs <= {self.camera.max_range} m")
        return problems

    @property
    def leader_id(self) -> str:
        return self.formation.leader_id

    def with_seed(self, seed: int) -> "Scenario":
        return self.model_copy(update={"seed": seed})

    def with_speed(self, speed: float) -> "Scenario":
        return build_scenario({**self.model_dump(mode="json"),
                               "rover": {**self.rover.model_dump(mode="json"), "speed": speed},
                               "sweep": None})

    def with_noise(self, sigma_pos: float) -> "Scenario":
        noise = self.noise.model_copy(update={"sigma_pos": sigma_pos})
        return self.model_copy(update={"noise": noise})

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def scenario_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def violations_from(error: ValidationError) -> List[str]:
    """One line per violated rule, prefixed with the offending field path."""
    out: List[str] = []
    for item in error.errors():
        location = ".".join(str(part) for part in item.get("loc", ())) or "scenario"
        message = item.get("msg", "invalid value")
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        # cross-field checks report several rules joined in one message
        for part in message.split("; "):
            out.append(f"{location}: {part}")
    return out


def build_scenario(data: Dict[str, Any]) -> Scenario:
    """Validate a decoded scenario document; every violation is reported at once."""
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        raise ScenarioValidationError(violations_from(e)) from e
