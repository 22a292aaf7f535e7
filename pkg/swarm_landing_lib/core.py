"""
Shared geometric and state value types.

World frame is z-up, meters and radians throughout. Drones are 3D points,
the rover pose is planar. Angles are normalized to (-pi, pi].
"""

import math
import sys
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Tuple

from pydantic import BaseModel, ConfigDict

from .constants import PAD_HEIGHT, TWO_PI
from .errors import GeometryError


class ConfigModel(BaseModel):
    """Base for every configuration block: immutable, finite, no unknown keys."""
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)


def log_verbose(component: str, message: str) -> None:
    """Write a timestamped diagnostic line to stderr."""
    timestamp = datetime.now().strftime('%Y-%m-%d %H:%M:%S.%f')[:-3]
    print(f"[{timestamp} {component} VERBOSE] {message}", file=sys.stderr)


def normalize_angle(theta: float) -> float:
    """Map an angle to (-pi, pi]."""
    if not math.isfinite(theta):
        raise GeometryError(f"cannot normalize non-finite angle {theta}")
    wrapped = math.fmod(theta, TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    elif wrapped > math.pi:
        wrapped -= TWO_PI
    return wrapped


@dataclass(frozen=True)
class Vec3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise GeometryError(f"non-finite vector component in ({self.x}, {self.y}, {self.z})")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def scale(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def norm_xy(self) -> float:
        return math.hypot(self.x, self.y)

    def clamp_norm(self, limit: float) -> "Vec3":
        """Scale down to `limit` if longer, keep direction."""
        n = self.norm()
        if n <= limit:
            return self
        return self.scale(limit / n)

    def rotate_z(self, angle: float) -> "Vec3":
        c, s = math.cos(angle), math.sin(angle)
        return Vec3(c * self.x - s * self.y, s * self.x + c * self.y, self.z)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.x, self.y, self.z)

    @classmethod
    def from_seq(cls, values) -> "Vec3":
        x, y, z = values
        return cls(float(x), float(y), float(z))


ZERO = Vec3()


@dataclass(frozen=True)
class Pose2D:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        # theta kept in (-pi, pi]
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def transform(self, local: Vec3) -> Vec3:
        """Map a point from this pose's frame to the world frame (z passes through)."""
        rotated = local.rotate_z(self.theta)
        return Vec3(self.x + rotated.x, self.y + rotated.y, local.z)

    def inverse_transform(self, world: Vec3) -> Vec3:
        """Map a world point into this pose's frame (z passes through)."""
        return Vec3(world.x - self.x, world.y - self.y, world.z).rotate_z(-self.theta)


@dataclass(frozen=True)
class AgentState:
    id: str
    position: Vec3
    velocity: Vec3 = ZERO
    motors_on: bool = True

    def with_motion(self, position: Vec3, velocity: Vec3) -> "AgentState":
        return replace(self, position=position, velocity=velocity)


@dataclass(frozen=True)
class RoverState:
    pose: Pose2D = field(default_factory=Pose2D)
    linear_speed: float = 0.0
    angular_speed: float = 0.0
    pad_height: float = PAD_HEIGHT

    def __post_init__(self):
        if not self.pad_height > 0:
            raise GeometryError(f"pad_height must be > 0, got {self.pad_height}")

    @property
    def velocity(self) -> Vec3:
        return Vec3(self.linear_speed * math.cos(self.pose.theta),
                    self.linear_speed * math.sin(self.pose.theta), 0.0)

    @property
    def pad_center(self) -> Vec3:
        return Vec3(self.pose.x, self.pose.y, self.pad_height)


def distance(a: Vec3, b: Vec3) -> float:
    """Euclidean distance between two points."""
    return (a - b).norm()


def horizontal_distance(a: Vec3, b: Vec3) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)
