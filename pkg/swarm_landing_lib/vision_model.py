"""
Synthetic fiducial-tag sensing for the leader drone.

Detection is a range + cone field-of-view gate on the true geometry, followed by
Gaussian corruption of the relative pose. Relative positions are expressed in the
camera's level frame: x along the boresight azimuth, y to the left, z up.

Feature-level motion compensation works on 2-D point correspondences: the rigid
transform between two frames is solved in closed form (orthogonal Procrustes).
"""

import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field, model_validator

from .constants import (CAMERA_FOV_HALF_ANGLE, CAMERA_MAX_RANGE, CAMERA_MIN_RANGE,
                        CAMERA_PITCH, CAMERA_RATE, TAG_SIZE)
from .core import AgentState, ConfigModel, Pose2D, Vec3, normalize_angle
from .errors import EstimationError, GeometryError


class CameraModel(ConfigModel):
    mount_offset: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    pitch: float = Field(CAMERA_PITCH, ge=0, le=math.pi / 2, description="boresight depression, rad")
    yaw: float = Field(0.0, description="boresight azimuth in the world frame, rad")
    fov_half_angle: float = Field(CAMERA_FOV_HALF_ANGLE, gt=0, lt=math.pi)
    min_range: float = Field(CAMERA_MIN_RANGE, gt=0)
    max_range: float = Field(CAMERA_MAX_RANGE, gt=0)
    rate: float = Field(CAMERA_RATE, gt=0, description="frames per second")
    latency: float = Field(0.0, ge=0, description="capture-to-delivery delay, s")

    @model_validator(mode="after")
    def _check_envelope(self) -> "CameraModel":
        if not self.min_range < self.max_range:
            raise ValueError("camera: min_range must be < max_range")
        return self

    @property
    def mount(self) -> Vec3:
        return Vec3.from_seq(self.mount_offset)

    def boresight(self) -> Vec3:
        """Unit boresight vector in the world frame."""
        c = math.cos(self.pitch)
        return Vec3(c * math.cos(self.yaw), c * math.sin(self.yaw), -math.sin(self.pitch))


class NoiseModel(ConfigModel):
    sigma_pos: float = Field(0.03, ge=0, description="per-axis position sigma, m")
    sigma_yaw: float = Field(0.01, ge=0, description="yaw sigma, rad")
    dropout_prob: float = Field(0.0, ge=0, le=1)
    sigma_pos_speed_gain: float = Field(0.02, ge=0, description="extra sigma per m/s of platform speed")

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls(sigma_pos=0.0, sigma_yaw=0.0, dropout_prob=0.0, sigma_pos_speed_gain=0.0)

    def effective_sigma(self, platform_speed: float) -> float:
        return self.sigma_pos + self.sigma_pos_speed_gain * abs(platform_speed)


@dataclass(frozen=True)
class TagObservation:
    timestamp: float
    relative_position: Vec3
    tag_yaw: float
    camera_yaw: float = 0.0


class RigidTransform2D(NamedTuple):
    rotation: float
    translation: Tuple[float, float]
    rms_residual: float


def camera_position(leader: AgentState, cam: CameraModel) -> Vec3:
    return leader.position + cam.mount.rotate_z(cam.yaw)


def in_envelope(relative_world: Vec3, cam: CameraModel) -> bool:
    """Range and cone gate on a camera-to-tag vector expressed in world axes."""
    rng = relative_world.norm()
    if rng < cam.min_range or rng > cam.max_range:
        return False
    cos_angle = relative_world.dot(cam.boresight()) / rng
    return cos_angle >= math.cos(cam.fov_half_angle)


def clamp_range(v: Vec3, fallback: Vec3, min_range: float, max_range: float) -> Vec3:
    """Pull a noisy camera-to-tag vector radially back into [min_range, max_range]."""
    r = v.norm()
    if min_range <= r <= max_range:
        return v
    if r == 0.0:
        v, r = fallback, fallback.norm()
    return v.scale(min(max(r, min_range), max_range) / r)


def detect_tag(leader: AgentState, tag_pose: Pose2D, tag_height: float, cam: CameraModel,
               noise: NoiseModel, rng: np.random.Generator, now: float = 0.0,
               platform_speed: float = 0.0) -> Optional[TagObservation]:
    """One camera frame. Returns None when the tag is not seen."""
    # five draws per frame, before gating
    dropout_draw = rng.random()
    n = rng.standard_normal(4)

    tag_world = Vec3(tag_pose.x, tag_pose.y, tag_height)
    relative_world = tag_world - camera_position(leader, cam)
    if not in_envelope(relative_world, cam):
        return None
    if dropout_draw < noise.dropout_prob:
        return None

    sigma = noise.effective_sigma(platform_speed)
    relative = relative_world.rotate_z(-cam.yaw)
    noisy = Vec3(relative.x + sigma * float(n[0]),
                 relative.y + sigma * float(n[1]),
                 relative.z + sigma * float(n[2]))
    noisy = clamp_range(noisy, relative, cam.min_range, cam.max_range)
    tag_yaw = normalize_angle(tag_pose.theta - cam.yaw + noise.sigma_yaw * float(n[3]))
    return TagObservation(timestamp=now, relative_position=noisy, tag_yaw=tag_yaw, camera_yaw=cam.yaw)


def estimate_rigid_transform(points_prev: Sequence[Sequence[float]],
                             points_curr: Sequence[Sequence[float]]) -> RigidTransform2D:
    """Least-squares rotation + translation (no scale) mapping prev onto curr."""
    p = np.asarray(points_prev, dtype=float)
    q = np.asarray(points_curr, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or p.shape != q.shape:
        raise GeometryError(f"point sets must both be (N, 2), got {p.shape} and {q.shape}")
    if p.shape[0] < 2:
        raise GeometryError(f"need at least 2 correspondences, got {p.shape[0]}")

    centroid_p = p.mean(axis=0)
    centroid_q = q.mean(axis=0)
    p0 = p - centroid_p
    q0 = q - centroid_q
    if not np.any(p0):
        raise GeometryError("previous point set is degenerate (all points coincide)")

    # optimal angle from the 2-D cross-covariance terms
    s_cos = float(np.sum(p0[:, 0] * q0[:, 0] + p0[:, 1] * q0[:, 1]))
    s_sin = float(np.sum(p0[:, 0] * q0[:, 1] - p0[:, 1] * q0[:, 0]))
    theta = math.atan2(s_sin, s_cos)
    rot = np.array([[math.cos(theta), -math.sin(theta)],
                    [math.sin(theta), math.cos(theta)]])
    t = centroid_q - rot @ centroid_p
    residuals = p @ rot.T + t - q
    rms = math.sqrt(float(np.mean(np.sum(residuals * residuals, axis=1))))
    return RigidTransform2D(normalize_angle(theta), (float(t[0]), float(t[1])), rms)


def finite_difference_velocity(timestamps: Sequence[float], positions: Sequence[Vec3]) -> Vec3:
    """Mean of consecutive finite differences over the window."""
    if len(timestamps) < 2 or len(timestamps) != len(positions):
        raise EstimationError(f"need at least 2 samples, got {len(timestamps)}")
    acc = Vec3()
    for i in range(1, len(timestamps)):
        dt = timestamps[i] - timestamps[i - 1]
        if dt <= 0:
            raise EstimationError("observation timestamps must be strictly increasing")
        acc = acc + (positions[i] - positions[i - 1]).scale(1.0 / dt)
    return acc.scale(1.0 / (len(timestamps) - 1))


def compensated_tag_velocity(observations: Sequence[TagObservation]) -> Vec3:
    """Tag velocity relative to the camera, smoothed over the supplied frames."""
    return finite_difference_velocity([o.timestamp for o in observations],
                                      [o.relative_position for o in observations])


def tag_feature_points(position: Vec3, yaw: float, size: float = TAG_SIZE) -> List[Tuple[float, float]]:
    """Planar corner features of a tag of side `size` centred at `position`."""
    h = size / 2.0
    corners = (Vec3(h, h), Vec3(-h, h), Vec3(-h, -h), Vec3(h, -h))
    points = []
    for corner in corners:
        r = corner.rotate_z(yaw)
        points.append((position.x + r.x, position.y + r.y))
    return points


def frame_motion(prev: TagObservation, curr: TagObservation, size: float = TAG_SIZE) -> RigidTransform2D:
    """Rigid motion of the tag features between two consecutive frames."""
    return estimate_rigid_transform(tag_feature_points(prev.relative_position, prev.tag_yaw, size),
                                    tag_feature_points(curr.relative_position, curr.tag_yaw, size))
