"""
Delta formation: per-agent slot targets in the pad frame.
"""

import math
from typing import Dict, Iterable, Mapping, Tuple

from pydantic import Field, model_validator

from .constants import LEADER_ID, LEFT_ID, RIGHT_ID
from .core import AgentState, ConfigModel, Pose2D, Vec3, horizontal_distance
from .errors import GeometryError

DEFAULT_OFFSETS = {
    LEADER_ID: (0.0, 0.0),
    LEFT_ID: (0.0, 0.30),
    RIGHT_ID: (0.0, -0.30),
}


class FormationSpec(ConfigModel):
    """Planar slot offsets (pad frame, meters) keyed by agent id; leader at the origin."""
    offsets: Dict[str, Tuple[float, float]] = Field(default_factory=lambda: dict(DEFAULT_OFFSETS))
    leader_id: str = LEADER_ID

    @model_validator(mode="after")
    def _check_slots(self) -> "FormationSpec":
        if self.leader_id not in self.offsets:
            raise ValueError(f"formation.offsets: leader slot '{self.leader_id}' is missing")
        if self.offsets[self.leader_id] != (0.0, 0.0):
            raise ValueError("formation.offsets: leader slot must be at the origin")
        if len(set(self.offsets.values())) != len(self.offsets):
            raise ValueError("formation.offsets: slot offsets must be pairwise distinct")
        return self

    def min_spacing(self) -> float:
        """Smallest pairwise distance between slots."""
        points = list(self.offsets.values())
        best = math.inf
        for i, (ax, ay) in enumerate(points):
            for bx, by in points[i + 1:]:
                best = min(best, math.hypot(ax - bx, ay - by))
        return best


def slot_targets(pad_pose: Pose2D, pad_height: float, formation: FormationSpec,
                 altitude: float) -> Dict[str, Vec3]:
    """Slot positions for a pad pose; `altitude` is measured above the pad surface."""
    z = pad_height + altitude
    return {agent_id: pad_pose.transform(Vec3(ox, oy, z))
            for agent_id, (ox, oy) in sorted(formation.offsets.items())}


def slot_errors(states: Iterable[AgentState], targets: Mapping[str, Vec3]) -> Dict[str, float]:
    errors = {}
    for state in states:
        if state.id not in targets:
            raise GeometryError(f"no formation target for agent '{state.id}'")
        errors[state.id] = horizontal_distance(state.position, targets[state.id])
    return errors


def formation_error(states: Iterable[AgentState], targets: Mapping[str, Vec3]) -> float:
    """Largest horizontal distance between any agent and its slot."""
    errors = slot_errors(states, targets)
    return max(errors.values(), default=0.0)
