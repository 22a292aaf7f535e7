"""
Artificial potential field planner.

U = U_a + U_r with
    U_a = xi * |p - goal|^2
    U_r = sum over obstacles within d0 of 0.5 * eta * (1/rho - 1/d0)^2
Setpoints follow the negative gradient (first-order gradient flow) and are
recomputed from scratch on every call; no path is stored.
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional

from pydantic import Field

from .constants import RHO_MIN
from .core import AgentState, ConfigModel, Vec3


class APFParams(ConfigModel):
    xi: float = Field(1.0, gt=0, description="attraction scale")
    eta: float = Field(0.1, gt=0, description="repulsion scale")
    d0: float = Field(0.25, gt=0, description="radius of influence, m")
    step_gain: float = Field(1.5, gt=0, description="m/s per unit gradient")
    v_max: float = Field(2.0, gt=0, description="setpoint speed clamp, m/s")
    rho_min: float = Field(RHO_MIN, gt=0, description="distance clamp inside the repulsive term, m")


@dataclass(frozen=True)
class Obstacle:
    position: Vec3
    id: str = ""


def _ordered(obstacles: Iterable[Obstacle]) -> List[Obstacle]:
    # summed in id order, independent of input order
    return sorted(obstacles, key=lambda o: (o.id, o.position.as_tuple()))


def attraction_potential(p: Vec3, goal: Vec3, params: APFParams) -> float:
    d = p - goal
    return params.xi * d.dot(d)


def _repulsive_term(rho: float, params: APFParams) -> float:
    if rho > params.d0:
        return 0.0
    rho = max(rho, params.rho_min)
    k = 1.0 / rho - 1.0 / params.d0
    return 0.5 * params.eta * k * k


def repulsive_potential(p: Vec3, obstacles: Iterable[Obstacle], params: APFParams) -> float:
    total = 0.0
    for obstacle in _ordered(obstacles):
        total += _repulsive_term((p - obstacle.position).norm(), params)
    return total


def total_potential(p: Vec3, goal: Vec3, obstacles: Iterable[Obstacle], params: APFParams) -> float:
    return attraction_potential(p, goal, params) + repulsive_potential(p, obstacles, params)


def potential_gradient(p: Vec3, goal: Vec3, obstacles: Iterable[Obstacle], params: APFParams) -> Vec3:
    """Analytic gradient of the total potential at p."""
    grad = (p - goal).scale(2.0 * params.xi)
    for obstacle in _ordered(obstacles):
        offset = p - obstacle.position
        rho = offset.norm()
        if rho > params.d0 or rho == 0.0:
            # outside influence contributes exactly zero; coincident points have no direction
            continue
        rho_c = max(rho, params.rho_min)
        magnitude = -params.eta * (1.0 / rho_c - 1.0 / params.d0) / (rho_c * rho_c)
        grad = grad + offset.scale(magnitude / rho)
    return grad


def plan_step(state: AgentState, goal: Vec3, obstacles: Iterable[Obstacle], params: APFParams,
              feedforward: Optional[Vec3] = None) -> Vec3:
    """Velocity setpoint: feed-forward plus descent along -grad U, clamped to v_max."""
    descent = potential_gradient(state.position, goal, obstacles, params).scale(-params.step_gain)
    setpoint = descent if feedforward is None else feedforward + descent
    return setpoint.clamp_norm(params.v_max)


def obstacles_from_agents(agents: Iterable[AgentState], exclude_id: str) -> List[Obstacle]:
    """Every other flying agent is an obstacle; motors-off agents are not."""
    return [Obstacle(position=a.position, id=a.id)
            for a in agents if a.id != exclude_id and a.motors_on]

