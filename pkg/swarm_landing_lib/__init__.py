"""
Swarm Landing Library - deterministic simulation of a leader-follower drone swarm
landing on a moving ground platform.
"""

from .core import Vec3, Pose2D, AgentState, RoverState
from .apf_planner import APFParams, Obstacle, plan_step, potential_gradient, total_potential
from .formation import FormationSpec, slot_targets, formation_error
from .vision_model import (
    CameraModel,
    NoiseModel,
    TagObservation,
    detect_tag,
    estimate_rigid_transform,
    compensated_tag_velocity
)
from .vehicles import DroneParams, RoverCommand, drone_step, rover_step, straight_line_mission, arc_mission
from .mission import Phase, MissionPhase, MissionParams, PadEstimate, PadTracker, estimate_pad_pose, update
from .models import PlatformParams, RoverMission, DroneSpec, SweepSpec, Scenario
from .sim_engine import SimEngine, SimTrace, TickRecord, SimEvent, run, run_batch, validate_scenario
from .metrics import (
    RunReport,
    BatchSummary,
    landing_rmse,
    overall_rmse,
    run_report,
    summarize_batch,
    format_table,
    calibrate_noise
)
from .scenario_loader import ScenarioLoader, parse_scenario, dump_scenario, expand_sweep, parse_speeds
from .output import OutputWriter

__all__ = [
    'Vec3',
    'Pose2D',
    'AgentState',
    'RoverState',
    'APFParams',
    'Obstacle',
    'plan_step',
    'potential_gradient',
    'total_potential',
    'FormationSpec',
    'slot_targets',
    'formation_error',
    'CameraModel',
    'NoiseModel',
    'TagObservation',
    'detect_tag',
    'estimate_rigid_transform',
    'compensated_tag_velocity',
    'DroneParams',
    'RoverCommand',
    'drone_step',
    'rover_step',
    'straight_line_mission',
    'arc_mission',
    'Phase',
    'MissionPhase',
    'MissionParams',
    'PadEstimate',
    'PadTracker',
    'estimate_pad_pose',
    'update',
    'PlatformParams',
    'RoverMission',
    'DroneSpec',
    'SweepSpec',
    'Scenario',
    'SimEngine',
    'SimTrace',
    'TickRecord',
    'SimEvent',
    'run',
    'run_batch',
    'validate_scenario',
    'RunReport',
    'BatchSummary',
    'landing_rmse',
    'overall_rmse',
    'run_report',
    'summarize_batch',
    'format_table',
    'calibrate_noise',
    'ScenarioLoader',
    'parse_scenario',
    'dump_scenario',
    'expand_sweep',
    'parse_speeds',
    'OutputWriter'
]
