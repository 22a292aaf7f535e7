#!/usr/bin/env python3
"""
Tests for the landing state machine and the leader's pad tracker.
"""

import math
import unittest

import numpy as np
from pydantic import ValidationError

from swarm_landing_lib.core import AgentState, Pose2D, RoverState, Vec3
from swarm_landing_lib.errors import EstimationError
from swarm_landing_lib.formation import FormationSpec, slot_targets
from swarm_landing_lib.mission import (MissionParams, MissionPhase, PadEstimate, PadTracker, Phase,
                                       can_transition, estimate_pad_pose, phase_sequence,
                                       respects_transition_graph, update)
from swarm_landing_lib.vehicles import tag_world_pose
from swarm_landing_lib.vision_model import CameraModel, NoiseModel, TagObservation, detect_tag

PAD = PadEstimate(pose=Pose2D(), height=0.7)


def swarm_at(altitude: float, displaced: str = "", offset: Vec3 = Vec3(), motors_off=()):
    targets = slot_targets(PAD.pose, PAD.height, FormationSpec(), altitude)
    agents = []
    for agent_id, target in targets.items():
        position = target + offset if agent_id == displaced else target
        agents.append(AgentState(agent_id, position, motors_on=agent_id not in motors_off))
    return agents


class TestEstimatePadPose(unittest.TestCase):
    """Composition of the leader pose with a tag observation."""

    def test_simple_composition(self):
        leader = AgentState("leader", Vec3(0, 0, 1.7))
        obs = TagObservation(0.0, Vec3(1.0, 0.0, -1.0), 0.5)
        pose, height = estimate_pad_pose(leader, obs)
        self.assertAlmostEqual(pose.x, 1.0, places=12)
        self.assertAlmostEqual(pose.y, 0.0, places=12)
        self.assertAlmostEqual(pose.theta, 0.5, places=12)
        self.assertAlmostEqual(height, 0.7, places=12)

    def test_tag_offset_is_removed(self):
        leader = AgentState("leader", Vec3(0, 0, 1.7))
        obs = TagObservation(0.0, Vec3(1.0, 0.0, -1.1), math.pi / 2)
        pose, height = estimate_pad_pose(leader, obs, tag_offset=Vec3(0.45, 0.0, -0.10))
        self.assertAlmostEqual(pose.x, 1.0, places=12)
        self.assertAlmostEqual(pose.y, -0.45, places=12)
        self.assertAlmostEqual(height, 0.7, places=12)

    def test_noiseless_detection_recovers_rover_pose(self):
        rng = np.random.default_rng(21)
        tag_offset = Vec3(0.45, 0.0, -0.10)
        for trial in range(200):
            rover = RoverState(pose=Pose2D(*rng.uniform(-5, 5, 2), float(rng.uniform(-math.pi, math.pi))))
            cam = CameraModel(yaw=float(rng.uniform(-math.pi, math.pi)), mount_offset=(0.05, 0.0, -0.02))
            tag_pose, tag_height = tag_world_pose(rover, tag_offset)
            tag = Vec3(tag_pose.x, tag_pose.y, tag_height)
            standoff = float(rng.uniform(0.5, 3.5))
            leader = AgentState("leader", tag - cam.boresight().scale(standoff) - cam.mount.rotate_z(cam.yaw))
            obs = detect_tag(leader, tag_pose, tag_height, cam, NoiseModel.noiseless(), rng)
            self.assertIsNotNone(obs, f"trial {trial}")
            pose, height = estimate_pad_pose(leader, obs, cam.mount, tag_offset)
            self.assertAlmostEqual(pose.x, rover.pose.x, delta=1e-9)
            self.assertAlmostEqual(pose.y, rover.pose.y, delta=1e-9)
            self.assertAlmostEqual(math.cos(pose.theta), math.cos(rover.pose.theta), delta=1e-9)
            self.assertAlmostEqual(math.sin(pose.theta), math.sin(rover.pose.theta), delta=1e-9)
            self.assertAlmostEqual(height, rover.pad_height, delta=1e-9)


class TestMissionUpdate(unittest.TestCase):
    """Phase transitions and goal generation."""

    def setUp(self):
        self.params = MissionParams()

    def test_search_acquires_into_follow(self):
        result = update(MissionPhase(), swarm_at(1.0, "left", Vec3(1.0, 0, 0)), PAD, self.params, 2.0)
        self.assertIs(result.phase.phase, Phase.FOLLOW)
        self.assertEqual(result.phase.entered_at, 2.0)
        self.assertEqual(result.goals, slot_targets(PAD.pose, PAD.height, FormationSpec(), 1.0))

    def test_follow_to_descend_at_threshold(self):
        follow = MissionPhase(Phase.FOLLOW, 1.0)
        test_cases = [
            (self.params.landing_threshold - 1e-6, Phase.DESCEND),
            (self.params.landing_threshold + 1e-6, Phase.FOLLOW),
        ]
        for error, expected in test_cases:
            with self.subTest(error=error):
                swarm = swarm_at(1.0, "left", Vec3(error, 0, 0))
                result = update(follow, swarm, PAD, self.params, 3.0)
                self.assertIs(result.phase.phase, expected)
                self.assertEqual(result.goals, slot_targets(PAD.pose, PAD.height, FormationSpec(), 1.0))

    def test_descend_starts_vertical_feedforward(self):
        result = update(MissionPhase(Phase.FOLLOW, 1.0), swarm_at(1.0), PAD, self.params, 3.0)
        self.assertIs(result.phase.phase, Phase.DESCEND)
        self.assertEqual(result.feedforward, Vec3(0.0, 0.0, -self.params.descent_rate))

    def test_descent_reference_ramps_down(self):
        descend = MissionPhase(Phase.DESCEND, 2.0)
        result = update(descend, swarm_at(0.8), PAD, self.params, 3.0)
        self.assertIs(result.phase.phase, Phase.DESCEND)
        self.assertAlmostEqual(result.goals["leader"].z, 0.7 + 1.0 - 0.4, places=12)
        self.assertEqual(result.shutdown, ())

    def test_touchdown_turns_motors_off(self):
        descend = MissionPhase(Phase.DESCEND, 0.0)
        swarm = swarm_at(self.params.touchdown_tolerance / 2)
        result = update(descend, swarm, PAD, self.params, 10.0)
        self.assertIs(result.phase.phase, Phase.TOUCHDOWN)
        self.assertEqual(sorted(result.shutdown), ["leader", "left", "right"])
        self.assertEqual(result.goals, {})

    def test_partial_touchdown_keeps_descending(self):
        descend = MissionPhase(Phase.DESCEND, 0.0)
        swarm = swarm_at(0.015, "right", Vec3(0, 0, 0.2))
        result = update(descend, swarm, PAD, self.params, 10.0)
        self.assertIs(result.phase.phase, Phase.DESCEND)
        self.assertEqual(sorted(result.shutdown), ["leader", "left"])
        self.assertEqual(list(result.goals), ["right"])

    def test_landed_agents_get_no_goals(self):
        swarm = swarm_at(1.0, motors_off=("left",))
        result = update(MissionPhase(Phase.DESCEND, 0.0), swarm, PAD, self.params, 0.5)
        self.assertNotIn("left", result.goals)

    def test_search_timeout_aborts(self):
        test_cases = [
            (self.params.search_timeout - 0.01, Phase.SEARCH),
            (self.params.search_timeout, Phase.ABORTED),
        ]
        for now, expected in test_cases:
            with self.subTest(now=now):
                result = update(MissionPhase(), swarm_at(1.0), None, self.params, now)
                self.assertIs(result.phase.phase, expected)

    def test_search_holds_position(self):
        swarm = swarm_at(0.5)
        result = update(MissionPhase(), swarm, None, self.params, 1.0)
        for agent in swarm:
            goal = result.goals[agent.id]
            self.assertEqual((goal.x, goal.y, goal.z), (agent.position.x, agent.position.y, 1.70))

    def test_regression_to_follow(self):
        swarm = swarm_at(0.8, "left", Vec3(0.4, 0, 0))
        result = update(MissionPhase(Phase.DESCEND, 2.0), swarm, PAD, self.params, 2.5)
        self.assertIs(result.phase.phase, Phase.FOLLOW)
        self.assertAlmostEqual(result.goals["leader"].z, 1.7, places=12)

    def test_lost_estimate_returns_to_search(self):
        for phase in (Phase.FOLLOW, Phase.DESCEND):
            with self.subTest(phase=phase):
                result = update(MissionPhase(phase, 0.0), swarm_at(1.0), None, self.params, 1.0)
                self.assertIs(result.phase.phase, Phase.SEARCH)

    def test_terminal_phases_are_absorbing(self):
        for phase in (Phase.TOUCHDOWN, Phase.ABORTED):
            with self.subTest(phase=phase):
                current = MissionPhase(phase, 5.0)
                for estimate in (PAD, None):
                    result = update(current, swarm_at(1.0), estimate, self.params, 20.0)
                    self.assertEqual(result.phase, current)
                    self.assertEqual(result.goals, {})

    def test_illegal_advance_rejected(self):
        with self.assertRaises(ValueError):
            MissionPhase().advance(Phase.DESCEND, 1.0)
        with self.assertRaises(ValueError):
            MissionPhase(Phase.TOUCHDOWN).advance(Phase.SEARCH, 1.0)

    def test_params_hysteresis_validated(self):
        with self.assertRaises(ValidationError):
            MissionParams(landing_threshold=0.2, regression_threshold=0.1)


class TestPadTracker(unittest.TestCase):
    """Frame ingestion, hold and extrapolation."""

    def setUp(self):
        self.leader = AgentState("leader", Vec3(0, 0, 1.7))
        self.tracker = PadTracker(MissionParams())

    def _feed(self, times, x0=1.0, speed=1.0, yaw_rate=0.0):
        for t in times:
            obs = TagObservation(t, Vec3(x0 + speed * t, 0.0, -1.0), yaw_rate * t)
            self.tracker.ingest(self.leader, obs)

    def test_empty_tracker_has_no_estimate(self):
        self.assertIsNone(self.tracker.estimate(0.0))

    def test_velocity_and_extrapolation(self):
        times = [k / 30 for k in range(6)]
        self._feed(times)
        estimate = self.tracker.estimate(times[-1] + 0.1)
        self.assertAlmostEqual(estimate.velocity.x, 1.0, places=9)
        self.assertEqual(estimate.velocity.z, 0.0)
        self.assertAlmostEqual(estimate.pose.x, 1.0 + times[-1] + 0.1, places=9)
        self.assertAlmostEqual(estimate.height, 0.7, places=12)
        self.assertEqual(estimate.timestamp, times[-1])

    def test_yaw_rate_from_feature_motion(self):
        times = [k / 30 for k in range(6)]
        self._feed(times, speed=0.0, yaw_rate=0.3)
        estimate = self.tracker.estimate(times[-1])
        self.assertAlmostEqual(estimate.yaw_rate, 0.3, places=9)

    def test_estimate_expires_after_hold_time(self):
        self._feed([0.0, 1 / 30])
        self.assertIsNotNone(self.tracker.estimate(1 / 30 + 0.49))
        self.assertIsNone(self.tracker.estimate(1 / 30 + 0.51))

    def test_stale_observation_rejected(self):
        self._feed([0.0, 0.1])
        with self.assertRaises(EstimationError):
            self._feed([0.1])

    def test_gap_restarts_velocity_window(self):
        self._feed([0.0, 1 / 30, 2 / 30])
        self._feed([2.0, 2.0 + 1 / 30], x0=3.0, speed=0.0)
        estimate = self.tracker.estimate(2.0 + 1 / 30)
        self.assertAlmostEqual(estimate.velocity.x, 0.0, places=12)
        self.assertEqual(self.tracker.frames, 5)


class TestTransitionGraph(unittest.TestCase):

    def test_allowed_edges(self):
        self.assertTrue(can_transition(Phase.SEARCH, Phase.FOLLOW))
        self.assertTrue(can_transition(Phase.DESCEND, Phase.FOLLOW))
        self.assertFalse(can_transition(Phase.SEARCH, Phase.DESCEND))
        self.assertFalse(can_transition(Phase.TOUCHDOWN, Phase.DESCEND))

    def test_sequence_helpers(self):
        series = [Phase.SEARCH] * 3 + [Phase.FOLLOW] * 2 + [Phase.DESCEND, Phase.TOUCHDOWN, Phase.TOUCHDOWN]
        self.assertEqual(phase_sequence(series),
                         [Phase.SEARCH, Phase.FOLLOW, Phase.DESCEND, Phase.TOUCHDOWN])
        self.assertTrue(respects_transition_graph(series))
        self.assertFalse(respects_transition_graph([Phase.SEARCH, Phase.DESCEND]))
        self.assertFalse(respects_transition_graph([Phase.TOUCHDOWN, Phase.DESCEND]))


if __name__ == "__main__":
    unittest.main()
