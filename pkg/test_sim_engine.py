#!/usr/bin/env python3
"""
Tests for the fixed-timestep simulation engine.
"""

import math
import unittest

from swarm_landing_lib.core import horizontal_distance
from swarm_landing_lib.errors import ScenarioValidationError
from swarm_landing_lib.formation import slot_targets
from swarm_landing_lib.mission import MissionParams, Phase, respects_transition_graph
from swarm_landing_lib.models import RoverMission, Scenario
from swarm_landing_lib.sim_engine import (EVENT_ABORTED, EVENT_PHASE, EVENT_TOUCHDOWN, SimEngine,
                                          tick_count, validate_scenario)
from swarm_landing_lib.vision_model import CameraModel, NoiseModel


def noiseless(**overrides) -> Scenario:
    return Scenario(noise=NoiseModel.noiseless(), **overrides)


class TestTickLoop(unittest.TestCase):
    """Tick bookkeeping and determinism."""

    def setUp(self):
        self.engine = SimEngine()

    def test_single_tick(self):
        trace = self.engine.run(Scenario(duration=0.01))
        self.assertEqual(len(trace.ticks), 1)
        self.assertAlmostEqual(trace.ticks[0].t, 0.01, places=12)

    def test_tick_count(self):
        test_cases = [
            (0.01, 0.01, 1),
            (30.0, 0.01, 3000),
            (1.0, 0.3, 3),
            (0.3, 0.1, 3),
        ]
        for duration, dt, expected in test_cases:
            with self.subTest(duration=duration, dt=dt):
                self.assertEqual(tick_count(duration, dt), expected)

    def test_same_seed_same_trace(self):
        scenario = Scenario(duration=2.0, rover=RoverMission(speed=0.5), seed=3)
        first = self.engine.run(scenario)
        second = SimEngine().run(scenario)
        self.assertEqual(first.ticks, second.ticks)
        self.assertEqual(first.events, second.events)
        self.assertEqual(first.scenario_hash, second.scenario_hash)

    def test_seed_changes_noise(self):
        scenario = Scenario(duration=0.5)
        a = self.engine.run(scenario, seed=1)
        b = self.engine.run(scenario, seed=2)
        obs_a = [r.observation for r in a.ticks if r.observation is not None]
        obs_b = [r.observation for r in b.ticks if r.observation is not None]
        self.assertNotEqual(obs_a, obs_b)
        self.assertEqual(a.seed, 1)
        self.assertEqual(a.scenario.seed, 1)

    def test_frames_only_when_due(self):
        trace = self.engine.run(noiseless(duration=1.0))
        rate = trace.scenario.camera.rate
        frames = 0
        for index, record in enumerate(trace.ticks):
            if record.observation is None:
                continue
            frames += 1
            if index == 0:
                continue
            now = math.floor(record.t * rate + 1e-9)
            before = math.floor((record.t - trace.scenario.dt) * rate + 1e-9)
            self.assertNotEqual(now, before, f"frame at t={record.t}")
        # first tick plus one frame per 1/30 s
        self.assertEqual(frames, 31)

    def test_invalid_mapping_rejected(self):
        with self.assertRaises(ScenarioValidationError):
            validate_scenario({"dt": -1})
        scenario = Scenario()
        self.assertIs(validate_scenario(scenario), scenario)


class TestLanding(unittest.TestCase):
    """End-to-end landings."""

    def setUp(self):
        self.engine = SimEngine()

    def assert_landed_on_slots(self, trace, tolerance):
        scenario = trace.scenario
        self.assertIs(trace.final_phase, Phase.TOUCHDOWN)
        for agent_id in trace.agent_ids:
            index = trace.touchdown_index(agent_id)
            self.assertIsNotNone(index, agent_id)
            record = trace.ticks[index]
            target = slot_targets(record.rover.pose, record.rover.pad_height, scenario.formation, 0.0)[agent_id]
            error = horizontal_distance(record.agent(agent_id).position, target)
            self.assertLess(error, tolerance, f"{agent_id} landed {error:.4f} m off its slot")

    def test_static_noiseless_landing(self):
        trace = self.engine.run(noiseless())
        self.assert_landed_on_slots(trace, 0.01)
        self.assertIsNotNone(trace.time_to_land())
        last = trace.ticks[-1]
        self.assertTrue(all(not a.motors_on for a in last.agents))

    def test_phase_history_respects_graph(self):
        trace = self.engine.run(noiseless(rover=RoverMission(speed=0.5)))
        self.assertTrue(respects_transition_graph(r.phase for r in trace.ticks))
        kinds = {e.kind for e in trace.events}
        self.assertIn(EVENT_PHASE, kinds)
        self.assertIn(EVENT_TOUCHDOWN, kinds)
        touchdowns = [e.agent_id for e in trace.events if e.kind == EVENT_TOUCHDOWN]
        self.assertEqual(sorted(touchdowns), ["leader", "left", "right"])

    def test_motors_off_is_absorbing(self):
        trace = self.engine.run(noiseless(rover=RoverMission(speed=0.5)))
        for agent_id in trace.agent_ids:
            index = trace.touchdown_index(agent_id)
            for record in trace.ticks[index:]:
                self.assertFalse(record.agent(agent_id).motors_on)

    def test_no_teleporting(self):
        trace = self.engine.run(noiseless(rover=RoverMission(speed=0.5)))
        dt = trace.scenario.dt
        limits = {}
        for drone in trace.scenario.drones:
            flying = math.hypot(drone.params.v_max_xy, drone.params.v_max_z)
            limits[drone.id] = max(flying, trace.scenario.rover.speed) * dt + 1e-9
        for prev, curr in zip(trace.ticks, trace.ticks[1:]):
            for agent_id in trace.agent_ids:
                step = (curr.agent(agent_id).position - prev.agent(agent_id).position).norm()
                self.assertLessEqual(step, limits[agent_id], f"{agent_id} at t={curr.t}")

    def test_landed_agents_ride_the_platform(self):
        trace = self.engine.run(noiseless(rover=RoverMission(speed=0.5)))
        index = trace.touchdown_index("leader")
        at_touchdown = trace.ticks[index]
        last = trace.ticks[-1]
        local_then = at_touchdown.rover.pose.inverse_transform(at_touchdown.agent("leader").position)
        local_now = last.rover.pose.inverse_transform(last.agent("leader").position)
        self.assertAlmostEqual(local_then.x, local_now.x, places=9)
        self.assertAlmostEqual(local_then.y, local_now.y, places=9)
        self.assertGreater(last.rover.pose.x, at_touchdown.rover.pose.x)

    def test_search_timeout_aborts_run(self):
        scenario = noiseless(camera=CameraModel(yaw=math.pi), mission=MissionParams(search_timeout=1.0))
        trace = self.engine.run(scenario)
        self.assertTrue(trace.aborted)
        self.assertAlmostEqual(trace.ticks[-1].t, 1.0, places=9)
        self.assertEqual([e.kind for e in trace.events], [EVENT_ABORTED])

    def test_latency_delays_acquisition(self):
        def first_follow(trace):
            return next(e.t for e in trace.events if e.detail == "Search->Follow")

        prompt = self.engine.run(noiseless(duration=1.0))
        delayed = self.engine.run(noiseless(duration=1.0, camera=CameraModel(latency=0.1)))
        self.assertAlmostEqual(first_follow(prompt), 0.01, places=9)
        self.assertGreaterEqual(first_follow(delayed), 0.11 - 1e-9)


class TestBatch(unittest.TestCase):
    """Seeded repetitions."""

    def setUp(self):
        self.scenario = Scenario(duration=1.0, rover=RoverMission(speed=1.0))

    def test_seeds_follow_run_index(self):
        traces = SimEngine().run_batch(self.scenario, 3, seed_base=40)
        self.assertEqual([t.seed for t in traces], [40, 41, 42])
        self.assertEqual([t.scenario.seed for t in traces], [40, 41, 42])

    def test_parallel_matches_serial(self):
        serial = SimEngine().run_batch(self.scenario, 3, seed_base=5, threads=0)
        parallel = SimEngine().run_batch(self.scenario, 3, seed_base=5, threads=2)
        self.assertEqual([t.ticks for t in serial], [t.ticks for t in parallel])

    def test_batch_run_matches_single_run(self):
        traces = SimEngine().run_batch(self.scenario, 2, seed_base=9)
        self.assertEqual(traces[1].ticks, SimEngine().run(self.scenario, seed=10).ticks)

    def test_needs_at_least_one_run(self):
        with self.assertRaises(ValueError):
            SimEngine().run_batch(self.scenario, 0)


if __name__ == "__main__":
    unittest.main()
