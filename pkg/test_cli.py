#!/usr/bin/env python3
"""
Tests for the swarm_landing command line runner.
"""

import contextlib
import io
import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import swarm_landing
from swarm_landing_lib.constants import EXIT_ABORTED, EXIT_IO, EXIT_OK, EXIT_VALIDATION
from swarm_landing_lib.errors import CalibrationError

NOISELESS = {"noise": {"sigma_pos": 0.0, "sigma_yaw": 0.0, "sigma_pos_speed_gain": 0.0}}
SHORT = {"duration": 0.5}


class CliTestCase(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.addCleanup(self._tmp.cleanup)
        self.stderr = io.StringIO()

    def scenario_file(self, data, name="scenario.json") -> str:
        path = self.tmp / name
        path.write_text(data if isinstance(data, str) else json.dumps(data))
        return str(path)

    def main(self, *argv) -> int:
        with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(self.stderr):
            return swarm_landing.main(list(argv))


class TestRunCommand(CliTestCase):
    """Single landings."""

    def test_noiseless_run_succeeds(self):
        out = self.tmp / "out"
        code = self.main("run", "--scenario", self.scenario_file(NOISELESS), "--out", str(out))
        self.assertEqual(code, EXIT_OK)
        for name in ("trace.csv", "rover.csv", "trajectory.svg", "summary.json"):
            with self.subTest(file=name):
                self.assertTrue((out / name).is_file())
        summary = json.loads((out / "summary.json").read_text())
        self.assertEqual(summary["kind"], "run")
        self.assertTrue(summary["report"]["success"])

    def test_repeated_runs_are_byte_identical(self):
        scenario = self.scenario_file({**SHORT, "rover": {"speed": 1.0}})
        self.main("run", "--scenario", scenario, "--seed", "8", "--out", str(self.tmp / "a"))
        self.main("run", "--scenario", scenario, "--seed", "8", "--out", str(self.tmp / "b"))
        for name in ("trace.csv", "rover.csv", "trajectory.svg", "summary.json"):
            with self.subTest(file=name):
                self.assertEqual((self.tmp / "a" / name).read_bytes(), (self.tmp / "b" / name).read_bytes())

    def test_no_plot(self):
        out = self.tmp / "out"
        self.main("run", "--scenario", self.scenario_file(SHORT), "--out", str(out), "--no-plot")
        self.assertFalse((out / "trajectory.svg").exists())

    def test_out_from_environment(self):
        out = self.tmp / "from_env"
        with mock.patch.dict(os.environ, {"SWARMSIM_OUT": str(out)}):
            self.main("run", "--scenario", self.scenario_file(SHORT))
        self.assertTrue((out / "trace.csv").is_file())


class TestExitCodes(CliTestCase):
    """Error mapping."""

    def test_validation_errors(self):
        test_cases = [
            ("negative speed", ["--scenario", self.scenario_file({"rover": {"speed": -1}}, "negative.json")]),
            ("syntax", ["--scenario", self.scenario_file('{"seed": 1,,}', "broken.json")]),
            ("unknown key", ["--scenario", self.scenario_file({"speeed": 1}, "unknown.json")]),
            ("negative seed", ["--seed", "-1"]),
        ]
        for label, extra in test_cases:
            with self.subTest(case=label):
                code = self.main("run", "--out", str(self.tmp / "out"), *extra)
                self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("ERROR:", self.stderr.getvalue())
        self.assertIn("rover.speed", self.stderr.getvalue())

    def test_missing_scenario_file(self):
        code = self.main("run", "--scenario", str(self.tmp / "nope.json"), "--out", str(self.tmp / "out"))
        self.assertEqual(code, EXIT_IO)

    def test_unwritable_output(self):
        blocker = self.tmp / "file"
        blocker.write_text("not a directory")
        code = self.main("run", "--scenario", self.scenario_file(SHORT), "--out", str(blocker))
        self.assertEqual(code, EXIT_IO)

    def test_unsuccessful_run(self):
        code = self.main("run", "--scenario", self.scenario_file(SHORT), "--out", str(self.tmp / "out"))
        self.assertEqual(code, EXIT_ABORTED)

    def test_invalid_calibration_target(self):
        code = self.main("calibrate", "--target", "-1", "--out", str(self.tmp / "out"))
        self.assertEqual(code, EXIT_VALIDATION)

    def test_unknown_command(self):
        with self.assertRaises(SystemExit):
            self.main("fly")


class TestBatchCommands(CliTestCase):
    """Batches and sweeps."""

    def test_batch_layout(self):
        out = self.tmp / "out"
        code = self.main("batch", "--scenario", self.scenario_file(SHORT), "--runs", "2", "--out", str(out))
        self.assertEqual(code, EXIT_ABORTED)
        self.assertTrue((out / "run_seed0000" / "trace.csv").is_file())
        self.assertTrue((out / "run_seed0001" / "trace.csv").is_file())
        self.assertTrue((out / "table.txt").read_text().startswith("RMSE window: phase"))
        summary = json.loads((out / "summary.json").read_text())
        self.assertEqual([r["seed"] for r in summary["runs"]], [0, 1])

    def test_sweep_layout(self):
        out = self.tmp / "out"
        code = self.main("sweep", "--scenario", self.scenario_file(SHORT), "--speeds", "0,1",
                         "--runs", "1", "--seed", "3", "--window", "final", "--no-plot", "--out", str(out))
        self.assertEqual(code, EXIT_ABORTED)
        self.assertTrue((out / "speed_0" / "run_seed0003" / "rover.csv").is_file())
        self.assertTrue((out / "speed_1" / "run_seed0003" / "rover.csv").is_file())
        summary = json.loads((out / "summary.json").read_text())
        self.assertEqual(summary["speeds"], [0.0, 1.0])
        self.assertEqual([row["speed"] for row in summary["summary"]["rows"]], [0.0, 1.0])
        self.assertTrue(summary["table"].startswith("RMSE window: final"))

    def test_bad_runs(self):
        code = self.main("batch", "--runs", "0", "--out", str(self.tmp / "out"))
        self.assertEqual(code, EXIT_VALIDATION)


class TestCalibrateCommand(CliTestCase):
    """Calibration output, with the bisection itself stubbed out."""

    def test_writes_calibrated_scenario(self):
        out = self.tmp / "out"
        with mock.patch("swarm_landing.calibrate_noise", return_value=0.012) as calibrate:
            code = self.main("calibrate", "--scenario", self.scenario_file({"seed": 4}),
                             "--runs", "3", "--out", str(out))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(calibrate.call_args.kwargs["runs"], 3)
        calibrated = json.loads((out / "scenario_calibrated.json").read_text())
        self.assertEqual(calibrated["noise"]["sigma_pos"], 0.012)
        self.assertEqual(calibrated["seed"], 4)
        summary = json.loads((out / "summary.json").read_text())
        self.assertEqual(summary["kind"], "calibration")
        self.assertEqual(summary["sigma_pos"], 0.012)
        self.assertEqual(summary["seed_base"], 4)

    def test_unreachable_target(self):
        with mock.patch("swarm_landing.calibrate_noise", side_effect=CalibrationError("unreachable")):
            code = self.main("calibrate", "--out", str(self.tmp / "out"))
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("ERROR: unreachable", self.stderr.getvalue())


if __name__ == "__main__":
    unittest.main()
