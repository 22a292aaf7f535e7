#!/usr/bin/env python3
"""
Swarm landing simulator - command line runner.

Runs single landings, seeded batches, rover-speed sweeps and the sensor-noise
calibration, and writes traces, reports and plots to an output directory.
"""

import argparse
import os
import sys
import traceback
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from swarm_landing_lib import (OutputWriter, Scenario, ScenarioLoader, SimEngine, calibrate_noise,
                               expand_sweep, format_table, parse_speeds, run_report,
                               summarize_batch)
from swarm_landing_lib.constants import (ENV_OUT, ENV_VERBOSE, EXIT_ABORTED, EXIT_FATAL, EXIT_IO,
                                         EXIT_OK, EXIT_VALIDATION, DEFAULT_SWEEP_SPEEDS,
                                         STATIC_TARGET_RMSE_CM)
from swarm_landing_lib.errors import CalibrationError, ScenarioSyntaxError, ScenarioValidationError
from swarm_landing_lib.output import run_dirname, speed_dirname
from swarm_landing_lib.sim_engine import threads_from_env

# Load environment variables from .env file
load_dotenv()

DEFAULT_OUT = "swarm_out"


def env_flag(name: str) -> bool:
    return os.getenv(name, "").strip().lower() in ("1", "true", "yes", "on")


def load_scenario(args: argparse.Namespace) -> Scenario:
    """Scenario file (or built-in defaults) with the --seed override applied."""
    if args.scenario:
        scenario = ScenarioLoader(verbose=args.verbose).load(args.scenario)
    else:
        scenario = Scenario()
        if args.verbose:
            print("[VERBOSE] No --scenario given, using built-in defaults.", file=sys.stderr)
    if args.seed is not None:
        if args.seed < 0:
            raise ScenarioValidationError([f"seed: must be >= 0, got {args.seed}"])
        scenario = scenario.with_seed(args.seed)
    return scenario


def resolve_out(args: argparse.Namespace) -> str:
    # Priority: --out flag > SWARMSIM_OUT (environment or .env) > built-in default
    return args.out or os.getenv(ENV_OUT) or DEFAULT_OUT


def resolve_runs(args: argparse.Namespace, scenario: Scenario) -> int:
    if args.runs is not None:
        if args.runs < 1:
            raise ScenarioValidationError([f"runs: must be >= 1, got {args.runs}"])
        return args.runs
    return scenario.sweep.runs if scenario.sweep else 10


def _status(reports) -> int:
    return EXIT_OK if all(r.success for r in reports) else EXIT_ABORTED


def _batch_payload(kind: str, scenario: Scenario, reports, window: str) -> Dict[str, Any]:
    summary = summarize_batch(reports)
    return {
        "kind": kind,
        "scenario": scenario.model_dump(mode="json"),
        "scenario_hash": scenario.scenario_hash(),
        "window": window,
        "runs": [r.model_dump(mode="json") for r in reports],
        "summary": summary.model_dump(mode="json"),
        "table": format_table(summary),
    }


def cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args)
    trace = SimEngine(verbose=args.verbose).run(scenario)
    report = run_report(trace, args.window)
    writer = OutputWriter(resolve_out(args), plots=not args.no_plot, verbose=args.verbose)
    writer.write_run(trace)
    writer.write_summary({
        "kind": "run",
        "scenario": scenario.model_dump(mode="json"),
        "scenario_hash": trace.scenario_hash,
        "window": args.window,
        "report": report.model_dump(mode="json"),
    })
    overall = "-" if report.overall_rmse_cm is None else f"{report.overall_rmse_cm:.2f} cm"
    print(f"seed {trace.seed}: final phase {report.final_phase}, overall RMSE {overall}, "
          f"success={report.success}")
    return _status([report])


def _run_batch(args: argparse.Namespace, scenario: Scenario, runs: int, writer: OutputWriter,
               subdir: Optional[str] = None):
    traces = SimEngine(verbose=args.verbose).run_batch(scenario, runs, scenario.seed,
                                                       threads_from_env())
    reports = []
    for trace in traces:
        run_dir = f"{subdir}/{run_dirname(trace)}" if subdir else run_dirname(trace)
        writer.write_run(trace, run_dir)
        reports.append(run_report(trace, args.window))
    return reports


def cmd_batch(args: argparse.Namespace) -> int:
    scenario = load_scenario(args)
    runs = resolve_runs(args, scenario)
    writer = OutputWriter(resolve_out(args), plots=not args.no_plot, verbose=args.verbose)
    reports = _run_batch(args, scenario, runs, writer)
    payload = _batch_payload("batch", scenario, reports, args.window)
    writer.write_summary(payload)
    writer.write_table(payload["table"])
    print(payload["table"], end="")
    return _status(reports)


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario = load_scenario(args)
    runs = resolve_runs(args, scenario)
    if args.speeds:
        speeds = parse_speeds(args.speeds)
    elif scenario.sweep is not None:
        speeds = list(scenario.sweep.speeds)
    else:
        speeds = list(DEFAULT_SWEEP_SPEEDS)
    if scenario.sweep is not None and scenario.sweep.seed_base is not None and args.seed is None:
        scenario = scenario.with_seed(scenario.sweep.seed_base)

    writer = OutputWriter(resolve_out(args), plots=not args.no_plot, verbose=args.verbose)
    reports = []
    for variant in expand_sweep(scenario, speeds):
        reports.extend(_run_batch(args, variant, runs, writer, speed_dirname(variant.rover.speed)))
    payload = _batch_payload("sweep", scenario, reports, args.window)
    payload["speeds"] = speeds
    writer.write_summary(payload)
    writer.write_table(payload["table"])
    print(payload["table"], end="")
    return _status(reports)


def cmd_calibrate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args)
    runs = resolve_runs(args, scenario)
    sigma = calibrate_noise(args.target, scenario, runs=runs, threads=threads_from_env(),
                            engine=SimEngine(), verbose=args.verbose)
    calibrated = scenario.with_noise(sigma)
    writer = OutputWriter(resolve_out(args), plots=False, verbose=args.verbose)
    ScenarioLoader(verbose=args.verbose).dump(calibrated, writer.directory(None) / "scenario_calibrated.json")
    writer.write_summary({
        "kind": "calibration",
        "target_static_rmse_cm": args.target,
        "sigma_pos": sigma,
        "runs": runs,
        "seed_base": scenario.seed,
        "scenario_hash": calibrated.scenario_hash(),
    })
    print(f"calibrated sigma_pos = {sigma:.6f} m (target {args.target} cm, {runs} runs)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="Path to a scenario JSON file (built-in defaults when omitted)")
    common.add_argument("--seed", type=int, help="Seed override (seed base for batches and sweeps)")
    common.add_argument("--out", help=f"Output directory (overrides {ENV_OUT}; default: {DEFAULT_OUT})")
    common.add_argument("--window", choices=["phase", "final"], default="phase",
                        help="RMSE window: Descend through Touchdown, or the touchdown instant only")
    common.add_argument("--no-plot", action="store_true", help="Skip the SVG trajectory plots")
    common.add_argument("-v", "--verbose", "--debug", dest="verbose", action="store_true",
                        help="Enable verbose output to stderr")

    parser = argparse.ArgumentParser(
        description="Deterministic drone swarm landing simulator",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="Simulate one landing")

    batch = sub.add_parser("batch", parents=[common], help="Seeded repetitions of one scenario")
    batch.add_argument("--runs", type=int, help="Number of runs (default: sweep.runs or 10)")

    sweep = sub.add_parser("sweep", parents=[common], help="Batches over several rover speeds")
    sweep.add_argument("--runs", type=int, help="Runs per speed (default: sweep.runs or 10)")
    sweep.add_argument("--speeds", help="Comma-separated rover speeds in m/s, e.g. 0,0.5,1.0,1.5")

    calibrate = sub.add_parser("calibrate", parents=[common],
                               help="Find sigma_pos matching a static-platform RMSE")
    calibrate.add_argument("--runs", type=int, help="Runs per candidate sigma (default: 10)")
    calibrate.add_argument("--target", type=float, default=STATIC_TARGET_RMSE_CM,
                           help="Target static overall RMSE in cm")
    return parser


COMMANDS = {
    "run": cmd_run,
    "batch": cmd_batch,
    "sweep": cmd_sweep,
    "calibrate": cmd_calibrate,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    args.verbose = args.verbose or env_flag(ENV_VERBOSE)
    try:
        return COMMANDS[args.command](args)
    except (ScenarioSyntaxError, ScenarioValidationError, CalibrationError) as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_IO
    except Exception as e:
        # Fatal error, print regardless of verbosity
        print("\n--- FATAL ERROR ---", file=sys.stderr)
        print(f"An unexpected error occurred: {e}", file=sys.stderr)
        traceback.print_exc(file=sys.stderr)
        print("-------------------", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
