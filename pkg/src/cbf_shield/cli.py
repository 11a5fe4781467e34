"""Command-line front end: single runs, seeded batches, ablation sweeps.

Exit codes: 0 success, 1 runtime failure, 2 scenario validation error.
``CBF_SHIELD_LOG`` sets the log level (DEBUG/INFO/WARNING/ERROR).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .report import (build_report, metrics_payload, render_trajectory_svg,
                     write_json, write_trace_csv)
from .scenario import MODES, ScenarioError, load_scenario, override_spec
from .simulator import compute_metrics, run_scenario

log = logging.getLogger("cbf_shield")


def _configure_logging():
    level = os.environ.get("CBF_SHIELD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _parse_bool(value: str) -> bool:
    if value.lower() in ("true", "1", "yes"):
        return True
    if value.lower() in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {value!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbf-shield",
        description="Closed-loop scenario runner for the control-revision safety shield.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("scenario", type=Path, help="scenario JSON file")
        p.add_argument("--mode", choices=MODES, default=None,
                       help="revision ablation mode (default: scenario setting)")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--dt", type=float, default=None, help="override tick length [s]")
        p.add_argument("--heading-frozen", type=_parse_bool, default=None,
                       metavar="{true,false}",
                       help="freeze the barrier evaluation frame (default true)")
        p.add_argument("--plot", action="store_true", help="emit trajectory.svg")

    run_p = sub.add_parser("run", help="run one scenario")
    common(run_p)
    run_p.add_argument("--seed", type=int, default=None, help="override scenario seed")

    batch_p = sub.add_parser("batch", help="run seeded variants across modes")
    common(batch_p)
    batch_p.add_argument("--seeds", type=int, default=10, metavar="N",
                         help="number of seeded variants per mode (default 10)")
    batch_p.add_argument("--modes", type=str, default=None,
                         help="comma-separated mode list (default: the scenario mode)")
    batch_p.add_argument("--jobs", type=int, default=1,
                         help="parallel worker processes (default 1)")
    return parser


def _load(args) -> "ScenarioSpec":
    spec = load_scenario(args.scenario)
    return override_spec(spec, mode=args.mode, dt=args.dt,
                         heading_frozen=args.heading_frozen)


def _execute(spec) -> tuple[dict, "SimulationTrace", float]:
    t0 = time.perf_counter()
    trace = run_scenario(spec)
    elapsed = time.perf_counter() - t0
    metrics = compute_metrics(trace)
    payload = metrics_payload(trace, metrics)
    return payload, trace, elapsed


def _run_one(args) -> int:
    spec = _load(args)
    if args.seed is not None:
        spec = override_spec(spec, seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    payload, trace, elapsed = _execute(spec)
    write_trace_csv(trace, args.out / "trace.csv")
    write_json(payload, args.out / "metrics.json")
    if args.plot:
        render_trajectory_svg(trace, args.out / "trajectory.svg")
    m = payload["metrics"]
    print(f"mode={spec.mode} seed={spec.seed} collisions={m['collision_count']} "
          f"at_fault={m['at_fault_collision_count']} min_h={m['min_h']:.3f} "
          f"max|d|={m['max_abs_lateral_offset']:.2f} ({elapsed:.2f}s)")
    return 0


def _batch_worker(task):
    scenario_path, mode, seed, dt, heading_frozen, out_dir, plot = task
    spec = load_scenario(scenario_path)
    spec = override_spec(spec, mode=mode, seed=seed, dt=dt, heading_frozen=heading_frozen)
    payload, trace, elapsed = _execute(spec)
    run_dir = Path(out_dir) / mode / f"seed{seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, run_dir / "trace.csv")
    write_json(payload, run_dir / "metrics.json")
    if plot:
        render_trajectory_svg(trace, run_dir / "trajectory.svg")
    return {"mode": mode, "seed": seed, "metrics": payload["metrics"],
            "events": payload["events"]}, elapsed


def _run_batch(args) -> int:
    if args.seeds < 1:
        print("--seeds must be >= 1", file=sys.stderr)
        return 2
    spec = _load(args)
    modes = args.modes.split(",") if args.modes else [spec.mode]
    for mode in modes:
        if mode not in MODES:
            print(f"unknown mode {mode!r} (choose from {', '.join(MODES)})", file=sys.stderr)
            return 2
    args.out.mkdir(parents=True, exist_ok=True)

    tasks = [(args.scenario, mode, spec.seed + k, args.dt, args.heading_frozen,
              args.out, args.plot)
             for mode in modes for k in range(args.seeds)]
    runs: list[dict] = []
    timings: list[dict] = []
    failed = False
    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_batch_worker, tasks))
        else:
            results = [_batch_worker(t) for t in tasks]
        for run, elapsed in results:
            runs.append(run)
            timings.append({"mode": run["mode"], "seed": run["seed"], "seconds": elapsed})
    except Exception as exc:  # scenario/runtime failure mid-batch
        log.error("batch aborted: %s", exc)
        failed = True

    config_echo = {
        "scenario": str(args.scenario), "modes": modes, "seeds": args.seeds,
        "base_seed": spec.seed, "dt": args.dt if args.dt is not None else spec.dt,
        "heading_frozen": spec.filter_config.heading_frozen,
    }
    report = build_report(runs, config_echo)
    write_json(report, args.out / "report.json")
    write_json({"runs": sorted(timings, key=lambda r: (r["mode"], r["seed"]))},
               args.out / "timings.json")
    for row in report["aggregate"]:
        print(f"mode={row['mode']:<15} runs={row['runs']:<3} "
              f"accidents={row['accident_runs']:<6} at_fault={row['at_fault_runs']}")
    if failed:
        print("batch incomplete: partial results written", file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _run_one(args)
        return _run_batch(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
