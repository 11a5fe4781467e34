"""Artifact writers: trace CSV, metrics JSON, batch report, trajectory figures.

All outputs are deterministic for identical inputs: floats are serialized via
repr (shortest round-trip), JSON keys are sorted, and the SVG renderer strips
the creation date and pins the hash salt. Wall-clock timings therefore live in
a separate timings.json, outside the deterministic report.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .simulator import Metrics, SimulationTrace, compute_metrics  # noqa: E402

plt.rcParams["svg.hashsalt"] = "cbf-shield"


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def trace_columns(trace: SimulationTrace) -> list[str]:
    tags = trace.obstacle_tags
    cols = ["t", "x", "y", "v", "phi", "s", "d", "mu",
            "a_cmd", "steer_cmd", "a", "steer",
            "status", "revised", "n_supp", "active", "events"]
    cols += [f"h_{tag}" for tag in tags]
    cols += [f"hF_{tag}" for tag in tags]
    cols += ["hF_ogm_min"]
    return cols


def write_trace_csv(trace: SimulationTrace, path: Path) -> None:
    """One row per tick; column order is documented in the README."""
    tags = trace.obstacle_tags
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(trace_columns(trace))
        for rec in trace.records:
            row = [_fmt(rec.t), _fmt(rec.ego.x_g), _fmt(rec.ego.y_g),
                   _fmt(rec.ego.v), _fmt(rec.ego.phi),
                   _fmt(rec.frenet.s), _fmt(rec.frenet.d), _fmt(rec.frenet.mu),
                   _fmt(rec.u_o.a), _fmt(rec.u_o.steer), _fmt(rec.u.a), _fmt(rec.u.steer),
                   rec.status, "1" if rec.revised else "0", str(rec.n_supplementary),
                   "|".join(rec.active), "|".join(rec.events)]
            row += [_fmt(rec.h.get(tag, math.nan)) for tag in tags]
            row += [_fmt(rec.h_f.get(tag, math.nan)) for tag in tags]
            row.append(_fmt(rec.h_f.get("ogm_min", math.nan)))
            writer.writerow(row)


def metrics_payload(trace: SimulationTrace, metrics: Metrics | None = None) -> dict:
    m = metrics or compute_metrics(trace)
    return {
        "mode": trace.mode,
        "seed": trace.seed,
        "dt": trace.spec.dt,
        "duration": trace.spec.duration,
        "metrics": asdict(m),
        "events": [
            {"tag": e.tag, "t_impact": e.t_impact, "penetration": e.penetration,
             "at_fault": e.at_fault}
            for e in trace.events
        ],
    }


def write_json(payload: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")


def render_trajectory_svg(trace: SimulationTrace, path: Path) -> None:
    """Plan view (centerline, road bounds, ego and obstacle trajectories) with a
    barrier-value subplot underneath; written as deterministic SVG."""
    road = trace.spec.road
    fig, (ax_map, ax_h) = plt.subplots(
        2, 1, figsize=(9.0, 7.0), height_ratios=[2.2, 1.0], constrained_layout=True)

    s_grid = [road.arc_lengths[0] + i * (road.length - road.arc_lengths[0]) / 400.0
              for i in range(401)]
    center = [road.frenet_to_world(s, 0.0)[0] for s in s_grid]
    lo = [road.frenet_to_world(s, road.d_min)[0] for s in s_grid]
    hi = [road.frenet_to_world(s, road.d_max)[0] for s in s_grid]
    ax_map.plot([p[0] for p in center], [p[1] for p in center],
                "--", color="0.6", lw=1.0, label="centerline")
    ax_map.plot([p[0] for p in lo], [p[1] for p in lo], "-", color="0.3", lw=1.2)
    ax_map.plot([p[0] for p in hi], [p[1] for p in hi], "-", color="0.3", lw=1.2,
                label="road bounds")

    ts = [rec.t for rec in trace.records]
    ax_map.plot([rec.ego.x_g for rec in trace.records],
                [rec.ego.y_g for rec in trace.records],
                color="tab:red", lw=1.8, label="ego")
    for tag in trace.obstacle_tags:
        xs = [rec.obstacles[tag].box.x for rec in trace.records]
        ys = [rec.obstacles[tag].box.y for rec in trace.records]
        ax_map.plot(xs, ys, lw=1.0, alpha=0.8, label=tag)
    for ev in trace.events:
        rec = trace.records[ev.start_tick]
        ax_map.plot(rec.ego.x_g, rec.ego.y_g, "x", color="k", ms=9, mew=2)
    ax_map.set_aspect("equal", adjustable="datalim")
    ax_map.set_xlabel("x [m]")
    ax_map.set_ylabel("y [m]")
    ax_map.legend(loc="best", fontsize=8)
    ax_map.set_title(f"trajectories (mode={trace.mode}, seed={trace.seed})")

    for tag in trace.obstacle_tags:
        ax_h.plot(ts, [rec.h.get(tag, math.nan) for rec in trace.records],
                  lw=1.0, label=f"h {tag}")
    ax_h.axhline(0.0, color="k", lw=0.8)
    ax_h.set_xlabel("t [s]")
    ax_h.set_ylabel("barrier h")
    ax_h.legend(loc="best", fontsize=8)

    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_offset_comparison_svg(traces: dict[str, SimulationTrace], path: Path) -> None:
    """Lateral-offset-over-time comparison across ablation modes."""
    fig, ax = plt.subplots(figsize=(8.0, 4.0), constrained_layout=True)
    road = None
    for mode, trace in traces.items():
        road = trace.spec.road
        ax.plot([rec.t for rec in trace.records],
                [rec.frenet.d for rec in trace.records], lw=1.5, label=mode)
    if road is not None:
        ax.axhline(road.d_min, color="0.3", lw=1.0, ls="--")
        ax.axhline(road.d_max, color="0.3", lw=1.0, ls="--")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("lateral offset d [m]")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def build_report(runs: list[dict], config_echo: dict) -> dict:
    """Aggregate per-run metrics into the accident table.

    ``runs`` entries need keys mode, seed, metrics (dict). Aggregate counts are
    sums over runs; the x/N strings count runs with at least one event.
    """
    modes: dict[str, list[dict]] = {}
    for run in runs:
        modes.setdefault(run["mode"], []).append(run)
    table = []
    for mode in sorted(modes):
        rows = sorted(modes[mode], key=lambda r: r["seed"])
        n = len(rows)
        collisions = sum(r["metrics"]["collision_count"] for r in rows)
        at_fault = sum(r["metrics"]["at_fault_collision_count"] for r in rows)
        runs_with_collision = sum(1 for r in rows if r["metrics"]["collision_count"] > 0)
        runs_with_at_fault = sum(1 for r in rows if r["metrics"]["at_fault_collision_count"] > 0)
        table.append({
            "mode": mode,
            "runs": n,
            "collision_count": collisions,
            "at_fault_collision_count": at_fault,
            "accident_runs": f"{runs_with_collision}/{n}",
            "at_fault_runs": f"{runs_with_at_fault}/{n}",
        })
    return {
        "config": config_echo,
        "per_run": sorted(runs, key=lambda r: (r["mode"], r["seed"])),
        "aggregate": table,
    }
