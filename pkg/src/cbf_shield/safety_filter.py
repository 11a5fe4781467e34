"""Control revision entry point.

Assembles perception conversion, obstacle/feasibility/road constraint rows,
and the QP into one call: given the planner's proposed control, return the
minimally modified control satisfying every safety constraint, or a maximal
braking fallback when no feasible revision exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .barrier import (BarrierParams, CoincidentCentersError, ConstraintRow,
                      ObstacleState, eval_h, feasibility_barrier,
                      feasibility_constraint_row, obstacle_constraint_row,
                      road_constraint_rows)
from .perception import ConversionConfig, OccupancyGrid, convert
from .qp import QpProblem, solve
from .road import RoadModel, SingularFrenetError, project_to_frenet
from .vehicle import ControlInput, ControlLimits, VehicleGeometry, VehicleState

REVISION_EPS = 1e-9


@dataclass(frozen=True)
class FilterConfig:
    barrier: BarrierParams = field(default_factory=BarrierParams)
    limits: ControlLimits = field(default_factory=lambda: ControlLimits(-6.0, 2.5, -0.45, 0.45))
    geometry: VehicleGeometry = field(default_factory=lambda: VehicleGeometry(2.8, 1.4, 4.6, 1.9))
    risk_radius: float = 30.0
    h_activation: float = 2.0
    q_accel: float = 1.0
    q_steer: float = 10.0
    heading_frozen: bool = True
    conversion: ConversionConfig = field(default_factory=ConversionConfig)
    fallback_policy: str = "max_brake_road_steer"

    def __post_init__(self):
        if self.risk_radius <= 0.0:
            raise ValueError("risk_radius must be positive")
        if self.q_accel <= 0.0 or self.q_steer <= 0.0:
            raise ValueError("Q weights must be positive")
        if self.fallback_policy != "max_brake_road_steer":
            raise ValueError(f"unknown fallback policy {self.fallback_policy!r}")

    def q_matrix(self) -> np.ndarray:
        return np.diag([self.q_accel, self.q_steer])


@dataclass(frozen=True)
class RevisionResult:
    u: ControlInput
    revised: bool
    status: str  # "optimal" | "fallback"
    active: tuple[str, ...]
    h_values: dict[str, float]
    h_f_values: dict[str, float]
    n_supplementary: int
    diagnostics: str


def _is_risky(ego: VehicleState, ob: ObstacleState, config: FilterConfig) -> bool:
    if math.hypot(ob.box.x - ego.x_g, ob.box.y - ego.y_g) <= config.risk_radius:
        return True
    try:
        h = eval_h(ego, ob, config.geometry, config.barrier)
    except CoincidentCentersError:
        return True
    return h < config.h_activation


def select_risky_obstacles(ego: VehicleState, obstacles: list[ObstacleState],
                           config: FilterConfig) -> list[ObstacleState]:
    """Obstacles within the risk radius, plus any whose barrier value is below
    the activation threshold. Input order is preserved."""
    return [ob for ob in obstacles if _is_risky(ego, ob, config)]


def _fallback_control(ego: VehicleState, u_o: ControlInput,
                      road_rows: list[ConstraintRow],
                      limits: ControlLimits) -> ControlInput:
    """Maximal braking; steer picked to maximize the most-violated road row
    (affine max-min over the steer interval), or the clamped proposal when no
    road rows exist. Braking cannot reverse the vehicle: at standstill the
    acceleration is held at zero."""
    a = limits.a_min if ego.v > 0.0 else 0.0
    if not road_rows:
        return ControlInput(a, min(max(u_o.steer, limits.steer_min), limits.steer_max))
    candidates = [limits.steer_min, limits.steer_max]
    if len(road_rows) == 2:
        r0, r1 = road_rows[0], road_rows[1]
        dc = r0.c_steer - r1.c_steer
        if abs(dc) > 1e-12:
            cross = ((r1.b + r1.c_a * a) - (r0.b + r0.c_a * a)) / dc
            if limits.steer_min < cross < limits.steer_max:
                candidates.append(cross)
    best_steer = None
    best_val = -math.inf
    for steer in candidates:
        val = min(r.value(ControlInput(a, steer)) for r in road_rows)
        if val > best_val + 1e-12 or (abs(val - best_val) <= 1e-12
                                      and (best_steer is None or steer < best_steer)):
            best_val = val
            best_steer = steer
    return ControlInput(a, best_steer)


class SafetyFilter:
    """Stateless control-revision filter; one instance may serve many scenarios."""

    def __init__(self, config: FilterConfig | None = None):
        self.config = config or FilterConfig()

    def _gather_obstacles(self, obstacles: list[ObstacleState],
                          grid: OccupancyGrid | None) -> tuple[list[tuple[str, ObstacleState]], int]:
        tagged = [(f"ob{i}", ob) for i, ob in enumerate(obstacles)]
        n_supp = 0
        if grid is not None:
            boxes = [ob.box for ob in obstacles]
            for j, box in enumerate(convert(grid, boxes, self.config.conversion)):
                tagged.append((f"ogm{j}", ObstacleState(box=box, vx=0.0, vy=0.0)))
                n_supp += 1
        return tagged, n_supp

    def constraint_rows(self, ego: VehicleState, obstacles: list[ObstacleState],
                        grid: OccupancyGrid | None = None,
                        road: RoadModel | None = None) -> list[ConstraintRow]:
        """All rows the revision would enforce, for debugging/introspection."""
        cfg = self.config
        tagged, _ = self._gather_obstacles(obstacles, grid)
        rows: list[ConstraintRow] = []
        for tag, ob in tagged:
            if not _is_risky(ego, ob, cfg):
                continue
            rows.append(obstacle_constraint_row(
                ego, ob, cfg.geometry, cfg.barrier, tag=f"obstacle:{tag}",
                heading_frozen=cfg.heading_frozen))
            rows.append(feasibility_constraint_row(
                ego, ob, cfg.geometry, cfg.barrier, cfg.limits, tag=f"feasibility:{tag}",
                heading_frozen=cfg.heading_frozen))
        if road is not None:
            fs = project_to_frenet(ego, road)
            rows.extend(road_constraint_rows(fs, road, cfg.geometry, cfg.barrier))
        return rows

    def revise(self, ego: VehicleState, obstacles: list[ObstacleState],
               u_o: ControlInput, grid: OccupancyGrid | None = None,
               road: RoadModel | None = None) -> RevisionResult:
        """Minimally modify u_o so every constraint row holds.

        Never raises on degenerate traffic states: on QP infeasibility or a
        non-evaluable barrier the fallback control (max braking with
        boundary-respecting steer) is returned instead.
        """
        cfg = self.config
        u0 = cfg.limits.clamp(u_o)
        notes: list[str] = []

        tagged, n_supp = self._gather_obstacles(obstacles, grid)

        rows: list[ConstraintRow] = []
        h_values: dict[str, float] = {}
        h_f_values: dict[str, float] = {}
        construction_failed = False
        for tag, ob in tagged:
            if not _is_risky(ego, ob, cfg):
                continue
            try:
                h = eval_h(ego, ob, cfg.geometry, cfg.barrier)
                h_values[tag] = h
                if h < 0.0:
                    notes.append(f"in_collision:{tag}")
                h_f_values[tag] = feasibility_barrier(ego, ob, cfg.geometry,
                                                      cfg.barrier, cfg.limits)
                rows.append(obstacle_constraint_row(
                    ego, ob, cfg.geometry, cfg.barrier, tag=f"obstacle:{tag}",
                    heading_frozen=cfg.heading_frozen))
                rows.append(feasibility_constraint_row(
                    ego, ob, cfg.geometry, cfg.barrier, cfg.limits,
                    tag=f"feasibility:{tag}", heading_frozen=cfg.heading_frozen))
            except CoincidentCentersError:
                notes.append(f"coincident_centers:{tag}")
                construction_failed = True

        road_rows: list[ConstraintRow] = []
        if road is not None:
            try:
                fs = project_to_frenet(ego, road)
                road_rows = list(road_constraint_rows(fs, road, cfg.geometry, cfg.barrier))
                rows.extend(road_rows)
            except SingularFrenetError:
                notes.append("frenet_singular")
                construction_failed = True

        if construction_failed:
            u = _fallback_control(ego, u0, road_rows, cfg.limits)
            return RevisionResult(
                u=u, revised=_differs(u, u_o), status="fallback", active=("fallback",),
                h_values=h_values, h_f_values=h_f_values, n_supplementary=n_supp,
                diagnostics="; ".join(notes))

        problem = QpProblem(Q=cfg.q_matrix(), u_o=u0, rows=tuple(rows), limits=cfg.limits)
        sol = solve(problem)
        if sol.status == "optimal":
            return RevisionResult(
                u=sol.u, revised=_differs(sol.u, u_o), status="optimal",
                active=sol.active_set, h_values=h_values, h_f_values=h_f_values,
                n_supplementary=n_supp, diagnostics="; ".join(notes))

        notes.append("qp_infeasible")
        u = _fallback_control(ego, u0, road_rows, cfg.limits)
        return RevisionResult(
            u=u, revised=_differs(u, u_o), status="fallback", active=("fallback",),
            h_values=h_values, h_f_values=h_f_values, n_supplementary=n_supp,
            diagnostics="; ".join(notes))


def _differs(u: ControlInput, u_o: ControlInput) -> bool:
    return abs(u.a - u_o.a) > REVISION_EPS or abs(u.steer - u_o.steer) > REVISION_EPS
