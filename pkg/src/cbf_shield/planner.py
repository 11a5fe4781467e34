"""Naive path-tracking planner: pure pursuit plus proportional speed hold.

Deliberately risk-blind so the contribution of the revision layer can be
isolated in closed-loop experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .road import RoadModel
from .vehicle import ControlInput, VehicleGeometry, VehicleState


@dataclass(frozen=True)
class PlannerParams:
    v_target: float
    k_speed: float = 0.8
    lookahead_gain: float = 0.8
    min_lookahead: float = 4.0
    max_lookahead: float = 25.0

    def __post_init__(self):
        if self.v_target <= 0.0:
            raise ValueError("v_target must be positive")


class PurePursuitPlanner:
    def __init__(self, road: RoadModel, geom: VehicleGeometry, params: PlannerParams):
        self.road = road
        self.geom = geom
        self.params = params

    def propose(self, state: VehicleState) -> ControlInput:
        p = self.params
        s, _, _, _ = self.road.project(state.x_g, state.y_g)
        lookahead = min(max(p.lookahead_gain * state.v, p.min_lookahead), p.max_lookahead)
        s_target = s + lookahead
        if s_target >= self.road.length:
            # past the end of the route: hold heading, keep speed
            return ControlInput(p.k_speed * (p.v_target - state.v), 0.0)
        target, _ = self.road.frenet_to_world(s_target, 0.0)
        alpha = math.atan2(target[1] - state.y_g, target[0] - state.x_g) - state.phi
        steer = 2.0 * self.geom.wheelbase * math.sin(alpha) / lookahead
        return ControlInput(p.k_speed * (p.v_target - state.v), steer)
