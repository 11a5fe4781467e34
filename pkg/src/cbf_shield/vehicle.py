"""Kinematic bicycle model in Cartesian coordinates.

State is [x_g, y_g, v, phi] (mass-center position, longitudinal speed,
heading); control is [a, tan(delta_f)]. The slip angle is assumed small, so
the model is affine in the control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import BoundingBox, wrap_angle


@dataclass(frozen=True)
class VehicleState:
    x_g: float
    y_g: float
    v: float
    phi: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x_g, self.y_g, self.v, self.phi)):
            raise ValueError("vehicle state must be finite")
        object.__setattr__(self, "phi", wrap_angle(float(self.phi)))

    def body_box(self, geom: "VehicleGeometry") -> BoundingBox:
        return BoundingBox(self.x_g, self.y_g, geom.body_length, geom.body_width, self.phi)


@dataclass(frozen=True)
class ControlInput:
    """Longitudinal acceleration and tan(front steering angle)."""

    a: float
    steer: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.steer)):
            raise ValueError("control input must be finite")


@dataclass(frozen=True)
class VehicleGeometry:
    wheelbase: float
    rear_wheelbase: float
    body_length: float
    body_width: float

    def __post_init__(self):
        if not 0.0 < self.rear_wheelbase < self.wheelbase:
            raise ValueError("need 0 < rear_wheelbase < wheelbase")
        if self.body_length <= 0.0 or self.body_width <= 0.0:
            raise ValueError("body dimensions must be positive")


@dataclass(frozen=True)
class ControlLimits:
    a_min: float
    a_max: float
    steer_min: float
    steer_max: float

    def __post_init__(self):
        if not self.a_min < 0.0 < self.a_max:
            raise ValueError("need a_min < 0 < a_max")
        if not self.steer_min < 0.0 < self.steer_max:
            raise ValueError("need steer_min < 0 < steer_max")

    def clamp(self, u: ControlInput) -> ControlInput:
        a = min(max(u.a, self.a_min), self.a_max)
        steer = min(max(u.steer, self.steer_min), self.steer_max)
        if a == u.a and steer == u.steer:
            return u
        return ControlInput(a, steer)


def cartesian_derivative(state: VehicleState, u: ControlInput,
                         geom: VehicleGeometry) -> np.ndarray:
    """Time derivative [x_g', y_g', v', phi'] = [v cos(phi), v sin(phi), a, v/L * steer]."""
    return np.array([
        state.v * math.cos(state.phi),
        state.v * math.sin(state.phi),
        u.a,
        state.v / geom.wheelbase * u.steer,
    ])


def _deriv_raw(x: np.ndarray, u: ControlInput, L: float) -> np.ndarray:
    return np.array([
        x[2] * math.cos(x[3]),
        x[2] * math.sin(x[3]),
        u.a,
        x[2] / L * u.steer,
    ])


def step(state: VehicleState, u: ControlInput, geom: VehicleGeometry,
         dt: float) -> VehicleState:
    """One classical 4th-order Runge-Kutta step with the control held constant."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    x = np.array([state.x_g, state.y_g, state.v, state.phi])
    L = geom.wheelbase
    k1 = _deriv_raw(x, u, L)
    k2 = _deriv_raw(x + 0.5 * dt * k1, u, L)
    k3 = _deriv_raw(x + 0.5 * dt * k2, u, L)
    k4 = _deriv_raw(x + dt * k3, u, L)
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return VehicleState(x_next[0], x_next[1], x_next[2], wrap_angle(x_next[3]))
