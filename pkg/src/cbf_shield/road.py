"""Road centerline model and Frenet-frame kinematics.

The centerline is a waypoint polyline with precomputed arc length, tangent
angles, and curvature. Lateral offset d is signed positive to the LEFT of the
travel direction; bounds d_min < 0 < d_max are measured from the centerline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import wrap_angle
from .vehicle import ControlInput, VehicleGeometry, VehicleState


class SingularFrenetError(ValueError):
    """1 - d*kappa <= 0: the lateral offset reaches the curvature center."""


@dataclass(frozen=True)
class FrenetState:
    """Arc length s, signed lateral offset d, speed v, local heading error mu."""

    s: float
    d: float
    v: float
    mu: float
    ambiguous: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mu", wrap_angle(float(self.mu)))


class RoadModel:
    """Polyline centerline with arc length, interpolated tangents and curvature."""

    def __init__(self, waypoints: np.ndarray, d_min: float, d_max: float):
        pts = np.asarray(waypoints, dtype=float).reshape(-1, 2)
        if len(pts) < 2:
            raise ValueError("road needs at least two waypoints")
        if not d_min < 0.0 < d_max:
            raise ValueError("need d_min < 0 < d_max")
        seg = np.diff(pts, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len <= 0.0):
            raise ValueError("waypoints must be strictly increasing in arc length")
        s = np.concatenate([[0.0], np.cumsum(seg_len)])

        # per-waypoint tangent angle: averaged segment direction, unwrapped for
        # interpolation; endpoints use the adjacent segment
        seg_ang = np.arctan2(seg[:, 1], seg[:, 0])
        ang = np.empty(len(pts))
        ang[0] = seg_ang[0]
        ang[-1] = seg_ang[-1]
        if len(pts) > 2:
            unwrapped = np.unwrap(seg_ang)
            ang[1:-1] = 0.5 * (unwrapped[:-1] + unwrapped[1:])
            ang[0] = unwrapped[0]
            ang[-1] = unwrapped[-1]
        ang = np.unwrap(ang)

        # signed curvature from the circle through each waypoint triple;
        # endpoints copy their neighbor
        kappa = np.zeros(len(pts))
        if len(pts) > 2:
            a, b, c = pts[:-2], pts[1:-1], pts[2:]
            ab = b - a
            bc = c - b
            ca = c - a
            cross = ab[:, 0] * bc[:, 1] - ab[:, 1] * bc[:, 0]
            denom = (np.hypot(ab[:, 0], ab[:, 1]) * np.hypot(bc[:, 0], bc[:, 1])
                     * np.hypot(ca[:, 0], ca[:, 1]))
            kappa[1:-1] = np.where(denom > 0.0, 2.0 * cross / np.maximum(denom, 1e-300), 0.0)
            kappa[0] = kappa[1]
            kappa[-1] = kappa[-2]

        kd = np.max(np.abs(kappa)) * max(abs(d_min), d_max)
        if kd >= 1.0:
            raise ValueError(
                f"curvature too high for lateral bounds: |kappa|*max(|d_min|,d_max) = {kd:.3f} >= 1")

        self.waypoints = pts
        self.d_min = float(d_min)
        self.d_max = float(d_max)
        self._seg = seg
        self._seg_len = seg_len
        self._s = s
        self._ang = ang
        self._kappa = kappa

    @property
    def length(self) -> float:
        return float(self._s[-1])

    @property
    def arc_lengths(self) -> np.ndarray:
        return self._s

    @property
    def curvatures(self) -> np.ndarray:
        return self._kappa

    def curvature_at(self, s: float) -> float:
        return float(np.interp(s, self._s, self._kappa))

    def tangent_angle_at(self, s: float) -> float:
        return float(np.interp(s, self._s, self._ang))

    def point_at(self, s: float) -> np.ndarray:
        s_c = min(max(s, 0.0), self.length)
        i = min(int(np.searchsorted(self._s, s_c, side="right")) - 1, len(self._seg) - 1)
        i = max(i, 0)
        t = (s_c - self._s[i]) / self._seg_len[i]
        return self.waypoints[i] + t * self._seg[i]

    def frenet_to_world(self, s: float, d: float) -> tuple[np.ndarray, float]:
        """Centerline point offset by d along the left normal; returns (point, tangent angle)."""
        p = self.point_at(s)
        ang = self.tangent_angle_at(min(max(s, 0.0), self.length))
        normal = np.array([-math.sin(ang), math.cos(ang)])
        return p + d * normal, ang

    def _tangency_residual(self, s: float, p: np.ndarray) -> tuple[float, float, float]:
        """(p - c(s)) . t(s) with the smoothed tangent, plus d and tangent angle."""
        c = self.point_at(s)
        ang = self.tangent_angle_at(min(max(s, 0.0), self.length))
        dx, dy = p[0] - c[0], p[1] - c[1]
        f = dx * math.cos(ang) + dy * math.sin(ang)
        d = dx * (-math.sin(ang)) + dy * math.cos(ang)
        return f, d, ang

    def project(self, x: float, y: float) -> tuple[float, float, float, bool]:
        """Closest-point projection onto the centerline.

        A segment-wise pass locates the closest chord; Newton iterations on the
        tangency condition (p - c(s)) . t(s) = 0 then refine s so the smoothed
        tangent is exactly perpendicular to the offset, making the projection
        the exact inverse of the lateral-offset reconstruction. When several
        non-adjacent segments are nearly equidistant the nearest-by-s one wins
        and the ambiguity is flagged.

        Returns (s, d, tangent_angle, ambiguous).
        """
        p = np.array([x, y])
        rel = p - self.waypoints[:-1]
        t = np.einsum("ij,ij->i", rel, self._seg) / (self._seg_len ** 2)
        t = np.clip(t, 0.0, 1.0)
        closest = self.waypoints[:-1] + t[:, None] * self._seg
        diff = p - closest
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        order = np.argsort(dist, kind="stable")
        i = int(order[0])
        best = float(dist[i])
        tol = max(0.01 * best, 0.01)
        near = np.flatnonzero(dist <= best + tol)
        ambiguous = bool(near[-1] - near[0] > 1)  # ties beyond adjacent segments
        if ambiguous:
            i = int(near[0])  # nearest by s among near-ties

        s = float(self._s[i] + t[i] * self._seg_len[i])
        span = float(self._seg_len.max())
        for _ in range(12):
            f, d, ang = self._tangency_residual(s, p)
            if abs(f) < 1e-12:
                break
            j = min(int(np.searchsorted(self._s, s, side="right")) - 1, len(self._seg) - 1)
            j = max(j, 0)
            dth = (self._ang[j + 1] - self._ang[j]) / self._seg_len[j]
            fprime = -1.0 + d * dth
            if fprime >= -1e-6:
                break
            s_new = s - f / fprime
            s = min(max(s_new, max(0.0, s - span)), min(self.length, s + span))
            s = min(max(s, 0.0), self.length)
        f, d, ang = self._tangency_residual(s, p)
        return s, d, ang, ambiguous


def project_to_frenet(state: VehicleState, road: RoadModel) -> FrenetState:
    """Frenet coordinates of a Cartesian vehicle state."""
    s, d, ang, ambiguous = road.project(state.x_g, state.y_g)
    mu = wrap_angle(state.phi - ang)
    return FrenetState(s=s, d=d, v=state.v, mu=mu, ambiguous=ambiguous)


def frenet_to_cartesian(fs: FrenetState, road: RoadModel) -> VehicleState:
    p, ang = road.frenet_to_world(fs.s, fs.d)
    return VehicleState(x_g=float(p[0]), y_g=float(p[1]), v=fs.v,
                        phi=wrap_angle(ang + fs.mu))


def frenet_derivative(fs: FrenetState, u: ControlInput, kappa: float,
                      geom: VehicleGeometry) -> np.ndarray:
    """Time derivative [s', d', v', mu'] of the road-frame bicycle model.

    s' = v cos(mu) / (1 - d*kappa), d' = v sin(mu), v' = a,
    mu' = -kappa * v cos(mu) / (1 - d*kappa) + v/L * steer.
    """
    denom = 1.0 - fs.d * kappa
    if denom <= 0.0:
        raise SingularFrenetError(f"1 - d*kappa = {denom:.4g} <= 0")
    s_dot = fs.v * math.cos(fs.mu) / denom
    return np.array([
        s_dot,
        fs.v * math.sin(fs.mu),
        u.a,
        -kappa * s_dot + fs.v / geom.wheelbase * u.steer,
    ])


def frenet_step(fs: FrenetState, u: ControlInput, kappa: float,
                geom: VehicleGeometry, dt: float) -> FrenetState:
    """RK4 step of the road-frame model with curvature held constant."""
    x = np.array([fs.s, fs.d, fs.v, fs.mu])

    def f(xv: np.ndarray) -> np.ndarray:
        st = FrenetState(s=xv[0], d=xv[1], v=xv[2], mu=xv[3])
        return frenet_derivative(st, u, kappa, geom)

    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return FrenetState(s=x_next[0], d=x_next[1], v=x_next[2], mu=wrap_angle(x_next[3]),
                       ambiguous=fs.ambiguous)
