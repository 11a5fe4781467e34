"""Elliptical clearance barrier and affine-in-control constraint rows.

The barrier measures obstacle clearance in the ego frame:

    h = sqrt(d_lon^2 / l_lon^2 + d_lat^2 / l_lat^2) - c_safe

with (d_lon, d_lat) the obstacle center in ego coordinates and (l_lon, l_lat)
safety half-extents built from both bodies' shapes and relative heading.

Derivatives are evaluated in a frame FROZEN at the current heading: the frame
does not co-rotate as the vehicle steers, so h has relative degree 2 and
steering enters only through the rotation of the ego velocity vector. That
yields d2/dt2 of the frame coordinates (-a, -(v^2/L) * steer), and every
constraint row below stays affine in the control [a, steer]. The optional
non-frozen variant adds the frame-rotation coupling to the steering
coefficient and is kept behind ``heading_frozen=False`` for review.

All derivatives are closed-form; finite differences appear only in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import BoundingBox
from .road import FrenetState, RoadModel, SingularFrenetError
from .vehicle import ControlInput, ControlLimits, VehicleGeometry, VehicleState


class CoincidentCentersError(ValueError):
    """Ego and obstacle centers coincide; the barrier is not differentiable there."""


@dataclass(frozen=True)
class ObstacleState:
    """Obstacle box plus world-frame velocity. Heading rate is carried but the
    constraint rows treat the obstacle heading as constant."""

    box: BoundingBox
    vx: float
    vy: float
    heading_rate: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.vx, self.vy, self.heading_rate)):
            raise ValueError("obstacle velocity must be finite")


@dataclass(frozen=True)
class BarrierParams:
    """Gains and margins of the constraint layer.

    c_safe scales the safety ellipse; lon/lat margins add clearance on top of
    the projected body extents; alpha1/alpha2 are the linear class-K gains of
    the second-order obstacle condition, beta the feasibility-row gain, gamma
    the road-row gain.
    """

    c_safe: float = 1.0
    lon_margin: float = 2.0
    lat_margin: float = 1.2
    alpha1: float = 1.2
    alpha2: float = 1.2
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.c_safe < 1.0:
            raise ValueError("c_safe must be >= 1")
        if min(self.alpha1, self.alpha2, self.beta, self.gamma) <= 0.0:
            raise ValueError("gains must be positive")
        if self.lon_margin < 0.0 or self.lat_margin < 0.0:
            raise ValueError("margins must be nonnegative")


@dataclass(frozen=True)
class ConstraintRow:
    """Affine constraint in control space: c_a * a + c_steer * steer + b >= 0."""

    c_a: float
    c_steer: float
    b: float
    tag: str

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.c_a, self.c_steer, self.b)):
            raise ValueError(f"constraint row {self.tag!r} has non-finite coefficients")

    def value(self, u: ControlInput) -> float:
        return self.c_a * u.a + self.c_steer * u.steer + self.b


def lon_lat_distance(ego: VehicleState, ob: ObstacleState) -> tuple[float, float]:
    """Obstacle center in ego coordinates: rotation by -phi about the ego center."""
    dx = ob.box.x - ego.x_g
    dy = ob.box.y - ego.y_g
    c, s = math.cos(ego.phi), math.sin(ego.phi)
    return c * dx + s * dy, -s * dx + c * dy


def safety_coefficients(ego_geom: VehicleGeometry, ob: ObstacleState,
                        ego: VehicleState, params: BarrierParams) -> tuple[float, float]:
    """Safety half-extents: ego half-body plus the obstacle box projected onto
    the ego axes, plus the configured margins."""
    dth = ob.box.theta - ego.phi
    c, s = abs(math.cos(dth)), abs(math.sin(dth))
    l_lon = 0.5 * (ego_geom.body_length + ob.box.l * c + ob.box.w * s) + params.lon_margin
    l_lat = 0.5 * (ego_geom.body_width + ob.box.l * s + ob.box.w * c) + params.lat_margin
    return l_lon, l_lat


class _Core:
    """Shared frozen-frame quantities for one (ego, obstacle) pair."""

    __slots__ = ("z1", "z2", "zd1", "zd2", "l_lon", "l_lat", "w1", "w2",
                 "rho", "h", "q", "hdot", "m", "curv", "v", "L")

    def __init__(self, ego: VehicleState, ob: ObstacleState,
                 geom: VehicleGeometry, params: BarrierParams):
        c, s = math.cos(ego.phi), math.sin(ego.phi)
        dx = ob.box.x - ego.x_g
        dy = ob.box.y - ego.y_g
        self.z1 = c * dx + s * dy
        self.z2 = -s * dx + c * dy
        vrx = ob.vx - ego.v * c
        vry = ob.vy - ego.v * s
        self.zd1 = c * vrx + s * vry
        self.zd2 = -s * vrx + c * vry
        self.l_lon, self.l_lat = safety_coefficients(geom, ob, ego, params)
        self.w1 = self.z1 / self.l_lon ** 2
        self.w2 = self.z2 / self.l_lat ** 2
        rho2 = self.z1 * self.w1 + self.z2 * self.w2
        if rho2 < 1e-18:
            raise CoincidentCentersError("ego and obstacle centers coincide")
        self.rho = math.sqrt(rho2)
        self.h = self.rho - params.c_safe
        self.q = self.w1 * self.zd1 + self.w2 * self.zd2
        self.hdot = self.q / self.rho
        self.m = self.zd1 ** 2 / self.l_lon ** 2 + self.zd2 ** 2 / self.l_lat ** 2
        self.curv = self.m / self.rho - self.q ** 2 / self.rho ** 3
        self.v = ego.v
        self.L = geom.wheelbase


def eval_h(ego: VehicleState, ob: ObstacleState, geom: VehicleGeometry,
           params: BarrierParams) -> float:
    """Barrier value; >= 0 iff the obstacle center is outside the safety ellipse."""
    core = _Core(ego, ob, geom, params)
    return core.h


def eval_h_dot(ego: VehicleState, ob: ObstacleState, geom: VehicleGeometry,
               params: BarrierParams) -> float:
    """Control-free time derivative of h (includes the obstacle velocity)."""
    return _Core(ego, ob, geom, params).hdot


def eval_h_gradient(ego: VehicleState, ob: ObstacleState, geom: VehicleGeometry,
                    params: BarrierParams) -> tuple[float, float, float, float, float, float]:
    """Gradient of h w.r.t. (x_g, y_g, v, phi, x_ob, y_ob).

    The phi entry differentiates through the evaluation frame and the
    heading-dependent safety extents, so it matches finite differences of
    eval_h away from relative headings that are multiples of pi/2 (where the
    projected extents are not differentiable).
    """
    core = _Core(ego, ob, geom, params)
    c, s = math.cos(ego.phi), math.sin(ego.phi)
    p1 = core.w1 / core.rho
    p2 = core.w2 / core.rho
    d_xg = -(c * p1 - s * p2)
    d_yg = -(s * p1 + c * p2)
    # frame rotation plus the heading dependence of the safety extents
    dth = ob.box.theta - ego.phi
    sgn_c = math.copysign(1.0, math.cos(dth))
    sgn_s = math.copysign(1.0, math.sin(dth))
    dllon_ddth = 0.5 * (-ob.box.l * sgn_c * math.sin(dth) + ob.box.w * sgn_s * math.cos(dth))
    dllat_ddth = 0.5 * (ob.box.l * sgn_s * math.cos(dth) - ob.box.w * sgn_c * math.sin(dth))
    drho_dllon = -core.z1 ** 2 / (core.l_lon ** 3 * core.rho)
    drho_dllat = -core.z2 ** 2 / (core.l_lat ** 3 * core.rho)
    d_phi = (p1 * core.z2 - p2 * core.z1) - (drho_dllon * dllon_ddth + drho_dllat * dllat_ddth)
    return d_xg, d_yg, 0.0, d_phi, -d_xg, -d_yg


def obstacle_constraint_row(ego: VehicleState, ob: ObstacleState,
                            geom: VehicleGeometry, params: BarrierParams,
                            tag: str = "obstacle",
                            heading_frozen: bool = True) -> ConstraintRow:
    """Second-order barrier condition as an affine row:

        h'' (affine in u) + (alpha1 + alpha2) h' + alpha1 alpha2 h >= 0

    with obstacle motion folded into h' and h'' at constant obstacle velocity.
    """
    core = _Core(ego, ob, geom, params)
    a1, a2 = params.alpha1, params.alpha2
    p1 = core.w1 / core.rho
    p2 = core.w2 / core.rho
    c_a = -p1
    c_steer = -(core.v ** 2 / core.L) * p2
    if not heading_frozen:
        # frame-rotation coupling: d/d(frame angle) of (h' + alpha1 h)
        n1 = core.zd1 / core.l_lon ** 2 / core.rho - core.w1 * core.q / core.rho ** 3
        n2 = core.zd2 / core.l_lat ** 2 / core.rho - core.w2 * core.q / core.rho ** 3
        gain = (core.z2 * n1 - core.z1 * n2) \
            + (p1 * core.zd2 - p2 * core.zd1) \
            + a1 * (p1 * core.z2 - p2 * core.z1)
        c_steer += (core.v / core.L) * gain
    b = core.curv + (a1 + a2) * core.hdot + a1 * a2 * core.h
    return ConstraintRow(c_a=c_a, c_steer=c_steer, b=b, tag=tag)


def feasibility_barrier(ego: VehicleState, ob: ObstacleState,
                        geom: VehicleGeometry, params: BarrierParams,
                        limits: ControlLimits) -> float:
    """Best achievable barrier condition under extreme braking/acceleration.

    h_F = max over u* in {(a_min, 0), (a_max, 0)} of the obstacle condition
    evaluated at u*. Ties prefer the a_max branch.
    """
    core = _Core(ego, ob, geom, params)
    c_a = -core.w1 / core.rho
    base = core.curv + (params.alpha1 + params.alpha2) * core.hdot \
        + params.alpha1 * params.alpha2 * core.h
    a_star = limits.a_max if c_a >= 0.0 else limits.a_min
    return c_a * a_star + base


def feasibility_constraint_row(ego: VehicleState, ob: ObstacleState,
                               geom: VehicleGeometry, params: BarrierParams,
                               limits: ControlLimits, tag: str = "feasibility",
                               heading_frozen: bool = True) -> ConstraintRow:
    """First-order condition keeping h_F nonnegative: h_F' + beta h_F >= 0.

    h_F is differentiated through the active extreme-acceleration branch
    (frozen at the evaluation point); its dependence on the relative position
    and velocity yields closed-form third-order terms of the barrier.
    """
    core = _Core(ego, ob, geom, params)
    a1, a2 = params.alpha1, params.alpha2
    asum = a1 + a2
    rho, q, m = core.rho, core.q, core.m
    w = (core.w1, core.w2)
    szd = (core.zd1 / core.l_lon ** 2, core.zd2 / core.l_lat ** 2)

    c_a_row = -core.w1 / rho
    a_star = limits.a_max if c_a_row >= 0.0 else limits.a_min
    base = core.curv + asum * core.hdot + a1 * a2 * core.h
    h_f = c_a_row * a_star + base

    # gradient of h_F w.r.t. the frame coordinates z
    col1 = 1.0 / (core.l_lon ** 2 * rho) - core.w1 ** 2 / rho ** 3
    col2 = -core.w1 * core.w2 / rho ** 3
    gz = [
        -m * w[i] / rho ** 3 - 2.0 * q * szd[i] / rho ** 3 + 3.0 * q * q * w[i] / rho ** 5
        + asum * (szd[i] / rho - q * w[i] / rho ** 3)
        + a1 * a2 * w[i] / rho
        for i in (0, 1)
    ]
    gz[0] -= a_star * col1
    gz[1] -= a_star * col2

    # gradient of h_F w.r.t. the frame velocity zdot
    gzd = [2.0 * szd[i] / rho - 2.0 * q * w[i] / rho ** 3 + asum * w[i] / rho
           for i in (0, 1)]

    c_a = -gzd[0]
    c_steer = -(core.v ** 2 / core.L) * gzd[1]
    if not heading_frozen:
        jz = (core.z2, -core.z1)
        jzd = (core.zd2, -core.zd1)
        c_steer += (core.v / core.L) * (gz[0] * jz[0] + gz[1] * jz[1]
                                        + gzd[0] * jzd[0] + gzd[1] * jzd[1])
    b = gz[0] * core.zd1 + gz[1] * core.zd2 + params.beta * h_f
    return ConstraintRow(c_a=c_a, c_steer=c_steer, b=b, tag=tag)


def road_constraint_rows(fs: FrenetState, road: RoadModel, geom: VehicleGeometry,
                         params: BarrierParams) -> tuple[ConstraintRow, ConstraintRow]:
    """Second-order rows for the lateral bounds h_lo = d - d_min, h_hi = d_max - d.

    With h' = +-v sin(mu) and h'' = +-(a sin(mu) + v cos(mu) mu'), each bound
    yields  h'' + 2 gamma h' + gamma^2 h >= 0,  affine in the control.
    """
    kappa = road.curvature_at(fs.s)
    denom = 1.0 - fs.d * kappa
    if denom <= 0.0:
        raise SingularFrenetError(f"1 - d*kappa = {denom:.4g} <= 0")
    g = params.gamma
    sin_mu = math.sin(fs.mu)
    cos_mu = math.cos(fs.mu)
    drift = -kappa * fs.v ** 2 * cos_mu ** 2 / denom  # v cos(mu) * drift part of mu'
    steer_coef = fs.v ** 2 * cos_mu / geom.wheelbase   # v cos(mu) * (v/L)

    h_lo = fs.d - road.d_min
    lower = ConstraintRow(
        c_a=sin_mu, c_steer=steer_coef,
        b=drift + 2.0 * g * fs.v * sin_mu + g * g * h_lo,
        tag="road:lower")
    h_hi = road.d_max - fs.d
    upper = ConstraintRow(
        c_a=-sin_mu, c_steer=-steer_coef,
        b=-drift - 2.0 * g * fs.v * sin_mu + g * g * h_hi,
        tag="road:upper")
    return lower, upper
