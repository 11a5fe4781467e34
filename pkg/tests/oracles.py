"""Independent oracles used by the test suite.

Every oracle here recomputes expected values by brute force (enumeration,
dense sampling, finite differences, grid search) without touching the
closed-form implementation paths it is used to check.
"""

from __future__ import annotations

import math

import numpy as np


def rk4_flow(state, u, wheelbase: float, t: float, n: int = 200) -> np.ndarray:
    """Integrate the Cartesian bicycle model for (possibly negative) time t."""
    x = np.array([state.x_g, state.y_g, state.v, state.phi])
    dt = t / n

    def f(xv):
        return np.array([xv[2] * math.cos(xv[3]), xv[2] * math.sin(xv[3]),
                         u.a, xv[2] / wheelbase * u.steer])

    for _ in range(n):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def frenet_flow(fs, u, kappa: float, wheelbase: float, t: float, n: int = 100) -> np.ndarray:
    """Integrate the road-frame model at constant curvature for signed time t."""
    x = np.array([fs.s, fs.d, fs.v, fs.mu])
    dt = t / n

    def f(xv):
        den = 1.0 - xv[1] * kappa
        sd = xv[2] * math.cos(xv[3]) / den
        return np.array([sd, xv[2] * math.sin(xv[3]), u.a,
                         -kappa * sd + xv[2] / wheelbase * u.steer])

    for _ in range(n):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def frozen_frame_h(phi0: float, l_lon: float, l_lat: float, c_safe: float,
                   ego_xy, ob_xy) -> float:
    """Clearance barrier with the evaluation frame and extents frozen."""
    c, s = math.cos(phi0), math.sin(phi0)
    dx = ob_xy[0] - ego_xy[0]
    dy = ob_xy[1] - ego_xy[1]
    z1 = c * dx + s * dy
    z2 = -s * dx + c * dy
    return math.hypot(z1 / l_lon, z2 / l_lat) - c_safe


def angle_sweep_min_rect_area(points: np.ndarray, step_deg: float = 0.01) -> float:
    """Minimum enclosing-rectangle area over a dense sweep of orientations."""
    pts = np.asarray(points, dtype=float)
    angles = np.deg2rad(np.arange(0.0, 90.0, step_deg))
    c = np.cos(angles)[:, None]
    s = np.sin(angles)[:, None]
    xs = c * pts[None, :, 0] + s * pts[None, :, 1]
    ys = -s * pts[None, :, 0] + c * pts[None, :, 1]
    w = xs.max(axis=1) - xs.min(axis=1)
    h = ys.max(axis=1) - ys.min(axis=1)
    return float((w * h).min())


def support_check(points: np.ndarray, hull: np.ndarray, step_deg: float = 1.0) -> bool:
    """Every point inside or on the hull, and every hull vertex extremal in
    some swept direction."""
    pts = np.asarray(points, dtype=float)
    hl = np.asarray(hull, dtype=float)
    angles = np.deg2rad(np.arange(0.0, 360.0, step_deg))
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    proj_pts = pts @ dirs.T
    proj_hull = hl @ dirs.T
    # containment: no point projects beyond the hull in any direction
    if np.any(proj_pts.max(axis=0) > proj_hull.max(axis=0) + 1e-9):
        return False
    # extremality: each hull vertex achieves the max in some direction
    winners = np.argmax(proj_hull, axis=0)
    return set(range(len(hl))) <= set(winners.tolist())


def union_find_clusters(points: np.ndarray, threshold: float) -> list[tuple[int, ...]]:
    """Brute-force single-linkage clustering over all pairs."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if np.hypot(*(pts[i] - pts[j])) <= threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [tuple(groups[r]) for r in sorted(groups)]


def grid_qp_oracle(Q: np.ndarray, u_o: np.ndarray, C: np.ndarray, b: np.ndarray,
                   lo: np.ndarray, hi: np.ndarray,
                   anchor: np.ndarray | None = None,
                   n: int = 121, target_span: float = 1e-9) -> tuple[np.ndarray, float] | None:
    """Zooming grid search for min (u-u_o)' Q (u-u_o) s.t. C u + b >= 0 in a box.

    The window recenters on the incumbent and shrinks adaptively: it never
    shrinks below a few cells plus twice the incumbent's last move, so an
    optimum sliding along a narrow constraint wedge stays inside the window.
    Returns the best feasible grid point and its objective, or None when no
    feasible point was found.
    """
    def feasible(U):
        return np.all(U @ C.T + b >= -1e-12, axis=1) \
            & np.all(U >= lo - 1e-12, axis=1) & np.all(U <= hi + 1e-12, axis=1)

    def objective(U):
        d = U - u_o
        return np.einsum("ij,jk,ik->i", d, Q, d)

    center = 0.5 * (lo + hi)
    span = (hi - lo).astype(float)
    best_u = None
    best_f = math.inf
    if anchor is not None and feasible(anchor[None, :])[0]:
        best_u = anchor.copy()
        best_f = float(objective(anchor[None, :])[0])
    for level in range(40):
        ax = np.linspace(center[0] - span[0] / 2, center[0] + span[0] / 2, n)
        ay = np.linspace(center[1] - span[1] / 2, center[1] + span[1] / 2, n)
        AA, SS = np.meshgrid(ax, ay)
        U = np.stack([AA.ravel(), SS.ravel()], axis=1)
        mask = feasible(U)
        prev = None if best_u is None else best_u.copy()
        if np.any(mask):
            f = objective(U[mask])
            i = int(np.argmin(f))
            if f[i] < best_f:
                best_f = float(f[i])
                best_u = U[mask][i].copy()
        if best_u is None:
            return None
        move = 0.0 if prev is None else float(np.max(np.abs(best_u - prev)))
        cell = float(np.max(span)) / (n - 1)
        new_span = max(0.2 * float(np.max(span)), 8.0 * cell, 4.0 * move)
        span = np.array([new_span, new_span])
        center = best_u
        if new_span < target_span and move < target_span:
            break

    # local refinement: derivative-free simplex descent on a quadratic-penalty
    # reformulation with continuation on the penalty weight. The simplex
    # adapts its shape to the narrow penalty valley along active constraints,
    # which an axis-aligned grid cannot resolve.
    from scipy.optimize import minimize

    def penalized(u, mu):
        viol = np.maximum(0.0, -(C @ u + b))
        box = (np.maximum(0.0, lo - u) ** 2 + np.maximum(0.0, u - hi) ** 2)
        d = u - u_o
        return float(d @ Q @ d) + mu * (float(viol @ viol) + float(np.sum(box)))

    center = best_u.copy()
    for mu in (1e4, 1e6, 1e8, 1e10, 1e12):
        res = minimize(penalized, center, args=(mu,), method="Nelder-Mead",
                       options={"xatol": 1e-13, "fatol": 1e-13, "maxiter": 4000})
        center = res.x
    if feasible(center[None, :])[0]:
        cand_f = float(objective(center[None, :])[0])
        if cand_f < best_f:
            best_u, best_f = center.copy(), cand_f
    else:
        viol = float(np.max(np.maximum(0.0, -(C @ center + b))))
        cand_f = float(objective(center[None, :])[0])
        if viol < 1e-8 and cand_f < best_f:  # within penalty slack of the boundary
            best_u, best_f = center.copy(), cand_f
    return best_u, best_f


def boundary_points(box, n: int = 2500) -> np.ndarray:
    """Dense sampling of a box's boundary (n points per side)."""
    corners = box.corners()
    pts = []
    for i in range(4):
        a, c = corners[i], corners[(i + 1) % 4]
        t = np.linspace(0.0, 1.0, n, endpoint=False)[:, None]
        pts.append(a[None, :] * (1 - t) + c[None, :] * t)
    return np.vstack(pts)
