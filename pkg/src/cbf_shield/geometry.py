"""Planar geometry primitives: oriented boxes, convex hulls, minimum-area rectangles.

All angles are radians. Box headings live in [-pi/2, pi/2) because a
rectangle's orientation has period pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.remainder(angle, TWO_PI)
    return math.pi if r == -math.pi else r


def wrap_box_heading(theta: float) -> float:
    """Wrap a rectangle heading to [-pi/2, pi/2)."""
    r = math.remainder(theta, math.pi)
    return -0.5 * math.pi if r == 0.5 * math.pi else r


@dataclass(frozen=True)
class BoundingBox:
    """Oriented rectangle: center (x, y), length l along heading theta, width w."""

    x: float
    y: float
    l: float
    w: float
    theta: float

    def __post_init__(self):
        if not (self.l > 0.0 and self.w > 0.0):
            raise ValueError(f"box dimensions must be positive, got l={self.l}, w={self.w}")
        if not all(math.isfinite(v) for v in (self.x, self.y, self.l, self.w, self.theta)):
            raise ValueError("box fields must be finite")
        object.__setattr__(self, "theta", wrap_box_heading(float(self.theta)))

    @property
    def area(self) -> float:
        return self.l * self.w

    def corners(self) -> np.ndarray:
        """Corner coordinates, counter-clockwise, shape (4, 2)."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        hl, hw = 0.5 * self.l, 0.5 * self.w
        local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.array([self.x, self.y])

    def contains(self, points: np.ndarray, slack: float = 0.0, inflate: float = 0.0) -> np.ndarray:
        """Boolean mask of points inside the box (inflated by `inflate` per side)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        c, s = math.cos(self.theta), math.sin(self.theta)
        dx = pts[:, 0] - self.x
        dy = pts[:, 1] - self.y
        lon = c * dx + s * dy
        lat = -s * dx + c * dy
        hl = 0.5 * self.l + inflate + slack
        hw = 0.5 * self.w + inflate + slack
        return (np.abs(lon) <= hl) & (np.abs(lat) <= hw)

    def translated(self, dx: float, dy: float) -> "BoundingBox":
        return BoundingBox(self.x + dx, self.y + dy, self.l, self.w, self.theta)


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull of 2D points, counter-clockwise, no collinear vertices retained.

    Monotone-chain construction (a Graham-scan variant). Degenerate inputs are
    returned as-is: one point -> that point, collinear set -> the two extreme
    endpoints. Output starts at the lexicographically smallest point.
    """
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) == 0:
        raise ValueError("convex_hull needs at least one point")
    if len(pts) == 1:
        return pts.copy()

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0.0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0.0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:
        # all points collinear: keep the two lexicographic extremes
        return np.array([pts[0], pts[-1]])
    return np.array(hull)


def min_area_rect(hull: np.ndarray, min_width: float = 0.0) -> BoundingBox:
    """Minimum-area enclosing rectangle of a convex hull.

    One rectangle side is collinear with a hull edge (rotating-calipers
    property); every hull point lies inside or on the result within 1e-9.
    Degenerate hulls (a point or a segment) yield a box with width clamped
    to `min_width`.
    """
    pts = np.asarray(hull, dtype=float).reshape(-1, 2)
    floor = max(min_width, 1e-9)
    if len(pts) == 1:
        return BoundingBox(pts[0, 0], pts[0, 1], floor, floor, 0.0)
    if len(pts) == 2:
        d = pts[1] - pts[0]
        length = float(np.hypot(d[0], d[1]))
        mid = 0.5 * (pts[0] + pts[1])
        return BoundingBox(mid[0], mid[1], max(length, floor), floor,
                           math.atan2(d[1], d[0]))

    edges = np.roll(pts, -1, axis=0) - pts
    best = None  # (area, angle, lo_x, hi_x, lo_y, hi_y)
    for e in edges:
        ang = math.atan2(e[1], e[0])
        c, s = math.cos(ang), math.sin(ang)
        xs = c * pts[:, 0] + s * pts[:, 1]
        ys = -s * pts[:, 0] + c * pts[:, 1]
        lo_x, hi_x = float(xs.min()), float(xs.max())
        lo_y, hi_y = float(ys.min()), float(ys.max())
        area = (hi_x - lo_x) * (hi_y - lo_y)
        if best is None or area < best[0]:
            best = (area, ang, lo_x, hi_x, lo_y, hi_y)

    _, ang, lo_x, hi_x, lo_y, hi_y = best
    cx_r, cy_r = 0.5 * (lo_x + hi_x), 0.5 * (lo_y + hi_y)
    c, s = math.cos(ang), math.sin(ang)
    cx = c * cx_r - s * cy_r
    cy = s * cx_r + c * cy_r
    length, width = hi_x - lo_x, hi_y - lo_y
    if length < width:
        length, width = width, length
        ang += 0.5 * math.pi
    return BoundingBox(cx, cy, max(length, floor), max(width, floor), ang)


def rect_overlap(a: BoundingBox, b: BoundingBox) -> float | None:
    """Separating-axis overlap test for two oriented rectangles.

    Returns the penetration depth (minimal translation distance along a face
    normal) when the boxes overlap, or None when separated. Face normals of
    both boxes (4 axes) are sufficient and exact for rectangles.
    """
    ca = a.corners()
    cb = b.corners()
    axes = []
    for th in (a.theta, b.theta):
        c, s = math.cos(th), math.sin(th)
        axes.append((c, s))
        axes.append((-s, c))
    depth = math.inf
    for ax, ay in axes:
        pa = ca[:, 0] * ax + ca[:, 1] * ay
        pb = cb[:, 0] * ax + cb[:, 1] * ay
        ov = min(pa.max(), pb.max()) - max(pa.min(), pb.min())
        if ov < 0.0:
            return None
        depth = min(depth, ov)
    return float(depth)
