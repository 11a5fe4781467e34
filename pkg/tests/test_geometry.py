import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbf_shield.geometry import (BoundingBox, convex_hull, min_area_rect,
                                 rect_overlap, wrap_angle, wrap_box_heading)
from oracles import angle_sweep_min_rect_area, boundary_points, support_check


def polygon_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


class TestAngles:
    def test_wrap_angle_range(self):
        for a in np.linspace(-20, 20, 401):
            w = wrap_angle(a)
            assert -math.pi < w <= math.pi
            assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-12)

    def test_wrap_box_heading_period_pi(self):
        assert wrap_box_heading(math.pi / 2) == -math.pi / 2
        for t in np.linspace(-7, 7, 101):
            w = wrap_box_heading(t)
            assert -math.pi / 2 <= w < math.pi / 2
            assert math.isclose(math.tan(w), math.tan(t), rel_tol=1e-9, abs_tol=1e-9)


class TestBoundingBox:
    def test_rejects_nonpositive_dims(self):
        with pytest.raises(ValueError):
            BoundingBox(0, 0, 0.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            BoundingBox(0, 0, 1.0, -0.5, 0.0)

    def test_corners_ccw_and_area(self):
        box = BoundingBox(1.0, 2.0, 4.0, 2.0, 0.3)
        corners = box.corners()
        assert polygon_area(corners) == pytest.approx(8.0)
        assert polygon_area(corners) > 0  # counter-clockwise

    def test_contains_inflate(self):
        box = BoundingBox(0, 0, 2.0, 1.0, 0.0)
        assert box.contains(np.array([[1.2, 0.0]]))[0] == False  # noqa: E712
        assert box.contains(np.array([[1.2, 0.0]]), inflate=0.25)[0] == True  # noqa: E712


class TestConvexHull:
    def test_triangle_ccw(self):
        pts = np.array([[0.0, 0.0], [2.0, 0.1], [1.0, 1.5]])
        hull = convex_hull(pts)
        assert len(hull) == 3
        assert polygon_area(hull) > 0
        assert {tuple(p) for p in hull} == {tuple(p) for p in pts}

    def test_interior_point_excluded(self):
        pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]], dtype=float)
        hull = convex_hull(pts)
        assert len(hull) == 4
        assert (0.5, 0.5) not in {tuple(p) for p in hull}

    def test_degenerate_single_point(self):
        hull = convex_hull(np.array([[3.0, 4.0]]))
        assert hull.shape == (1, 2)

    def test_degenerate_collinear(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.5, 0.5]])
        hull = convex_hull(pts)
        assert hull.shape == (2, 2)
        assert tuple(hull[0]) == (0.0, 0.0)
        assert tuple(hull[-1]) == (2.0, 2.0)

    def test_no_collinear_vertices_retained(self):
        pts = np.array([[0, 0], [1, 0], [2, 0], [2, 1], [0, 1]], dtype=float)
        hull = convex_hull(pts)
        assert len(hull) == 4  # (1,0) dropped

    def test_seeded_support_function_oracle(self):
        rng = np.random.default_rng(42)
        pts = rng.uniform(-10, 10, size=(50, 2))
        hull = convex_hull(pts)
        assert support_check(pts, hull, step_deg=1.0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=3, max_value=40))
    def test_hull_property(self, seed, n):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-5, 5, size=(n, 2))
        hull = convex_hull(pts)
        if len(hull) < 3:
            return
        assert polygon_area(hull) > 0
        # containment: no input point projects beyond the hull in any direction
        angles = np.deg2rad(np.arange(0.0, 360.0, 2.0))
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        assert np.all((pts @ dirs.T).max(axis=0) <= (hull @ dirs.T).max(axis=0) + 1e-9)
        # extremality: each vertex attains the max along its outward bisector
        for i in range(len(hull)):
            prev_edge = hull[i] - hull[i - 1]
            next_edge = hull[(i + 1) % len(hull)] - hull[i]
            normal = np.array([prev_edge[1], -prev_edge[0]])
            normal = normal / np.linalg.norm(normal)
            n2 = np.array([next_edge[1], -next_edge[0]])
            direction = normal + n2 / np.linalg.norm(n2)
            assert np.all(pts @ direction <= hull[i] @ direction + 1e-9)


class TestMinAreaRect:
    def test_axis_aligned_unit_square(self):
        hull = convex_hull(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))
        box = min_area_rect(hull)
        assert box.x == pytest.approx(0.5)
        assert box.y == pytest.approx(0.5)
        assert box.l == pytest.approx(1.0)
        assert box.w == pytest.approx(1.0)
        assert box.theta == pytest.approx(0.0, abs=1e-12)

    def test_rotated_square_heading_mod_half_pi(self):
        ang = math.radians(30.0)
        c, s = math.cos(ang), math.sin(ang)
        base = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float) - 0.5
        pts = base @ np.array([[c, s], [-s, c]])
        box = min_area_rect(convex_hull(pts))
        assert box.l == pytest.approx(1.0, abs=1e-9)
        assert box.w == pytest.approx(1.0, abs=1e-9)
        assert math.remainder(box.theta - ang, math.pi / 2) == pytest.approx(0.0, abs=1e-9)

    def test_hull_contained_within_tolerance(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            pts = rng.uniform(-4, 4, size=(20, 2))
            hull = convex_hull(pts)
            box = min_area_rect(hull)
            assert np.all(box.contains(hull, slack=1e-9))

    def test_seeded_random_hull_vs_angle_sweep(self):
        rng = np.random.default_rng(123)
        pts = rng.uniform(-3, 3, size=(20, 2))
        hull = convex_hull(pts)
        box = min_area_rect(hull)
        sweep = angle_sweep_min_rect_area(hull, step_deg=0.01)
        assert box.area <= sweep + 1e-9  # minimality: sweep only samples orientations
        assert abs(box.area - sweep) <= 1e-3 * sweep

    def test_one_side_collinear_with_hull_edge(self):
        rng = np.random.default_rng(5)
        pts = rng.uniform(0, 6, size=(15, 2))
        hull = convex_hull(pts)
        box = min_area_rect(hull)
        edges = np.roll(hull, -1, axis=0) - hull
        edge_angles = np.arctan2(edges[:, 1], edges[:, 0])
        rect_angles = [box.theta, box.theta + math.pi / 2]
        diffs = [abs(math.remainder(ea - ra, math.pi))
                 for ea in edge_angles for ra in rect_angles]
        assert min(diffs) < 1e-9

    def test_degenerate_width_clamp(self):
        hull = np.array([[0.0, 0.0], [3.0, 0.0]])
        box = min_area_rect(hull, min_width=0.5)
        assert box.l == pytest.approx(3.0)
        assert box.w == pytest.approx(0.5)

    def test_translation_equivariance(self):
        rng = np.random.default_rng(9)
        pts = rng.uniform(-2, 2, size=(12, 2))
        box0 = min_area_rect(convex_hull(pts))
        box1 = min_area_rect(convex_hull(pts + np.array([13.25, -7.5])))
        assert box1.x - box0.x == pytest.approx(13.25, abs=1e-9)
        assert box1.y - box0.y == pytest.approx(-7.5, abs=1e-9)
        assert box1.l == pytest.approx(box0.l, abs=1e-9)
        assert box1.theta == pytest.approx(box0.theta, abs=1e-9)


class TestRectOverlap:
    def test_disjoint(self):
        a = BoundingBox(0, 0, 2, 1, 0.0)
        b = BoundingBox(10, 10, 2, 1, 0.7)
        assert rect_overlap(a, b) is None

    def test_identical_penetration(self):
        a = BoundingBox(1, 2, 4.0, 1.5, 0.4)
        depth = rect_overlap(a, a)
        assert depth == pytest.approx(1.5)

    def test_corner_to_edge_boundary_vs_sampling(self):
        # a 45-degree box approaching an axis-aligned one corner-first
        a = BoundingBox(0.0, 0.0, 2.0, 2.0, 0.0)
        for offset in (1.0 + math.sqrt(2) / 2 * 1.9, 1.0 + math.sqrt(2) / 2 * 2.1):
            b = BoundingBox(offset, 0.0, 2.0, 2.0, math.pi / 4)
            hit = rect_overlap(a, b) is not None
            pts_b = boundary_points(b, n=2500)
            sampled = bool(np.any(a.contains(pts_b)))
            pts_a = boundary_points(a, n=2500)
            sampled |= bool(np.any(b.contains(pts_a)))
            assert hit == sampled

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            a = BoundingBox(*rng.uniform(-2, 2, 2), *rng.uniform(0.5, 3, 2), rng.uniform(-2, 2))
            b = BoundingBox(*rng.uniform(-2, 2, 2), *rng.uniform(0.5, 3, 2), rng.uniform(-2, 2))
            ra, rb = rect_overlap(a, b), rect_overlap(b, a)
            assert (ra is None) == (rb is None)
            if ra is not None:
                assert ra == pytest.approx(rb, abs=1e-12)
