import math

import numpy as np
import pytest

from cbf_shield.vehicle import (ControlInput, ControlLimits, VehicleGeometry,
                                VehicleState, cartesian_derivative, step)


class TestDerivative:
    def test_at_rest(self, geom):
        state = VehicleState(3.0, -2.0, 0.0, 0.7)
        d = cartesian_derivative(state, ControlInput(1.5, 0.2), geom)
        assert d[0] == 0.0 and d[1] == 0.0 and d[3] == 0.0
        assert d[2] == 1.5

    def test_straight_coasting(self, geom):
        d = cartesian_derivative(VehicleState(0, 0, 10.0, 0.0), ControlInput(0, 0), geom)
        assert np.allclose(d, [10.0, 0.0, 0.0, 0.0])

    def test_heading_rate(self):
        geom = VehicleGeometry(2.5, 1.25, 4.6, 1.9)
        d = cartesian_derivative(VehicleState(0, 0, 10.0, 0.0), ControlInput(0, 0.1), geom)
        assert d[3] == pytest.approx(0.4)  # v / L * steer = 10 / 2.5 * 0.1

    def test_affine_in_control_exact_dyadic(self, geom):
        # products are exact when v/L and the steer values are dyadic, so the
        # affine cancellation is bitwise zero
        state = VehicleState(1.0, 2.0, 11.2, 0.375)  # v/L = 11.2/2.8 = 4.0
        u1 = ControlInput(0.25, 0.125)
        u2 = ControlInput(-1.5, 0.0625)
        u12 = ControlInput(u1.a + u2.a, u1.steer + u2.steer)
        zero = ControlInput(0.0, 0.0)
        lhs = (cartesian_derivative(state, u12, geom)
               - cartesian_derivative(state, u1, geom)
               - cartesian_derivative(state, u2, geom)
               + cartesian_derivative(state, zero, geom))
        assert np.all(lhs == 0.0)

    def test_affine_in_control_general(self, geom):
        rng = np.random.default_rng(4)
        for _ in range(100):
            state = VehicleState(*rng.uniform(-5, 5, 2), rng.uniform(0, 25), rng.uniform(-3, 3))
            u1 = ControlInput(*rng.uniform(-5, 5, 2))
            u2 = ControlInput(*rng.uniform(-5, 5, 2))
            u12 = ControlInput(u1.a + u2.a, u1.steer + u2.steer)
            zero = ControlInput(0.0, 0.0)
            lhs = (cartesian_derivative(state, u12, geom)
                   - cartesian_derivative(state, u1, geom)
                   - cartesian_derivative(state, u2, geom)
                   + cartesian_derivative(state, zero, geom))
            assert np.all(np.abs(lhs) < 1e-12)


class TestStep:
    def test_straight_motion_exact(self, geom):
        state = VehicleState(0, 0, 5.0, 0.0)
        nxt = step(state, ControlInput(0, 0), geom, dt=1.0)
        assert nxt.x_g == pytest.approx(5.0, abs=1e-12)
        assert nxt.y_g == 0.0
        assert nxt.v == 5.0

    def test_circle_closed_form(self, geom):
        v, steer = 10.0, 0.1
        omega = v * steer / geom.wheelbase
        radius = v / omega  # = L / steer
        assert radius == pytest.approx(geom.wheelbase / steer)
        state = VehicleState(0.0, 0.0, v, 0.0)
        dt, t_end = 0.01, 1.0
        for _ in range(int(t_end / dt)):
            state = step(state, ControlInput(0.0, steer), geom, dt)
        x_exact = radius * math.sin(omega * t_end)
        y_exact = radius * (1.0 - math.cos(omega * t_end))
        assert state.x_g == pytest.approx(x_exact, abs=1e-6)
        assert state.y_g == pytest.approx(y_exact, abs=1e-6)
        assert state.phi == pytest.approx(omega * t_end, abs=1e-9)

    def test_fourth_order_convergence(self, geom):
        # endpoint error vs an almost-exact reference should shrink ~16x per halving
        u = ControlInput(0.8, 0.5)

        def endpoint(dt):
            state = VehicleState(0, 0, 8.0, 0.2)
            for _ in range(int(round(1.6 / dt))):
                state = step(state, u, geom, dt)
            return np.array([state.x_g, state.y_g, state.v, state.phi])

        ref = endpoint(0.0005)
        e1 = np.linalg.norm(endpoint(0.04) - ref)
        e2 = np.linalg.norm(endpoint(0.02) - ref)
        ratio = e1 / e2
        assert 10.0 < ratio < 22.0

    def test_rejects_bad_dt(self, geom):
        with pytest.raises(ValueError):
            step(VehicleState(0, 0, 1, 0), ControlInput(0, 0), geom, dt=0.0)


class TestTypes:
    def test_state_normalizes_heading(self):
        assert VehicleState(0, 0, 1, 3 * math.pi).phi == pytest.approx(math.pi)
        assert -math.pi < VehicleState(0, 0, 1, -math.pi).phi <= math.pi

    def test_state_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            VehicleState(0, 0, math.nan, 0)

    def test_geometry_validation(self):
        with pytest.raises(ValueError):
            VehicleGeometry(2.0, 2.5, 4.6, 1.9)
        with pytest.raises(ValueError):
            VehicleGeometry(2.0, 1.0, 0.0, 1.9)

    def test_limits_validation_and_clamp(self):
        with pytest.raises(ValueError):
            ControlLimits(1.0, 2.0, -0.5, 0.5)
        lim = ControlLimits(-6.0, 2.5, -0.45, 0.45)
        u = ControlInput(1.0, -0.2)
        assert lim.clamp(u) is u  # untouched input returned as-is
        clamped = lim.clamp(ControlInput(9.0, -1.0))
        assert clamped == ControlInput(2.5, -0.45)

    def test_body_box(self, geom):
        box = VehicleState(5.0, 1.0, 3.0, 0.5).body_box(geom)
        assert (box.l, box.w) == (geom.body_length, geom.body_width)
        assert (box.x, box.y) == (5.0, 1.0)
