import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaitlab import GaitParams, LinearizationConfig, build_state_space
from gaitlab import biped6dof as bd
from gaitlab.clred import S_REDUCED, ReducedState, reduce
from gaitlab.controller import (compute_coeffs, control_input_full, control_input_reduced,
                                desired_output, quintic_basis)
from gaitlab.errors import InvalidParameterError

from conftest import random_states

alphas = st.floats(0.05, 1.5)
xis = st.floats(0.3, 1.0)
rates = st.floats(-3.0, 3.0)
periods = st.floats(0.2, 2.0)


def poly(a, t):
    return sum(c * t**k for k, c in enumerate(a))


def dpoly(a, t, order):
    coeffs = np.polynomial.polynomial.polyder(np.asarray(a, dtype=float), order)
    return np.polynomial.polynomial.polyval(t, coeffs)


@settings(max_examples=1000, deadline=None)
@given(alphas, xis, rates, periods)
def test_quintic_endpoint_identities(alpha, xi, thd, T):
    gait = GaitParams(alpha=alpha, T_set=T)
    a = compute_coeffs(gait, xi, thd).a
    scale = max(1.0, abs(alpha), abs(thd))
    assert a[2] == 0.0
    assert abs(poly(a, 0.0) + alpha) <= 1e-12 * scale
    assert abs(dpoly(a, 0.0, 1) - (xi - 1) * thd) <= 1e-12 * scale
    assert abs(dpoly(a, 0.0, 2)) <= 1e-12 * scale
    assert abs(poly(a, T) - alpha) <= 1e-12 * scale
    assert abs(dpoly(a, T, 1)) <= 1e-12 * scale / T
    assert abs(dpoly(a, T, 2)) <= 1e-12 * scale / T**2


@settings(max_examples=200, deadline=None)
@given(alphas, xis, rates, periods)
def test_basis_decomposition(alpha, xi, thd, T):
    P, Q = quintic_basis(T)
    a = compute_coeffs(GaitParams(alpha=alpha, T_set=T), xi, thd).as_array()
    np.testing.assert_allclose(a, alpha * P + (xi - 1) * thd * Q, rtol=1e-12, atol=1e-12 * np.abs(a).max())


@settings(max_examples=200, deadline=None)
@given(alphas, xis, rates, periods, st.floats(0.0, 1.0))
def test_desired_output_derivatives_consistent(alpha, xi, thd, T, frac):
    gait = GaitParams(alpha=alpha, gamma=0.3, T_set=T)
    c = compute_coeffs(gait, xi, thd)
    t = frac * T
    h = 1e-6 * T
    y0, yd0, ydd0 = desired_output(gait, c, t)
    if 2 * h < t < T - 2 * h:
        yp, ydp, _ = desired_output(gait, c, t + h)
        ym, ydm, _ = desired_output(gait, c, t - h)
        np.testing.assert_allclose((yp - ym) / (2 * h), yd0, atol=1e-5 * max(1, 1 / T))
        np.testing.assert_allclose((ydp - ydm) / (2 * h), ydd0, atol=1e-4 * max(1, 1 / T**2))


def test_output_at_landmarks(gait1):
    c = compute_coeffs(gait1, 0.88, 0.8)
    y, yd, ydd = desired_output(gait1, c, 0.0)
    np.testing.assert_allclose(y, [-gait1.alpha, -gait1.beta], atol=1e-15)
    y, yd, ydd = desired_output(gait1, c, gait1.T_set)
    np.testing.assert_allclose(y, [gait1.alpha, -gait1.beta], atol=1e-12)
    np.testing.assert_allclose(yd, 0.0, atol=1e-12)
    np.testing.assert_allclose(ydd, 0.0, atol=1e-11)
    y, _, _ = desired_output(gait1, c, gait1.T_set / 2)
    assert y[1] == pytest.approx(-gait1.beta - gait1.gamma, abs=1e-15)
    y, yd, ydd = desired_output(gait1, c, gait1.T_set + 0.3)
    np.testing.assert_array_equal(y, [gait1.alpha, -gait1.beta])
    np.testing.assert_array_equal(yd, 0.0)
    np.testing.assert_array_equal(ydd, 0.0)


def test_knee_target_smooth_at_both_ends(gait1):
    c = compute_coeffs(gait1, 0.88, 0.8)
    for t in (0.0, gait1.T_set):
        y, yd, ydd = desired_output(gait1, c, t)
        assert y[1] == pytest.approx(-gait1.beta, abs=1e-15)
        assert abs(yd[1]) < 1e-14 and abs(ydd[1]) < 1e-13


def test_zero_rate_gives_pure_interpolation(gait1):
    c = compute_coeffs(gait1, 0.5, 0.0)
    P, _ = quintic_basis(gait1.T_set)
    assert c.a[1] == 0.0
    np.testing.assert_allclose(c.as_array(), gait1.alpha * P, rtol=1e-15)


def test_override_settling_time(gait1):
    g = gait1.with_settling_time(0.5)
    c = compute_coeffs(g, 0.88, 0.8)
    assert c.T == 0.5
    y, _, _ = desired_output(g, c, 0.5)
    assert y[0] == pytest.approx(g.alpha, abs=1e-12)


def test_rejects_nonpositive_T(gait1):
    with pytest.raises(InvalidParameterError):
        compute_coeffs(gait1, 0.88, 0.8, T=0.0)


class TestFullModelTorques:
    def test_achieves_commanded_output_acceleration(self, robot, rng):
        q, qd = random_states(rng, 100, beta=0.1)
        qd[:, :2] = 0.0
        qd[:, 2] = qd[:, 3]
        H = bd.OUTPUT_MATRIX
        for qk, qdk in zip(q, qd):
            v = rng.normal(size=2) * 5
            u = control_input_full(robot, GaitParams(), qk, qdk, v)
            assert u[0] == 0.0
            qdd, _ = bd.constrained_accel(robot, qk, qdk, u)
            np.testing.assert_allclose(H @ qdd, v, atol=1e-9)

    def test_response_is_affine_in_torque(self, robot, rng):
        q, qd = random_states(rng, 10, beta=0.1)
        for qk, qdk in zip(q, qd):
            base, _ = bd.constrained_accel(robot, qk, qdk, np.zeros(3))
            e2, _ = bd.constrained_accel(robot, qk, qdk, np.array([0, 1.0, 0]))
            e3, _ = bd.constrained_accel(robot, qk, qdk, np.array([0, 0, 1.0]))
            u = np.array([0.0, *rng.normal(size=2)])
            direct, _ = bd.constrained_accel(robot, qk, qdk, u)
            np.testing.assert_allclose(direct, base + u[1] * (e2 - base) + u[2] * (e3 - base), atol=1e-11)


class TestReducedModelTorques:
    def test_round_trip(self, robot, rng):
        for beta, kappa in [(0.1, 0.0), (0.5, -0.5), (1.0, -0.3)]:
            gait = GaitParams(beta=beta)
            ls = build_state_space(robot, gait, LinearizationConfig(kappa), with_etas=False)
            for _ in range(20):
                qbar = rng.normal(size=3) * 0.5
                v = rng.normal(size=2)
                u = control_input_reduced(robot, gait, ls, qbar, v)
                qdd = np.linalg.solve(ls.Mbar, ls.Sbar @ u - ls.Gbar @ qbar - ls.gbeta)
                np.testing.assert_allclose(ls.Sbar.T @ qdd, v, atol=1e-12)

    def test_vanishing_propulsion(self, robot):
        gait = GaitParams(beta=0.0)
        ls = build_state_space(robot, gait, LinearizationConfig(theta2_star=0.0), with_etas=False)
        np.testing.assert_array_equal(control_input_reduced(robot, gait, ls, np.zeros(3), np.zeros(2)), 0.0)

    def test_holding_torque_counters_propulsion(self, robot):
        gait = GaitParams(beta=0.1)
        ls = build_state_space(robot, gait, LinearizationConfig(theta2_star=0.0), with_etas=False)
        expected = -robot.m * robot.g * robot.L1 * math.sin(0.1)
        assert ls.gbeta[0] == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(-1.958, abs=1e-3)
        u = control_input_reduced(robot, gait, ls, np.zeros(3), np.zeros(2))
        qdd = np.linalg.solve(ls.Mbar, ls.Sbar @ u - ls.gbeta)
        np.testing.assert_allclose(ls.Sbar.T @ qdd, 0.0, atol=1e-13)
        assert abs(u).max() > 0.1

    def test_full_and_reduced_agree_on_same_command(self, robot, rng):
        # With exact (not linearized) gravity the reduced torques equal the full-model ones.
        gait = GaitParams(beta=0.4)
        Mbar, gbar = reduce(robot, gait)
        for _ in range(50):
            rs = ReducedState(rng.normal(size=3) * 0.4, rng.normal(size=3))
            q, qd = rs.to_full(gait)
            v = rng.normal(size=2)
            exact = SimpleNamespace(Mbar=Mbar, Sbar=S_REDUCED, Gbar=np.zeros((3, 3)), gbeta=gbar(q[3]))
            ubar = control_input_reduced(robot, gait, exact, rs.qbar, v)
            u = control_input_full(robot, gait, q, qd, v)
            np.testing.assert_allclose(u[1:], ubar, atol=1e-9)
            qdd_full, _ = bd.constrained_accel(robot, q, qd, u)
            qdd_red = np.linalg.solve(Mbar, S_REDUCED @ ubar - gbar(q[3]))
            np.testing.assert_allclose(qdd_full[3:], qdd_red, atol=1e-9)
