import math

import numpy as np
import pytest

from domain.entities import IsmState, NoiseParams, VasmState
from domain.exceptions import InvalidArgumentError
from domain.geometry import angle_difference, wrap_angle, wrap_angles
from domain.kinematics import (
    ism_process_noise, ism_propagate, ism_to_vasm, ism_transition_matrix, rotate_state, sinc,
    sinc_derivative, vasm_center_velocity, vasm_local_displacement, vasm_process_noise, vasm_propagate, vasm_to_ism,
    vasm_transition_matrix,
)


def _random_vasm_states(rng, count, dt):
    return [
        VasmState(
            x=rng.uniform(-50, 50),
            y=rng.uniform(-50, 50),
            L=rng.uniform(-3, 3),
            v=rng.uniform(-15, 15),
            theta=rng.uniform(-math.pi, math.pi),
            thetadot=rng.uniform(-1.5, 1.5) / dt,
        )
        for _ in range(count)
    ]


def _rk4_centre(states, dt, steps):
    """Vectorised RK4 of the centre pose under constant v, thetadot and L."""
    x = np.array([s.x for s in states])
    y = np.array([s.y for s in states])
    theta = np.array([s.theta for s in states])
    v = np.array([s.v for s in states])
    w = np.array([s.thetadot for s in states])
    L = np.array([s.L for s in states])

    def f(th):
        c, s = np.cos(th), np.sin(th)
        return v * c + L * w * s, v * s - L * w * c, w

    h = dt / steps
    for _ in range(steps):
        k1 = f(theta)
        k2 = f(theta + 0.5 * h * k1[2])
        k3 = f(theta + 0.5 * h * k2[2])
        k4 = f(theta + h * k3[2])
        x = x + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        y = y + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        theta = theta + h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    return x, y, theta


def test_wrap_angle_range():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert angle_difference(-3.1, 3.1) == pytest.approx(2 * math.pi - 6.2)
    values = np.linspace(-20, 20, 101)
    wrapped = wrap_angles(values)
    assert np.all(wrapped > -math.pi) and np.all(wrapped <= math.pi)
    np.testing.assert_allclose(np.cos(wrapped), np.cos(values), atol=1e-12)


@pytest.mark.parametrize('x', [0.0, 1e-6, -3e-5, 0.5, -2.0])
def test_sinc_and_derivative_agree_with_closed_form(x):
    expected = 1.0 if x == 0 else math.sin(x) / x
    assert sinc(x) == pytest.approx(expected, abs=1e-15)
    h = 1e-6
    numeric = (sinc(x + h) - sinc(x - h)) / (2 * h)
    assert sinc_derivative(x) == pytest.approx(numeric, abs=1e-8)


def test_ism_transition_is_constant_velocity():
    state = IsmState(1.0, 2.0, -1.0, 0.5, 0.2, 0.1)
    moved = ism_propagate(state, 0.5)
    assert moved.x == pytest.approx(2.0)
    assert moved.y == pytest.approx(-0.75)
    assert moved.theta == pytest.approx(0.25)
    np.testing.assert_allclose(ism_transition_matrix(0.0), np.eye(6))


def test_negative_dt_is_rejected():
    with pytest.raises(InvalidArgumentError):
        ism_transition_matrix(-0.1)
    with pytest.raises(InvalidArgumentError):
        vasm_propagate(VasmState(v=1.0), -0.1)


def test_local_displacement_examples():
    assert vasm_local_displacement(1.0, 0.0, 0.0, 2.0) == pytest.approx((2.0, 0.0))
    assert vasm_local_displacement(math.pi / 2, math.pi / 2, 0.0, 1.0) == pytest.approx((1.0, 1.0))
    x, y, _ = _rk4_centre([VasmState(0.0, 0.0, 1.2, 1.0, 0.0, 0.3)], 0.5, steps=50_000)
    assert vasm_local_displacement(1.0, 0.3, 1.2, 0.5) == pytest.approx((x[0], y[0]), abs=1e-9)


def test_vasm_propagation_matches_rk4():
    rng = np.random.default_rng(1)
    dt = 0.1
    states = _random_vasm_states(rng, 1000, dt)
    x, y, theta = _rk4_centre(states, dt, steps=10_000)
    for i, state in enumerate(states):
        moved = vasm_propagate(state, dt)
        assert abs(moved.x - x[i]) < 1e-6
        assert abs(moved.y - y[i]) < 1e-6
        assert abs(angle_difference(moved.theta, theta[i])) < 1e-8


def test_vasm_straight_line_limit():
    state = VasmState(0.0, 0.0, 1.2, 5.0, 0.0, 0.0)
    moved = vasm_propagate(state, 1.0)
    assert moved.x == pytest.approx(5.0)
    assert moved.y == pytest.approx(0.0, abs=1e-12)


def _central_difference(state, dt, eps=1e-6):
    base = state.to_vector()
    J = np.empty((6, 6))
    for j in range(6):
        plus, minus = base.copy(), base.copy()
        plus[j] += eps
        minus[j] -= eps
        a = vasm_propagate(VasmState.from_vector(plus), dt).to_vector()
        b = vasm_propagate(VasmState.from_vector(minus), dt).to_vector()
        column = (a - b) / (2 * eps)
        column[4] = angle_difference(a[4], b[4]) / (2 * eps)
        J[:, j] = column
    return J


def test_vasm_transition_matrix_matches_finite_differences():
    rng = np.random.default_rng(2)
    dt = 0.1
    for state in _random_vasm_states(rng, 1000, dt):
        np.testing.assert_allclose(vasm_transition_matrix(state, dt), _central_difference(state, dt), atol=1e-5)


def test_vasm_transition_matrix_small_turn_rate():
    state = VasmState(1.0, 2.0, -1.4, 8.0, 0.7, 1e-7)
    np.testing.assert_allclose(vasm_transition_matrix(state, 0.1), _central_difference(state, 0.1), atol=1e-5)


def _rk4_lyapunov(F, Qc, dt, steps=1000):
    P = np.zeros_like(F)

    def f(P):
        return F @ P + P @ F.T + Qc

    h = dt / steps
    for _ in range(steps):
        k1 = f(P)
        k2 = f(P + 0.5 * h * k1)
        k3 = f(P + 0.5 * h * k2)
        k4 = f(P + h * k3)
        P = P + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return P


@pytest.mark.parametrize('dt', [0.05, 0.1, 0.5])
def test_ism_process_noise_matches_lyapunov_integration(dt):
    params = NoiseParams(alpha=1.3, beta=0.4)
    F = np.zeros((6, 6))
    F[0, 1] = F[2, 3] = F[4, 5] = 1.0
    Qc = np.diag([0.0, params.alpha, 0.0, params.alpha, 0.0, params.beta])
    expected = _rk4_lyapunov(F, Qc, dt)
    np.testing.assert_allclose(ism_process_noise(dt, params), expected, rtol=1e-8, atol=1e-14)


def test_process_noise_is_symmetric_psd():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        params = NoiseParams(*rng.uniform(0.0, 5.0, size=4))
        dt = rng.uniform(0.0, 1.0)
        state = _random_vasm_states(rng, 1, max(dt, 1e-3))[0]
        for Q in (ism_process_noise(dt, params), vasm_process_noise(state, dt, params)):
            np.testing.assert_allclose(Q, Q.T, atol=1e-15)
            assert np.linalg.eigvalsh(Q).min() >= -1e-12 * max(np.trace(Q), 1e-300)


def test_center_velocity_of_offset_axis():
    state = VasmState(0.0, 0.0, L=-1.5, v=5.0, theta=0.0, thetadot=0.4)
    offset, speed = vasm_center_velocity(state)
    assert offset == pytest.approx(math.atan2(0.6, 5.0))
    assert speed == pytest.approx(math.hypot(5.0, 0.6))
    assert vasm_center_velocity(VasmState()) == (0.0, 0.0)


def _jacobian(func, vector, eps=1e-6):
    base = func(vector)
    J = np.empty((len(base), len(vector)))
    for j in range(len(vector)):
        plus, minus = vector.copy(), vector.copy()
        plus[j] += eps
        minus[j] -= eps
        J[:, j] = (func(plus) - func(minus)) / (2 * eps)
    return J


def test_model_conversion_jacobians():
    vasm = VasmState(1.0, -2.0, -1.2, 6.0, 0.8, 0.3)
    ism, J = vasm_to_ism(vasm)
    assert (ism.xdot, ism.ydot) == pytest.approx((6.0 * math.cos(0.8) - 1.2 * 0.3 * math.sin(0.8),
                                                  6.0 * math.sin(0.8) + 1.2 * 0.3 * math.cos(0.8)))
    numeric = _jacobian(lambda v: vasm_to_ism(VasmState.from_vector(v))[0].to_vector(), vasm.to_vector())
    np.testing.assert_allclose(J, numeric, atol=1e-6)

    back, J2 = ism_to_vasm(ism)
    assert back.L == 0.0
    numeric = _jacobian(lambda v: ism_to_vasm(IsmState.from_vector(v))[0].to_vector(), ism.to_vector())
    np.testing.assert_allclose(J2[[0, 1, 3, 4, 5]], numeric[[0, 1, 3, 4, 5]], atol=1e-6)


@pytest.mark.parametrize('L, v, thetadot', [(-1.5, 5.0, 0.4), (2.0, -3.0, -0.2), (0.0, 4.0, 0.0)])
def test_converted_velocity_is_the_centre_velocity(L, v, thetadot):
    vasm = VasmState(3.0, 1.0, L, v, 0.6, thetadot)
    ism, _ = vasm_to_ism(vasm)
    offset, speed = vasm_center_velocity(vasm)
    assert math.hypot(ism.xdot, ism.ydot) == pytest.approx(abs(speed))
    assert (ism.xdot, ism.ydot) == pytest.approx((speed * math.cos(0.6 + offset),
                                                  speed * math.sin(0.6 + offset)))


def test_reversing_vehicle_gets_negative_arc_speed():
    vasm, _ = ism_to_vasm(IsmState(0.0, -3.0, 0.0, 0.0, 0.0, 0.0))
    assert vasm.v == pytest.approx(-3.0)


def test_propagation_commutes_with_frame_rotation():
    state = VasmState(3.0, 1.0, -1.0, 7.0, 0.4, 0.6)
    phi = 1.1
    a = rotate_state(vasm_propagate(state, 0.3), phi)
    b = vasm_propagate(rotate_state(state, phi), 0.3)
    np.testing.assert_allclose(a.to_vector(), b.to_vector(), atol=1e-12)

    ism = IsmState(1.0, 2.0, 3.0, -1.0, 0.2, 0.1)
    np.testing.assert_allclose(rotate_state(ism_propagate(ism, 0.3), phi).to_vector(),
                               ism_propagate(rotate_state(ism, phi), 0.3).to_vector(), atol=1e-12)
