"""
Vehicle motion models for Ladartrack

Two six-state models are provided:

* ISM, the independent steering model: constant velocity in x, y and theta,
  where the direction of travel is decoupled from the heading.
* VASM, the variable-axis Ackerman steering model: the point on the centreline
  at signed offset ``L`` from the centre moves along an arc with constant speed
  ``v`` and turn rate ``thetadot``, so the vehicle cannot slide sideways.

All functions are pure; matrices are returned as fresh numpy arrays.
"""

import math
from typing import Tuple

import numpy as np
from scipy.linalg import block_diag

from .entities import IsmState, NoiseParams, VasmState
from .exceptions import InvalidArgumentError
from .geometry import rotation_matrix, symmetrize, wrap_angle

# below this |x| the Taylor expansions are used
SMALL_ANGLE = 1e-4


def _check_dt(dt: float) -> float:
    if not math.isfinite(dt) or dt < 0:
        raise InvalidArgumentError(f"dt must be finite and >= 0 (got {dt!r})")
    return float(dt)


def sinc(x: float) -> float:
    """Unnormalised sinc, sin(x)/x with sinc(0) = 1."""
    if abs(x) < SMALL_ANGLE:
        x2 = x * x
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    return math.sin(x) / x


def sinc_derivative(x: float) -> float:
    """d sinc(x) / dx, zero at the origin."""
    if abs(x) < SMALL_ANGLE:
        x2 = x * x
        return -x / 3.0 + x * x2 / 30.0
    return (x * math.cos(x) - math.sin(x)) / (x * x)


# ---------------------------------------------------------------------------
# ISM
# ---------------------------------------------------------------------------

def ism_transition_matrix(dt: float) -> np.ndarray:
    """Constant-velocity transition for (x, xdot, y, ydot, theta, thetadot)."""
    dt = _check_dt(dt)
    phi = np.eye(6)
    phi[0, 1] = phi[2, 3] = phi[4, 5] = dt
    return phi


def _white_acceleration_block(intensity: float, dt: float) -> np.ndarray:
    return intensity * np.array([
        [dt ** 3 / 3.0, dt ** 2 / 2.0],
        [dt ** 2 / 2.0, dt],
    ])


def ism_process_noise(dt: float, params: NoiseParams) -> np.ndarray:
    """Block-diagonal process noise, alpha on x and y, beta on theta."""
    dt = _check_dt(dt)
    return block_diag(
        _white_acceleration_block(params.alpha, dt),
        _white_acceleration_block(params.alpha, dt),
        _white_acceleration_block(params.beta, dt),
    )


def ism_propagate(state: IsmState, dt: float) -> IsmState:
    return IsmState.from_vector(ism_transition_matrix(dt) @ state.to_vector())


# ---------------------------------------------------------------------------
# VASM
# ---------------------------------------------------------------------------

def vasm_local_displacement(v: float, thetadot: float, L: float, dt: float) -> Tuple[float, float]:
    """Centre displacement over dt in the centre frame at the start of the step."""
    dt = _check_dt(dt)
    for name, value in (('v', v), ('thetadot', thetadot), ('L', L)):
        if not math.isfinite(value):
            raise InvalidArgumentError(f"{name} must be finite (got {value!r})")
    a = thetadot * dt
    half = sinc(a / 2.0)
    cx = v * dt * sinc(a) + 2.0 * L * math.sin(a / 2.0) ** 2
    cy = v * thetadot * dt * dt * half * half / 2.0 - L * math.sin(a)
    return cx, cy


def vasm_center_velocity(state: VasmState) -> Tuple[float, float]:
    """Heading offset and speed of the centre velocity.

    The centre moves with body-frame velocity (v, -L * thetadot), so the offset
    is atan2(-L thetadot, v) and the speed v / cos(offset), i.e. the length of
    that vector. The all-zero case returns (0, 0).
    """
    lateral = -state.L * state.thetadot
    if state.v == 0.0 and lateral == 0.0:
        return 0.0, 0.0
    return math.atan2(lateral, state.v), math.hypot(state.v, lateral)


def vasm_propagate(state: VasmState, dt: float) -> VasmState:
    """Nonlinear arc propagation of the VASM state."""
    cx, cy = vasm_local_displacement(state.v, state.thetadot, state.L, dt)
    dx, dy = rotation_matrix(state.theta) @ np.array([cx, cy])
    return VasmState(
        x=state.x + dx,
        y=state.y + dy,
        L=state.L,
        v=state.v,
        theta=wrap_angle(state.theta + state.thetadot * dt),
        thetadot=state.thetadot,
    )


def _world_transform(theta: float) -> np.ndarray:
    T = np.eye(6)
    T[:2, :2] = rotation_matrix(theta)
    return T


def vasm_displacement_partials(v: float, thetadot: float, L: float, dt: float) -> np.ndarray:
    """Partials of (cx, cy) with respect to (L, v, thetadot), as a 2x3 array."""
    a = thetadot * dt
    half_angle = a / 2.0
    half = sinc(half_angle)
    dcx_dL = 2.0 * math.sin(half_angle) ** 2
    dcy_dL = -math.sin(a)
    dcx_dv = dt * sinc(a)
    dcy_dv = thetadot * dt * dt * half * half / 2.0
    dcx_dw = v * dt * dt * sinc_derivative(a) + L * dt * math.sin(a)
    dcy_dw = v * dt * dt * (half * math.cos(half_angle) - half * half / 2.0) - L * dt * math.cos(a)
    return np.array([
        [dcx_dL, dcx_dv, dcx_dw],
        [dcy_dL, dcy_dv, dcy_dw],
    ])


def vasm_transition_matrix(state: VasmState, dt: float) -> np.ndarray:
    """Jacobian of :func:`vasm_propagate` with respect to (x, y, L, v, theta, thetadot)."""
    dt = _check_dt(dt)
    cx, cy = vasm_local_displacement(state.v, state.thetadot, state.L, dt)
    partials = vasm_displacement_partials(state.v, state.thetadot, state.L, dt)
    M = np.zeros((6, 6))
    M[0, 2], M[0, 3], M[0, 5] = partials[0]
    M[1, 2], M[1, 3], M[1, 5] = partials[1]
    M[0, 4] = -cy
    M[1, 4] = cx
    M[4, 5] = dt
    return np.eye(6) + _world_transform(state.theta) @ M


def vasm_local_process_noise(state: VasmState, dt: float, params: NoiseParams) -> np.ndarray:
    """Process noise in the arc-following frame, ordered as the state."""
    dt = _check_dt(dt)
    alpha, gamma = params.alpha, params.gamma
    speed = abs(state.v)
    Q = np.zeros((6, 6))
    # along-arc white acceleration acting on (x, v)
    Q[0, 0] = alpha * dt ** 3 / 3.0
    Q[0, 3] = Q[3, 0] = alpha * dt ** 2 / 2.0
    Q[3, 3] = alpha * dt
    # white angular acceleration acting on (y, theta, thetadot)
    Q[1, 1] = gamma * state.v ** 2 * dt ** 5 / 20.0
    Q[1, 4] = Q[4, 1] = gamma * speed * dt ** 4 / 8.0
    Q[1, 5] = Q[5, 1] = gamma * speed * dt ** 3 / 6.0
    Q[4, 4] = gamma * dt ** 3 / 3.0
    Q[4, 5] = Q[5, 4] = gamma * dt ** 2 / 2.0
    Q[5, 5] = gamma * dt
    Q[2, 2] = params.eps_L * dt
    return Q


def vasm_process_noise(state: VasmState, dt: float, params: NoiseParams) -> np.ndarray:
    """VASM process noise rotated into world coordinates.

    Derived for the rotation-axis point and applied at the centre.
    """
    T = _world_transform(state.theta)
    return symmetrize(T @ vasm_local_process_noise(state, dt, params) @ T.T)


# ---------------------------------------------------------------------------
# conversions between the two models
# ---------------------------------------------------------------------------

def vasm_to_ism(state: VasmState) -> Tuple[IsmState, np.ndarray]:
    """Convert a VASM state to ISM; returns the state and the 6x6 Jacobian."""
    c, s = math.cos(state.theta), math.sin(state.theta)
    v, L, w = state.v, state.L, state.thetadot
    offset, speed = vasm_center_velocity(state)
    xdot = speed * math.cos(state.theta + offset)
    ydot = speed * math.sin(state.theta + offset)
    ism = IsmState(state.x, xdot, state.y, ydot, state.theta, w)
    J = np.zeros((6, 6))
    J[0, 0] = 1.0
    J[1, 2], J[1, 3], J[1, 4], J[1, 5] = w * s, c, -v * s + L * w * c, L * s
    J[2, 1] = 1.0
    J[3, 2], J[3, 3], J[3, 4], J[3, 5] = -w * c, s, v * c + L * w * s, -L * c
    J[4, 4] = 1.0
    J[5, 5] = 1.0
    return ism, J


def ism_to_vasm(state: IsmState) -> Tuple[VasmState, np.ndarray]:
    """Convert an ISM state to VASM with the axis at the centre (L = 0).

    The arc speed is the velocity projected on the heading, so a vehicle
    reversing gets a negative v.
    """
    c, s = math.cos(state.theta), math.sin(state.theta)
    v = state.xdot * c + state.ydot * s
    vasm = VasmState(state.x, state.y, 0.0, v, state.theta, state.thetadot)
    J = np.zeros((6, 6))
    J[0, 0] = 1.0
    J[1, 2] = 1.0
    J[3, 1], J[3, 3], J[3, 4] = c, s, -state.xdot * s + state.ydot * c
    J[4, 4] = 1.0
    J[5, 5] = 1.0
    return vasm, J


def rotate_state(state, phi: float):
    """Express an ISM or VASM state in a frame rotated by ``phi`` about the origin."""
    R = rotation_matrix(phi)
    if isinstance(state, IsmState):
        x, y = R @ np.array([state.x, state.y])
        xdot, ydot = R @ np.array([state.xdot, state.ydot])
        return IsmState(x, xdot, y, ydot, state.theta + phi, state.thetadot)
    x, y = R @ np.array([state.x, state.y])
    return VasmState(x, y, state.L, state.v, state.theta + phi, state.thetadot)
