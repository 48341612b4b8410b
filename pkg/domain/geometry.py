"""
Planar geometry helpers shared by the kinematic, fitting and tracking code.
"""

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    wrapped = math.pi - math.fmod(math.pi - angle, TWO_PI)
    if wrapped > math.pi:
        wrapped -= TWO_PI
    elif wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def wrap_angles(angles: np.ndarray) -> np.ndarray:
    """Vectorised :func:`wrap_angle`."""
    return np.pi - np.mod(np.pi - np.asarray(angles, dtype=float), TWO_PI)


def angle_difference(a: float, b: float) -> float:
    """Signed smallest difference a - b, wrapped."""
    return wrap_angle(a - b)


def rotation_matrix(theta: float) -> np.ndarray:
    """2x2 rotation by theta."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)
