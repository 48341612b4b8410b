"""
Shared fixtures for the Ladartrack test suite.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to Python path, as main.py does
project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

from domain.entities import PointCluster  # noqa: E402


@pytest.fixture
def scenarios_dir() -> Path:
    return project_root / 'scenarios'


def l_shape_points(corner, phi, len_b=4.5, len_a=2.0, spacing=0.1, sigma=0.0, rng=None):
    """Points on two perpendicular edges leaving ``corner``.

    Edge b runs along phi for len_b, edge a along phi + 90 degrees for len_a.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    u_b = np.array([math.cos(phi), math.sin(phi)])
    u_a = np.array([-math.sin(phi), math.cos(phi)])
    tb = np.arange(spacing, len_b, spacing)
    ta = np.arange(spacing, len_a, spacing)
    edge_b = corner + tb[:, None] * u_b + sigma * rng.standard_normal(len(tb))[:, None] * u_a
    edge_a = corner + ta[:, None] * u_a + sigma * rng.standard_normal(len(ta))[:, None] * u_b
    return np.vstack([edge_b, edge_a])


def sensor_facing_corner(corner, phi, distance=15.0):
    """Sensor position looking into the corner along the bisector of its edges."""
    bisector = np.array([math.cos(phi + math.pi / 4.0), math.sin(phi + math.pi / 4.0)])
    return np.asarray(corner, dtype=float) - distance * bisector


@pytest.fixture
def l_shape_cluster():
    """Factory for L-shaped clusters seen from outside the corner."""

    def make(corner=(10.0, 5.0), phi=0.3, sigma=0.0, outlier_fraction=0.0, seed=0, len_b=4.5, len_a=2.0):
        rng = np.random.default_rng(seed)
        corner = np.asarray(corner, dtype=float)
        points = l_shape_points(corner, phi, len_b, len_a, sigma=sigma, rng=rng)
        if outlier_fraction > 0:
            count = int(round(outlier_fraction * len(points) / (1.0 - outlier_fraction)))
            local = np.column_stack([rng.uniform(0.4, len_b, count), rng.uniform(0.4, len_a + 1.5, count)])
            c, s = math.cos(phi), math.sin(phi)
            halo = corner + local @ np.array([[c, s], [-s, c]])
            points = np.vstack([points, halo])
        return PointCluster(points, sensor_facing_corner(corner, phi))

    return make
