"""
Domain entities for Ladartrack
Contains the core value objects shared by kinematics, fitting, shape and tracking.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from typing_extensions import Self

from .exceptions import InvalidArgumentError
from .geometry import rotation_matrix, wrap_angle


def _require_finite(owner: str, **values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise InvalidArgumentError(f"{owner}.{name} must be finite (got {value!r})")


class MotionModel(Enum):
    """Kinematic model carried by a track hypothesis."""
    ISM = "ISM"
    VASM = "VASM"


class FitKind(Enum):
    """Shape of a robust fit: a single visible edge or a perpendicular pair."""
    EDGE = "edge"
    CORNER = "corner"


@dataclass(frozen=True)
class IsmState:
    """Independent steering model state (x, xdot, y, ydot, theta, thetadot)."""

    x: float = 0.0
    xdot: float = 0.0
    y: float = 0.0
    ydot: float = 0.0
    theta: float = 0.0
    thetadot: float = 0.0

    def __post_init__(self):
        _require_finite("IsmState", x=self.x, xdot=self.xdot, y=self.y, ydot=self.ydot,
                        theta=self.theta, thetadot=self.thetadot)
        object.__setattr__(self, 'theta', wrap_angle(self.theta))

    @property
    def speed(self) -> float:
        return math.hypot(self.xdot, self.ydot)

    def to_vector(self) -> np.ndarray:
        return np.array([self.x, self.xdot, self.y, self.ydot, self.theta, self.thetadot])

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> Self:
        v = np.asarray(vector, dtype=float)
        return cls(*(float(c) for c in v[:6]))


@dataclass(frozen=True)
class VasmState:
    """Variable-axis Ackerman steering model state (x, y, L, v, theta, thetadot).

    ``L`` is the signed position of the rotation axis along the centreline,
    measured forward from the vehicle centre; ``v`` is the speed of that point.
    """

    x: float = 0.0
    y: float = 0.0
    L: float = 0.0
    v: float = 0.0
    theta: float = 0.0
    thetadot: float = 0.0

    L_MAX = 6.0

    def __post_init__(self):
        _require_finite("VasmState", x=self.x, y=self.y, L=self.L, v=self.v,
                        theta=self.theta, thetadot=self.thetadot)
        if abs(self.L) > self.L_MAX:
            raise InvalidArgumentError(f"VasmState.L must satisfy |L| <= {self.L_MAX} (got {self.L})")
        object.__setattr__(self, 'theta', wrap_angle(self.theta))

    def to_vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.L, self.v, self.theta, self.thetadot])

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> Self:
        v = np.asarray(vector, dtype=float)
        return cls(*(float(c) for c in v[:6]))


@dataclass(frozen=True)
class NoiseParams:
    """Process noise intensities for both motion models."""

    alpha: float = 1.0   # linear acceleration variance
    beta: float = 0.5    # ISM angular acceleration variance
    gamma: float = 0.5   # VASM angular acceleration variance
    eps_L: float = 0.01  # rotation-axis drift, applied as eps_L * dt

    def __post_init__(self):
        _require_finite("NoiseParams", alpha=self.alpha, beta=self.beta,
                        gamma=self.gamma, eps_L=self.eps_L)
        for name in ('alpha', 'beta', 'gamma', 'eps_L'):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"NoiseParams.{name} must be >= 0")

    def to_dict(self) -> Dict[str, float]:
        return {'alpha': self.alpha, 'beta': self.beta, 'gamma': self.gamma, 'eps_L': self.eps_L}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Self:
        return cls(**_known_keys(cls, data))


@dataclass(frozen=True, eq=False)
class PointCluster:
    """Segmented 2D returns of one object in the world frame."""

    points: np.ndarray
    sensor_origin: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        origin = np.asarray(self.sensor_origin, dtype=float).reshape(2)
        if len(points) < 2:
            raise InvalidArgumentError(f"PointCluster needs at least 2 points (got {len(points)})")
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(origin))):
            raise InvalidArgumentError("PointCluster points and sensor origin must be finite")
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'sensor_origin', origin)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)

    @property
    def viewing_direction(self) -> float:
        """Angle from the sensor origin to the cluster centroid."""
        d = self.centroid - self.sensor_origin
        return math.atan2(d[1], d[0])


@dataclass(frozen=True)
class CornerFit:
    """Corner (or single edge) fitted to a cluster.

    Edge 1 is the line through (xc, yc) with normal (cos phi, sin phi); edge 2 is
    the perpendicular line through the corner running along (cos phi, sin phi).
    For an edge fit (xc, yc) is the midpoint of the inlier span and phi is the
    edge normal pointing away from the sensor.
    """

    xc: float
    yc: float
    phi: float
    inliers_edge1: Tuple[int, ...] = ()
    inliers_edge2: Tuple[int, ...] = ()
    kind: FitKind = FitKind.CORNER
    degenerate: bool = False

    def __post_init__(self):
        _require_finite("CornerFit", xc=self.xc, yc=self.yc, phi=self.phi)
        object.__setattr__(self, 'phi', wrap_angle(self.phi))
        object.__setattr__(self, 'inliers_edge1', tuple(int(i) for i in self.inliers_edge1))
        object.__setattr__(self, 'inliers_edge2', tuple(int(i) for i in self.inliers_edge2))
        if self.kind is FitKind.EDGE and self.inliers_edge2:
            raise InvalidArgumentError("Edge fits cannot carry edge-2 inliers")
        if set(self.inliers_edge1) & set(self.inliers_edge2):
            raise InvalidArgumentError("Edge inlier sets must be disjoint")

    @property
    def corner(self) -> np.ndarray:
        return np.array([self.xc, self.yc])

    @property
    def inlier_count(self) -> int:
        return len(self.inliers_edge1) + len(self.inliers_edge2)

    def with_params(self, xc: float, yc: float, phi: float) -> 'CornerFit':
        return CornerFit(xc, yc, phi, self.inliers_edge1, self.inliers_edge2, self.kind, self.degenerate)

    def flagged_degenerate(self) -> 'CornerFit':
        return CornerFit(self.xc, self.yc, self.phi, self.inliers_edge1, self.inliers_edge2,
                         self.kind, True)


@dataclass(frozen=True)
class RansacConfig:
    """Robust edge/corner fitting settings."""

    iterations: int = 200
    sigma: float = 0.05
    inlier_threshold: Optional[float] = None  # defaults to 3 sigma
    min_inlier_fraction: float = 0.5
    slant_angle_s: float = math.radians(10.0)
    null_variance_cap: float = 100.0

    def __post_init__(self):
        if self.iterations < 1:
            raise InvalidArgumentError("RansacConfig.iterations must be >= 1")
        if not self.sigma > 0:
            raise InvalidArgumentError("RansacConfig.sigma must be > 0")
        if self.inlier_threshold is not None and not self.inlier_threshold > 0:
            raise InvalidArgumentError("RansacConfig.inlier_threshold must be > 0")
        if not 0 < self.min_inlier_fraction <= 1:
            raise InvalidArgumentError("RansacConfig.min_inlier_fraction must be in (0, 1]")
        if not 0 <= self.slant_angle_s < math.pi / 2:
            raise InvalidArgumentError("RansacConfig.slant_angle_s must be in [0, pi/2)")
        if not self.null_variance_cap > 0:
            raise InvalidArgumentError("RansacConfig.null_variance_cap must be > 0")

    @property
    def threshold(self) -> float:
        return self.inlier_threshold if self.inlier_threshold is not None else 3.0 * self.sigma

    def to_dict(self) -> Dict[str, Any]:
        return {
            'iterations': self.iterations,
            'sigma': self.sigma,
            'inlier_threshold': self.inlier_threshold,
            'min_inlier_fraction': self.min_inlier_fraction,
            'slant_angle_s': self.slant_angle_s,
            'null_variance_cap': self.null_variance_cap,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Self:
        return cls(**_known_keys(cls, data))


@dataclass(frozen=True)
class ShapeEstimate:
    """Vehicle dimensions with the histogram weight behind each."""

    length: float = 4.5
    width: float = 2.0
    length_confidence: float = 0.0
    width_confidence: float = 0.0

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise InvalidArgumentError("ShapeEstimate dimensions must be positive")


@dataclass(frozen=True)
class BoxPose:
    """Oriented rectangle: centre, heading of the length axis, dimensions."""

    x: float
    y: float
    heading: float
    length: float
    width: float

    # body-frame corner signs, counter-clockwise from front-left
    CORNER_SIGNS = ((1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0))

    @property
    def center(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def corner_offsets(self) -> np.ndarray:
        """Body-frame offsets from the centre to each corner."""
        half = np.array([self.length / 2.0, self.width / 2.0])
        return np.array(self.CORNER_SIGNS) * half

    def corners(self) -> np.ndarray:
        return self.center + self.corner_offsets() @ rotation_matrix(self.heading).T

    def contains(self, points: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """Mask of points inside the box dilated by ``margin``."""
        local = (np.asarray(points, dtype=float) - self.center) @ rotation_matrix(self.heading)
        return ((np.abs(local[:, 0]) <= self.length / 2.0 + margin)
                & (np.abs(local[:, 1]) <= self.width / 2.0 + margin))


@dataclass(frozen=True, eq=False)
class Measurement:
    """Centre measurement z = (x, y, theta) with covariance R."""

    z: np.ndarray
    R: np.ndarray
    kind: FitKind = FitKind.CORNER

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float).reshape(3).copy()
        R = np.asarray(self.R, dtype=float).reshape(3, 3)
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(R))):
            raise InvalidArgumentError("Measurement z and R must be finite")
        z[2] = wrap_angle(z[2])
        object.__setattr__(self, 'z', z)
        object.__setattr__(self, 'R', 0.5 * (R + R.T))

    @staticmethod
    def observation_matrix(model: MotionModel) -> np.ndarray:
        """3x6 H selecting (x, y, theta) from a state of the given model."""
        H = np.zeros((3, 6))
        for row, column in enumerate(STATE_INDICES[model]):
            H[row, column] = 1.0
        return H


# positions of x, y and theta in each model's state vector
STATE_INDICES = {
    MotionModel.ISM: (0, 2, 4),
    MotionModel.VASM: (0, 1, 4),
}


@dataclass(frozen=True)
class TruthState:
    """Ground-truth pose and motion of one simulated object."""

    object_id: int
    x: float
    y: float
    theta: float
    vx: float = 0.0
    vy: float = 0.0
    speed: float = 0.0
    turn_rate: float = 0.0
    L: float = 0.0
    length: float = 0.0
    width: float = 0.0
    is_vehicle: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            'id': self.object_id,
            'x': self.x,
            'y': self.y,
            'theta': self.theta,
            'vx': self.vx,
            'vy': self.vy,
            'speed': self.speed,
            'turn_rate': self.turn_rate,
            'L': self.L,
            'length': self.length,
            'width': self.width,
            'vehicle': self.is_vehicle,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Self:
        return cls(
            object_id=int(data['id']),
            x=float(data['x']),
            y=float(data['y']),
            theta=float(data['theta']),
            vx=float(data.get('vx', 0.0)),
            vy=float(data.get('vy', 0.0)),
            speed=float(data.get('speed', 0.0)),
            turn_rate=float(data.get('turn_rate', 0.0)),
            L=float(data.get('L', 0.0)),
            length=float(data.get('length', 0.0)),
            width=float(data.get('width', 0.0)),
            is_vehicle=bool(data.get('vehicle', True)),
        )


@dataclass(eq=False)
class ScanFrame:
    """One timestamped LADAR scan with the ego pose and optional ground truth."""

    timestamp: float
    ego_pose: np.ndarray
    points: np.ndarray
    labels: Optional[np.ndarray] = None
    truth: List[TruthState] = field(default_factory=list)

    def __post_init__(self):
        self.ego_pose = np.asarray(self.ego_pose, dtype=float).reshape(3)
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int).reshape(-1)
            if len(self.labels) != len(self.points):
                raise InvalidArgumentError("ScanFrame labels must match the number of points")

    @property
    def sensor_origin(self) -> np.ndarray:
        return self.ego_pose[:2]

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            'timestamp': self.timestamp,
            'ego_pose': [float(v) for v in self.ego_pose],
            'points': [[float(p[0]), float(p[1])] for p in self.points],
        }
        if self.labels is not None:
            data['labels'] = [int(v) for v in self.labels]
        if self.truth:
            data['truth'] = [t.to_dict() for t in self.truth]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Self:
        labels = data.get('labels')
        return cls(
            timestamp=float(data['timestamp']),
            ego_pose=np.array(data['ego_pose'], dtype=float),
            points=np.array(data.get('points', []), dtype=float).reshape(-1, 2),
            labels=None if labels is None else np.array(labels, dtype=int),
            truth=[TruthState.from_dict(t) for t in data.get('truth', [])],
        )


def _known_keys(cls, data: Dict[str, Any]) -> Dict[str, Any]:
    """Filter a config mapping to the dataclass fields, rejecting unknown keys."""
    names = set(cls.__dataclass_fields__)
    unknown = sorted(set(data) - names)
    if unknown:
        raise InvalidArgumentError(f"Unknown {cls.__name__} field(s): {', '.join(unknown)}")
    return dict(data)
