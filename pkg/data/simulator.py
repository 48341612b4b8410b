"""
Synthetic scenario generator and 2D scanning LADAR for Ladartrack

Vehicles follow piecewise constant-speed, constant-turn-rate trajectories of
their rotation-axis point, so the body never slides sideways. Poses are
evaluated in closed form. Scans are produced by casting one ray per angular
step from the ego pose and keeping the nearest rectangle face hit; occlusion
falls out of nearest-hit selection.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from typing_extensions import Self

from domain.entities import BoxPose, PointCluster, ScanFrame, TruthState
from .exceptions import ScenarioConfigError

logger = logging.getLogger(__name__)

POINT_CLUTTER_SIZE = 0.3
SEGMENT_KINDS = ('constant_velocity', 'arc', 'stop')
CORRUPTION_MODES = ('shift', 'ghost')


def _check(condition: bool, field_name: str, message: str) -> None:
    if not condition:
        raise ScenarioConfigError(f"{field_name}: {message}", field=field_name)


def _number(data: Dict[str, Any], key: str, path: str, default: Any = None) -> float:
    value = data.get(key, default)
    name = f"{path}.{key}" if path else key
    _check(value is not None, name, "is required")
    _check(isinstance(value, (int, float)) and not isinstance(value, bool), name, f"must be a number (got {value!r})")
    _check(math.isfinite(value), name, "must be finite")
    return float(value)


def _reject_unknown(data: Dict[str, Any], allowed: Sequence[str], path: str) -> None:
    _check(isinstance(data, dict), path or 'scenario', "must be an object")
    for key in data:
        name = f"{path}.{key}" if path else key
        _check(key in allowed, name, "unknown field")


@dataclass(frozen=True)
class SensorModel:
    """Scanning LADAR parameters."""

    fov: float = 2.0 * math.pi
    angular_resolution: float = math.radians(0.25)
    max_range: float = 60.0
    range_sigma: float = 0.05
    dropout_prob: float = 0.01

    def __post_init__(self):
        _check(0 < self.fov <= 2.0 * math.pi, 'sensor.fov', "must be in (0, 2 pi]")
        _check(self.angular_resolution > 0, 'sensor.angular_resolution', "must be > 0")
        _check(self.max_range > 0, 'sensor.max_range', "must be > 0")
        _check(self.range_sigma >= 0, 'sensor.range_sigma', "must be >= 0")
        _check(0 <= self.dropout_prob < 1, 'sensor.dropout_prob', "must be in [0, 1)")

    @property
    def ray_count(self) -> int:
        return max(1, int(round(self.fov / self.angular_resolution)))

    def to_dict(self) -> Dict[str, float]:
        return {
            'fov': self.fov,
            'angular_resolution': self.angular_resolution,
            'max_range': self.max_range,
            'range_sigma': self.range_sigma,
            'dropout_prob': self.dropout_prob,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str = 'sensor') -> Self:
        names = list(cls().to_dict())
        _reject_unknown(data, names, path)
        return cls(**{k: _number(data, k, path) for k in names if k in data})


@dataclass(frozen=True)
class Segment:
    """One piece of a trajectory; a duration of None runs to the end of the scenario."""

    kind: str = 'constant_velocity'
    duration: Optional[float] = None
    speed: float = 0.0
    turn_rate: float = 0.0

    def __post_init__(self):
        _check(self.kind in SEGMENT_KINDS, 'segment.kind', f"must be one of {', '.join(SEGMENT_KINDS)}")
        _check(self.duration is None or self.duration > 0, 'segment.duration', "must be > 0")
        if self.kind == 'stop':
            _check(self.speed == 0 and self.turn_rate == 0, 'segment.speed', "a stop has no motion")
        if self.kind == 'constant_velocity':
            _check(self.turn_rate == 0, 'segment.turn_rate', "must be 0 for constant_velocity")

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'kind': self.kind, 'speed': self.speed, 'turn_rate': self.turn_rate}
        if self.duration is not None:
            data['duration'] = self.duration
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str) -> Self:
        _reject_unknown(data, ('kind', 'duration', 'speed', 'turn_rate', 'radius'), path)
        kind = data.get('kind', 'constant_velocity')
        _check(kind in SEGMENT_KINDS, f"{path}.kind", f"must be one of {', '.join(SEGMENT_KINDS)}")
        duration = _number(data, 'duration', path) if 'duration' in data else None
        _check(duration is None or duration > 0, f"{path}.duration", "must be > 0")
        speed = _number(data, 'speed', path, 0.0)
        turn_rate = _number(data, 'turn_rate', path, 0.0)
        if 'radius' in data:
            radius = _number(data, 'radius', path)
            _check(radius != 0, f"{path}.radius", "must be non-zero (positive turns left)")
            turn_rate = speed / radius
        try:
            return cls(kind, duration, speed, turn_rate)
        except ScenarioConfigError as e:
            raise ScenarioConfigError(str(e).replace('segment', path, 1), field=e.field.replace('segment', path, 1))


@dataclass(frozen=True)
class Trajectory:
    """Initial centre pose plus segments driving the rotation-axis point."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    segments: Tuple[Segment, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {'x': self.x, 'y': self.y, 'theta': self.theta,
                'segments': [s.to_dict() for s in self.segments]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str) -> Self:
        _reject_unknown(data, ('x', 'y', 'theta', 'segments'), path)
        segments = data.get('segments', [])
        _check(isinstance(segments, list), f"{path}.segments", "must be a list")
        return cls(
            x=_number(data, 'x', path, 0.0),
            y=_number(data, 'y', path, 0.0),
            theta=_number(data, 'theta', path, 0.0),
            segments=tuple(Segment.from_dict(s, f"{path}.segments[{i}]") for i, s in enumerate(segments)),
        )

    def axis_state(self, t: float, L: float = 0.0) -> Tuple[float, float, float, float, float]:
        """Rotation-axis point (ax, ay), heading, speed and turn rate at time t."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        ax, ay, theta = self.x + L * c, self.y + L * s, self.theta
        remaining = t
        speed = turn_rate = 0.0
        for index, segment in enumerate(self.segments):
            last = index == len(self.segments) - 1
            span = remaining if (last or segment.duration is None) else min(remaining, segment.duration)
            speed, turn_rate = segment.speed, segment.turn_rate
            ax, ay, theta = _advance_axis(ax, ay, theta, speed, turn_rate, span)
            remaining -= span
            if remaining <= 0:
                break
        return ax, ay, theta, speed, turn_rate

    def truth(self, t: float, object_id: int, L: float = 0.0, length: float = 0.0, width: float = 0.0,
              is_vehicle: bool = True) -> TruthState:
        ax, ay, theta, speed, turn_rate = self.axis_state(t, L)
        c, s = math.cos(theta), math.sin(theta)
        # centre = axis - R(theta) (L, 0); its velocity picks up -turn_rate * L sideways
        return TruthState(
            object_id=object_id,
            x=ax - L * c,
            y=ay - L * s,
            theta=theta,
            vx=speed * c + turn_rate * L * s,
            vy=speed * s - turn_rate * L * c,
            speed=speed,
            turn_rate=turn_rate,
            L=L,
            length=length,
            width=width,
            is_vehicle=is_vehicle,
        )


def _advance_axis(ax: float, ay: float, theta: float, speed: float, turn_rate: float,
                  tau: float) -> Tuple[float, float, float]:
    """Closed-form motion of a point moving along its heading on a circular arc."""
    if tau <= 0:
        return ax, ay, theta
    turn = turn_rate * tau
    if abs(turn) < 1e-12:
        return ax + speed * tau * math.cos(theta), ay + speed * tau * math.sin(theta), theta
    radius = speed / turn_rate
    end = theta + turn
    return (ax + radius * (math.sin(end) - math.sin(theta)),
            ay - radius * (math.cos(end) - math.cos(theta)),
            end)


@dataclass(frozen=True)
class VehicleSpec:
    """A rectangular vehicle whose rotation axis sits L metres ahead of its centre."""

    length: float
    width: float
    trajectory: Trajectory
    L: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {'length': self.length, 'width': self.width, 'L': self.L,
                'trajectory': self.trajectory.to_dict()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str) -> Self:
        _reject_unknown(data, ('length', 'width', 'L', 'trajectory'), path)
        length = _number(data, 'length', path)
        width = _number(data, 'width', path)
        _check(length > 0, f"{path}.length", "must be > 0")
        _check(width > 0, f"{path}.width", "must be > 0")
        L = _number(data, 'L', path, 0.0)
        _check(abs(L) <= length, f"{path}.L", "rotation axis must lie within the vehicle length")
        return cls(length, width, Trajectory.from_dict(data.get('trajectory', {}), f"{path}.trajectory"), L)


@dataclass(frozen=True)
class ClutterSpec:
    """A static rectangle; point clutter is a small square."""

    x: float
    y: float
    theta: float = 0.0
    length: float = POINT_CLUTTER_SIZE
    width: float = POINT_CLUTTER_SIZE

    def to_dict(self) -> Dict[str, float]:
        return {'x': self.x, 'y': self.y, 'theta': self.theta, 'length': self.length, 'width': self.width}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str) -> Self:
        _reject_unknown(data, ('x', 'y', 'theta', 'length', 'width'), path)
        length = _number(data, 'length', path, POINT_CLUTTER_SIZE)
        width = _number(data, 'width', path, POINT_CLUTTER_SIZE)
        _check(length > 0, f"{path}.length", "must be > 0")
        _check(width > 0, f"{path}.width", "must be > 0")
        return cls(_number(data, 'x', path), _number(data, 'y', path), _number(data, 'theta', path, 0.0),
                   length, width)


@dataclass(frozen=True)
class Corruption:
    """Corrupt the returns of one object for a run of frames.

    ``shift`` moves the object's returns by (dx, dy). ``ghost`` keeps them and
    adds a copy displaced by (dx, dy), labelled 0, the way clutter grouped in
    with a vehicle would look.
    """

    object: int
    start_frame: int
    frames: int
    dx: float = 0.0
    dy: float = 0.0
    mode: str = 'shift'

    def active(self, frame_index: int) -> bool:
        return self.start_frame <= frame_index < self.start_frame + self.frames

    def to_dict(self) -> Dict[str, Any]:
        return {'object': self.object, 'start_frame': self.start_frame, 'frames': self.frames,
                'dx': self.dx, 'dy': self.dy, 'mode': self.mode}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str) -> Self:
        _reject_unknown(data, ('object', 'start_frame', 'frames', 'dx', 'dy', 'mode'), path)
        values = {k: _number(data, k, path) for k in ('object', 'start_frame', 'frames')}
        for key, value in values.items():
            _check(value == int(value) and value >= 0, f"{path}.{key}", "must be a non-negative integer")
        _check(values['frames'] >= 1, f"{path}.frames", "must be >= 1")
        mode = data.get('mode', 'shift')
        _check(mode in CORRUPTION_MODES, f"{path}.mode", f"must be one of {', '.join(CORRUPTION_MODES)}")
        return cls(int(values['object']), int(values['start_frame']), int(values['frames']),
                   _number(data, 'dx', path, 0.0), _number(data, 'dy', path, 0.0), mode)


@dataclass(frozen=True)
class ScenarioConfig:
    """A complete synthetic run: ego, vehicles, clutter, sensor and seed.

    Object ids are 1..n for vehicles in order, then continue through the clutter.
    """

    duration: float
    frame_rate: float = 10.0
    ego: Trajectory = field(default_factory=Trajectory)
    vehicles: Tuple[VehicleSpec, ...] = ()
    clutter: Tuple[ClutterSpec, ...] = ()
    sensor: SensorModel = field(default_factory=SensorModel)
    seed: int = 0
    corruptions: Tuple[Corruption, ...] = ()
    name: str = ''

    def __post_init__(self):
        _check(math.isfinite(self.duration) and self.duration > 0, 'duration', "must be > 0")
        _check(math.isfinite(self.frame_rate) and self.frame_rate > 0, 'frame_rate', "must be > 0")
        for i, corruption in enumerate(self.corruptions):
            _check(1 <= corruption.object <= len(self.vehicles) + len(self.clutter),
                   f"corruptions[{i}].object", "does not name an object")

    @property
    def frame_count(self) -> int:
        return int(round(self.duration * self.frame_rate))

    @property
    def dt(self) -> float:
        return 1.0 / self.frame_rate

    def with_seed(self, seed: int) -> 'ScenarioConfig':
        return ScenarioConfig(self.duration, self.frame_rate, self.ego, self.vehicles, self.clutter,
                              self.sensor, seed, self.corruptions, self.name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'duration': self.duration,
            'frame_rate': self.frame_rate,
            'seed': self.seed,
            'ego': self.ego.to_dict(),
            'sensor': self.sensor.to_dict(),
            'vehicles': [v.to_dict() for v in self.vehicles],
            'clutter': [c.to_dict() for c in self.clutter],
            'corruptions': [c.to_dict() for c in self.corruptions],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Self:
        _reject_unknown(data, ('name', 'duration', 'frame_rate', 'seed', 'ego', 'sensor', 'vehicles',
                               'clutter', 'corruptions'), '')
        seed = data.get('seed', 0)
        _check(isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0, 'seed',
               "must be a non-negative integer")
        lists = {}
        for key in ('vehicles', 'clutter', 'corruptions'):
            lists[key] = data.get(key, [])
            _check(isinstance(lists[key], list), key, "must be a list")
        return cls(
            duration=_number(data, 'duration', ''),
            frame_rate=_number(data, 'frame_rate', '', 10.0),
            ego=Trajectory.from_dict(data.get('ego', {}), 'ego'),
            vehicles=tuple(VehicleSpec.from_dict(v, f"vehicles[{i}]") for i, v in enumerate(lists['vehicles'])),
            clutter=tuple(ClutterSpec.from_dict(c, f"clutter[{i}]") for i, c in enumerate(lists['clutter'])),
            sensor=SensorModel.from_dict(data.get('sensor', {})),
            seed=seed,
            corruptions=tuple(Corruption.from_dict(c, f"corruptions[{i}]")
                              for i, c in enumerate(lists['corruptions'])),
            name=str(data.get('name', '')),
        )


# ---------------------------------------------------------------------------
# truth and rendering
# ---------------------------------------------------------------------------

def ego_pose(config: ScenarioConfig, t: float) -> np.ndarray:
    ax, ay, theta, _, _ = config.ego.axis_state(t)
    return np.array([ax, ay, theta])


def generate_truth(config: ScenarioConfig, t: float) -> List[TruthState]:
    """Ground-truth state of every object at time t.

    Raises:
        ScenarioConfigError: if t lies outside [0, duration]
    """
    if not (0.0 <= t <= config.duration + 1e-9):
        raise ScenarioConfigError(f"t={t} outside the scenario duration [0, {config.duration}]", field='t')
    truth = [
        vehicle.trajectory.truth(t, index + 1, vehicle.L, vehicle.length, vehicle.width, True)
        for index, vehicle in enumerate(config.vehicles)
    ]
    offset = len(config.vehicles) + 1
    truth.extend(
        TruthState(offset + index, c.x, c.y, c.theta, length=c.length, width=c.width, is_vehicle=False)
        for index, c in enumerate(config.clutter)
    )
    return truth


def _faces(truth: Sequence[TruthState]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Start points, direction vectors and owner ids of every rectangle face."""
    starts, directions, owners = [], [], []
    for state in truth:
        corners = BoxPose(state.x, state.y, state.theta, state.length, state.width).corners()
        rolled = np.roll(corners, -1, axis=0)
        starts.append(corners)
        directions.append(rolled - corners)
        owners.extend([state.object_id] * 4)
    if not starts:
        return np.empty((0, 2)), np.empty((0, 2)), np.empty(0, dtype=int)
    return np.vstack(starts), np.vstack(directions), np.array(owners, dtype=int)


def cast_rays(origin: np.ndarray, angles: np.ndarray, starts: np.ndarray, directions: np.ndarray
              ) -> Tuple[np.ndarray, np.ndarray]:
    """Nearest positive hit distance per ray (inf for none) and the index of the face hit."""
    rays = np.column_stack([np.cos(angles), np.sin(angles)])
    if len(starts) == 0:
        return np.full(len(angles), np.inf), np.full(len(angles), -1)
    offset = starts - origin                                              # (m, 2)
    denom = rays[:, None, 0] * directions[None, :, 1] - rays[:, None, 1] * directions[None, :, 0]
    cross_od = offset[:, 0] * directions[:, 1] - offset[:, 1] * directions[:, 0]  # (m,)
    cross_or = offset[None, :, 0] * rays[:, None, 1] - offset[None, :, 1] * rays[:, None, 0]
    with np.errstate(divide='ignore', invalid='ignore'):
        distance = cross_od[None, :] / denom
        along = cross_or / denom
    valid = (np.abs(denom) > 1e-12) & (distance > 1e-9) & (along >= 0.0) & (along <= 1.0)
    distance = np.where(valid, distance, np.inf)
    nearest = np.argmin(distance, axis=1)
    best = distance[np.arange(len(angles)), nearest]
    return best, np.where(np.isfinite(best), nearest, -1)


def render_scan(config: ScenarioConfig, truth: Sequence[TruthState], t: float,
                rng: np.random.Generator) -> ScanFrame:
    """Cast every ray of the sensor at time t and return the labelled world-frame returns."""
    sensor = config.sensor
    pose = ego_pose(config, t)
    origin = pose[:2]
    count = sensor.ray_count
    angles = pose[2] - sensor.fov / 2.0 + (np.arange(count) + 0.5) * (sensor.fov / count)
    starts, directions, owners = _faces(truth)
    distance, face = cast_rays(origin, angles, starts, directions)

    # draw for every ray so the random stream does not depend on the scene
    noise = rng.standard_normal(count) * sensor.range_sigma
    dropped = rng.random(count) < sensor.dropout_prob

    measured = distance + noise
    keep = np.isfinite(distance) & (distance <= sensor.max_range) & ~dropped \
        & (measured > 0.0) & (measured <= sensor.max_range)
    points = origin + measured[keep, None] * np.column_stack([np.cos(angles[keep]), np.sin(angles[keep])])
    labels = owners[face[keep]]
    return ScanFrame(timestamp=t, ego_pose=pose, points=points, labels=labels, truth=list(truth))


def apply_corruptions(config: ScenarioConfig, frame: ScanFrame, frame_index: int) -> ScanFrame:
    """Shift or ghost the returns of objects with an active corruption."""
    for corruption in config.corruptions:
        if not corruption.active(frame_index) or frame.labels is None:
            continue
        mask = frame.labels == corruption.object
        offset = np.array([corruption.dx, corruption.dy])
        if corruption.mode == 'ghost':
            ghost = frame.points[mask] + offset
            frame.points = np.vstack([frame.points, ghost])
            frame.labels = np.concatenate([frame.labels, np.zeros(len(ghost), dtype=int)])
        else:
            frame.points[mask] += offset
    return frame


def simulate_frame(config: ScenarioConfig, frame_index: int) -> ScanFrame:
    """Render frame ``frame_index`` with its own random stream."""
    t = frame_index / config.frame_rate
    rng = np.random.default_rng([config.seed, frame_index])
    frame = render_scan(config, generate_truth(config, t), t, rng)
    return apply_corruptions(config, frame, frame_index)


def simulate(config: ScenarioConfig) -> Iterator[ScanFrame]:
    """All frames of a scenario in time order."""
    logger.info("simulating %d frames at %.1f Hz", config.frame_count, config.frame_rate)
    for index in range(config.frame_count):
        yield simulate_frame(config, index)


# ---------------------------------------------------------------------------
# segmentation
# ---------------------------------------------------------------------------

def cluster_labels(points: np.ndarray, gap: float = 0.7) -> np.ndarray:
    """Single-linkage component label per point for the given linking distance."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(points)
    if n == 0:
        return np.empty(0, dtype=int)
    pairs = cKDTree(points).query_pairs(gap, output_type='ndarray')
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return labels


def cluster_points(frame: ScanFrame, gap: float = 0.7, min_points: int = 3) -> List[PointCluster]:
    """Segment a frame into clusters; clusters with fewer than min_points are discarded.

    Clusters are ordered by their lowest point index.
    """
    if not gap > 0:
        raise ScenarioConfigError("cluster gap must be > 0", field='gap')
    labels = cluster_labels(frame.points, gap)
    clusters = []
    seen = set()
    for label in labels:
        if label in seen:
            continue
        seen.add(label)
        members = np.flatnonzero(labels == label)
        if len(members) >= min_points:
            clusters.append(PointCluster(frame.points[members], frame.sensor_origin, frame.timestamp))
    return clusters
