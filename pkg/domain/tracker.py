"""
Multi-hypothesis vehicle tracker for Ladartrack

Every new object starts as a single ISM hypothesis. Objects whose speed is
significantly above the stationary threshold are promoted to movers and gain
VASM hypotheses that differ in how many points must fall inside the fitted box
and in how much process noise they assume. All hypotheses of an object share one
associated cluster per frame; the one with the lowest recent normalised
innovation is reported.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Deque, Dict, List, Optional, Tuple, Union

import numpy as np
from typing_extensions import Self

from .entities import (STATE_INDICES, BoxPose, CornerFit, FitKind, IsmState, Measurement, MotionModel,
                       NoiseParams, PointCluster, RansacConfig, ShapeEstimate, VasmState, _known_keys)
from .exceptions import DegenerateFitError, FitFailureError, InvalidArgumentError, TrackError
from .fitting import edge_extents, fit_cluster, measurement_from_fit
from .geometry import symmetrize, wrap_angle, wrap_angles
from .kinematics import (ism_process_noise, ism_to_vasm, ism_transition_matrix, vasm_process_noise,
                         vasm_propagate, vasm_to_ism, vasm_transition_matrix)
from .shape import ShapeConfig, ShapeModel

logger = logging.getLogger(__name__)

State = Union[IsmState, VasmState]


class HypothesisPolicy(Enum):
    """How many hypotheses a mover carries."""
    MULTI = "multi"              # the ISM plus three VASM variants
    SINGLE_VASM = "single_vasm"  # the ISM is replaced by one VASM
    ISM_ONLY = "ism_only"        # never promoted


@dataclass(frozen=True)
class HypothesisParams:
    """Per-hypothesis knobs: required in-box point fraction and process noise scale."""

    inlier_fraction: float = 0.6
    noise_scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.inlier_fraction <= 1:
            raise InvalidArgumentError("HypothesisParams.inlier_fraction must be in (0, 1]")
        if not self.noise_scale > 0:
            raise InvalidArgumentError("HypothesisParams.noise_scale must be > 0")

    def to_dict(self) -> Dict[str, float]:
        return {'inlier_fraction': self.inlier_fraction, 'noise_scale': self.noise_scale}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Self:
        return cls(**_known_keys(cls, data))


DEFAULT_ISM_PARAMS = HypothesisParams(0.3, 1.0)

DEFAULT_VASM_PARAMS = (
    HypothesisParams(0.6, 1.0),
    HypothesisParams(0.8, 1.0),
    HypothesisParams(0.6, 4.0),
)


@dataclass(frozen=True)
class TrackerConfig:
    """Tracker settings; nested noise, RANSAC and shape blocks keep their own defaults."""

    gate_threshold: float = 11.34
    validation_gate: float = 21.11
    mover_speed_threshold: float = 0.5
    mover_sigma_count: float = 3.0
    min_updates_for_mover: int = 3
    mover_confirm_frames: int = 3
    max_missed: int = 3
    score_window: int = 10
    merge_margin: float = 1.5
    boundary_margin: float = 0.5
    small_object_size: float = 1.2
    initial_velocity_variance: float = 25.0
    initial_turn_rate_variance: float = 1.0
    initial_L_variance: float = 1.0
    prediction_steps: int = 10
    prediction_dt: float = 0.1
    seed: int = 0
    policy: HypothesisPolicy = HypothesisPolicy.MULTI
    ism_params: HypothesisParams = DEFAULT_ISM_PARAMS
    vasm_params: Tuple[HypothesisParams, ...] = DEFAULT_VASM_PARAMS
    noise: NoiseParams = field(default_factory=NoiseParams)
    ransac: RansacConfig = field(default_factory=RansacConfig)
    shape: ShapeConfig = field(default_factory=ShapeConfig)

    def __post_init__(self):
        for name in ('gate_threshold', 'validation_gate', 'mover_speed_threshold', 'mover_sigma_count',
                     'initial_velocity_variance', 'initial_turn_rate_variance', 'initial_L_variance',
                     'prediction_dt', 'merge_margin', 'boundary_margin', 'small_object_size'):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"TrackerConfig.{name} must be > 0 (got {value!r})")
        for name in ('min_updates_for_mover', 'mover_confirm_frames', 'max_missed', 'score_window',
                     'prediction_steps'):
            value = getattr(self, name)
            if not (isinstance(value, int) and value >= 1):
                raise InvalidArgumentError(f"TrackerConfig.{name} must be an integer >= 1 (got {value!r})")
        if not self.vasm_params:
            raise InvalidArgumentError("TrackerConfig.vasm_params must not be empty")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'gate_threshold': self.gate_threshold,
            'validation_gate': self.validation_gate,
            'mover_speed_threshold': self.mover_speed_threshold,
            'mover_sigma_count': self.mover_sigma_count,
            'min_updates_for_mover': self.min_updates_for_mover,
            'mover_confirm_frames': self.mover_confirm_frames,
            'max_missed': self.max_missed,
            'score_window': self.score_window,
            'merge_margin': self.merge_margin,
            'boundary_margin': self.boundary_margin,
            'small_object_size': self.small_object_size,
            'initial_velocity_variance': self.initial_velocity_variance,
            'initial_turn_rate_variance': self.initial_turn_rate_variance,
            'initial_L_variance': self.initial_L_variance,
            'prediction_steps': self.prediction_steps,
            'prediction_dt': self.prediction_dt,
            'seed': self.seed,
            'policy': self.policy.value,
            'ism_params': self.ism_params.to_dict(),
            'vasm_params': [p.to_dict() for p in self.vasm_params],
            'noise': self.noise.to_dict(),
            'ransac': self.ransac.to_dict(),
            'shape': self.shape.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Self:
        """Build a config from a possibly partial mapping merged onto the defaults."""
        values = _known_keys(cls, data)
        if 'policy' in values:
            try:
                values['policy'] = HypothesisPolicy(values['policy'])
            except ValueError:
                choices = ', '.join(p.value for p in HypothesisPolicy)
                raise InvalidArgumentError(
                    f"TrackerConfig.policy must be one of {choices} (got {values['policy']!r})")
        if 'ism_params' in values:
            values['ism_params'] = HypothesisParams.from_dict(values['ism_params'])
        if 'vasm_params' in values:
            values['vasm_params'] = tuple(HypothesisParams.from_dict(p) for p in values['vasm_params'])
        if 'noise' in values:
            values['noise'] = NoiseParams.from_dict({**NoiseParams().to_dict(), **values['noise']})
        if 'ransac' in values:
            values['ransac'] = RansacConfig.from_dict({**RansacConfig().to_dict(), **values['ransac']})
        if 'shape' in values:
            values['shape'] = ShapeConfig.from_dict({**ShapeConfig().to_dict(), **values['shape']})
        return cls(**values)


@dataclass(eq=False)
class Track:
    """One filtered hypothesis of a tracked object."""

    model: MotionModel
    state: State
    cov: np.ndarray
    shape: ShapeModel
    hypothesis_params: HypothesisParams = field(default_factory=HypothesisParams)
    score_window: Deque[float] = field(default_factory=lambda: deque(maxlen=10))
    missed_frames: int = 0
    updates: int = 0
    id: int = 0
    anchor_dims: Optional[ShapeEstimate] = None

    @property
    def position(self) -> np.ndarray:
        ix, iy, _ = STATE_INDICES[self.model]
        vector = self.state.to_vector()
        return np.array([vector[ix], vector[iy]])

    @property
    def position_cov(self) -> np.ndarray:
        ix, iy, _ = STATE_INDICES[self.model]
        return self.cov[np.ix_([ix, iy], [ix, iy])]

    @property
    def heading(self) -> float:
        return self.state.theta

    @property
    def mean_nis(self) -> float:
        return float(np.mean(self.score_window)) if self.score_window else math.inf

    def as_ism(self) -> Tuple[IsmState, np.ndarray]:
        """State and covariance expressed in the ISM parameterisation."""
        if self.model is MotionModel.ISM:
            return self.state, self.cov.copy()
        ism, J = vasm_to_ism(self.state)
        return ism, symmetrize(J @ self.cov @ J.T)

    def as_vasm(self, L_variance: float = 1.0) -> Tuple[VasmState, np.ndarray]:
        """State and covariance in the VASM parameterisation; ISM maps to L = 0."""
        if self.model is MotionModel.VASM:
            return self.state, self.cov.copy()
        vasm, J = ism_to_vasm(self.state)
        cov = symmetrize(J @ self.cov @ J.T)
        cov[2, 2] = L_variance
        return vasm, cov

    def box(self, dims: Optional[ShapeEstimate] = None) -> BoxPose:
        dims = dims or self.shape.estimate()
        x, y = self.position
        return BoxPose(x, y, self.heading, dims.length, dims.width)


@dataclass(frozen=True, eq=False)
class HypothesisReport:
    """Per-hypothesis snapshot used for evaluation."""

    model: MotionModel
    params: HypothesisParams
    state: State
    cov_diagonal: np.ndarray
    mean_nis: float
    missed_frames: int
    predicted_trajectory: np.ndarray


@dataclass(frozen=True, eq=False)
class TrackReport:
    """Best-hypothesis output of one object for one frame."""

    track_id: int
    timestamp: float
    best_index: int
    model: MotionModel
    state: State
    cov: np.ndarray
    shape: ShapeEstimate
    speed: float
    predicted_trajectory: np.ndarray
    hypotheses: List[HypothesisReport] = field(default_factory=list)

    @property
    def hypothesis_count(self) -> int:
        return len(self.hypotheses)

    @property
    def position(self) -> np.ndarray:
        ix, iy, _ = STATE_INDICES[self.model]
        vector = self.state.to_vector()
        return np.array([vector[ix], vector[iy]])


# ---------------------------------------------------------------------------
# filter equations
# ---------------------------------------------------------------------------

def _clip_axis(vector: np.ndarray) -> np.ndarray:
    vector[2] = float(np.clip(vector[2], -VasmState.L_MAX, VasmState.L_MAX))
    return vector


def _state_from_vector(model: MotionModel, vector: np.ndarray) -> State:
    if model is MotionModel.ISM:
        return IsmState.from_vector(vector)
    return VasmState.from_vector(_clip_axis(np.array(vector, dtype=float)))


def propagate_state(model: MotionModel, state: State, dt: float) -> State:
    if model is MotionModel.ISM:
        return IsmState.from_vector(ism_transition_matrix(dt) @ state.to_vector())
    return vasm_propagate(state, dt)


def kf_predict(track: Track, dt: float, noise: Optional[NoiseParams] = None) -> Track:
    """Propagate a hypothesis by dt; process noise is scaled by its noise_scale."""
    noise = noise or NoiseParams()
    if track.model is MotionModel.ISM:
        phi = ism_transition_matrix(dt)
        Q = ism_process_noise(dt, noise)
    else:
        phi = vasm_transition_matrix(track.state, dt)
        Q = vasm_process_noise(track.state, dt, noise)
    state = propagate_state(track.model, track.state, dt)
    cov = symmetrize(phi @ track.cov @ phi.T + track.hypothesis_params.noise_scale * Q)
    return replace(track, state=state, cov=cov)


def innovation(track: Track, meas: Measurement) -> Tuple[np.ndarray, np.ndarray]:
    """Wrapped innovation and its covariance S = H P H^T + R."""
    H = Measurement.observation_matrix(track.model)
    nu = meas.z - H @ track.state.to_vector()
    nu[2] = wrap_angle(nu[2])
    S = symmetrize(H @ track.cov @ H.T + meas.R)
    return nu, S


def kf_update(track: Track, meas: Measurement) -> Tuple[Track, float]:
    """Kalman update; returns the updated hypothesis and its NIS.

    The covariance uses the Joseph form. A singular innovation covariance
    rejects the update, counts a missed frame and reports an infinite NIS.
    """
    H = Measurement.observation_matrix(track.model)
    nu, S = innovation(track, meas)
    try:
        chol = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        logger.debug("track %d: singular innovation covariance, update rejected", track.id)
        return replace(track, missed_frames=track.missed_frames + 1), math.inf
    # K = P H^T S^-1 via the Cholesky factor
    PHt = track.cov @ H.T
    K = np.linalg.solve(chol.T, np.linalg.solve(chol, PHt.T)).T
    whitened = np.linalg.solve(chol, nu)
    nis = float(whitened @ whitened)

    vector = track.state.to_vector() + K @ nu
    IKH = np.eye(6) - K @ H
    cov = symmetrize(IKH @ track.cov @ IKH.T + K @ meas.R @ K.T)
    window = deque(track.score_window, maxlen=track.score_window.maxlen)
    window.append(nis)
    updated = replace(
        track,
        state=_state_from_vector(track.model, vector),
        cov=cov,
        score_window=window,
        missed_frames=0,
        updates=track.updates + 1,
    )
    return updated, nis


def center_speed(track: Track) -> Tuple[float, float]:
    """Centre speed and its standard deviation from the covariance."""
    ism, cov = track.as_ism()
    velocity = np.array([ism.xdot, ism.ydot])
    speed = float(np.hypot(*velocity))
    block = cov[np.ix_([1, 3], [1, 3])]
    if speed == 0.0:
        return 0.0, float(math.sqrt(max(np.trace(block) / 2.0, 0.0)))
    direction = velocity / speed
    return speed, float(math.sqrt(max(direction @ block @ direction, 0.0)))


def detect_mover(track: Track, config: Optional[TrackerConfig] = None) -> bool:
    """Speed minus mover_sigma_count standard deviations above the stationary threshold."""
    config = config or TrackerConfig()
    if track.updates < config.min_updates_for_mover:
        return False
    speed, std = center_speed(track)
    return speed - config.mover_sigma_count * std > config.mover_speed_threshold


def spawn_hypotheses(track: Track, config: Optional[TrackerConfig] = None) -> List[Track]:
    """Promote a single ISM mover to the hypothesis set of the configured policy."""
    config = config or TrackerConfig()
    if track.model is not MotionModel.ISM:
        raise TrackError(f"Track {track.id}: only ISM hypotheses can be promoted")
    if config.policy is HypothesisPolicy.ISM_ONLY:
        return [track]
    state, cov = track.as_vasm(config.initial_L_variance)
    params = config.vasm_params[:1] if config.policy is HypothesisPolicy.SINGLE_VASM else config.vasm_params
    vasms = [
        Track(
            model=MotionModel.VASM,
            state=state,
            cov=cov.copy(),
            shape=track.shape.copy(),
            hypothesis_params=p,
            score_window=deque(maxlen=track.score_window.maxlen),
            updates=track.updates,
            id=track.id,
            anchor_dims=track.anchor_dims,
        )
        for p in params
    ]
    if config.policy is HypothesisPolicy.SINGLE_VASM:
        return vasms
    return [track] + vasms


def select_best(hypotheses: List[Track], gate_threshold: float = 11.34) -> int:
    """Index of the hypothesis with the lowest windowed mean NIS.

    Each consecutive missed frame adds gate_threshold to the score. Ties go to
    VASM, then to the lower index; if no hypothesis has a score yet, index 0.
    """
    if not hypotheses:
        raise TrackError("select_best needs at least one hypothesis")
    scores = [h.mean_nis + gate_threshold * h.missed_frames for h in hypotheses]
    if all(math.isinf(s) for s in scores):
        return 0
    return min(range(len(hypotheses)),
               key=lambda i: (scores[i], 0 if hypotheses[i].model is MotionModel.VASM else 1, i))


def convert_to_model(source: Track, model: MotionModel, L_variance: float = 1.0) -> Tuple[State, np.ndarray]:
    if model is MotionModel.ISM:
        return source.as_ism()
    return source.as_vasm(L_variance)


def reinitialize_failed(hypotheses: List[Track], best_index: int,
                        config: Optional[TrackerConfig] = None) -> List[Track]:
    """Restart hypotheses that missed max_missed frames from the best one.

    Each restarted hypothesis keeps its own model and parameters; nothing is
    done while the best hypothesis is failing too.
    """
    config = config or TrackerConfig()
    best = hypotheses[best_index]
    if best.missed_frames >= config.max_missed:
        return list(hypotheses)
    result = []
    for index, hyp in enumerate(hypotheses):
        if index != best_index and hyp.missed_frames >= config.max_missed:
            state, cov = convert_to_model(best, hyp.model, config.initial_L_variance)
            logger.debug("track %d: hypothesis %d reinitialised from %d", hyp.id, index, best_index)
            hyp = replace(hyp, state=state, cov=cov, missed_frames=0, shape=best.shape.copy(),
                          score_window=deque(maxlen=hyp.score_window.maxlen), anchor_dims=best.anchor_dims)
        result.append(hyp)
    return result


def predict_trajectory(track: Track, steps: int = 10, dt: float = 0.1) -> np.ndarray:
    """Predict-only centre path: rows (x, y, theta) at dt, 2 dt, ..., steps * dt.

    Both models have closed-form solutions for a constant input, so every
    horizon is evaluated at once instead of stepping the propagator.
    """
    times = dt * np.arange(1, steps + 1)
    rows = np.empty((steps, 3))
    state = track.state
    if track.model is MotionModel.ISM:
        rows[:, 0] = state.x + state.xdot * times
        rows[:, 1] = state.y + state.ydot * times
    else:
        turn = state.thetadot * times
        # np.sinc is the normalised sinc
        half = np.sinc(turn / (2.0 * np.pi))
        cx = state.v * times * np.sinc(turn / np.pi) + 2.0 * state.L * np.sin(turn / 2.0) ** 2
        cy = state.v * state.thetadot * times ** 2 * half ** 2 / 2.0 - state.L * np.sin(turn)
        c, s = math.cos(state.theta), math.sin(state.theta)
        rows[:, 0] = state.x + c * cx - s * cy
        rows[:, 1] = state.y + s * cx + c * cy
    rows[:, 2] = wrap_angles(state.theta + state.thetadot * times)
    return rows


# ---------------------------------------------------------------------------
# association
# ---------------------------------------------------------------------------

@dataclass
class Association:
    """Cluster index and squared distance per associated object id, the rest unassigned."""

    assigned: Dict[int, int] = field(default_factory=dict)
    distances: Dict[int, float] = field(default_factory=dict)
    unassigned: List[int] = field(default_factory=list)


def association_distance(track: Track, cluster: PointCluster) -> float:
    """Squared Mahalanobis distance of the cluster centroid to the predicted centre.

    The visible points of a box lie up to half a diagonal from its centre, so the
    position covariance is inflated by that extent.
    """
    return float(_association_distances(track, cluster.centroid[None, :])[0])


def _association_distances(track: Track, centroids: np.ndarray) -> np.ndarray:
    dims = track.shape.estimate()
    half_diagonal_sq = (dims.length ** 2 + dims.width ** 2) / 4.0
    S = track.position_cov + (half_diagonal_sq / 3.0) * np.eye(2)
    d = centroids - track.position
    return np.einsum('ij,ij->i', d, np.linalg.solve(S, d.T).T)


def associate(manager: 'TrackManager', clusters: List[PointCluster]) -> Association:
    """Greedy nearest-neighbour association inside the chi-square gate.

    Objects are represented by their best hypothesis; pairs are taken in order of
    increasing distance, ties broken by object id then cluster index.
    """
    gate = manager.config.gate_threshold
    pairs = []
    if clusters:
        centroids = np.array([cluster.centroid for cluster in clusters])
        for object_id in sorted(manager.tracks):
            representative = manager.tracks[object_id][manager.best.get(object_id, 0)]
            distances = _association_distances(representative, centroids)
            pairs.extend((float(distances[index]), object_id, int(index))
                         for index in np.flatnonzero(distances <= gate))
    pairs.sort()
    result = Association()
    used = set()
    for distance, object_id, index in pairs:
        if object_id in result.assigned or index in used:
            continue
        result.assigned[object_id] = index
        result.distances[object_id] = distance
        used.add(index)
    result.unassigned = [i for i in range(len(clusters)) if i not in used]
    return result


def merge_clusters(first: PointCluster, second: PointCluster) -> PointCluster:
    """One cluster holding the returns of both; origin and time come from the first."""
    return PointCluster(np.vstack([first.points, second.points]), first.sensor_origin, first.timestamp)


# ---------------------------------------------------------------------------
# manager
# ---------------------------------------------------------------------------

def dimension_observations(cluster: PointCluster, fit: CornerFit, heading: float) -> Tuple[Optional[float], Optional[float]]:
    """Visible (length, width) implied by a fit under the given vehicle heading."""
    ext1, ext2 = edge_extents(cluster, fit)
    # edge 2 runs along phi; for edge fits phi is the normal
    along_phi = abs(wrap_angle(2.0 * (heading - fit.phi))) < math.pi / 2.0
    if fit.kind is FitKind.CORNER:
        return (ext2, ext1) if along_phi else (ext1, ext2)
    return (None, ext1) if along_phi else (ext1, None)


def spawn_dimensions(fit: CornerFit, extents: Tuple[float, float],
                     config: Optional[TrackerConfig] = None) -> ShapeEstimate:
    """Dimensions a new track starts from, taken from what the first fit shows.

    A corner gives both; a single edge longer than the mean default dimension
    is a side, a shorter one a front or rear. The hidden dimension keeps its
    default, except for edges shorter than small_object_size, which are taken
    as square. The result is ordered so length >= width.
    """
    config = config or TrackerConfig()
    shape = config.shape
    floor = shape.bin_width
    if fit.kind is FitKind.CORNER:
        long_side, short_side = max(extents), min(extents)
        if short_side <= 0.0:
            short_side = long_side if long_side < config.small_object_size else shape.default_width
        length, width = long_side, short_side
    else:
        span = extents[0]
        if span > 0.5 * (shape.default_length + shape.default_width):
            length, width = span, shape.default_width
        elif span < config.small_object_size:
            length, width = span, span
        else:
            length, width = shape.default_length, span
    length, width = max(length, floor), max(width, floor)
    return ShapeEstimate(length=max(length, width), width=min(length, width))


class TrackManager:
    """Single-writer multi-object tracker; call :meth:`step` once per frame."""

    def __init__(self, config: Optional[TrackerConfig] = None):
        self.config = config or TrackerConfig()
        self.tracks: Dict[int, List[Track]] = {}
        self.best: Dict[int, int] = {}
        self.frame_index = -1
        self.timestamp = 0.0
        self._next_id = 1
        self._mover_votes: Dict[int, int] = {}

    def __len__(self) -> int:
        return len(self.tracks)

    def hypotheses(self, object_id: int) -> List[Track]:
        try:
            return self.tracks[object_id]
        except KeyError:
            raise TrackError(f"Unknown track id {object_id}")

    def _rng(self, object_id: int) -> np.random.Generator:
        return np.random.default_rng([self.config.seed, self.frame_index, object_id])

    def step(self, clusters: List[PointCluster], dt: float, timestamp: Optional[float] = None) -> List[TrackReport]:
        """Advance all tracks by one frame of clusters.

        Unassigned clusters lying mostly inside a tracked object's predicted box
        (dilated by merge_margin) are fragments of that object and are merged
        into its cluster instead of spawning new tracks. Per-object failures
        never escape; they count as missed frames.
        """
        if not (math.isfinite(dt) and dt > 0):
            raise InvalidArgumentError(f"dt must be > 0 (got {dt!r})")
        self.frame_index += 1
        self.timestamp = timestamp if timestamp is not None else self.timestamp + dt

        for object_id in self.tracks:
            self.tracks[object_id] = [kf_predict(h, dt, self.config.noise) for h in self.tracks[object_id]]

        association = associate(self, clusters)
        assigned: Dict[int, PointCluster] = {}
        for object_id, index in association.assigned.items():
            logger.debug("track %d: cluster %d at distance %.2f", object_id, index,
                         association.distances[object_id])
            assigned[object_id] = clusters[index]
        leftovers = []
        for index in association.unassigned:
            owner = self._owner(clusters[index])
            if owner is None:
                leftovers.append(index)
                continue
            logger.debug("track %d: fragment of %d points merged", owner, len(clusters[index]))
            assigned[owner] = (merge_clusters(assigned[owner], clusters[index])
                               if owner in assigned else clusters[index])

        for object_id in sorted(self.tracks):
            hyps = self.tracks[object_id]
            previous_model = hyps[self.best[object_id]].model
            cluster = assigned.get(object_id)
            if cluster is None:
                hyps = [replace(h, missed_frames=h.missed_frames + 1) for h in hyps]
            else:
                hyps = self._update_object(object_id, hyps, cluster)
            hyps = self._maybe_promote(object_id, hyps)
            best = select_best(hyps, self.config.gate_threshold)
            hyps = reinitialize_failed(hyps, best, self.config)
            if hyps[best].model is not previous_model:
                logger.info("track %d: best model now %s", object_id, hyps[best].model.value)
            self.tracks[object_id] = hyps
            self.best[object_id] = best

        for object_id in [oid for oid, hyps in self.tracks.items()
                          if all(h.missed_frames > self.config.max_missed for h in hyps)]:
            logger.info("track %d dropped after %d missed frames", object_id, self.config.max_missed + 1)
            del self.tracks[object_id]
            del self.best[object_id]
            self._mover_votes.pop(object_id, None)

        # largest first, so fragments of a new object fall inside its fresh box
        for index in sorted(leftovers, key=lambda i: (-len(clusters[i]), i)):
            if self._owner(clusters[index]) is None:
                self._spawn(clusters[index])

        return self.reports()

    def _owner(self, cluster: PointCluster) -> Optional[int]:
        """Object whose predicted box, dilated by merge_margin, holds at least half the cluster."""
        owner, best_fraction = None, 0.5
        for object_id in sorted(self.tracks):
            representative = self.tracks[object_id][self.best[object_id]]
            fraction = float(np.mean(representative.box().contains(cluster.points, self.config.merge_margin)))
            if fraction > best_fraction or (owner is None and fraction == best_fraction):
                owner, best_fraction = object_id, fraction
        return owner

    def _update_object(self, object_id: int, hyps: List[Track], cluster: PointCluster) -> List[Track]:
        """Fit and update every hypothesis of one object.

        Each hypothesis fits only the points inside its own predicted box, dilated
        by boundary_margin plus one standard deviation of its predicted position;
        hypotheses that select the same points share a fit.
        """
        ransac = self.config.ransac
        predicted = hyps[self.best.get(object_id, 0)].box()
        fits: Dict[bytes, Optional[Tuple[PointCluster, CornerFit]]] = {}
        updated = []
        for hyp in hyps:
            spread = math.sqrt(max(float(np.linalg.eigvalsh(hyp.position_cov)[-1]), 0.0))
            mask = hyp.box().contains(cluster.points, self.config.boundary_margin + spread)
            key = b'' if mask.all() or np.count_nonzero(mask) < 3 else mask.tobytes()
            if key not in fits:
                subset = cluster if not key else PointCluster(cluster.points[mask], cluster.sensor_origin,
                                                              cluster.timestamp)
                try:
                    fits[key] = subset, fit_cluster(subset, ransac, self._rng(object_id), predicted=predicted)
                except FitFailureError as e:
                    logger.debug("track %d: %s", object_id, e)
                    fits[key] = None
            if fits[key] is None:
                updated.append(replace(hyp, missed_frames=hyp.missed_frames + 1))
            else:
                updated.append(self._update_hypothesis(hyp, cluster, *fits[key]))
        return updated

    def _update_hypothesis(self, hyp: Track, cluster: PointCluster, subset: PointCluster,
                           fit: CornerFit) -> Track:
        ransac = self.config.ransac
        missed = replace(hyp, missed_frames=hyp.missed_frames + 1)
        dims = hyp.shape.estimate()
        try:
            meas = measurement_from_fit(subset, fit, dims, hyp.heading, ransac, hyp.position)
            if hyp.anchor_dims is not None and (hyp.anchor_dims.length, hyp.anchor_dims.width) != (dims.length, dims.width):
                hyp = self._reanchor(hyp, subset, fit, meas, hyp.anchor_dims)
        except DegenerateFitError:
            logger.debug("track %d: degenerate fit", hyp.id)
            return missed

        # the fraction counts every point of the object's cluster, fitted or not
        box = BoxPose(meas.z[0], meas.z[1], meas.z[2], dims.length, dims.width)
        inside = float(np.mean(box.contains(cluster.points, 3.0 * ransac.sigma)))
        if inside < hyp.hypothesis_params.inlier_fraction:
            logger.debug("track %d: %.2f of points inside box, below %.2f", hyp.id, inside,
                         hyp.hypothesis_params.inlier_fraction)
            return missed

        updated, nis = kf_update(hyp, meas)
        if not nis <= self.config.validation_gate:
            logger.debug("track %d: %s update gated (NIS %.2f)", hyp.id, hyp.model.value, nis)
            return missed
        length, width = dimension_observations(subset, fit, meas.z[2])
        shape = updated.shape.copy()
        shape.observe(length, width)
        return replace(updated, shape=shape, anchor_dims=dims)

    def _reanchor(self, hyp: Track, cluster: PointCluster, fit: CornerFit, meas: Measurement,
                  old_dims: ShapeEstimate) -> Track:
        """Shift the centre by the change a revised shape estimate implies for this fit."""
        previous = measurement_from_fit(cluster, fit, old_dims, hyp.heading, self.config.ransac, hyp.position)
        shift = meas.z[:2] - previous.z[:2]
        ix, iy, _ = STATE_INDICES[hyp.model]
        vector = hyp.state.to_vector()
        vector[ix] += shift[0]
        vector[iy] += shift[1]
        return replace(hyp, state=_state_from_vector(hyp.model, vector))

    def _maybe_promote(self, object_id: int, hyps: List[Track]) -> List[Track]:
        """Promote a single ISM after mover_confirm_frames consecutive mover detections.

        Promotion assumes the mover drives forward: a backward velocity flips the
        heading by 180 degrees, so a vehicle that is reversing when promoted gets
        its front and rear swapped and VASM hypotheses with the axis mirrored.
        """
        if self.config.policy is HypothesisPolicy.ISM_ONLY:
            return hyps
        if len(hyps) != 1 or hyps[0].model is not MotionModel.ISM:
            return hyps
        if not detect_mover(hyps[0], self.config):
            self._mover_votes[object_id] = 0
            return hyps
        votes = self._mover_votes.get(object_id, 0) + 1
        self._mover_votes[object_id] = votes
        if votes < self.config.mover_confirm_frames:
            return hyps
        del self._mover_votes[object_id]
        ism = hyps[0].state
        if ism.xdot * math.cos(ism.theta) + ism.ydot * math.sin(ism.theta) < 0:
            hyps = [replace(hyps[0], state=replace(ism, theta=ism.theta + math.pi))]
        promoted = spawn_hypotheses(hyps[0], self.config)
        logger.info("track %d promoted to mover with %d hypotheses", object_id, len(promoted))
        return promoted

    def _spawn(self, cluster: PointCluster) -> Optional[int]:
        object_id = self._next_id
        ransac = self.config.ransac
        shape = ShapeModel(self.config.shape)
        try:
            fit = fit_cluster(cluster, ransac, self._rng(object_id))
            dims = spawn_dimensions(fit, edge_extents(cluster, fit), self.config)
            meas = measurement_from_fit(cluster, fit, dims, None, ransac)
        except (FitFailureError, DegenerateFitError) as e:
            logger.debug("cluster of %d points not spawned: %s", len(cluster), e)
            return None
        self._next_id += 1

        shape.seed_dimensions(dims.length, dims.width)
        length, width = dimension_observations(cluster, fit, meas.z[2])
        shape.observe(length, width)
        x, y, theta = meas.z
        cov = np.zeros((6, 6))
        cov[np.ix_([0, 2, 4], [0, 2, 4])] = meas.R
        cov[1, 1] = cov[3, 3] = self.config.initial_velocity_variance
        cov[5, 5] = self.config.initial_turn_rate_variance
        track = Track(
            model=MotionModel.ISM,
            state=IsmState(x, 0.0, y, 0.0, theta, 0.0),
            cov=cov,
            shape=shape,
            hypothesis_params=self.config.ism_params,
            score_window=deque(maxlen=self.config.score_window),
            id=object_id,
            anchor_dims=shape.estimate(),
        )
        self.tracks[object_id] = [track]
        self.best[object_id] = 0
        logger.info("track %d spawned at (%.2f, %.2f), %.1f x %.1f m", object_id, x, y, dims.length, dims.width)
        return object_id

    def _report(self, object_id: int) -> TrackReport:
        hyps = self.tracks[object_id]
        best = self.best[object_id]
        steps, dt = self.config.prediction_steps, self.config.prediction_dt
        hypothesis_reports = [
            HypothesisReport(
                model=h.model,
                params=h.hypothesis_params,
                state=h.state,
                cov_diagonal=np.diag(h.cov).copy(),
                mean_nis=h.mean_nis,
                missed_frames=h.missed_frames,
                predicted_trajectory=predict_trajectory(h, steps, dt),
            )
            for h in hyps
        ]
        chosen = hyps[best]
        return TrackReport(
            track_id=object_id,
            timestamp=self.timestamp,
            best_index=best,
            model=chosen.model,
            state=chosen.state,
            cov=chosen.cov.copy(),
            shape=chosen.shape.estimate(),
            speed=center_speed(chosen)[0],
            predicted_trajectory=hypothesis_reports[best].predicted_trajectory,
            hypotheses=hypothesis_reports,
        )

    def reports(self) -> List[TrackReport]:
        return [self._report(object_id) for object_id in sorted(self.tracks)]
