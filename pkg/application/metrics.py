"""
Tracking metrics for Ladartrack
Scores per-frame track reports against simulator ground truth.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from domain.entities import MotionModel, ScanFrame, TruthState
from domain.geometry import wrap_angle
from domain.tracker import HypothesisReport, TrackReport

logger = logging.getLogger(__name__)

MATCH_RADIUS = 3.0
MIN_VISIBLE_RETURNS = 3


def _mean_or_none(values: Sequence[float]) -> Optional[float]:
    return float(np.mean(values)) if len(values) else None


def _rmse_or_none(values: Sequence[float]) -> Optional[float]:
    return float(math.sqrt(np.mean(np.square(values)))) if len(values) else None


def axial_error(a: float, b: float) -> float:
    """Heading error ignoring the 180 degree box ambiguity."""
    e = abs(wrap_angle(a - b))
    return min(e, math.pi - e)


@dataclass
class ObjectMetrics:
    """Scores of one ground-truth object."""

    object_id: int
    is_vehicle: bool
    visible_frames: int = 0
    tracked_frames: int = 0
    position_errors: List[float] = field(default_factory=list)
    heading_errors: List[float] = field(default_factory=list)
    prediction_errors: Dict[str, List[List[float]]] = field(default_factory=dict)
    timeline: List[Tuple[int, str, int]] = field(default_factory=list)
    track_ids: List[int] = field(default_factory=list)

    @property
    def primary_track_id(self) -> Optional[int]:
        """Track id matched most often; ties go to the earliest."""
        if not self.track_ids:
            return None
        counts = Counter(self.track_ids)
        return max(counts, key=lambda track_id: (counts[track_id], -self.track_ids.index(track_id)))

    @property
    def continuity(self) -> float:
        """Share of visible frames held by the primary track id.

        A track that is dropped and respawned under a new id only counts for
        the frames of whichever id lasted longest.
        """
        if self.visible_frames == 0 or not self.track_ids:
            return 0.0
        held = self.track_ids.count(self.primary_track_id)
        return 100.0 * min(held, self.visible_frames) / self.visible_frames

    @property
    def tracked_pct(self) -> float:
        """Share of visible frames with any track matched, whatever its id."""
        if self.visible_frames == 0:
            return 0.0
        return 100.0 * min(self.tracked_frames, self.visible_frames) / self.visible_frames

    def curve(self, key: str) -> List[Optional[float]]:
        return [_mean_or_none(errors) for errors in self.prediction_errors.get(key, [])]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'object_id': self.object_id,
            'vehicle': self.is_vehicle,
            'visible_frames': self.visible_frames,
            'tracked_frames': self.tracked_frames,
            'continuity_pct': self.continuity,
            'tracked_pct': self.tracked_pct,
            'primary_track_id': self.primary_track_id,
            'position_rmse': _rmse_or_none(self.position_errors),
            'heading_rmse': _rmse_or_none(self.heading_errors),
            'prediction_error': {key: self.curve(key) for key in sorted(self.prediction_errors)},
            'track_ids': sorted(set(self.track_ids)),
            'model_timeline': [{'frame': f, 'model': m, 'hypotheses': n} for f, m, n in self.timeline],
        }


@dataclass
class MetricsReport:
    """Run-level metrics; per-object entries keyed by ground-truth id."""

    frames: int = 0
    track_rows: int = 0
    objects: Dict[int, ObjectMetrics] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'frames': self.frames,
            'track_rows': self.track_rows,
            'objects': [self.objects[k].to_dict() for k in sorted(self.objects)],
        }


def match_reports(truth: Sequence[TruthState], reports: Sequence[TrackReport],
                  radius: float = MATCH_RADIUS) -> Dict[int, TrackReport]:
    """Greedy one-to-one matching of truth objects to track reports by centre distance."""
    pairs = []
    for state in truth:
        for report in reports:
            distance = float(np.hypot(*(report.position - np.array([state.x, state.y]))))
            if distance <= radius:
                pairs.append((distance, state.object_id, report.track_id))
    pairs.sort()
    matched: Dict[int, TrackReport] = {}
    used = set()
    by_id = {r.track_id: r for r in reports}
    for _, object_id, track_id in pairs:
        if object_id in matched or track_id in used:
            continue
        matched[object_id] = by_id[track_id]
        used.add(track_id)
    return matched


def _best_of_model(hypotheses: Sequence[HypothesisReport], model: MotionModel) -> Optional[HypothesisReport]:
    candidates = [h for h in hypotheses if h.model is model]
    if not candidates:
        return None
    return min(candidates, key=lambda h: (h.missed_frames, h.mean_nis))


def _trajectories(report: TrackReport) -> Dict[str, np.ndarray]:
    paths = {'best': report.predicted_trajectory}
    for model in MotionModel:
        hyp = _best_of_model(report.hypotheses, model)
        if hyp is not None:
            paths[model.value] = hyp.predicted_trajectory
    return paths


def compute_metrics(frames: Sequence[ScanFrame], reports: Sequence[Sequence[TrackReport]],
                    prediction_dt: float = 0.1, frame_range: Optional[Tuple[int, int]] = None,
                    radius: float = MATCH_RADIUS) -> MetricsReport:
    """Score a run.

    Args:
        frames: scan frames carrying truth
        reports: tracker output per frame, aligned with frames
        prediction_dt: time step between predicted trajectory rows
        frame_range: optional [start, stop) frame window for prediction errors
        radius: maximum truth-to-track distance counted as tracked
    """
    report = MetricsReport(frames=len(frames), track_rows=sum(len(r) for r in reports))
    if not frames:
        return report
    timestamps = np.array([f.timestamp for f in frames])
    truth_by_frame = [{s.object_id: s for s in f.truth} for f in frames]

    for index, (frame, frame_reports) in enumerate(zip(frames, reports)):
        for state in frame.truth:
            metrics = report.objects.setdefault(state.object_id, ObjectMetrics(state.object_id, state.is_vehicle))
            returns = int(np.sum(frame.labels == state.object_id)) if frame.labels is not None else MIN_VISIBLE_RETURNS
            if returns >= MIN_VISIBLE_RETURNS:
                metrics.visible_frames += 1
        matched = match_reports(frame.truth, frame_reports, radius)
        for object_id, track in matched.items():
            state = truth_by_frame[index][object_id]
            metrics = report.objects[object_id]
            metrics.tracked_frames += 1
            metrics.track_ids.append(track.track_id)
            metrics.position_errors.append(float(np.hypot(*(track.position - np.array([state.x, state.y])))))
            metrics.heading_errors.append(axial_error(track.state.theta, state.theta))
            metrics.timeline.append((index, track.model.value, track.hypothesis_count))
            if frame_range is not None and not frame_range[0] <= index < frame_range[1]:
                continue
            for key, path in _trajectories(track).items():
                curves = metrics.prediction_errors.setdefault(key, [[] for _ in range(len(path))])
                for k in range(len(path)):
                    target_time = frame.timestamp + (k + 1) * prediction_dt
                    future = int(np.searchsorted(timestamps, target_time - 1e-6))
                    if future >= len(frames) or abs(timestamps[future] - target_time) > 1e-6:
                        continue
                    future_state = truth_by_frame[future].get(object_id)
                    if future_state is None:
                        continue
                    curves[k].append(float(np.hypot(path[k, 0] - future_state.x, path[k, 1] - future_state.y)))
    logger.info("scored %d frames against %d truth objects", len(frames), len(report.objects))
    return report
