"""
Tracking use cases for Ladartrack
Runs the tracker over a scan log and writes tracks and metrics.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from data import DataError, cluster_points
from domain.entities import ScanFrame
from domain.exceptions import DomainError
from domain.tracker import HypothesisPolicy, TrackerConfig, TrackManager, TrackReport
from ..base_use_case import BaseUseCase
from ..exceptions import UseCaseError, ValidationError
from ..metrics import compute_metrics
from .simulation_use_cases import validate_seed

logger = logging.getLogger(__name__)

POLICY_NAMES = tuple(policy.value for policy in HypothesisPolicy)


@dataclass
class TrackRequest:
    """Request to track a scan log.

    ``scan_log_path`` defaults to ``<output_dir>/scan_log.jsonl``.
    """
    output_dir: Optional[Path] = None
    scan_log_path: Optional[Path] = None
    tracker_config_path: Optional[Path] = None
    policy: Optional[str] = None
    seed: Optional[int] = None
    strict: bool = False
    cluster_gap: float = 0.7
    min_cluster_points: int = 3


@dataclass
class TrackResponse:
    tracks_path: Path
    metrics_path: Path
    frames: int
    track_rows: int
    metrics: Dict[str, Any]
    reports: List[Tuple[int, List[TrackReport]]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)


def run_tracker(frames: Sequence[ScanFrame], config: TrackerConfig, cluster_gap: float = 0.7,
                min_cluster_points: int = 3) -> List[Tuple[int, List[TrackReport]]]:
    """Feed frames through a fresh TrackManager; dt comes from consecutive timestamps."""
    manager = TrackManager(config)
    output = []
    previous = None
    for index, frame in enumerate(frames):
        dt = frame.timestamp - previous if previous is not None else config.prediction_dt
        clusters = cluster_points(frame, cluster_gap, min_cluster_points)
        output.append((index, manager.step(clusters, dt, frame.timestamp)))
        previous = frame.timestamp
    logger.info("tracked %d frames, %d tracks alive at the end", len(frames), len(manager))
    return output


class RunTrackingUseCase(BaseUseCase[TrackRequest, TrackResponse]):
    """Use case for tracking a scan log and scoring it against its truth."""

    def validate_request(self, request: TrackRequest) -> None:
        super().validate_request(request)

        if not request.output_dir:
            raise ValidationError("An output directory is required")
        if request.policy is not None and request.policy not in POLICY_NAMES:
            raise ValidationError(f"policy must be one of {', '.join(POLICY_NAMES)} (got {request.policy!r})")
        validate_seed(request.seed)
        if not request.cluster_gap > 0:
            raise ValidationError("cluster gap must be > 0")
        if request.min_cluster_points < 2:
            raise ValidationError("clusters need at least 2 points")

    def load_config(self, request: TrackRequest) -> TrackerConfig:
        config = self.repositories.scenarios.load_tracker_config(request.tracker_config_path)
        if request.policy is not None:
            config = replace(config, policy=HypothesisPolicy(request.policy))
        if request.seed is not None:
            config = replace(config, seed=request.seed)
        return config

    def execute(self, request: TrackRequest) -> TrackResponse:
        repositories = self.repositories
        try:
            config = self.load_config(request)
            repositories.file_manager.set_output_root(request.output_dir)
            log_path = request.scan_log_path or repositories.file_manager.scan_log_path
            log = repositories.scan_logs.read(log_path, strict=request.strict)
        except DataError as e:
            raise UseCaseError(str(e))

        try:
            reports = run_tracker(log.frames, config, request.cluster_gap, request.min_cluster_points)
        except (DomainError, DataError) as e:
            raise UseCaseError(f"Tracking failed: {e}")

        metrics = compute_metrics(log.frames, [r for _, r in reports], config.prediction_dt).to_dict()
        metrics['policy'] = config.policy.value
        metrics['truncated'] = log.truncated
        metrics['warnings'] = list(log.warnings)

        try:
            repositories.tracks.prediction_steps = config.prediction_steps
            tracks_path = repositories.file_manager.tracks_path
            metrics_path = repositories.file_manager.metrics_path
            rows = repositories.tracks.write_tracks(reports, tracks_path)
            repositories.tracks.write_metrics(metrics, metrics_path)
        except DataError as e:
            raise UseCaseError(str(e))

        return TrackResponse(
            tracks_path=tracks_path,
            metrics_path=metrics_path,
            frames=len(log.frames),
            track_rows=rows,
            metrics=metrics,
            reports=reports,
            warnings=list(log.warnings),
        )
