"""
Track Output Repository for Ladartrack Data Layer
Writes per-frame track records as CSV and the metrics report as JSON.
"""

import csv
import io
import json
import logging
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from domain.entities import IsmState, STATE_INDICES
from domain.kinematics import vasm_to_ism
from domain.tracker import TrackReport
from .exceptions import JsonSerializationError
from .file_manager import FileManager, PathLike

logger = logging.getLogger(__name__)


class TrackOutputRepository:
    """Repository for tracker outputs (column reference in docs/formats.md)."""

    def __init__(self, file_manager: Optional[FileManager] = None, prediction_steps: int = 10):
        self.file_manager = file_manager or FileManager()
        self.prediction_steps = prediction_steps

    @property
    def columns(self) -> List[str]:
        base = ['frame', 'timestamp', 'track_id', 'model', 'hypotheses', 'x', 'y', 'theta', 'vx', 'vy',
                'turn_rate', 'L', 'speed', 'var_x', 'var_y', 'var_theta', 'length', 'width']
        predicted = []
        for k in range(1, self.prediction_steps + 1):
            predicted.extend([f'pred_x_{k}', f'pred_y_{k}'])
        return base + predicted

    def report_row(self, frame: int, report: TrackReport) -> List[Any]:
        state = report.state
        if isinstance(state, IsmState):
            ism, L = state, ''
        else:
            ism, L = vasm_to_ism(state)[0], state.L
        ix, iy, itheta = STATE_INDICES[report.model]
        row = [
            frame, report.timestamp, report.track_id, report.model.value, report.hypothesis_count,
            ism.x, ism.y, ism.theta, ism.xdot, ism.ydot, ism.thetadot, L, report.speed,
            report.cov[ix, ix], report.cov[iy, iy], report.cov[itheta, itheta],
            report.shape.length, report.shape.width,
        ]
        for k in range(self.prediction_steps):
            if k < len(report.predicted_trajectory):
                row.extend([report.predicted_trajectory[k, 0], report.predicted_trajectory[k, 1]])
            else:
                row.extend(['', ''])
        return [float(v) if isinstance(v, float) or hasattr(v, 'dtype') else v for v in row]

    def render_tracks(self, frames: Iterable[Tuple[int, Sequence[TrackReport]]]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(self.columns)
        for frame, reports in frames:
            for report in reports:
                writer.writerow(self.report_row(frame, report))
        return buffer.getvalue()

    def write_tracks(self, frames: Iterable[Tuple[int, Sequence[TrackReport]]], path: PathLike) -> int:
        """
        Write one row per track per frame.

        Returns:
            Number of data rows written
        """
        text = self.render_tracks(frames)
        target = self.file_manager.write_text_atomic(path, text)
        rows = text.count('\n') - 1
        logger.info("wrote %d track rows to %s", rows, target)
        return rows

    def write_metrics(self, metrics: Dict[str, Any], path: PathLike) -> None:
        try:
            text = json.dumps(metrics, indent=2, sort_keys=True, allow_nan=False) + '\n'
        except (TypeError, ValueError) as e:
            raise JsonSerializationError(f"Failed to serialize metrics: {e}")
        self.file_manager.write_text_atomic(path, text)

    def read_tracks(self, path: PathLike) -> List[Dict[str, str]]:
        resolved = self.file_manager.require_file(path)
        with open(resolved, 'r', encoding='utf-8', newline='') as f:
            return list(csv.DictReader(f))

    def read_metrics(self, path: PathLike) -> Dict[str, Any]:
        resolved = self.file_manager.require_file(path)
        try:
            return json.loads(resolved.read_text(encoding='utf-8'))
        except json.JSONDecodeError as e:
            raise JsonSerializationError(f"{resolved}:{e.lineno}:{e.colno}: {e.msg}")
