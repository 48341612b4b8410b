import math

import numpy as np
import pytest

from application.metrics import axial_error, compute_metrics, match_reports
from domain.entities import IsmState, MotionModel, ScanFrame, ShapeEstimate, TruthState
from domain.tracker import HypothesisParams, HypothesisReport, TrackReport


def _report(track_id, x, y=0.0, theta=0.0, path=(), t=0.0):
    state = IsmState(x, 0.0, y, 0.0, theta, 0.0)
    path = np.asarray(path, dtype=float).reshape(-1, 3)
    hyp = HypothesisReport(MotionModel.ISM, HypothesisParams(), state, np.ones(6), 1.0, 0, path)
    return TrackReport(track_id, t, 0, MotionModel.ISM, state, np.eye(6), ShapeEstimate(), 0.0, path, [hyp])


def _frame(t, x, returns=5):
    truth = [TruthState(1, x, 0.0, 0.0, vx=10.0, length=4.5, width=1.8)]
    points = np.column_stack([np.full(returns, x - 2.25), np.linspace(-0.9, 0.9, returns)])
    return ScanFrame(t, np.array([-20.0, 0.0, 0.0]), points, labels=np.ones(returns, dtype=int), truth=truth)


@pytest.fixture
def run():
    frames = [_frame(0.0, 0.0), _frame(0.1, 1.0), _frame(0.2, 2.0)]
    reports = [
        [_report(1, 0.1, theta=math.pi, path=[(1.0, 0.0, 0.0), (2.2, 0.0, 0.0)])],
        [_report(1, 1.0, path=[(2.0, 0.0, 0.0), (3.0, 0.0, 0.0)], t=0.1)],
        [],
    ]
    return frames, reports


def test_axial_error_ignores_box_flip():
    assert axial_error(math.pi, 0.0) == pytest.approx(0.0)
    assert axial_error(0.1, -0.1) == pytest.approx(0.2)
    assert axial_error(math.pi / 2, 0.0) == pytest.approx(math.pi / 2)


def test_continuity_and_errors(run):
    metrics = compute_metrics(*run).objects[1]
    assert metrics.visible_frames == 3
    assert metrics.tracked_frames == 2
    assert metrics.continuity == pytest.approx(200.0 / 3.0)
    assert metrics.heading_errors == pytest.approx([0.0, 0.0])
    data = metrics.to_dict()
    assert data['position_rmse'] == pytest.approx(math.sqrt(0.005))
    assert data['track_ids'] == [1]
    assert data['model_timeline'] == [{'frame': 0, 'model': 'ISM', 'hypotheses': 1},
                                      {'frame': 1, 'model': 'ISM', 'hypotheses': 1}]


def test_continuity_counts_only_the_primary_track_id():
    frames = [_frame(0.1 * k, float(k)) for k in range(4)]
    reports = [[_report(1, 0.0)], [_report(1, 1.0, t=0.1)], [_report(2, 2.0, t=0.2)], [_report(1, 3.0, t=0.3)]]
    metrics = compute_metrics(frames, reports).objects[1]
    assert metrics.primary_track_id == 1
    assert metrics.tracked_pct == pytest.approx(100.0)
    assert metrics.continuity == pytest.approx(75.0)
    assert metrics.to_dict()['track_ids'] == [1, 2]


def test_prediction_error_uses_future_truth(run):
    data = compute_metrics(*run).objects[1].to_dict()
    assert sorted(data['prediction_error']) == ['ISM', 'best']
    assert data['prediction_error']['best'] == pytest.approx([0.0, 0.2])
    assert data['prediction_error']['ISM'] == pytest.approx([0.0, 0.2])


def test_prediction_window(run):
    data = compute_metrics(*run, frame_range=(1, 3)).objects[1].to_dict()
    # only frame 1 predicts, and its second step falls after the last frame
    assert data['prediction_error']['best'] == [pytest.approx(0.0), None]
    assert compute_metrics(*run, frame_range=(1, 3)).objects[1].tracked_frames == 2


def test_sparse_objects_are_not_visible():
    frames = [_frame(0.0, 0.0, returns=2)]
    metrics = compute_metrics(frames, [[]]).objects[1]
    assert metrics.visible_frames == 0
    assert metrics.continuity == 0.0


def test_matching_is_one_to_one_within_radius():
    truth = [TruthState(1, 0.0, 0.0, 0.0), TruthState(2, 1.0, 0.0, 0.0), TruthState(3, 20.0, 0.0, 0.0)]
    matched = match_reports(truth, [_report(7, 0.2), _report(8, 16.5)])
    assert {k: r.track_id for k, r in matched.items()} == {1: 7}


def test_empty_run():
    report = compute_metrics([], [])
    assert report.to_dict() == {'frames': 0, 'track_rows': 0, 'objects': []}
