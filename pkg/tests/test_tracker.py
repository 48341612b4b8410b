import math
from collections import deque
from dataclasses import replace

import numpy as np
import pytest

from domain.entities import (
    CornerFit, FitKind, IsmState, Measurement, MotionModel, NoiseParams, PointCluster, ShapeEstimate, VasmState,
)
from domain.exceptions import InvalidArgumentError, TrackError
from domain.kinematics import vasm_propagate
from domain.shape import ShapeModel
from domain.tracker import (
    HypothesisPolicy, Track, TrackerConfig, TrackManager, associate, detect_mover, innovation, kf_predict,
    kf_update, predict_trajectory, reinitialize_failed, select_best, spawn_dimensions, spawn_hypotheses,
)


def _ism(x=0.0, y=0.0, xdot=0.0, ydot=0.0, theta=0.0, var=1.0, scores=(), missed=0, updates=0):
    return Track(
        model=MotionModel.ISM,
        state=IsmState(x, xdot, y, ydot, theta, 0.0),
        cov=np.eye(6) * var,
        shape=ShapeModel(),
        score_window=deque(scores, maxlen=10),
        missed_frames=missed,
        updates=updates,
    )


def _vasm(x=0.0, y=0.0, L=0.0, v=0.0, theta=0.0, var=1.0, scores=(), missed=0):
    return Track(
        model=MotionModel.VASM,
        state=VasmState(x, y, L, v, theta, 0.0),
        cov=np.eye(6) * var,
        shape=ShapeModel(),
        score_window=deque(scores, maxlen=10),
        missed_frames=missed,
    )


def test_predict_moves_state_and_inflates_covariance():
    track = _ism(xdot=1.0, var=0.1)
    predicted = kf_predict(track, 0.5, NoiseParams())
    assert predicted.state.x == pytest.approx(0.5)
    assert predicted.cov[0, 0] > track.cov[0, 0]
    np.testing.assert_allclose(predicted.cov, predicted.cov.T)
    # the input hypothesis is untouched
    assert track.state.x == 0.0


def test_update_pulls_towards_measurement():
    track = _ism()
    meas = Measurement(np.array([1.0, 0.0, 0.0]), np.eye(3) * 0.01)
    updated, nis = kf_update(track, meas)
    assert nis == pytest.approx(1.0 / 1.01)
    assert updated.state.x == pytest.approx(1.0 / 1.01)
    assert updated.cov[0, 0] == pytest.approx(0.01 / 1.01)
    assert list(updated.score_window) == [pytest.approx(nis)]
    assert (updated.updates, updated.missed_frames) == (1, 0)


def test_singular_innovation_rejects_update():
    track = _ism(var=0.0)
    updated, nis = kf_update(track, Measurement(np.array([1.0, 0.0, 0.0]), np.zeros((3, 3))))
    assert math.isinf(nis)
    assert updated.missed_frames == 1
    assert updated.state == track.state


def test_heading_innovation_is_wrapped():
    track = _ism(theta=3.1)
    nu, _ = innovation(track, Measurement(np.array([0.0, 0.0, -3.1]), np.eye(3)))
    assert nu[2] == pytest.approx(2 * math.pi - 6.2)


def test_select_best_prefers_lowest_score():
    assert select_best([_ism(scores=[1.0, 1.0]), _vasm(scores=[2.0, 2.0])]) == 0


def test_select_best_tie_goes_to_vasm():
    assert select_best([_ism(scores=[1.0]), _vasm(scores=[1.0]), _vasm(scores=[1.0])]) == 1


def test_select_best_penalises_missed_frames():
    assert select_best([_ism(scores=[1.0], missed=1), _vasm(scores=[5.0])], gate_threshold=11.34) == 1


def test_select_best_without_scores():
    assert select_best([_ism(), _vasm()]) == 0
    with pytest.raises(TrackError):
        select_best([])


@pytest.mark.parametrize('policy, models', [
    (HypothesisPolicy.MULTI, ['ISM', 'VASM', 'VASM', 'VASM']),
    (HypothesisPolicy.SINGLE_VASM, ['VASM']),
    (HypothesisPolicy.ISM_ONLY, ['ISM']),
])
def test_spawn_hypotheses_per_policy(policy, models):
    track = _ism(xdot=5.0, var=0.1, updates=4)
    spawned = spawn_hypotheses(track, TrackerConfig(policy=policy))
    assert [h.model.value for h in spawned] == models
    for hyp in spawned:
        if hyp.model is MotionModel.VASM:
            assert hyp.state.v == pytest.approx(5.0)
            assert hyp.state.L == 0.0
            assert hyp.cov[2, 2] == pytest.approx(1.0)


def test_multi_policy_uses_distinct_parameters():
    spawned = spawn_hypotheses(_ism(xdot=5.0), TrackerConfig())
    params = {(h.hypothesis_params.inlier_fraction, h.hypothesis_params.noise_scale) for h in spawned[1:]}
    assert params == {(0.6, 1.0), (0.8, 1.0), (0.6, 4.0)}


def test_only_ism_can_be_promoted():
    with pytest.raises(TrackError):
        spawn_hypotheses(_vasm(v=5.0))


def test_failed_hypothesis_restarts_from_best():
    hyps = [_ism(x=5.0, xdot=2.0, scores=[1.0]), _vasm(x=-3.0, missed=3)]
    restarted = reinitialize_failed(hyps, 0, TrackerConfig())
    assert restarted[0] is hyps[0]
    assert restarted[1].model is MotionModel.VASM
    assert restarted[1].state.x == pytest.approx(5.0)
    assert restarted[1].state.v == pytest.approx(2.0)
    assert restarted[1].missed_frames == 0
    assert len(restarted[1].score_window) == 0


def test_nothing_restarts_while_best_is_failing():
    hyps = [_ism(missed=3), _vasm(missed=4)]
    restarted = reinitialize_failed(hyps, 0, TrackerConfig())
    assert restarted[1].state.x == hyps[1].state.x
    assert restarted[1].missed_frames == 4


def test_mover_detection():
    assert detect_mover(_ism(xdot=5.0, var=0.01, updates=5))
    assert not detect_mover(_ism(xdot=0.6, var=0.01, updates=5))
    assert not detect_mover(_ism(xdot=5.0, var=0.01, updates=2))
    # uncertain velocity is not enough
    assert not detect_mover(_ism(xdot=2.0, var=1.0, updates=5))


def test_predicted_trajectory_is_constant_velocity_for_ism():
    rows = predict_trajectory(_ism(xdot=1.0, ydot=2.0, theta=0.4), steps=10, dt=0.1)
    assert rows.shape == (10, 3)
    k = np.arange(1, 11)
    np.testing.assert_allclose(rows[:, 0], 0.1 * k)
    np.testing.assert_allclose(rows[:, 1], 0.2 * k)
    np.testing.assert_allclose(rows[:, 2], 0.4)


def test_association_takes_nearest_cluster_inside_gate():
    manager = TrackManager()
    manager.tracks[1] = [_ism(var=0.1)]
    manager.best[1] = 0
    near = PointCluster(np.array([[0.4, -0.2], [0.6, 0.2]]), np.zeros(2))
    far = PointCluster(np.array([[30.0, 0.0], [30.5, 0.0]]), np.zeros(2))
    result = associate(manager, [far, near])
    assert result.assigned == {1: 1}
    assert result.unassigned == [0]


def test_step_rejects_bad_dt():
    manager = TrackManager()
    for dt in (0.0, -0.1, float('nan')):
        with pytest.raises(InvalidArgumentError):
            manager.step([], dt)


def _stationary_frames(l_shape_cluster, count):
    return [l_shape_cluster(corner=(10.0, 5.0), phi=0.3, sigma=0.02, seed=frame) for frame in range(count)]


def test_stationary_box_keeps_one_ism_track(l_shape_cluster):
    manager = TrackManager()
    for cluster in _stationary_frames(l_shape_cluster, 30):
        reports = manager.step([cluster], 0.1)
    assert len(reports) == 1
    report = reports[0]
    assert report.track_id == 1
    assert report.model is MotionModel.ISM
    assert report.hypothesis_count == 1
    c, s = math.cos(0.3), math.sin(0.3)
    centre = np.array([10.0, 5.0]) + 2.25 * np.array([c, s]) + 1.0 * np.array([-s, c])
    assert np.linalg.norm(report.position - centre) < 0.3
    assert report.speed < 0.5
    assert report.predicted_trajectory.shape == (10, 3)


def test_track_is_dropped_after_too_many_misses(l_shape_cluster):
    manager = TrackManager()
    manager.step([l_shape_cluster()], 0.1)
    for _ in range(3):
        assert len(manager.step([], 0.1)) == 1
    assert manager.step([], 0.1) == []
    # ids are never reused
    reports = manager.step([l_shape_cluster()], 0.1)
    assert [r.track_id for r in reports] == [2]


def test_moving_box_is_promoted(l_shape_cluster):
    manager = TrackManager()
    for frame in range(30):
        cluster = l_shape_cluster(corner=(frame * 0.5, 5.0), phi=0.0, sigma=0.02, seed=frame)
        manager.step([cluster], 0.1)
    hyps = manager.hypotheses(1)
    assert [h.model for h in hyps] == [MotionModel.ISM] + [MotionModel.VASM] * 3


def test_ism_only_policy_never_promotes(l_shape_cluster):
    manager = TrackManager(TrackerConfig(policy=HypothesisPolicy.ISM_ONLY))
    for frame in range(30):
        cluster = l_shape_cluster(corner=(frame * 0.5, 5.0), phi=0.0, sigma=0.02, seed=frame)
        manager.step([cluster], 0.1)
    assert [h.model for h in manager.hypotheses(1)] == [MotionModel.ISM]


def test_runs_are_deterministic(l_shape_cluster):
    frames = [l_shape_cluster(corner=(i * 0.5, 5.0), phi=0.0, sigma=0.05, outlier_fraction=0.2, seed=i)
              for i in range(20)]
    results = []
    for _ in range(2):
        manager = TrackManager(TrackerConfig(seed=3))
        for cluster in frames:
            reports = manager.step([cluster], 0.1)
        results.append([(r.track_id, r.model, tuple(r.state.to_vector())) for r in reports])
    assert results[0] == results[1]


def test_unknown_track_id():
    with pytest.raises(TrackError):
        TrackManager().hypotheses(7)


def test_config_merges_partial_blocks():
    config = TrackerConfig.from_dict({'policy': 'single_vasm', 'noise': {'alpha': 2.0}, 'ransac': {'iterations': 50}})
    assert config.policy is HypothesisPolicy.SINGLE_VASM
    assert config.noise.alpha == 2.0
    assert config.noise.beta == NoiseParams().beta
    assert config.ransac.iterations == 50
    assert TrackerConfig.from_dict(config.to_dict()) == config


@pytest.mark.parametrize('data', [
    {'gate': 3.0},
    {'policy': 'all'},
    {'noise': {'alhpa': 1.0}},
    {'max_missed': 0},
    {'gate_threshold': -1.0},
])
def test_config_rejects_bad_values(data):
    with pytest.raises(InvalidArgumentError):
        TrackerConfig.from_dict(data)


@pytest.mark.parametrize('model', [MotionModel.ISM, MotionModel.VASM])
def test_update_never_increases_covariance(model):
    rng = np.random.default_rng(17)
    for _ in range(50):
        A = rng.normal(size=(6, 6))
        B = rng.normal(size=(3, 3))
        P = A @ A.T + 0.1 * np.eye(6)
        R = B @ B.T + 0.01 * np.eye(3)
        track = _ism(var=1.0) if model is MotionModel.ISM else _vasm(var=1.0)
        track = replace(track, cov=P)
        meas = Measurement(rng.normal(size=3), R)
        updated, _ = kf_update(track, meas)
        gap = np.linalg.eigvalsh(P - updated.cov)
        assert gap.min() >= -1e-9 * np.abs(P).max()


def test_vasm_trajectory_matches_stepped_propagation():
    track = replace(_vasm(x=3.0, y=-1.0, L=-1.4, v=5.0, theta=0.7), state=VasmState(3.0, -1.0, -1.4, 5.0, 0.7, 0.4))
    rows = predict_trajectory(track, steps=10, dt=0.1)
    state = track.state
    for k in range(10):
        state = vasm_propagate(state, 0.1)
        np.testing.assert_allclose(rows[k], [state.x, state.y, state.theta], atol=1e-9)


def test_association_reports_distance():
    manager = TrackManager()
    manager.tracks[1] = [_ism(var=0.1)]
    manager.best[1] = 0
    result = associate(manager, [PointCluster(np.array([[-0.5, 0.0], [0.5, 0.0]]), np.zeros(2))])
    assert result.assigned == {1: 0}
    assert result.distances[1] == pytest.approx(0.0)


@pytest.mark.parametrize('kind, extents, expected', [
    (FitKind.CORNER, (1.9, 4.4), (4.4, 1.9)),
    (FitKind.CORNER, (0.6, 0.4), (0.6, 0.4)),
    (FitKind.EDGE, (4.2, 0.0), (4.2, 2.0)),
    (FitKind.EDGE, (1.8, 0.0), (4.5, 1.8)),
    (FitKind.EDGE, (0.5, 0.0), (0.5, 0.5)),
])
def test_spawn_dimensions_follow_visible_extents(kind, extents, expected):
    fit = CornerFit(0.0, 0.0, 0.0, (0, 1), (2, 3) if kind is FitKind.CORNER else (), kind)
    dims = spawn_dimensions(fit, extents, TrackerConfig())
    assert isinstance(dims, ShapeEstimate)
    assert (dims.length, dims.width) == pytest.approx(expected)


def _fragments(cluster, corner=(10.0, 5.0), phi=0.3):
    """Split an L-shaped cluster into its long edge and the rest."""
    along = (cluster.points - np.asarray(corner)) @ np.array([math.cos(phi), math.sin(phi)])
    long_edge = along > 0.3
    return [PointCluster(cluster.points[long_edge], cluster.sensor_origin),
            PointCluster(cluster.points[~long_edge], cluster.sensor_origin)]


def test_fragments_of_a_tracked_object_are_merged(l_shape_cluster):
    manager = TrackManager()
    frames = _stationary_frames(l_shape_cluster, 30)
    for cluster in frames[:10]:
        manager.step([cluster], 0.1)
    for cluster in frames[10:]:
        reports = manager.step(_fragments(cluster), 0.1)
    assert [r.track_id for r in reports] == [1]
    assert reports[0].hypothesis_count == 1
    assert reports[0].speed < 0.5


def test_fragments_of_a_new_object_spawn_one_track(l_shape_cluster):
    manager = TrackManager()
    reports = manager.step(_fragments(l_shape_cluster(sigma=0.02)), 0.1)
    assert [r.track_id for r in reports] == [1]


def test_spawned_track_is_centred_from_visible_extents(l_shape_cluster):
    # a 1 m square post seen at a corner
    cluster = l_shape_cluster(corner=(10.0, 5.0), phi=0.3, len_b=1.0, len_a=1.0)
    report = TrackManager().step([cluster], 0.1)[0]
    c, s = math.cos(0.3), math.sin(0.3)
    centre = np.array([10.0, 5.0]) + 0.5 * np.array([c, s]) + 0.5 * np.array([-s, c])
    assert np.linalg.norm(report.position - centre) < 0.15
    assert report.shape.length < 1.5


def test_promotion_needs_consecutive_detections():
    config = TrackerConfig(mover_confirm_frames=3)
    manager = TrackManager(config)
    mover = _ism(xdot=5.0, var=0.01, updates=5)
    still = _ism(var=0.01, updates=5)
    assert len(manager._maybe_promote(1, [mover])) == 1
    assert len(manager._maybe_promote(1, [mover])) == 1
    # a quiet frame restarts the count
    assert len(manager._maybe_promote(1, [still])) == 1
    assert len(manager._maybe_promote(1, [mover])) == 1
    assert len(manager._maybe_promote(1, [mover])) == 1
    promoted = manager._maybe_promote(1, [mover])
    assert [h.model for h in promoted] == [MotionModel.ISM] + [MotionModel.VASM] * 3
