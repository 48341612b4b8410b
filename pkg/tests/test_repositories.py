import json

import numpy as np
import pytest

from data.exceptions import (
    FileNotFoundError, JsonSerializationError, ScanLogError, ScenarioConfigError, TruncatedLogError,
)
from data.file_manager import FileManager
from data.scan_log_repository import ScanLogRepository
from data.scenario_repository import ScenarioRepository
from data.simulator import ScenarioConfig, Segment, Trajectory, VehicleSpec, simulate
from data.track_output_repository import TrackOutputRepository
from domain.tracker import HypothesisPolicy, TrackManager


def _scenario(duration=0.3):
    trajectory = Trajectory(-5.0, 8.0, 0.0, (Segment('constant_velocity', None, 4.0),))
    return ScenarioConfig(duration=duration, vehicles=(VehicleSpec(4.5, 1.8, trajectory, -1.4),), seed=3)


@pytest.fixture
def file_manager(tmp_path):
    manager = FileManager()
    manager.set_output_root(tmp_path)
    return manager


@pytest.fixture
def scan_log(file_manager):
    repository = ScanLogRepository(file_manager)
    assert repository.write(simulate(_scenario()), 'scan_log.jsonl') == 3
    return repository, file_manager.scan_log_path


def test_scan_log_keeps_frames_labels_and_truth(scan_log):
    repository, path = scan_log
    log = repository.read(path)
    assert len(log) == 3
    assert not log.truncated and log.warnings == []
    assert [f.timestamp for f in log.frames] == pytest.approx([0.0, 0.1, 0.2])
    expected = list(simulate(_scenario()))
    for frame, original in zip(log.frames, expected):
        np.testing.assert_array_equal(frame.points, original.points)
        np.testing.assert_array_equal(frame.labels, original.labels)
        assert [t.object_id for t in frame.truth] == [1]
        assert frame.truth[0].L == pytest.approx(-1.4)


def test_truncated_tail_keeps_complete_frames(scan_log):
    repository, path = scan_log
    text = path.read_text()
    path.write_text(text[:-40])
    log = repository.read(path)
    assert len(log) == 2
    assert log.truncated
    assert len(log.warnings) == 1 and 'truncated' in log.warnings[0]
    with pytest.raises(TruncatedLogError):
        repository.read(path, strict=True)


def test_malformed_middle_line_is_skipped(scan_log):
    repository, path = scan_log
    lines = path.read_text().splitlines()
    lines[1] = '{"format_version": 1, "frame": 1'
    path.write_text('\n'.join(lines) + '\n')
    log = repository.read(path)
    assert len(log) == 2
    assert not log.truncated
    assert 'line 2' in log.warnings[0]
    with pytest.raises(ScanLogError):
        repository.read(path, strict=True)


def test_unknown_format_version_is_an_error(scan_log):
    repository, path = scan_log
    lines = path.read_text().splitlines()
    record = json.loads(lines[0])
    record['format_version'] = 2
    lines[0] = json.dumps(record)
    path.write_text('\n'.join(lines) + '\n')
    with pytest.raises(ScanLogError, match='format_version'):
        repository.read(path)


def test_out_of_order_frames_are_skipped(scan_log):
    repository, path = scan_log
    lines = path.read_text().splitlines()
    path.write_text('\n'.join([lines[0], lines[2], lines[1]]) + '\n')
    log = repository.read(path)
    assert [f.timestamp for f in log.frames] == pytest.approx([0.0, 0.2])
    assert len(log.warnings) == 1


def test_empty_log_has_no_frames(file_manager, tmp_path):
    (tmp_path / 'empty.jsonl').write_text('')
    log = ScanLogRepository(file_manager).read(tmp_path / 'empty.jsonl')
    assert len(log) == 0 and not log.truncated


def test_missing_log(file_manager, tmp_path):
    with pytest.raises(FileNotFoundError):
        ScanLogRepository(file_manager).read(tmp_path / 'nope.jsonl')


BAD_SCENARIO = """{
  "duration": 5,
  "vehicles": [
    {"length": -4.0, "width": 2.0}
  ]
}
"""


def test_scenario_errors_name_field_and_line(tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text(BAD_SCENARIO)
    with pytest.raises(ScenarioConfigError) as excinfo:
        ScenarioRepository().load_scenario(path)
    assert str(excinfo.value) == f"{path}:4: vehicles[0].length: must be > 0"


def test_scenario_syntax_error_has_position(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"duration": 5,\n  "seed": }\n')
    with pytest.raises(JsonSerializationError, match=r'broken\.json:2:'):
        ScenarioRepository().load_scenario(path)


def test_saved_scenario_loads_back(tmp_path):
    repository = ScenarioRepository(FileManager(tmp_path))
    path = repository.save_scenario(_scenario(), 'saved.json')
    assert repository.load_scenario(path) == _scenario()


def test_bundled_scenarios_load(scenarios_dir):
    repository = ScenarioRepository()
    names = {path.stem: repository.load_scenario(path) for path in scenarios_dir.glob('*.json')}
    assert {'turn90', 'stationary', 'following', 'corrupted_following'} <= set(names)
    assert names['following'].frame_count == 100


def test_tracker_config_overrides(tmp_path):
    repository = ScenarioRepository()
    assert repository.load_tracker_config(None).policy is HypothesisPolicy.MULTI
    path = tmp_path / 'tracker.json'
    path.write_text('{"gate_threshold": 9.0, "ransac": {"iterations": 20}}\n')
    config = repository.load_tracker_config(path)
    assert config.gate_threshold == 9.0
    assert config.ransac.iterations == 20


def test_tracker_config_errors_are_anchored(tmp_path):
    path = tmp_path / 'tracker.json'
    path.write_text('{\n  "seed": 1,\n  "policy": "everything"\n}\n')
    with pytest.raises(ScenarioConfigError) as excinfo:
        ScenarioRepository().load_tracker_config(path)
    assert excinfo.value.field == 'policy'
    assert str(excinfo.value).startswith(f"{path}:3: ")


def _tracked_frames(l_shape_cluster):
    manager = TrackManager()
    return [(i, manager.step([l_shape_cluster(seed=i, sigma=0.02)], 0.1, 0.1 * i)) for i in range(4)]


def test_tracks_csv_layout(l_shape_cluster, file_manager):
    repository = TrackOutputRepository(file_manager)
    frames = _tracked_frames(l_shape_cluster)
    assert repository.write_tracks(frames, file_manager.tracks_path) == 4
    rows = repository.read_tracks(file_manager.tracks_path)
    assert list(rows[0])[:5] == ['frame', 'timestamp', 'track_id', 'model', 'hypotheses']
    assert list(rows[0])[-2:] == ['pred_x_10', 'pred_y_10']
    assert [row['frame'] for row in rows] == ['0', '1', '2', '3']
    assert {row['model'] for row in rows} == {'ISM'}
    assert all(row['L'] == '' for row in rows)
    assert all(row['track_id'] == '1' for row in rows)


def test_track_rendering_is_byte_stable(l_shape_cluster):
    repository = TrackOutputRepository()
    assert repository.render_tracks(_tracked_frames(l_shape_cluster)) == \
        repository.render_tracks(_tracked_frames(l_shape_cluster))


def test_metrics_reject_nan(file_manager):
    repository = TrackOutputRepository(file_manager)
    repository.write_metrics({'frames': 0, 'objects': []}, file_manager.metrics_path)
    assert repository.read_metrics(file_manager.metrics_path) == {'frames': 0, 'objects': []}
    with pytest.raises(JsonSerializationError):
        repository.write_metrics({'value': float('nan')}, file_manager.metrics_path)
