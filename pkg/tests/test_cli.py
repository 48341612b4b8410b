import json

import pytest

from ui.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, build_parser, main

SCENARIO = {
    'name': 'cli',
    'duration': 0.5,
    'vehicles': [{
        'length': 4.5, 'width': 1.8, 'L': -1.2,
        'trajectory': {'x': 6.0, 'y': -9.0, 'theta': 0.5,
                       'segments': [{'kind': 'arc', 'speed': 3.0, 'radius': 12.0}]},
    }],
}


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / 'cli.json'
    path.write_text(json.dumps(SCENARIO))
    return path


def test_simulate_then_track(scenario_file, tmp_path, capsys):
    out = tmp_path / 'run'
    assert main(['simulate', '--scenario', str(scenario_file), '--out', str(out)]) == EXIT_OK
    assert (out / 'scan_log.jsonl').exists()
    assert main(['track', '--out', str(out), '--policy', 'single_vasm', '--seed', '3']) == EXIT_OK
    assert (out / 'tracks.csv').exists()
    assert json.loads((out / 'metrics.json').read_text())['policy'] == 'single_vasm'
    assert 'tracked 5 frames' in capsys.readouterr().out


def test_eval_reruns_are_byte_identical(scenario_file, tmp_path):
    outputs = []
    for name in ('first', 'second'):
        out = tmp_path / name
        assert main(['eval', '--scenario', str(scenario_file), '--out', str(out), '--seed', '7']) == EXIT_OK
        outputs.append({f: (out / f).read_bytes() for f in ('scan_log.jsonl', 'tracks.csv', 'metrics.json')})
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize('argv', [
    [],
    ['simulate', '--out', 'x'],
    ['track', '--out', 'x', '--policy', 'everything'],
    ['eval', '--scenario', 'a.json', '--out', 'x', '--seed', 'many'],
    ['--log-level', 'chatty', 'simulate', '--scenario', 'a.json', '--out', 'x'],
])
def test_usage_errors_exit_1(argv):
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    assert excinfo.value.code == EXIT_USAGE


def test_invalid_values_exit_1(scenario_file, tmp_path, capsys):
    code = main(['simulate', '--scenario', str(scenario_file), '--out', str(tmp_path / 'run'), '--seed', '-4'])
    assert code == EXIT_USAGE
    assert 'seed' in capsys.readouterr().err


def test_missing_scenario_exits_2(tmp_path, capsys):
    assert main(['simulate', '--scenario', str(tmp_path / 'nope.json'), '--out', str(tmp_path)]) == EXIT_DATA
    assert 'nope.json' in capsys.readouterr().err


def test_malformed_scenario_names_line(tmp_path, capsys):
    path = tmp_path / 'bad.json'
    path.write_text('{\n  "duration": 0\n}\n')
    assert main(['eval', '--scenario', str(path), '--out', str(tmp_path / 'run')]) == EXIT_DATA
    assert f"{path}:2: duration: must be > 0" in capsys.readouterr().err


def test_missing_scan_log_exits_2(tmp_path):
    assert main(['track', '--out', str(tmp_path)]) == EXIT_DATA


def test_log_level_is_case_insensitive():
    args = build_parser().parse_args(['--log-level', 'debug', 'track', '--out', 'x'])
    assert args.log_level == 'DEBUG'
    assert args.policy is None
