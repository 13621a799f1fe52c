import json

import pytest

from cli import cli_main
from models.model_io import load_model


def run_cli(capsys, *args):
    code = cli_main([str(arg) for arg in args])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(autouse=True)
def memory_database(monkeypatch):
    monkeypatch.setenv('STREAMFIRST_DATABASE_URI', 'sqlite://')


@pytest.fixture
def trace_file(tmp_path, capsys):
    path = tmp_path / 'worn.csv'
    code, _, _ = run_cli(capsys, 'gen-data', '--kind', 'trace', '--label', 'worn', '--seconds', 20,
                         '--seed', 3, '--out', path)
    assert code == 0
    return path


# ========== POWER ==========

def test_power_all_pipelines(capsys):
    code, out, _ = run_cli(capsys, 'power', '--pipeline', 'all')
    assert code == 0
    reports = {r['pipeline']: r for r in json.loads(out)}
    assert reports['regular_wf']['avg_current_ma'] == pytest.approx(5.4)
    assert reports['ours']['reduction_vs_regular_pct'] == 11


def test_power_fully_suppressed(capsys):
    code, out, _ = run_cli(capsys, 'power', '--wake-fraction', 0)
    assert code == 0
    report = json.loads(out)
    assert report['avg_current_ma'] == pytest.approx(4.6)
    assert report['reduction_vs_regular_pct'] == 15
    assert report['battery_life_h_rounded'] == 43


def test_power_rejects_bad_fraction(capsys):
    code, _, err = run_cli(capsys, 'power', '--wake-fraction', 1.5)
    assert code == 2
    assert err


# ========== BENCH ==========

def test_bench_csv_is_deterministic(capsys):
    code, first, _ = run_cli(capsys, 'bench', '--windows', '1:10')
    assert code == 0
    _, second, _ = run_cli(capsys, 'bench', '--windows', '1:10')
    assert first == second
    lines = first.strip().split('\n')
    assert lines[0].startswith('mode,window_s,mem_bytes,per_trigger_ms,max_odr_hz,ram_ok,timing_ok')
    assert len(lines) == 21


def test_bench_json_rows(capsys, tmp_path):
    out = tmp_path / 'sweep.json'
    code, _, _ = run_cli(capsys, 'bench', '--windows', '6:7', '--mode', 'width_first', '--format', 'json',
                         '--out', out)
    assert code == 0
    rows = json.loads(out.read_text())
    assert [row['mem_bytes'] for row in rows] == [7635, 8259]
    assert [row['ram_ok'] for row in rows] == [True, False]


@pytest.mark.parametrize('args', [
    ('bench', '--windows', '5:2'),
    ('bench', '--windows', 'abc'),
    ('bench', '--mode', 'sideways'),
    ('frobnicate',),
])
def test_usage_errors_exit_2(capsys, args):
    code, _, _ = run_cli(capsys, *args)
    assert code == 2


# ========== RUN ==========

def test_run_is_deterministic(capsys, trace_file, tmp_path):
    code, first, _ = run_cli(capsys, 'run', '--trace', trace_file, '--seed', 5)
    assert code == 0
    out = tmp_path / 'report.json'
    run_cli(capsys, 'run', '--trace', trace_file, '--seed', 5, '--out', out)
    assert out.read_text() == first
    report = json.loads(first)
    assert report['samples_total'] == 520
    assert report['windows_total'] == 20
    assert report['samples_lost'] == 0


def test_run_regular_csv(capsys, trace_file):
    code, out, _ = run_cli(capsys, 'run', '--trace', trace_file, '--pipeline', 'regular', '--mode',
                           'width_first', '--format', 'csv')
    assert code == 0
    header, row = out.strip().split('\n')
    values = dict(zip(header.split(','), row.split(',')))
    assert float(values['avg_current_ma']) == pytest.approx(5.4)
    assert int(values['host_interrupts']) == 104


def test_run_above_max_odr_reports_loss(capsys, trace_file):
    code, out, _ = run_cli(capsys, 'run', '--trace', trace_file, '--odr', 159)
    assert code == 0
    assert json.loads(out)['samples_lost'] > 0


def test_run_missing_trace(capsys, tmp_path):
    code, _, err = run_cli(capsys, 'run', '--trace', tmp_path / 'nope.csv')
    assert code == 1
    assert err.startswith('error: TraceFormatError:')


def test_run_unknown_profile(capsys, trace_file):
    code, _, err = run_cli(capsys, 'run', '--trace', trace_file, '--profile', 'no-such-board')
    assert code == 1
    assert 'ProfileError' in err


def test_run_bad_trace(capsys, tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text('t,ax,ay,az,gx,gy,gz\n0,0,0,1,0,0,x\n')
    code, _, err = run_cli(capsys, 'run', '--trace', path)
    assert code == 1
    assert 'line 2' in err and 'gz' in err


def test_run_record_stores_the_simulation(capsys, trace_file, tmp_path, monkeypatch):
    monkeypatch.setenv('STREAMFIRST_DATABASE_URI', f'sqlite:///{tmp_path / "runs.db"}')
    code, _, err = run_cli(capsys, 'run', '--trace', trace_file, '--record', '--label', 'desk')
    assert code == 0
    assert 'recorded simulation 1' in err


# ========== TRAIN AND CHECK ==========

def test_check_passes_on_the_reference_model(capsys):
    code, out, _ = run_cli(capsys, 'check', '--seed', 7, '--cases', 25)
    assert code == 0
    result = json.loads(out)
    assert result['stream_ok'] and result['gradient_ok']
    assert result['stream_max_rel_error'] <= 1e-5


def test_train_writes_a_loadable_model(capsys, tmp_path):
    data_dir = tmp_path / 'data'
    assert run_cli(capsys, 'gen-data', '--out', data_dir, '--minutes', 0.2, '--seed', 1)[0] == 0
    model_path = tmp_path / 'trained.json'
    report_path = tmp_path / 'metrics.json'
    code, _, _ = run_cli(capsys, 'train', '--data', data_dir, '--out', model_path, '--report', report_path,
                         '--epochs', 3, '--ee-epochs', 3, '--threshold', 0.6)
    assert code == 0
    metrics = json.loads(report_path.read_text())
    assert metrics['train_windows'] + metrics['test_windows'] == 24
    assert 0.0 <= metrics['ee_accuracy_test'] <= 1.0
    assert load_model(model_path).spec.ee_threshold == 0.6


# ========== DETERMINISM ==========

def directory_bytes(path):
    return {item.relative_to(path).as_posix(): item.read_bytes() for item in sorted(path.rglob('*')) if item.is_file()}


def test_gen_data_is_byte_identical(capsys, tmp_path):
    for name in ('a', 'b'):
        assert run_cli(capsys, 'gen-data', '--out', tmp_path / name, '--minutes', 0.1, '--seed', 4)[0] == 0
        assert run_cli(capsys, 'gen-data', '--kind', 'trace', '--label', 'not_worn', '--seconds', 15,
                       '--seed', 4, '--out', tmp_path / f'{name}.csv')[0] == 0
    assert directory_bytes(tmp_path / 'a') == directory_bytes(tmp_path / 'b')
    assert directory_bytes(tmp_path / 'a')
    assert (tmp_path / 'a.csv').read_bytes() == (tmp_path / 'b.csv').read_bytes()


def test_train_is_byte_identical(capsys, tmp_path):
    data_dir = tmp_path / 'data'
    assert run_cli(capsys, 'gen-data', '--out', data_dir, '--minutes', 0.2, '--seed', 2)[0] == 0
    model_path = tmp_path / 'model.json'
    report_path = tmp_path / 'metrics.json'
    outputs = []
    for _ in range(2):
        code, _, _ = run_cli(capsys, 'train', '--data', data_dir, '--out', model_path, '--report', report_path,
                             '--epochs', 2, '--ee-epochs', 2, '--seed', 2)
        assert code == 0
        outputs.append((model_path.read_bytes(), report_path.read_bytes()))
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize('args', [
    ('power', '--pipeline', 'all'),
    ('power', '--wake-fraction', 0.25, '--format', 'table'),
    ('check', '--seed', 5, '--cases', 10),
])
def test_reports_are_byte_identical(capsys, tmp_path, args):
    out = tmp_path / 'out.txt'
    outputs = []
    for _ in range(2):
        assert run_cli(capsys, *args, '--out', out)[0] == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    assert outputs[0]
