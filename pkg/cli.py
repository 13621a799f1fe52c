"""
File: cli.py
Purpose: Command-line interface (gen-data, train, run, bench, power, check)
Version: 1.1.0
Author: StreamFirst Team

Revision History:
- v1.0.0: Commands on a FlaskGroup, cli_main entry point with exit codes
- v1.1.0: `run --record` stores the replay in the database

Notes:
- Every random choice goes through --seed (fallback STREAMFIRST_SEED).
- JSON output uses sorted keys so repeated runs are byte-identical.
- Exit codes: 0 success, 1 domain or file error (`error: <code>: <message>`
  on stderr), 2 usage error.
- --profile takes a JSON file path or a built-in profile name.
"""

import json
import logging
import os
import sys

import click
import numpy as np
import pandas as pd
from flask.cli import FlaskGroup

from app import create_app
from models.datagen import LABELS, SynthConfig, generate_dataset, generate_trace, load_dataset, save_dataset
from models.datagen import train_test_split
from models.errors import ProfileError, StreamFirstError
from models.model_io import load_model, load_profile, save_model, with_weights
from models.early_exit import ExitHead
from models.network import forward_g
from models.partition import MODES
from models.power_model import PIPELINES, Scenario, compare_pipelines, power_report
from models.records import DeviceProfileRecord, SimulationRun, db, default_profile
from models.simulator import PIPELINES as REPLAY_PIPELINES
from models.simulator import replay, sweep_window, window_grid, write_sweep
from models.stream import run_window
from models.traces import read_trace, write_trace
from models.trainer import TrainConfig, accuracy, ee_accuracy, gradient_check, train_ee, train_end_to_end

logger = logging.getLogger(__name__)

PACKAGE_DIR = os.path.dirname(os.path.abspath(__file__))
DEFAULT_MODEL = os.path.join(PACKAGE_DIR, 'instance', 'models', 'reference.json')

STREAM_TOLERANCE = 1e-5
GRADIENT_TOLERANCE = 1e-3

# ========== HELPERS ==========

def resolve_profile(value):
    if os.path.exists(value):
        return load_profile(value)
    profile = default_profile(value)
    if profile is None:
        raise ProfileError(f'{value}: no such profile file or built-in profile', path=value)
    return profile


def emit(text, out=None):
    """Write to --out or stdout, always newline-terminated"""
    if not text.endswith('\n'):
        text += '\n'
    if out:
        with open(out, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(text)
    else:
        click.echo(text, nl=False)


def dumps(data):
    return json.dumps(data, sort_keys=True, indent=2)


def parse_range(value):
    """'1:10' -> (1, 10)"""
    try:
        first, last = (int(part) for part in value.split(':'))
    except ValueError as exc:
        raise click.BadParameter(f'expected FIRST:LAST whole seconds, got {value!r}') from exc
    if first < 1 or last < first:
        raise click.BadParameter(f'expected 1 <= FIRST <= LAST, got {value!r}')
    return first, last


THRESHOLD_RANGE = click.FloatRange(0.0, 1.0, min_open=True, max_open=True)

seed_option = click.option('--seed', type=int, envvar='STREAMFIRST_SEED', default=0, show_default=True,
                           help='Seed for every random choice (env STREAMFIRST_SEED)')
model_option = click.option('--model', 'model_path', default=DEFAULT_MODEL, show_default=True,
                            type=click.Path(dir_okay=False), help='Model JSON file')
profile_option = click.option('--profile', default='ispu-10mhz', show_default=True,
                              help='Profile JSON file or built-in profile name')


# ========== COMMAND GROUP ==========

cli = FlaskGroup(name='streamfirst', create_app=create_app, add_default_commands=False,
                 add_version_option=False, help='Depth-first streaming inference planner and simulator')


@cli.command('gen-data', with_appcontext=False)
@click.option('--kind', type=click.Choice(['dataset', 'trace']), default='dataset', show_default=True)
@click.option('--out', required=True, type=click.Path(), help='Dataset directory or trace CSV path')
@seed_option
@click.option('--odr', 'odr_hz', type=float, default=26.0, show_default=True)
@click.option('--minutes', type=float, default=3.0, show_default=True, help='Minutes per class (dataset)')
@click.option('--label', type=click.Choice(LABELS), default='worn', show_default=True, help='Trace label')
@click.option('--seconds', type=float, default=60.0, show_default=True, help='Trace length')
def gen_data(kind, out, seed, odr_hz, minutes, label, seconds):
    """Generate a synthetic worn / not-worn dataset or a labeled trace"""
    cfg = SynthConfig(seed=seed, odr_hz=odr_hz, minutes_per_class=minutes)
    if kind == 'dataset':
        data = generate_dataset(cfg)
        save_dataset(data, out)
        click.echo(f'wrote {len(data)} windows to {out}')
    else:
        trace = generate_trace(cfg, label, seconds)
        write_trace(trace, out)
        click.echo(f'wrote {len(trace)} samples to {out}')


@cli.command('train', with_appcontext=False)
@model_option
@click.option('--data', 'data_dir', type=click.Path(file_okay=False), help='Dataset directory (generated when omitted)')
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='Trained model JSON')
@click.option('--report', 'report_path', type=click.Path(dir_okay=False), help='Metrics JSON')
@seed_option
@click.option('--epochs', type=int, default=TrainConfig.epochs, show_default=True)
@click.option('--lr', 'learning_rate', type=float, default=TrainConfig.learning_rate, show_default=True)
@click.option('--batch-size', type=int, default=TrainConfig.batch_size, show_default=True)
@click.option('--ee-epochs', type=int, default=TrainConfig.epochs, show_default=True)
@click.option('--threshold', type=THRESHOLD_RANGE, help='Gate threshold stored in the model')
def train(model_path, data_dir, out, report_path, seed, epochs, learning_rate, batch_size, ee_epochs, threshold):
    """End-to-end training of f, then the exit head on frozen g"""
    network = load_model(model_path, seed=seed)
    data = load_dataset(data_dir) if data_dir else generate_dataset(SynthConfig(seed=seed,
                                                                              odr_hz=network.spec.odr_hz))
    train_set, test_set = train_test_split(data, 0.2, seed)

    history = []
    weights = train_end_to_end(network, train_set, TrainConfig(epochs, learning_rate, batch_size, seed), history)
    network = with_weights(network, weights=weights)
    ee_history = []
    head = train_ee(network, train_set, TrainConfig(ee_epochs, learning_rate, batch_size, seed), ee_history)
    network = with_weights(network, ee=head.weights, threshold=threshold)
    save_model(network, out)

    metrics = {
        'train_windows': len(train_set),
        'test_windows': len(test_set),
        'loss_initial': history[0],
        'loss_final': history[-1],
        'ee_loss_final': ee_history[-1],
        'task_accuracy_test': accuracy(network, test_set),
        'ee_accuracy_test': ee_accuracy(network, ExitHead.from_network(network), test_set),
        'model': out,
    }
    emit(dumps(metrics), report_path)
    if report_path:
        click.echo(f'wrote {out} and {report_path}')


@cli.command('run', with_appcontext=False)
@click.option('--trace', 'trace_path', required=True, type=click.Path(dir_okay=False))
@model_option
@profile_option
@seed_option
@click.option('--mode', type=click.Choice(MODES), default='depth_first', show_default=True)
@click.option('--pipeline', type=click.Choice(REPLAY_PIPELINES), default='ours', show_default=True)
@click.option('--threshold', type=THRESHOLD_RANGE, help='Override the gate threshold')
@click.option('--odr', 'odr_hz', type=float, help='Override the profile ODR')
@click.option('--format', 'fmt', type=click.Choice(['json', 'csv', 'table']), default='json', show_default=True)
@click.option('--out', type=click.Path(dir_okay=False))
@click.option('--record', is_flag=True, help='Store the run in the database')
@click.option('--label', 'run_label', help='Free-text label for --record')
def run(trace_path, model_path, profile, seed, mode, pipeline, threshold, odr_hz, fmt, out, record, run_label):
    """Replay a trace through the sensor -> gate -> host pipeline"""
    network = load_model(model_path, seed=seed)
    device = resolve_profile(profile)
    if odr_hz:
        device = device.with_odr(odr_hz)
    report = replay(read_trace(trace_path), network, mode, device, pipeline=pipeline, threshold=threshold)

    if fmt == 'json':
        emit(report.to_json(), out)
    else:
        table = pd.DataFrame([report.summary()])
        emit(table.to_csv(index=False, lineterminator='\n') if fmt == 'csv' else table.T.to_string(header=False), out)

    if record:
        app = create_app()
        with app.app_context():
            profile_record = DeviceProfileRecord.query.filter_by(name=device.name).first()
            run_row = SimulationRun.from_report(report, profile_record=profile_record,
                                                label=run_label or os.path.basename(trace_path), seed=seed)
            db.session.add(run_row)
            db.session.commit()
            click.echo(f'recorded simulation {run_row.id}', err=True)


@cli.command('bench', with_appcontext=False)
@model_option
@profile_option
@click.option('--windows', default='1:10', show_default=True, help='Window lengths FIRST:LAST in seconds')
@click.option('--mode', type=click.Choice(MODES + ('both',)), default='both', show_default=True)
@click.option('--format', 'fmt', type=click.Choice(['csv', 'json', 'table']), default='csv', show_default=True)
@click.option('--out', type=click.Path(dir_okay=False))
@seed_option
def bench(model_path, profile, windows, mode, fmt, out, seed):
    """Memory, per-trigger time and max ODR over a window-length sweep"""
    first, last = parse_range(windows)
    network = load_model(model_path, seed=seed)
    device = resolve_profile(profile)
    modes = MODES if mode == 'both' else (mode,)
    table = sweep_window(network, window_grid(first, last, device.odr_hz), modes, device)
    if fmt == 'csv' and out:
        write_sweep(table, out)
    elif fmt == 'csv':
        emit(table.to_csv(index=False, lineterminator='\n'))
    elif fmt == 'json':
        emit(dumps(json.loads(table.to_json(orient="records"))), out)
    else:
        emit(table.to_string(index=False), out)


@cli.command('power', with_appcontext=False)
@profile_option
@click.option('--pipeline', type=click.Choice(PIPELINES + ('all',)), default='ours', show_default=True)
@click.option('--wake-fraction', type=click.FloatRange(0.0, 1.0), default=1.0, show_default=True)
@click.option('--duration', 'duration_s', type=click.FloatRange(min=0.0, min_open=True), default=3600.0,
              show_default=True, help='Seconds for the energy figure')
@click.option('--format', 'fmt', type=click.Choice(['json', 'table']), default='json', show_default=True)
@click.option('--out', type=click.Path(dir_okay=False))
def power(profile, pipeline, wake_fraction, duration_s, fmt, out):
    """Average current, reduction, energy and battery life"""
    device = resolve_profile(profile)
    if pipeline == 'all':
        reports = compare_pipelines(device, wake_fraction, duration_s)
    else:
        reports = [power_report(Scenario(pipeline, wake_fraction), device, duration_s)]

    if fmt == 'json':
        payload = [r.to_dict() for r in reports]
        emit(dumps(payload if pipeline == 'all' else payload[0]), out)
    else:
        table = pd.DataFrame([r.to_dict() for r in reports])
        columns = ['pipeline', 'wake_fraction', 'avg_current_ma', 'reduction_vs_regular_pct', 'energy_j',
                   'battery_life_h']
        emit(table[columns].to_string(index=False), out)


class CheckFailed(StreamFirstError):
    """Stream or gradient check above tolerance"""
    code = 'CheckFailed'


@cli.command('check', with_appcontext=False)
@model_option
@seed_option
@click.option('--cases', type=int, default=200, show_default=True, help='Random windows for the stream check')
@click.option('--out', type=click.Path(dir_okay=False))
def check(model_path, seed, cases, out):
    """Depth-first vs width-first agreement and backprop vs finite differences"""
    network = load_model(model_path, seed=seed)
    rng = np.random.default_rng(seed)
    shape = (network.spec.window_len, network.spec.channels)

    worst = 0.0
    for _ in range(cases):
        window = rng.uniform(-1.0, 1.0, size=shape)
        expected = forward_g(network, window)
        actual = run_window(network, window)
        worst = max(worst, float(np.max(np.abs(actual - expected)) / max(np.max(np.abs(expected)), 1.0)))

    x = rng.uniform(-1.0, 1.0, size=(4,) + shape)
    y = rng.integers(0, network.num_classes, size=4)
    gradient = gradient_check(network, (x, y), max_params=64, seed=seed)

    result = {
        'cases': cases,
        'stream_max_rel_error': worst,
        'stream_ok': worst <= STREAM_TOLERANCE,
        'gradient_max_rel_error': gradient,
        'gradient_ok': gradient <= GRADIENT_TOLERANCE,
    }
    emit(dumps(result), out)
    if not (result['stream_ok'] and result['gradient_ok']):
        raise CheckFailed('check exceeded tolerance', **result)


# ========== REGISTRATION / ENTRY POINT ==========

def register_commands(app):
    """Attach the commands to app.cli so `flask --app app <command>` works"""
    for command in cli.commands.values():
        app.cli.add_command(command)


def cli_main(argv=None):
    """
    Run the CLI and return the exit code instead of exiting

    Returns:
        0 on success, 1 on domain / file errors, 2 on usage errors
    """
    logging.basicConfig(level=os.environ.get('STREAMFIRST_LOG_LEVEL', 'WARNING').upper(),
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        rv = cli.main(args=list(sys.argv[1:] if argv is None else argv), prog_name='streamfirst',
                      standalone_mode=False)
    except click.UsageError as exc:
        click.echo(exc.format_message() if not exc.ctx else f'{exc.ctx.get_usage()}\n\n{exc.format_message()}',
                   err=True)
        return 2
    except click.ClickException as exc:
        click.echo(f'error: {type(exc).__name__}: {exc.format_message()}', err=True)
        return exc.exit_code
    except StreamFirstError as exc:
        click.echo(f'error: {exc}', err=True)
        return 1
    except click.Abort:
        return 1
    except OSError as exc:
        click.echo(f'error: FileError: {exc.filename or ""}: {exc.strerror or exc}', err=True)
        return 1
    return rv if isinstance(rv, int) else 0


if __name__ == '__main__':
    sys.exit(cli_main())
