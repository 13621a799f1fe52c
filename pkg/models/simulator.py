"""
File: models/simulator.py
Purpose: Trace replay of the sensor -> gate -> host pipeline, window-size sweep
Version: 1.2.0
Author: StreamFirst Team

Revision History:
- v1.0.0: Depth-first / width-first replay with sample loss on the sensor core
- v1.1.0: Regular pipeline (host runs everything, FIFO interrupts)
- v1.2.0: Window-size sweep table

Notes:
- Time is logical: sample k arrives at k / ODR. Nothing reads the clock.
- ours: the sensor core runs g. Depth-first charges one per-trigger time
  per accepted sample; width-first buffers the window and charges the
  whole-window time when it fills. A sample arriving while the core is
  still busy is lost.
- regular: the sensor only fills its FIFO; the host wakes every
  fifo_depth_samples samples and runs the whole network. No sample loss.
- Trailing samples that do not fill a window are reported, not inferred.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import List

import numpy as np
import pandas as pd

from models.datagen import LABELS
from models.early_exit import ACTIVATE, ExitHead, ee_decide
from models.errors import ModelMismatch
from models.network import forward_g, forward_h
from models.partition import CSV_COLUMNS, DEPTH_FIRST, MODES, check_mode, feasibility, per_trigger_time
from models.power_model import OURS, REGULAR_DF, REGULAR_WF, Scenario, average_current, energy_joules
from models.stream import WindowComplete, init_stream
from models.traces import trace_values, validate_trace

logger = logging.getLogger(__name__)

PIPELINES = ('ours', 'regular')

# ========== REPORT ==========

@dataclass
class SimReport:
    mode: str
    pipeline: str
    odr_hz: float
    per_trigger_ms: float
    samples_total: int = 0
    windows_total: int = 0
    wakeups: int = 0
    suppressions: int = 0
    samples_lost: int = 0
    trailing_partial: int = 0
    host_interrupts: int = 0
    avg_current_ma: float = 0.0
    duration_s: float = 0.0
    energy_j: float = 0.0
    decisions: List[dict] = field(default_factory=list)

    @property
    def wake_fraction(self):
        return self.wakeups / self.windows_total if self.windows_total else 0.0

    @property
    def samples_in_windows(self):
        return self.samples_total - self.samples_lost - self.trailing_partial

    def summary(self):
        data = asdict(self)
        data.pop('decisions')
        data['wake_fraction'] = self.wake_fraction
        return data

    def to_dict(self):
        data = self.summary()
        data['decisions'] = list(self.decisions)
        return data

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


# ========== REPLAY ==========

def _channel_matrix(trace, network):
    if isinstance(trace, pd.DataFrame):
        values = trace_values(validate_trace(trace))
    else:
        values = np.asarray(trace, dtype=np.float64)
        if values.ndim != 2:
            raise ModelMismatch(f'trace must be a (samples, channels) table, got shape {values.shape}')
    if values.shape[1] != network.spec.channels:
        raise ModelMismatch(f'trace has {values.shape[1]} channels, model expects {network.spec.channels}',
                            expected=network.spec.channels, actual=values.shape[1])
    return values


def _host_prediction(network, features):
    index = int(np.argmax(forward_h(network, features)))
    return LABELS[index] if network.num_classes == len(LABELS) else index


def replay(trace, network, mode, profile, pipeline='ours', params=None, threshold=None):
    """
    Replay a trace through the pipeline and account for time and current

    Args:
        trace: trace DataFrame (t,ax..gz) or (N, N_in) array
        network: Network
        mode: 'depth_first' or 'width_first'
        profile: DeviceProfile (ODR, clock, FIFO depth, currents, voltage)
        pipeline: 'ours' (gate on the sensor) or 'regular' (host does everything)
        params: CostModelParams (calibrated reference when omitted)
        threshold: overrides the network's gate threshold

    Returns:
        SimReport
    """
    check_mode(mode)
    if pipeline not in PIPELINES:
        raise ValueError(f'pipeline must be one of {PIPELINES}, got {pipeline!r}')
    values = _channel_matrix(trace, network)
    T = network.spec.window_len
    period_ms = 1000.0 / profile.odr_hz
    trigger_ms = per_trigger_time(network.g_part, mode, T, params, profile.clock_hz)
    head = ExitHead.from_network(network, threshold)

    report = SimReport(mode=mode, pipeline=pipeline, odr_hz=profile.odr_hz, per_trigger_ms=trigger_ms,
                       samples_total=len(values))

    state = init_stream(network) if mode == DEPTH_FIRST else None
    buffer = []
    pending = 0
    busy_until = float('-inf')
    sensor_busy = pipeline == 'ours'

    for k, row in enumerate(values):
        arrival = k * period_ms
        if sensor_busy and arrival < busy_until:
            report.samples_lost += 1
            continue

        features = None
        if state is not None:
            result = state.push(row)
            if isinstance(result, WindowComplete):
                features = result.features
        else:
            buffer.append(row)
            if len(buffer) == T:
                features = forward_g(network, np.asarray(buffer))
                buffer.clear()
        pending += 1

        if sensor_busy and (state is not None or features is not None):
            busy_until = arrival + trigger_ms
        if pipeline == 'regular' and (k + 1) % profile.fifo_depth_samples == 0:
            report.host_interrupts += 1
        if features is None:
            continue

        pending = 0
        window = report.windows_total
        report.windows_total += 1
        entry = {'window': window, 'end_sample': k}
        if pipeline == 'ours':
            decision = ee_decide(head, features)
            entry.update(decision.to_dict())
            if decision.variant == ACTIVATE:
                report.wakeups += 1
                report.host_interrupts += 1
                entry['prediction'] = _host_prediction(network, features)
            else:
                report.suppressions += 1
        else:
            report.wakeups += 1
            entry.update(decision=ACTIVATE, confidence=None, prediction=_host_prediction(network, features))
        report.decisions.append(entry)

    report.trailing_partial = pending
    report.duration_s = len(values) / profile.odr_hz
    if pipeline == 'ours':
        scenario = Scenario(OURS, report.wake_fraction)
    else:
        scenario = Scenario(REGULAR_DF if mode == DEPTH_FIRST else REGULAR_WF)
    report.avg_current_ma = average_current(scenario, profile)
    report.energy_j = energy_joules(report.avg_current_ma, profile.voltage_v, report.duration_s)

    logger.info('replay %s/%s: %d windows, %d wakeups, %d lost, %.3f mA',
                pipeline, mode, report.windows_total, report.wakeups, report.samples_lost, report.avg_current_ma)
    return report


# ========== WINDOW SWEEP ==========

def window_grid(first_s, last_s, odr_hz):
    """Window lengths in samples for whole seconds first_s..last_s"""
    return [int(round(seconds * odr_hz)) for seconds in range(int(first_s), int(last_s) + 1)]


def sweep_window(network, T_list, modes, profile, params=None):
    """
    One row per (T, mode): memory, per-trigger time, max ODR and verdicts

    The sensor-side part is fixed; T only changes the window the
    width-first executor has to buffer and process.
    """
    rows = []
    for T in T_list:
        for mode in modes:
            if mode not in MODES:
                raise ValueError(f'mode must be one of {MODES}, got {mode!r}')
            report = feasibility(network.g_part, mode, T, profile, params)
            row = report.csv_row()
            row['window_len'] = report.window_len
            row['max_odr_floor_hz'] = report.max_odr_floor_hz
            rows.append(row)
    return pd.DataFrame(rows, columns=list(CSV_COLUMNS) + ['window_len', 'max_odr_floor_hz'])


def write_sweep(table, path):
    table.to_csv(path, index=False, lineterminator='\n')
