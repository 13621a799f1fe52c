"""
File: models/datagen.py
Purpose: Synthetic worn / not-worn IMU windows and traces
Version: 1.1.0
Author: StreamFirst Team

Revision History:
- v1.0.0: Balanced window dataset, per-window seeded generators
- v1.1.0: Continuous labeled traces for replay, dataset directory I/O

Notes:
- Worn: gravity close to +z with a head tilt, band-limited oscillation on
  every accelerometer axis and rotation on every gyroscope axis, plus
  sensor noise.
- Not worn: the device rests with gravity along a random orientation at
  least `rest_min_tilt_deg` away from the wearing posture; only noise on
  top.
- Every window (or trace segment) has its own generator derived from
  (seed, label, index), so windows can be produced in any order.
- Values are clipped to the full-scale ranges.
"""

import logging
import os
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import pandas as pd

from models.errors import TraceFormatError
from models.network import FSR_ACCEL_G, FSR_GYRO_DPS, Window
from models.traces import make_trace, read_trace, trace_values, write_trace

logger = logging.getLogger(__name__)

# ========== LABELS ==========

WORN = 'worn'
NOT_WORN = 'not_worn'
LABELS = (WORN, NOT_WORN)
LABEL_CODES = {WORN: 0, NOT_WORN: 1}

# Generator stream tags keep dataset windows and trace segments independent
_WINDOW_STREAM = 0
_TRACE_STREAM = 1

TRACE_SEGMENT_S = 10.0


# ========== CONFIGURATION ==========

@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    odr_hz: float = 26.0
    minutes_per_class: float = 3.0
    window_s: float = 1.0
    fsr_accel_g: float = FSR_ACCEL_G
    fsr_gyro_dps: float = FSR_GYRO_DPS

    # worn motion
    worn_accel_amp_g: Tuple[float, float] = (0.15, 0.5)
    worn_freq_hz: Tuple[float, float] = (0.5, 3.0)
    worn_gyro_amp_dps: Tuple[float, float] = (30.0, 120.0)
    worn_tilt_deg: float = 25.0
    worn_noise_g: float = 0.03
    worn_noise_dps: float = 4.0

    # not worn
    rest_min_tilt_deg: float = 45.0
    rest_noise_g: float = 0.004
    rest_noise_dps: float = 0.2

    def __post_init__(self):
        if self.odr_hz <= 0 or self.window_s <= 0 or self.minutes_per_class <= 0:
            raise ValueError('odr_hz, window_s and minutes_per_class must be positive')

    @property
    def window_len(self):
        return int(round(self.window_s * self.odr_hz))

    @property
    def windows_per_class(self):
        return int(self.minutes_per_class * 60 // self.window_s)


@dataclass(frozen=True)
class LabeledWindow:
    window: Window
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f'label must be one of {LABELS}, got {self.label!r}')

    @property
    def label_code(self):
        return LABEL_CODES[self.label]


# ========== SIGNAL MODELS ==========

def _unit(vector):
    return vector / np.linalg.norm(vector)


def _tilted_gravity(rng, max_tilt_deg):
    """Unit vector within max_tilt_deg of +z"""
    tilt = np.deg2rad(rng.uniform(0.0, max_tilt_deg))
    azimuth = rng.uniform(0.0, 2 * np.pi)
    return np.array([np.sin(tilt) * np.cos(azimuth), np.sin(tilt) * np.sin(azimuth), np.cos(tilt)])


def _resting_gravity(rng, min_tilt_deg):
    """Uniform direction on the sphere, rejecting the wearing posture cone"""
    limit = np.cos(np.deg2rad(min_tilt_deg))
    while True:
        direction = _unit(rng.standard_normal(3))
        if direction[2] <= limit:
            return direction


def _oscillation(rng, t, amp_range, freq_range):
    """One random sinusoid per axis, shape (len(t), 3)"""
    amp = rng.uniform(*amp_range, size=3)
    freq = rng.uniform(*freq_range, size=3)
    phase = rng.uniform(0.0, 2 * np.pi, size=3)
    return amp * np.sin(2 * np.pi * freq * t[:, np.newaxis] + phase)


def worn_signal(rng, cfg, n, start_index=0):
    t = (start_index + np.arange(n)) / cfg.odr_hz
    gravity = _tilted_gravity(rng, cfg.worn_tilt_deg)
    accel = gravity + _oscillation(rng, t, cfg.worn_accel_amp_g, cfg.worn_freq_hz)
    accel += rng.normal(0.0, cfg.worn_noise_g, size=(n, 3))
    gyro = _oscillation(rng, t, cfg.worn_gyro_amp_dps, cfg.worn_freq_hz)
    gyro += rng.normal(0.0, cfg.worn_noise_dps, size=(n, 3))
    return _clip(np.hstack([accel, gyro]), cfg)


def resting_signal(rng, cfg, n):
    gravity = _resting_gravity(rng, cfg.rest_min_tilt_deg)
    accel = gravity + rng.normal(0.0, cfg.rest_noise_g, size=(n, 3))
    gyro = rng.normal(0.0, cfg.rest_noise_dps, size=(n, 3))
    return _clip(np.hstack([accel, gyro]), cfg)


def _clip(values, cfg):
    limits = np.array([cfg.fsr_accel_g] * 3 + [cfg.fsr_gyro_dps] * 3)
    return np.clip(values, -limits, limits)


def _signal(label, rng, cfg, n, start_index):
    if label == WORN:
        return worn_signal(rng, cfg, n, start_index)
    return resting_signal(rng, cfg, n)


# ========== DATASET ==========

def generate_window(cfg, label, index):
    """Window `index` of class `label`; independent of every other window"""
    rng = np.random.default_rng([cfg.seed, LABEL_CODES[label], _WINDOW_STREAM, index])
    start = index * cfg.window_len
    return LabeledWindow(Window.from_array(_signal(label, rng, cfg, cfg.window_len, start), start), label)


def generate_dataset(cfg):
    """
    Balanced dataset: windows_per_class windows of each label

    Ordered worn windows first, then not-worn; callers shuffle.
    """
    data = [generate_window(cfg, label, index)
            for label in LABELS
            for index in range(cfg.windows_per_class)]
    logger.info('generated %d windows (%d per class, T=%d)', len(data), cfg.windows_per_class, cfg.window_len)
    return data


def dataset_arrays(data, dtype=np.float64):
    """(N, T, N_in) values and (N,) label codes"""
    x = np.stack([item.window.to_array(dtype=dtype) for item in data])
    y = np.array([item.label_code for item in data], dtype=np.int64)
    return x, y


def train_test_split(data, test_fraction=0.2, seed=0):
    """Random split of windows (not of participants)"""
    order = np.random.default_rng(seed).permutation(len(data))
    n_test = int(round(len(data) * test_fraction))
    test = [data[i] for i in sorted(order[:n_test])]
    train = [data[i] for i in sorted(order[n_test:])]
    return train, test


# ========== TRACES ==========

def generate_trace(cfg, label, seconds, start_index=0):
    """
    Continuous single-label trace in trace layout

    Built from TRACE_SEGMENT_S segments, each with its own motion
    parameters (a new posture every segment).
    """
    if label not in LABELS:
        raise ValueError(f'label must be one of {LABELS}, got {label!r}')
    total = int(round(seconds * cfg.odr_hz))
    segment_len = max(1, int(round(TRACE_SEGMENT_S * cfg.odr_hz)))
    parts = []
    for segment, offset in enumerate(range(0, total, segment_len)):
        n = min(segment_len, total - offset)
        rng = np.random.default_rng([cfg.seed, LABEL_CODES[label], _TRACE_STREAM, segment])
        parts.append(_signal(label, rng, cfg, n, start_index + offset))
    values = np.vstack(parts) if parts else np.zeros((0, 6))
    return make_trace(values, start_index)


def generate_schedule(cfg, schedule):
    """Concatenate labeled stretches, e.g. [('worn', 600), ('not_worn', 300)]"""
    frames = []
    start = 0
    for label, seconds in schedule:
        frame = generate_trace(cfg, label, seconds, start_index=start)
        frames.append(frame)
        start += len(frame)
    return pd.concat(frames, ignore_index=True) if frames else make_trace(np.zeros((0, 6)))


# ========== DATASET FILES ==========

LABELS_FILE = 'labels.csv'


def save_dataset(data, directory):
    """One trace CSV per window plus labels.csv (file,label)"""
    os.makedirs(directory, exist_ok=True)
    rows = []
    for index, item in enumerate(data):
        name = f'w{index:05d}_{item.label}.csv'
        start = item.window.samples[0].index if len(item.window) else 0
        write_trace(make_trace(item.window.to_array(dtype=np.float64), start), os.path.join(directory, name))
        rows.append({'file': name, 'label': item.label})
    pd.DataFrame(rows, columns=['file', 'label']).to_csv(os.path.join(directory, LABELS_FILE),
                                                          index=False, lineterminator='\n')
    logger.info('saved %d windows to %s', len(data), directory)


def load_dataset(directory):
    path = os.path.join(directory, LABELS_FILE)
    try:
        labels = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError as exc:
        raise TraceFormatError(f'{path}: no such file', path=path) from exc
    if list(labels.columns) != ['file', 'label']:
        raise TraceFormatError(f'{path}: header must be file,label', path=path, line=1)

    data = []
    for row_number, row in enumerate(labels.itertuples(index=False), start=2):
        if row.label not in LABELS:
            raise TraceFormatError(f'{path}: line {row_number}, column label: unknown label {row.label!r}',
                                   path=path, line=row_number, column='label')
        frame = read_trace(os.path.join(directory, row.file))
        window = Window.from_array(trace_values(frame), int(frame['t'].iloc[0]) if len(frame) else 0)
        data.append(LabeledWindow(window, row.label))
    return data
