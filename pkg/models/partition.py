"""
File: models/partition.py
Purpose: g / h partitioning, memory and timing cost model, feasibility verdicts
Version: 1.1.0
Author: StreamFirst Team

Revision History:
- v1.0.0: DeviceProfile, split, memory_footprint, per_trigger_time, max_odr
- v1.1.0: Two-anchor calibration of the cycle model and runtime overhead,
          PartitionReport CSV rows for the window sweep

Notes:
- Operation count = conv MACs + dense MACs + pool comparisons.
- Depth-first cost is the worst single push of g and does not depend on T.
- Width-first cost is the whole window, affine in T: the part is evaluated
  at its native window length and the first layer's per-sample work is
  scaled to the requested T. Memory is the raw window plus weights plus the
  single largest intermediate buffer.
- Cycle model: cycles = ops * cycles_per_mac + fixed_overhead_cycles.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache

from models.errors import InvalidSplit, ProfileError
from models.network import Conv1D, MaxPoolChannels, Part, reference_spec, zero_weights
from models.stream import accumulator_values, push_ops_profile, weight_values

logger = logging.getLogger(__name__)

# ========== CONSTANTS ==========

WIDTH_FIRST = 'width_first'
DEPTH_FIRST = 'depth_first'
MODES = (WIDTH_FIRST, DEPTH_FIRST)

CSV_COLUMNS = ('mode', 'window_s', 'mem_bytes', 'per_trigger_ms', 'max_odr_hz', 'ram_ok', 'timing_ok')


def check_mode(mode):
    if mode not in MODES:
        raise ValueError(f'mode must be one of {MODES}, got {mode!r}')
    return mode


# ========== DEVICE PROFILE ==========

@dataclass(frozen=True)
class Currents:
    """Measured average currents in mA for each pipeline component"""
    mcu_regular_wf: float = 4.8
    mcu_regular_df: float = 5.9
    imu_only: float = 0.6
    mcu_ours_active: float = 4.0
    mcu_ours_sleep: float = 3.8
    imu_plus_ispu: float = 0.8


@dataclass(frozen=True)
class DeviceProfile:
    """Sensor core limits plus the board's supply and current figures"""
    name: str = 'ispu-10mhz'
    clock_hz: float = 10e6
    data_ram_bytes: int = 8192
    program_ram_bytes: int = 32768
    odr_hz: float = 26.0
    fifo_depth_samples: int = 5
    voltage_v: float = 1.8
    battery_mah: float = 200.0
    currents_ma: Currents = field(default_factory=Currents)

    def __post_init__(self):
        if isinstance(self.currents_ma, dict):
            object.__setattr__(self, 'currents_ma', Currents(**self.currents_ma))
        for key in ('clock_hz', 'data_ram_bytes', 'program_ram_bytes', 'odr_hz',
                    'fifo_depth_samples', 'voltage_v', 'battery_mah'):
            if not getattr(self, key) > 0:
                raise ProfileError(f'{key} must be positive, got {getattr(self, key)}', field=key)
        for item in fields(Currents):
            if not getattr(self.currents_ma, item.name) > 0:
                raise ProfileError(f'currents_ma.{item.name} must be positive', field=f'currents_ma.{item.name}')
        if self.data_ram_bytes >= self.program_ram_bytes:
            raise ProfileError('data_ram_bytes must be smaller than program_ram_bytes',
                               data_ram_bytes=self.data_ram_bytes, program_ram_bytes=self.program_ram_bytes)

    @property
    def period_ms(self):
        return 1000.0 / self.odr_hz

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {item.name for item in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ProfileError(f'unknown profile fields: {sorted(unknown)}', fields=sorted(unknown))
        values = dict(data)
        if 'currents_ma' in values:
            currents = values['currents_ma']
            extra = set(currents) - {item.name for item in fields(Currents)}
            if extra:
                raise ProfileError(f'unknown currents: {sorted(extra)}', fields=sorted(extra))
            values['currents_ma'] = Currents(**{k: float(v) for k, v in currents.items()})
        return cls(**values)

    def with_odr(self, odr_hz):
        data = self.to_dict()
        data['odr_hz'] = odr_hz
        return DeviceProfile.from_dict(data)


# ========== COST MODEL PARAMETERS ==========

@dataclass(frozen=True)
class CostModelParams:
    cycles_per_mac: float
    fixed_overhead_cycles: float
    runtime_overhead_bytes: float
    bytes_per_value: int = 4

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class CalibrationAnchors:
    """Measured reference points the cost model is fitted to"""
    depth_first_ms: float = 6.3
    width_first_ms: float = 23.0
    width_first_window_len: int = 156
    depth_first_mem_bytes: int = 3891
    clock_hz: float = 10e6
    bytes_per_value: int = 4


REFERENCE_ANCHORS = CalibrationAnchors()


# ========== REPORT ==========

@dataclass(frozen=True)
class PartitionReport:
    mode: str
    window_len: int
    window_s: float
    odr_hz: float
    mem_bytes: int
    per_trigger_ms: float
    max_odr_hz: float
    max_odr_floor_hz: int
    ram_ok: bool
    timing_ok_at_odr: bool

    def to_dict(self):
        return asdict(self)

    def csv_row(self):
        return {
            'mode': self.mode,
            'window_s': self.window_s,
            'mem_bytes': self.mem_bytes,
            'per_trigger_ms': round(self.per_trigger_ms, 6),
            'max_odr_hz': self.max_odr_hz,
            'ram_ok': self.ram_ok,
            'timing_ok': self.timing_ok_at_odr,
        }


# ========== SPLITTING ==========

def split(network, index):
    """
    Cut the network's layer chain at `index`

    Returns:
        (g_part, h_part) whose composition reproduces the whole chain
    """
    layers = network.spec.layers
    if not 1 <= index <= len(layers) - 1:
        raise InvalidSplit(f'split index {index} outside [1, {len(layers) - 1}]',
                           split_index=index, layers=len(layers))
    shapes = network.shapes
    weights = network.weights.layers
    g_part = Part(layers[:index], weights[:index], network.spec.input_shape, shapes[:index])
    h_part = Part(layers[index:], weights[index:], shapes[index - 1], shapes[index:])
    return g_part, h_part


# ========== OPERATION COUNTS ==========

def layer_ops(part):
    """Operations per layer for one full window at the part's native length"""
    totals = []
    in_shape = part.input_shape
    for layer, out_shape in zip(part.layers, part.shapes):
        if isinstance(layer, Conv1D):
            totals.append(out_shape.length * layer.kernel_len * layer.filters * out_shape.channels)
        elif isinstance(layer, MaxPoolChannels):
            totals.append(in_shape.size)
        else:
            totals.append(layer.out_dim * layer.in_dim)
        in_shape = out_shape
    return totals


def per_trigger_ops(part, mode, T=None):
    check_mode(mode)
    if mode == DEPTH_FIRST:
        return max(push_ops_profile(part), default=0)
    totals = layer_ops(part)
    if not totals:
        return 0
    native = part.input_shape.length
    T = native if T is None else T
    per_sample = totals[0] / native
    return sum(totals) + per_sample * (T - native)


# ========== MEMORY AND TIME ==========

def memory_footprint(part, mode, T=None, params=None):
    """Data-memory bytes for running `part` in `mode` with a window of T samples"""
    check_mode(mode)
    params = params or reference_params()
    values = weight_values(part)
    if mode == DEPTH_FIRST:
        values += accumulator_values(part)
    else:
        T = part.input_shape.length if T is None else T
        in_shape = part.input_shape
        values += T * in_shape.filters * in_shape.channels
        values += max((shape.size for shape in part.shapes), default=0)
    return int(round(values * params.bytes_per_value + params.runtime_overhead_bytes))


def per_trigger_time(part, mode, T=None, params=None, clock_hz=10e6):
    """Milliseconds the sensor core needs per trigger (a push, or a whole window)"""
    params = params or reference_params()
    ops = per_trigger_ops(part, mode, T)
    cycles = ops * params.cycles_per_mac + params.fixed_overhead_cycles
    return cycles / clock_hz * 1000.0


def max_odr(per_trigger_ms):
    """1000 / per_trigger_ms floored to one decimal"""
    if not per_trigger_ms > 0:
        raise ValueError(f'per-trigger time must be positive, got {per_trigger_ms}')
    return math.floor(1000.0 / per_trigger_ms * 10 + 1e-9) / 10


def max_odr_floor(per_trigger_ms):
    return int(math.floor(1000.0 / per_trigger_ms + 1e-9))


def feasibility(part, mode, T, profile, params=None):
    """RAM and timing verdicts for one (mode, T) point under `profile`"""
    params = params or reference_params()
    T = part.input_shape.length if T is None else T
    mem = memory_footprint(part, mode, T, params)
    ms = per_trigger_time(part, mode, T, params, profile.clock_hz)
    report = PartitionReport(
        mode=mode,
        window_len=int(T),
        window_s=round(T / profile.odr_hz, 6),
        odr_hz=profile.odr_hz,
        mem_bytes=mem,
        per_trigger_ms=ms,
        max_odr_hz=max_odr(ms),
        max_odr_floor_hz=max_odr_floor(ms),
        ram_ok=mem <= profile.data_ram_bytes,
        timing_ok_at_odr=ms < profile.period_ms,
    )
    logger.debug('feasibility %s T=%s mem=%s ms=%.3f', mode, T, mem, ms)
    return report


# ========== CALIBRATION ==========

def calibrate(part, anchors=REFERENCE_ANCHORS):
    """
    Fit the cycle model and runtime overhead to measured anchors

    Two timing anchors fix cycles_per_mac and fixed_overhead_cycles; the
    depth-first memory anchor fixes runtime_overhead_bytes.

    Args:
        part: the reference g part at its native window length
        anchors: CalibrationAnchors

    Returns:
        CostModelParams
    """
    df_ops = per_trigger_ops(part, DEPTH_FIRST)
    wf_ops = per_trigger_ops(part, WIDTH_FIRST, anchors.width_first_window_len)
    if wf_ops == df_ops:
        raise ValueError('calibration anchors need two distinct operation counts')

    df_cycles = anchors.depth_first_ms / 1000.0 * anchors.clock_hz
    wf_cycles = anchors.width_first_ms / 1000.0 * anchors.clock_hz
    cycles_per_mac = (wf_cycles - df_cycles) / (wf_ops - df_ops)
    fixed = df_cycles - df_ops * cycles_per_mac

    stored = weight_values(part) + accumulator_values(part)
    overhead = anchors.depth_first_mem_bytes - stored * anchors.bytes_per_value

    params = CostModelParams(cycles_per_mac=cycles_per_mac, fixed_overhead_cycles=fixed,
                             runtime_overhead_bytes=overhead, bytes_per_value=anchors.bytes_per_value)
    logger.info('calibrated cost model: %.4f cycles/op, %.1f fixed cycles, %.0f overhead bytes',
                cycles_per_mac, fixed, overhead)
    return params


def reference_part():
    """g of the reference architecture (weights do not affect the cost model)"""
    spec = reference_spec()
    k = spec.split_index
    return Part(spec.layers[:k], zero_weights(spec).layers[:k], spec.input_shape)


@lru_cache(maxsize=1)
def reference_params():
    return calibrate(reference_part())
