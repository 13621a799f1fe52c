"""
File: models/stream.py
Purpose: Depth-first (per-sample) executor for the sensor-side part g
Version: 1.1.0
Author: StreamFirst Team

Revision History:
- v1.0.0: Ring-of-accumulators convolution stages, channel pool, collector
- v1.1.0: Incremental Dense stages inside g, op counting for the cost model

Notes:
- No raw sample is ever stored. Each Conv1D stage keeps at most
  min(K, L_out) partial sums per (filter, channel); the one for output step
  t is opened when sample t arrives and completes K samples later.
- With K = T there is exactly one accumulator per (filter, channel) and the
  update is y += c[i] * x for i = T-1 .. 0.
- A completed value goes through bias + activation and is cascaded to the
  next stage inside the same push call.
- A StreamState is owned by one caller at a time. Many states may share one
  immutable Network.
"""

import logging
from dataclasses import dataclass

import numpy as np

from models.errors import ChannelMismatch, WindowOverrun
from models.network import DTYPE, Conv1D, Dense, MaxPoolChannels, Network, Sample, activate

logger = logging.getLogger(__name__)

# ========== PUSH RESULTS ==========

@dataclass(frozen=True)
class InProgress:
    samples_consumed: int


@dataclass(frozen=True, eq=False)
class WindowComplete:
    features: np.ndarray


# ========== STAGES ==========

class ConvStage:
    """Incremental Conv1D: a ring of partial sums indexed by output step"""

    def __init__(self, layer, weights, in_shape, out_shape):
        self.layer = layer
        self.kernel = np.asarray(weights.kernel, dtype=DTYPE)
        self.bias = np.asarray(weights.bias, dtype=DTYPE)[:, np.newaxis]
        self.K = layer.kernel_len
        self.out_len = out_shape.length
        self.channels = out_shape.channels
        self.ring = min(self.K, self.out_len) if self.K > 1 else 0
        self.acc = np.zeros((self.ring, layer.filters, self.channels), dtype=DTYPE)
        self.taps_applied = np.zeros(self.ring, dtype=np.int64)
        self.t = 0
        self.ops = 0

    def reset(self):
        self.acc.fill(0)
        self.taps_applied.fill(0)
        self.t = 0

    def in_flight(self, t):
        """Output steps whose receptive field contains input step t"""
        return max(0, t - self.K + 1), min(t, self.out_len - 1)

    def push(self, value):
        """Feed one (F_in, C) input step; returns the completed (n, C) output or None"""
        t = self.t
        self.t += 1
        n = self.layer.filters

        if self.K == 1:
            self.ops = n * self.channels
            return activate(self.kernel[:, 0:1] * value + self.bias, self.layer.activation)

        lo, hi = self.in_flight(t)
        if hi < lo:
            self.ops = 0
            return None
        if t <= self.out_len - 1:
            slot = t % self.ring
            self.acc[slot] = 0
            self.taps_applied[slot] = 0

        steps = np.arange(lo, hi + 1)
        slots = steps % self.ring
        taps = steps + self.K - 1 - t
        self.acc[slots] += self.kernel[:, taps].T[:, :, np.newaxis] * value[np.newaxis]
        self.taps_applied[slots] += 1
        self.ops = len(steps) * n * self.channels

        if t >= self.K - 1:
            slot = lo % self.ring
            return activate(self.acc[slot] + self.bias, self.layer.activation)
        return None

    @property
    def accumulator_values(self):
        return self.acc.size


class PoolStage:
    def __init__(self, layer):
        self.layer = layer
        self.ops = 0

    def reset(self):
        pass

    def push(self, value):
        self.ops = value.size
        return np.max(value, axis=1, keepdims=True)

    accumulator_values = 0


class DenseStage:
    """Dense layer inside g: each arriving step adds its columns' contribution"""

    def __init__(self, layer, weights, in_shape):
        self.layer = layer
        self.kernel = np.asarray(weights.kernel, dtype=DTYPE)
        self.bias = np.asarray(weights.bias, dtype=DTYPE)
        self.in_shape = in_shape
        self.step_width = in_shape.filters * in_shape.channels
        self.acc = np.zeros(layer.out_dim, dtype=DTYPE)
        self.t = 0
        self.ops = 0

    def reset(self):
        self.acc.fill(0)
        self.t = 0

    def push(self, value):
        t = self.t
        self.t += 1
        columns = np.arange(self.step_width) * self.in_shape.length + t
        self.acc += self.kernel[:, columns] @ np.reshape(value, -1)
        self.ops = self.layer.out_dim * self.step_width
        if self.t < self.in_shape.length:
            return None
        return activate(self.acc + self.bias, self.layer.activation)[:, np.newaxis]

    @property
    def accumulator_values(self):
        return self.acc.size


def build_stages(part):
    stages = []
    in_shape = part.input_shape
    for layer, weights, out_shape in zip(part.layers, part.weights, part.shapes):
        if isinstance(layer, Conv1D):
            stages.append(ConvStage(layer, weights, in_shape, out_shape))
        elif isinstance(layer, MaxPoolChannels):
            stages.append(PoolStage(layer))
        else:
            stages.append(DenseStage(layer, weights, in_shape))
        in_shape = out_shape
    return stages


# ========== STREAM STATE ==========

class StreamState:
    """Per-stream mutable state over an immutable network"""

    def __init__(self, network, auto_reset=True):
        self.network = network
        self.auto_reset = auto_reset
        self.part = network.g_part
        self.window_len = network.spec.window_len
        self.scale = network.spec.scale_vector()
        self.stages = build_stages(self.part)
        out_shape = self.part.output_shape
        self._out_len = out_shape.length
        self._step_width = out_shape.filters * out_shape.channels
        self._features = np.zeros(out_shape.size, dtype=DTYPE)
        self._out_t = 0
        self.samples_consumed = 0
        self.window_features = None
        self.last_push_ops = 0

    def reset(self):
        for stage in self.stages:
            stage.reset()
        self._features.fill(0)
        self._out_t = 0
        self.samples_consumed = 0
        self.window_features = None
        self.last_push_ops = 0

    def _collect(self, value):
        columns = np.arange(self._step_width) * self._out_len + self._out_t
        self._features[columns] = np.reshape(value, -1)
        self._out_t += 1

    def push(self, sample):
        if self.samples_consumed >= self.window_len:
            if not self.auto_reset:
                raise WindowOverrun(f'window of {self.window_len} samples already complete; reset first')
            self.reset()

        channels = sample.channels if isinstance(sample, Sample) else sample
        value = np.asarray(channels, dtype=DTYPE)
        if value.shape != (self.network.spec.channels,):
            raise ChannelMismatch(f'sample has {value.size} channels, network expects {self.network.spec.channels}',
                                  expected=self.network.spec.channels, actual=int(value.size))
        value = (value * self.scale)[np.newaxis, :]

        ops = 0
        for stage in self.stages:
            value = stage.push(value)
            ops += stage.ops
            if value is None:
                break
        else:
            self._collect(value)
        self.last_push_ops = ops
        self.samples_consumed += 1

        if self.samples_consumed < self.window_len:
            return InProgress(self.samples_consumed)
        self.window_features = self._features.copy()
        logger.debug('window complete after %d samples', self.samples_consumed)
        return WindowComplete(self.window_features)

    def snapshot(self):
        """Copies of every buffer, for comparing states"""
        state = {'samples_consumed': self.samples_consumed, 'out_t': self._out_t,
                 'features': self._features.copy()}
        for index, stage in enumerate(self.stages):
            if hasattr(stage, 'acc'):
                state[f'acc_{index}'] = stage.acc.copy()
                state[f't_{index}'] = stage.t
        return state

    @property
    def accumulator_values(self):
        return sum(stage.accumulator_values for stage in self.stages)


# ========== OPERATIONS ==========

def init_stream(network, auto_reset=True):
    return StreamState(network, auto_reset=auto_reset)


def push_sample(state, sample):
    return state.push(sample)


def reset(state):
    state.reset()


def run_window(network, window):
    """Push a whole window through a fresh stream and return its features"""
    state = init_stream(network, auto_reset=False)
    values = window.to_array() if hasattr(window, 'to_array') else np.asarray(window)
    result = None
    for row in values:
        result = state.push(row)
    return result.features


# ========== STATIC ACCOUNTING ==========

def accumulator_values(part):
    """Partial sums the stream engine keeps for `part`"""
    total = 0
    for layer, out_shape in zip(part.layers, part.shapes):
        if isinstance(layer, Conv1D) and layer.kernel_len > 1:
            total += min(layer.kernel_len, out_shape.length) * layer.filters * out_shape.channels
        elif isinstance(layer, Dense):
            total += layer.out_dim
    return total


def weight_values(part):
    return sum(w.kernel.size + w.bias.size for w in part.weights if w is not None)


def push_ops_profile(part):
    """
    Operations triggered by each of the T pushes of one window

    Conv: one MAC per in-flight accumulator per (filter, channel). Pool:
    one comparison per input value. Dense: one MAC per weight touched.
    """
    window_len = part.input_shape.length
    profile = []
    for t in range(window_len):
        ops = 0
        step = t
        in_shape = part.input_shape
        for layer, out_shape in zip(part.layers, part.shapes):
            if isinstance(layer, Conv1D):
                K = layer.kernel_len
                lo, hi = max(0, step - K + 1), min(step, out_shape.length - 1)
                ops += max(0, hi - lo + 1) * layer.filters * out_shape.channels
                if step < K - 1:
                    break
                step = step - K + 1
            elif isinstance(layer, MaxPoolChannels):
                ops += in_shape.filters * in_shape.channels
            else:
                ops += layer.out_dim * in_shape.filters * in_shape.channels
                if step < in_shape.length - 1:
                    break
                step = 0
            in_shape = out_shape
        profile.append(ops)
    return profile


def peak_memory_bytes(network, params=None):
    """
    Depth-first data memory: weights + accumulators + runtime overhead

    Constant in the window length T for a fixed kernel length K once
    T >= 2K - 1 (every ring holds K partial sums). Below that the ring is
    min(K, L_out) deep, so K = T keeps one sum per (filter, channel). The
    g output vector is handed to the exit head and is not counted. Accepts
    a Network (its g part is used) or a Part.
    """
    if params is None:
        from models.partition import reference_params
        params = reference_params()
    part = network.g_part if isinstance(network, Network) else network
    values = weight_values(part) + accumulator_values(part)
    return int(round(values * params.bytes_per_value + params.runtime_overhead_bytes))

