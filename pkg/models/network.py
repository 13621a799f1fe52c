"""
File: models/network.py
Purpose: Network / weight data model and the width-first reference executor
Version: 1.2.0
Author: StreamFirst Team

Revision History:
- v1.0.0: Layer specs, NetworkSpec, Weights, build_network validation
- v1.1.0: Width-first conv / pool / dense kernels used as the oracle for
          the stream engine
- v1.2.0: Parts (g / h halves) and seeded Glorot initialization

Notes:
- Tensors inside g are (filters, channels, length). Raw samples enter as a
  single-filter map (1, N_in, T).
- A Conv1D fed by a single-filter map applies every filter to every channel
  (filters shared across channels). A Conv1D fed by an n-filter map must
  have n filters and applies filter j to map j.
- Flattening is C-order over (filters, channels, length), so after the
  channel pool the feature index is f * L + t.
- Inference runs in float32; every kernel here keeps the dtype of its
  inputs so the oracle tests can feed float64.
"""

from dataclasses import dataclass, field
from typing import ClassVar, Optional, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from models.errors import DimensionMismatch, InputTooShort, InvalidSplit

# ========== CONSTANTS ==========

DTYPE = np.float32
BYTES_PER_VALUE = 4

ACTIVATIONS = ('none', 'relu', 'softmax')

# Full-scale ranges of the reference IMU (accelerometer in g, gyroscope in dps)
FSR_ACCEL_G = 2.0
FSR_GYRO_DPS = 250.0

# ========== DOMAIN TYPES ==========

@dataclass(frozen=True)
class Sample:
    """One sensor reading: index since stream start plus N_in channel values"""
    index: int
    channels: Tuple[float, ...]

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f'sample index must be non-negative, got {self.index}')
        values = tuple(float(v) for v in self.channels)
        if not all(np.isfinite(values)):
            raise ValueError(f'sample {self.index} has non-finite values')
        object.__setattr__(self, 'channels', values)


@dataclass(frozen=True)
class Window:
    """Exactly T consecutive samples, oldest first"""
    samples: Tuple[Sample, ...]

    def __post_init__(self):
        samples = tuple(self.samples)
        for prev, cur in zip(samples, samples[1:]):
            if cur.index != prev.index + 1:
                raise ValueError(f'window indices not consecutive at {prev.index} -> {cur.index}')
        object.__setattr__(self, 'samples', samples)

    @classmethod
    def from_array(cls, values, start_index=0):
        """Build a window from a (T, N_in) array"""
        rows = np.asarray(values, dtype=np.float64)
        return cls(tuple(Sample(start_index + i, tuple(row)) for i, row in enumerate(rows)))

    def to_array(self, dtype=DTYPE):
        """(T, N_in) array"""
        return np.array([s.channels for s in self.samples], dtype=dtype)

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class Conv1D:
    """Temporal convolution, valid mode, no stride or dilation"""
    kind: ClassVar[str] = 'conv1d'
    filters: int
    kernel_len: int
    activation: str = 'relu'

    def __post_init__(self):
        if self.filters < 1 or self.kernel_len < 1:
            raise DimensionMismatch('Conv1D filters and kernel_len must be positive',
                                    filters=self.filters, kernel_len=self.kernel_len)
        if self.activation not in ('none', 'relu'):
            raise DimensionMismatch(f'Conv1D activation {self.activation!r} not supported')


@dataclass(frozen=True)
class MaxPoolChannels:
    """Max over the channel axis; pool must equal the incoming channel count"""
    kind: ClassVar[str] = 'maxpool_channels'
    pool: int


@dataclass(frozen=True)
class Dense:
    kind: ClassVar[str] = 'dense'
    in_dim: int
    out_dim: int
    activation: str = 'none'

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise DimensionMismatch('Dense dimensions must be positive',
                                    in_dim=self.in_dim, out_dim=self.out_dim)
        if self.activation not in ACTIVATIONS:
            raise DimensionMismatch(f'Dense activation {self.activation!r} not supported')


LayerSpec = Union[Conv1D, MaxPoolChannels, Dense]


@dataclass(frozen=True)
class FeatureShape:
    """Shape of the tensor flowing between layers"""
    filters: int
    channels: int
    length: int
    flat: bool = False

    @property
    def size(self):
        return self.filters * self.channels * self.length

    def as_tuple(self):
        return (self.filters, self.channels, self.length)


@dataclass(frozen=True)
class NetworkSpec:
    """f = h o g described as one linear chain with a split index"""
    odr_hz: float
    window_len: int
    channels: int
    layers: Tuple[LayerSpec, ...]
    split_index: int
    ee_head: Dense = Dense(16, 2, 'softmax')
    ee_threshold: float = 0.5
    input_scale: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, 'layers', tuple(self.layers))
        if self.input_scale is not None:
            object.__setattr__(self, 'input_scale', tuple(float(s) for s in self.input_scale))

    @property
    def input_shape(self):
        return FeatureShape(1, self.channels, self.window_len)

    def scale_vector(self, dtype=DTYPE):
        if self.input_scale is None:
            return np.ones(self.channels, dtype=dtype)
        return np.asarray(self.input_scale, dtype=dtype)


@dataclass(frozen=True, eq=False)
class LayerWeights:
    """Coefficient tensor plus bias for one Conv1D (n, K) or Dense (out, in)"""
    kernel: np.ndarray
    bias: np.ndarray

    @classmethod
    def frozen(cls, kernel, bias, dtype=DTYPE):
        kernel = np.array(kernel, dtype=dtype)
        bias = np.array(bias, dtype=dtype)
        kernel.setflags(write=False)
        bias.setflags(write=False)
        return cls(kernel, bias)

    def astype(self, dtype):
        return LayerWeights.frozen(self.kernel, self.bias, dtype=dtype)


@dataclass(frozen=True, eq=False)
class Weights:
    """Per-layer weights (None for pooling layers) and the exit head weights"""
    layers: Tuple[Optional[LayerWeights], ...]
    ee: Optional[LayerWeights] = None

    def __post_init__(self):
        object.__setattr__(self, 'layers', tuple(self.layers))

    def astype(self, dtype):
        return Weights(tuple(w.astype(dtype) if w is not None else None for w in self.layers),
                       self.ee.astype(dtype) if self.ee is not None else None)


# ========== SHAPE CHECKING ==========

def layer_output_shape(index, layer, shape):
    """Output shape of `layer` fed with `shape`; raises DimensionMismatch"""
    if isinstance(layer, Conv1D):
        if shape.flat:
            raise DimensionMismatch(f'layer {index}: Conv1D cannot follow a Dense layer', layer=index)
        if shape.filters not in (1, layer.filters):
            raise DimensionMismatch(
                f'layer {index}: Conv1D with {layer.filters} filters fed {shape.filters} maps',
                layer=index, expected=layer.filters, actual=shape.filters)
        if layer.kernel_len > shape.length:
            raise DimensionMismatch(
                f'layer {index}: kernel length {layer.kernel_len} exceeds input length {shape.length}',
                layer=index, expected=f'<= {shape.length}', actual=layer.kernel_len)
        return FeatureShape(layer.filters, shape.channels, shape.length - layer.kernel_len + 1)

    if isinstance(layer, MaxPoolChannels):
        if shape.flat:
            raise DimensionMismatch(f'layer {index}: MaxPoolChannels cannot follow a Dense layer', layer=index)
        if layer.pool != shape.channels:
            raise DimensionMismatch(
                f'layer {index}: pool {layer.pool} does not match {shape.channels} channels',
                layer=index, expected=shape.channels, actual=layer.pool)
        return FeatureShape(shape.filters, 1, shape.length)

    if isinstance(layer, Dense):
        if layer.in_dim != shape.size:
            raise DimensionMismatch(
                f'layer {index}: Dense in_dim {layer.in_dim} but incoming features {shape.size}',
                layer=index, expected=shape.size, actual=layer.in_dim)
        return FeatureShape(layer.out_dim, 1, 1, flat=True)

    raise DimensionMismatch(f'layer {index}: unknown layer type {type(layer).__name__}', layer=index)


def shape_chain(input_shape, layers, first_index=0):
    """Output shape after each layer"""
    shapes = []
    shape = input_shape
    for offset, layer in enumerate(layers):
        shape = layer_output_shape(first_index + offset, layer, shape)
        shapes.append(shape)
    return shapes


def expected_weight_shapes(layer):
    if isinstance(layer, Conv1D):
        return (layer.filters, layer.kernel_len), (layer.filters,)
    if isinstance(layer, Dense):
        return (layer.out_dim, layer.in_dim), (layer.out_dim,)
    return None


def check_layer_weights(index, layer, weights):
    expected = expected_weight_shapes(layer)
    if expected is None:
        if weights is not None:
            raise DimensionMismatch(f'layer {index}: {layer.kind} takes no weights', layer=index)
        return
    if weights is None:
        raise DimensionMismatch(f'layer {index}: missing weights', layer=index)
    kernel_shape, bias_shape = expected
    if weights.kernel.shape != kernel_shape:
        raise DimensionMismatch(f'layer {index}: kernel shape {weights.kernel.shape}, expected {kernel_shape}',
                                layer=index, expected=kernel_shape, actual=weights.kernel.shape)
    if weights.bias.shape != bias_shape:
        raise DimensionMismatch(f'layer {index}: bias shape {weights.bias.shape}, expected {bias_shape}',
                                layer=index, expected=bias_shape, actual=weights.bias.shape)
    if not (np.all(np.isfinite(weights.kernel)) and np.all(np.isfinite(weights.bias))):
        raise DimensionMismatch(f'layer {index}: weights contain non-finite values', layer=index)


# ========== KERNELS ==========

def activate(values, activation):
    if activation == 'relu':
        return np.maximum(values, 0)
    if activation == 'softmax':
        shifted = values - np.max(values, axis=-1, keepdims=True)
        exp = np.exp(shifted)
        return exp / np.sum(exp, axis=-1, keepdims=True)
    return values


def conv1d_width_first(layer, weights, series):
    """
    Valid-mode temporal convolution over a whole series

    o[j][c][t] = sum_{i=0}^{K-1} c[j][i] * x[c][t + K - 1 - i] (+ bias, activation)

    Args:
        layer: Conv1D spec
        weights: LayerWeights with kernel (n, K) and bias (n,)
        series: (C, L) array or (F_in, C, L) map

    Returns:
        (n, C, L - K + 1) array
    """
    x = np.asarray(series)
    if x.ndim == 2:
        x = x[np.newaxis]
    maps, _, length = x.shape
    K = layer.kernel_len
    if length < K:
        raise InputTooShort(f'series length {length} shorter than kernel {K}', length=length, kernel_len=K)

    # taps[..., t, k] = x[..., t + k], so tap k pairs with coefficient i = K - 1 - k
    taps = sliding_window_view(x, K, axis=-1)
    reversed_kernel = np.asarray(weights.kernel)[:, ::-1].astype(x.dtype, copy=False)
    if maps == 1:
        out = np.einsum('clk,jk->jcl', taps[0], reversed_kernel)
    elif maps == layer.filters:
        out = np.einsum('jclk,jk->jcl', taps, reversed_kernel)
    else:
        raise DimensionMismatch(f'Conv1D with {layer.filters} filters fed {maps} maps',
                                expected=layer.filters, actual=maps)
    out = out + np.asarray(weights.bias, dtype=out.dtype)[:, np.newaxis, np.newaxis]
    return activate(out, layer.activation)


def maxpool_channels(values, pool=None):
    """
    Max over the channel axis

    Accepts one output step (n, C) or a whole map (n, C, L); returns (n,)
    or (n, L).
    """
    x = np.asarray(values)
    if x.ndim not in (2, 3):
        raise DimensionMismatch(f'maxpool_channels expects (n, C) or (n, C, L), got {x.shape}')
    if pool is not None and x.shape[1] != pool:
        raise DimensionMismatch(f'pool {pool} does not match {x.shape[1]} channels',
                                expected=x.shape[1], actual=pool)
    return np.max(x, axis=1)


def dense_forward(layer, weights, features):
    x = np.asarray(features)
    if x.shape[-1] != layer.in_dim:
        raise DimensionMismatch(f'Dense expects {layer.in_dim} features, got {x.shape[-1]}',
                                expected=layer.in_dim, actual=x.shape[-1])
    kernel = np.asarray(weights.kernel).astype(x.dtype, copy=False)
    out = x @ kernel.T + np.asarray(weights.bias, dtype=x.dtype)
    return activate(out, layer.activation)


def run_layers(layers, layer_weights, x):
    """Width-first pass of a layer chain over a (F, C, L) map or flat vector"""
    for layer, weights in zip(layers, layer_weights):
        if isinstance(layer, Conv1D):
            x = conv1d_width_first(layer, weights, x)
        elif isinstance(layer, MaxPoolChannels):
            x = maxpool_channels(x, layer.pool)[:, np.newaxis, :]
        else:
            x = dense_forward(layer, weights, np.reshape(x, -1))
    return np.reshape(x, -1)


# ========== PARTS ==========

@dataclass(frozen=True, eq=False)
class Part:
    """
    A contiguous slice of the layer chain with its weights

    g parts start from raw samples; h parts start from g's flat output.
    """
    layers: Tuple[LayerSpec, ...]
    weights: Tuple[Optional[LayerWeights], ...]
    input_shape: FeatureShape
    shapes: Tuple[FeatureShape, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, 'layers', tuple(self.layers))
        object.__setattr__(self, 'weights', tuple(self.weights))
        if not self.shapes:
            object.__setattr__(self, 'shapes', tuple(shape_chain(self.input_shape, self.layers)))

    @classmethod
    def empty(cls, channels, window_len):
        return cls((), (), FeatureShape(1, channels, window_len))

    @property
    def output_shape(self):
        return self.shapes[-1] if self.shapes else self.input_shape

    @property
    def output_dim(self):
        return self.output_shape.size

    def forward(self, x):
        """Flat output of the part; a flat input to a map-shaped part is reshaped first"""
        x = np.asarray(x)
        if x.ndim == 1 and self.layers and not isinstance(self.layers[0], Dense):
            x = np.reshape(x, self.input_shape.as_tuple())
        return run_layers(self.layers, self.weights, x)


# ========== NETWORK ==========

class Network:
    """
    Immutable validated network

    Safe to share between threads and stream states; nothing here mutates
    after build_network returns.
    """

    def __init__(self, spec, weights, shapes):
        self.spec = spec
        self.weights = weights
        self.shapes = tuple(shapes)

    @property
    def split_index(self):
        return self.spec.split_index

    @property
    def g_part(self):
        k = self.spec.split_index
        return Part(self.spec.layers[:k], self.weights.layers[:k], self.spec.input_shape, self.shapes[:k])

    @property
    def h_part(self):
        k = self.spec.split_index
        return Part(self.spec.layers[k:], self.weights.layers[k:], self.shapes[k - 1], self.shapes[k:])

    @property
    def feature_dim(self):
        return self.shapes[self.spec.split_index - 1].size

    @property
    def num_classes(self):
        return self.shapes[-1].size

    def window_array(self, window):
        """(T, N_in) float32 array from a Window or array-like, after input scaling"""
        if isinstance(window, Window):
            values = window.to_array()
        else:
            values = np.asarray(window, dtype=DTYPE)
        expected = (self.spec.window_len, self.spec.channels)
        if values.shape != expected:
            raise DimensionMismatch(f'window shape {values.shape}, expected {expected}',
                                    expected=expected, actual=values.shape)
        return values.astype(DTYPE, copy=False) * self.spec.scale_vector()

    def __repr__(self):
        kinds = ','.join(layer.kind for layer in self.spec.layers)
        return f'<Network T={self.spec.window_len} N_in={self.spec.channels} [{kinds}] split={self.split_index}>'


def build_network(spec, weights):
    """
    Validate spec + weights and return an immutable Network

    Raises:
        InvalidSplit: split_index outside [1, len(layers) - 1] or g not
            ending in a flat feature vector
        DimensionMismatch: shapes do not chain, or weight shapes are wrong
        ValueError: ee_threshold outside (0, 1)
    """
    layers = spec.layers
    if not 1 <= spec.split_index <= len(layers) - 1:
        raise InvalidSplit(f'split_index {spec.split_index} outside [1, {len(layers) - 1}]',
                           split_index=spec.split_index, layers=len(layers))
    if spec.window_len < 1 or spec.channels < 1:
        raise DimensionMismatch('window_len and channels must be positive')
    if spec.input_scale is not None and len(spec.input_scale) != spec.channels:
        raise DimensionMismatch(f'input_scale has {len(spec.input_scale)} entries for {spec.channels} channels',
                                expected=spec.channels, actual=len(spec.input_scale))

    shapes = shape_chain(spec.input_shape, layers)
    g_out = shapes[spec.split_index - 1]
    if g_out.channels != 1:
        raise InvalidSplit(f'g must end with a flat feature vector, got shape {g_out.as_tuple()}',
                           split_index=spec.split_index)

    if len(weights.layers) != len(layers):
        raise DimensionMismatch(f'{len(weights.layers)} weight entries for {len(layers)} layers',
                                expected=len(layers), actual=len(weights.layers))
    for index, (layer, layer_weights) in enumerate(zip(layers, weights.layers)):
        check_layer_weights(index, layer, layer_weights)

    head = spec.ee_head
    if head.in_dim != g_out.size or head.out_dim != 2:
        raise DimensionMismatch(f'exit head must map {g_out.size} -> 2, got {head.in_dim} -> {head.out_dim}',
                                layer='ee', expected=(g_out.size, 2), actual=(head.in_dim, head.out_dim))
    if not 0.0 < spec.ee_threshold < 1.0:
        raise ValueError(f'ee_threshold must be in (0, 1), got {spec.ee_threshold}')
    check_layer_weights('ee', head, weights.ee)

    return Network(spec, weights.astype(DTYPE), shapes)


# ========== FORWARD PASSES ==========

def forward_g(network, window):
    """Width-first feature extraction; the oracle for the stream engine"""
    values = network.window_array(window)
    return network.g_part.forward(values.T[np.newaxis])


def forward_h(network, features):
    """Host-side classification scores (softmax for the default head)"""
    x = np.asarray(features, dtype=DTYPE)
    if x.shape != (network.feature_dim,):
        raise DimensionMismatch(f'h expects {network.feature_dim} features, got {x.shape}',
                                expected=network.feature_dim, actual=x.shape)
    return network.h_part.forward(x)


def forward(network, window):
    return forward_h(network, forward_g(network, window))


# ========== REFERENCE ARCHITECTURE ==========

def reference_spec(odr_hz=26.0, window_len=26, channels=6, filters=16):
    """
    Two temporal convolutions (n=16) and a channel max-pool on the sensor,
    a dense softmax classifier on the host. The first kernel spans the
    1-second window.
    """
    return NetworkSpec(
        odr_hz=odr_hz,
        window_len=window_len,
        channels=channels,
        layers=(
            Conv1D(filters, window_len, 'relu'),
            Conv1D(filters, 1, 'relu'),
            MaxPoolChannels(channels),
            Dense(filters, 2, 'softmax'),
        ),
        split_index=3,
        ee_head=Dense(filters, 2, 'softmax'),
        ee_threshold=0.5,
        input_scale=(1 / FSR_ACCEL_G,) * 3 + (1 / FSR_GYRO_DPS,) * 3 if channels == 6 else None,
    )


# ========== INITIALIZATION ==========

def glorot_bound(layer, incoming_filters=1):
    if isinstance(layer, Conv1D):
        if incoming_filters == 1:
            fan_in, fan_out = layer.kernel_len, layer.kernel_len * layer.filters
        else:
            fan_in = fan_out = layer.kernel_len
    else:
        fan_in, fan_out = layer.in_dim, layer.out_dim
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_layer_weights(layer, rng, incoming_filters=1, dtype=DTYPE):
    """Uniform +-sqrt(6 / (fan_in + fan_out)) kernel, zero bias"""
    shapes = expected_weight_shapes(layer)
    if shapes is None:
        return None
    kernel_shape, bias_shape = shapes
    bound = glorot_bound(layer, incoming_filters)
    return LayerWeights.frozen(rng.uniform(-bound, bound, size=kernel_shape), np.zeros(bias_shape), dtype=dtype)


def glorot_weights(spec, seed):
    """Seeded initial weights for every layer of `spec` and its exit head"""
    rng = np.random.default_rng(seed)
    shape = spec.input_shape
    layer_weights = []
    for index, layer in enumerate(spec.layers):
        layer_weights.append(init_layer_weights(layer, rng, incoming_filters=shape.filters))
        shape = layer_output_shape(index, layer, shape)
    return Weights(tuple(layer_weights), init_layer_weights(spec.ee_head, rng))


def zero_weights(spec):
    layer_weights = []
    for layer in spec.layers:
        shapes = expected_weight_shapes(layer)
        layer_weights.append(None if shapes is None else LayerWeights.frozen(np.zeros(shapes[0]), np.zeros(shapes[1])))
    kernel_shape, bias_shape = expected_weight_shapes(spec.ee_head)
    return Weights(tuple(layer_weights), LayerWeights.frozen(np.zeros(kernel_shape), np.zeros(bias_shape)))


def reference_network(seed=0):
    spec = reference_spec()
    return build_network(spec, glorot_weights(spec, seed))
