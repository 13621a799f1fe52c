import numpy as np
import pytest

from models.errors import DimensionMismatch, InputTooShort, InvalidSplit
from models.network import (Conv1D, Dense, LayerWeights, MaxPoolChannels, NetworkSpec, Sample, Window, Weights,
                            build_network, conv1d_width_first, dense_forward, forward, forward_g, forward_h,
                            glorot_bound, glorot_weights, maxpool_channels, reference_spec, zero_weights)


def small_spec(T=8, channels=2, filters=3, K=3, split_index=3):
    L = T - K + 1
    return NetworkSpec(
        odr_hz=26.0, window_len=T, channels=channels,
        layers=(Conv1D(filters, K, 'relu'), Conv1D(filters, 1, 'relu'), MaxPoolChannels(channels),
                Dense(filters * L, 2, 'softmax')),
        split_index=split_index,
        ee_head=Dense(filters * L, 2, 'softmax'),
    )


# ========== KERNELS ==========

def test_conv_applies_coefficients_newest_first():
    layer = Conv1D(1, 2, 'none')
    weights = LayerWeights.frozen([[1.0, 10.0]], [0.0], dtype=np.float64)
    out = conv1d_width_first(layer, weights, np.array([[1.0, 2.0, 3.0, 4.0]]))
    # o[t] = c0 * x[t + 1] + c1 * x[t]
    np.testing.assert_array_equal(out, [[[12.0, 23.0, 34.0]]])


def test_conv_single_map_expands_and_multi_map_is_depthwise():
    x = np.arange(12, dtype=np.float64).reshape(2, 6)
    expand = conv1d_width_first(Conv1D(3, 2, 'none'),
                                LayerWeights.frozen(np.ones((3, 2)), np.zeros(3), dtype=np.float64), x)
    assert expand.shape == (3, 2, 5)
    np.testing.assert_array_equal(expand[0], expand[2])

    depthwise = conv1d_width_first(Conv1D(3, 1, 'none'),
                                   LayerWeights.frozen([[1.0], [2.0], [3.0]], np.zeros(3), dtype=np.float64), expand)
    np.testing.assert_array_equal(depthwise[1], 2 * expand[1])
    np.testing.assert_array_equal(depthwise[2], 3 * expand[2])


def test_conv_rejects_short_input():
    with pytest.raises(InputTooShort):
        conv1d_width_first(Conv1D(1, 5), LayerWeights.frozen(np.ones((1, 5)), [0.0]), np.ones((1, 4)))


def test_maxpool_over_channels():
    values = np.array([[[1.0, 5.0], [3.0, -1.0]]])
    np.testing.assert_array_equal(maxpool_channels(values, 2), [[3.0, 5.0]])
    with pytest.raises(DimensionMismatch):
        maxpool_channels(values, 3)


def test_dense_rejects_wrong_feature_count():
    layer = Dense(4, 2)
    weights = LayerWeights.frozen(np.ones((2, 4)), np.zeros(2))
    with pytest.raises(DimensionMismatch):
        dense_forward(layer, weights, np.ones(3, dtype=np.float32))


# ========== VALIDATION ==========

def test_reference_network_shapes(network):
    assert network.feature_dim == 16
    assert network.num_classes == 2
    assert [layer.kind for layer in network.spec.layers] == ['conv1d', 'conv1d', 'maxpool_channels', 'dense']
    assert network.spec.input_scale == (0.5, 0.5, 0.5, 0.004, 0.004, 0.004)
    assert network.weights.layers[0].kernel.dtype == np.float32


@pytest.mark.parametrize('split_index', [0, 4, -1])
def test_split_index_out_of_range(split_index):
    spec = reference_spec()
    spec = NetworkSpec(spec.odr_hz, spec.window_len, spec.channels, spec.layers, split_index, spec.ee_head)
    with pytest.raises(InvalidSplit):
        build_network(spec, zero_weights(reference_spec()))


def test_split_before_pool_is_not_a_flat_feature_vector():
    spec = small_spec(split_index=2)
    with pytest.raises((InvalidSplit, DimensionMismatch)):
        build_network(spec, zero_weights(small_spec()))


def test_pool_must_match_channels():
    spec = small_spec()
    bad = NetworkSpec(spec.odr_hz, spec.window_len, spec.channels,
                      (spec.layers[0], spec.layers[1], MaxPoolChannels(3), spec.layers[3]), 3, spec.ee_head)
    with pytest.raises(DimensionMismatch):
        build_network(bad, zero_weights(spec))


def test_wrong_kernel_shape_names_the_layer():
    spec = small_spec()
    weights = zero_weights(spec)
    layers = list(weights.layers)
    layers[0] = LayerWeights.frozen(np.zeros((3, 4)), np.zeros(3))
    with pytest.raises(DimensionMismatch) as excinfo:
        build_network(spec, Weights(tuple(layers), weights.ee))
    assert excinfo.value.details['layer'] == 0


def test_exit_head_must_read_g_features():
    spec = small_spec()
    bad = NetworkSpec(spec.odr_hz, spec.window_len, spec.channels, spec.layers, 3, Dense(5, 2, 'softmax'))
    with pytest.raises(DimensionMismatch):
        build_network(bad, zero_weights(spec))


@pytest.mark.parametrize('threshold', [0.0, 1.0, -0.2])
def test_exit_threshold_must_lie_strictly_inside_unit_interval(threshold):
    spec = small_spec()
    bad = NetworkSpec(spec.odr_hz, spec.window_len, spec.channels, spec.layers, 3, spec.ee_head, threshold)
    with pytest.raises(ValueError, match='ee_threshold'):
        build_network(bad, zero_weights(spec))


def test_window_shape_checked(network):
    with pytest.raises(DimensionMismatch):
        forward_g(network, np.zeros((25, 6)))


# ========== FORWARD ==========

def test_forward_is_softmax(network, rng):
    scores = forward(network, rng.uniform(-1, 1, size=(26, 6)))
    assert scores.shape == (2,)
    assert scores.sum() == pytest.approx(1.0, abs=1e-6)
    assert np.all(scores >= 0)


def test_g_is_positively_homogeneous_with_zero_bias(network, rng):
    window = rng.uniform(-2, 2, size=(26, 6))
    np.testing.assert_allclose(forward_g(network, 2 * window), 2 * forward_g(network, window), rtol=1e-6)


def test_forward_h_checks_feature_count(network):
    with pytest.raises(DimensionMismatch):
        forward_h(network, np.zeros(15))


def test_window_type_matches_array_input(network, rng):
    values = rng.uniform(-1, 1, size=(26, 6))
    window = Window.from_array(values, start_index=100)
    assert window.samples[0].index == 100
    np.testing.assert_array_equal(forward_g(network, window), forward_g(network, values))


def test_window_requires_consecutive_indices():
    with pytest.raises(ValueError):
        Window((Sample(0, (1.0,)), Sample(2, (1.0,))))
    with pytest.raises(ValueError):
        Sample(0, (float('nan'),))


# ========== INITIALIZATION ==========

def test_glorot_weights_are_seeded():
    spec = reference_spec()
    first, again, other = glorot_weights(spec, 7), glorot_weights(spec, 7), glorot_weights(spec, 8)
    np.testing.assert_array_equal(first.layers[0].kernel, again.layers[0].kernel)
    assert not np.array_equal(first.layers[0].kernel, other.layers[0].kernel)
    bound = glorot_bound(spec.layers[0])
    assert np.all(np.abs(first.layers[0].kernel) <= bound)
    assert np.all(first.layers[0].bias == 0)
    assert first.layers[2] is None


def test_weights_are_read_only(network):
    with pytest.raises(ValueError):
        network.weights.layers[0].kernel[0, 0] = 1.0
