import numpy as np
import pytest

from models.errors import ChannelMismatch, WindowOverrun
from models.network import (Conv1D, Dense, LayerWeights, MaxPoolChannels, NetworkSpec, Sample, Weights,
                            build_network, forward_g, glorot_weights)
from models.stream import (InProgress, WindowComplete, accumulator_values, init_stream, peak_memory_bytes,
                           push_ops_profile, push_sample, reset, run_window)


def random_network(rng, T, K, channels, filters, second_kernel=1, dense_in_g=False):
    L1 = T - K + 1
    L2 = L1 - second_kernel + 1
    layers = [Conv1D(filters, K, 'relu'), Conv1D(filters, second_kernel, 'relu'), MaxPoolChannels(channels)]
    feature_dim = filters * L2
    if dense_in_g:
        layers.append(Dense(feature_dim, 3, 'relu'))
        feature_dim = 3
    split_index = len(layers)
    layers.append(Dense(feature_dim, 2, 'softmax'))
    spec = NetworkSpec(odr_hz=26.0, window_len=T, channels=channels, layers=tuple(layers),
                       split_index=split_index, ee_head=Dense(feature_dim, 2, 'softmax'))
    initial = glorot_weights(spec, int(rng.integers(1 << 30)))
    weights = []
    for layer_weights in initial.layers:
        if layer_weights is None:
            weights.append(None)
        else:
            weights.append(LayerWeights.frozen(rng.uniform(-1, 1, size=layer_weights.kernel.shape),
                                               rng.uniform(-0.2, 0.2, size=layer_weights.bias.shape)))
    return build_network(spec, Weights(tuple(weights), initial.ee))


def relative_error(actual, expected):
    scale = max(float(np.max(np.abs(expected))), 1.0)
    return float(np.max(np.abs(np.asarray(actual, dtype=np.float64) - expected))) / scale


# ========== EQUIVALENCE ==========

def test_depth_first_matches_width_first_on_random_cases():
    rng = np.random.default_rng(2024)
    worst = 0.0
    cases = 0
    for T in (8, 26, 156):
        for K in (1, 2, 5, T):
            for channels in (1, 6):
                for _ in range(42):
                    second = int(rng.choice([1, 2])) if T - K + 1 >= 2 else 1
                    network = random_network(rng, T, K, channels, int(rng.integers(1, 5)), second,
                                             dense_in_g=bool(rng.integers(2)))
                    window = rng.uniform(-3, 3, size=(T, channels))
                    worst = max(worst, relative_error(run_window(network, window), forward_g(network, window)))
                    cases += 1
    assert cases >= 1000
    assert worst <= 1e-5


def test_reference_network_stream_equivalence(network, rng):
    for _ in range(20):
        window = rng.uniform(-2, 2, size=(26, 6))
        assert relative_error(run_window(network, window), forward_g(network, window)) <= 1e-5


# ========== PUSH SEMANTICS ==========

def test_in_progress_until_the_last_sample(network, rng):
    state = init_stream(network)
    window = rng.uniform(-1, 1, size=(26, 6))
    for t, row in enumerate(window[:-1]):
        result = push_sample(state, Sample(t, tuple(row)))
        assert result == InProgress(t + 1)
    assert state.window_features is None
    result = push_sample(state, Sample(25, tuple(window[-1])))
    assert isinstance(result, WindowComplete)
    np.testing.assert_allclose(result.features, forward_g(network, window), rtol=1e-5, atol=1e-6)


def test_auto_reset_starts_the_next_window(network, rng):
    state = init_stream(network)
    first, second = rng.uniform(-1, 1, size=(2, 26, 6))
    for row in first:
        state.push(row)
    results = [state.push(row) for row in second]
    assert isinstance(results[0], InProgress) and results[0].samples_consumed == 1
    np.testing.assert_allclose(results[-1].features, forward_g(network, second), rtol=1e-5, atol=1e-6)


def test_overrun_without_auto_reset(network):
    state = init_stream(network, auto_reset=False)
    for _ in range(26):
        state.push(np.zeros(6))
    with pytest.raises(WindowOverrun):
        state.push(np.zeros(6))


def test_reset_returns_to_the_initial_state(network, rng):
    state = init_stream(network)
    initial = state.snapshot()
    for row in rng.uniform(-1, 1, size=(9, 6)):
        state.push(row)
    reset(state)
    after = state.snapshot()
    assert after.keys() == initial.keys()
    for key in initial:
        np.testing.assert_array_equal(after[key], initial[key])


def test_reset_is_idempotent(network):
    state = init_stream(network)
    reset(state)
    reset(state)
    assert state.samples_consumed == 0
    assert state.window_features is None


def test_channel_count_is_checked(network):
    state = init_stream(network)
    with pytest.raises(ChannelMismatch):
        state.push(np.zeros(5))


def test_streams_sharing_a_network_are_independent(network, rng):
    a, b = init_stream(network), init_stream(network)
    wa, wb = rng.uniform(-1, 1, size=(2, 26, 6))
    for row_a, row_b in zip(wa, wb):
        ra, rb = a.push(row_a), b.push(row_b)
    np.testing.assert_allclose(ra.features, forward_g(network, wa), rtol=1e-5, atol=1e-6)
    np.testing.assert_allclose(rb.features, forward_g(network, wb), rtol=1e-5, atol=1e-6)


def test_single_sample_window():
    spec = NetworkSpec(odr_hz=1.0, window_len=1, channels=1,
                       layers=(Conv1D(2, 1, 'none'), MaxPoolChannels(1), Dense(2, 2, 'softmax')),
                       split_index=2, ee_head=Dense(2, 2, 'softmax'))
    network = build_network(spec, glorot_weights(spec, 0))
    state = init_stream(network)
    result = state.push(np.array([0.7]))
    assert isinstance(result, WindowComplete)
    np.testing.assert_allclose(result.features, forward_g(network, [[0.7]]), rtol=1e-6)


# ========== ACCOUNTING ==========

def test_reference_push_profile(network):
    profile = push_ops_profile(network.g_part)
    assert len(profile) == 26
    assert profile[:-1] == [96] * 25
    assert profile[-1] == 288
    assert max(profile) == 288


def test_runtime_ops_match_static_profile(network, rng):
    state = init_stream(network)
    ops = []
    for row in rng.uniform(-1, 1, size=(26, 6)):
        state.push(row)
        ops.append(state.last_push_ops)
    assert ops == push_ops_profile(network.g_part)


def test_accumulators_and_memory(network):
    assert accumulator_values(network.g_part) == 96
    assert init_stream(network).accumulator_values == 96
    assert peak_memory_bytes(network) == 3891


def test_accumulator_ring_is_bounded_by_kernel():
    rng = np.random.default_rng(5)
    network = random_network(rng, T=26, K=5, channels=6, filters=4)
    assert accumulator_values(network.g_part) == 5 * 4 * 6


def test_memory_is_constant_across_window_lengths_for_a_fixed_kernel():
    rng = np.random.default_rng(8)
    sizes = {T: peak_memory_bytes(random_network(rng, T=T, K=5, channels=6, filters=16)) for T in (26, 52, 78, 260)}
    assert len(set(sizes.values())) == 1


def test_memory_settles_once_the_window_spans_two_kernels():
    rng = np.random.default_rng(9)
    sizes = {T: peak_memory_bytes(random_network(rng, T=T, K=26, channels=6, filters=16)) for T in (26, 50, 51, 52, 260)}
    assert sizes[26] == 3891
    assert sizes[26] < sizes[50] < sizes[51]
    # 2K - 1 = 51: the ring is full at K accumulators per (filter, channel)
    assert sizes[51] == sizes[52] == sizes[260] == 3891 + 25 * 16 * 6 * 4


@pytest.mark.parametrize('T', [8, 26, 52])
def test_kernel_spanning_the_window_keeps_one_accumulator_per_map(T):
    network = random_network(np.random.default_rng(T), T=T, K=T, channels=6, filters=16)
    assert accumulator_values(network.g_part) == 16 * 6
    assert init_stream(network).accumulator_values == 16 * 6


def test_swapping_two_samples_changes_the_features():
    rng = np.random.default_rng(13)
    network = random_network(rng, T=26, K=5, channels=6, filters=4)
    window = rng.uniform(-3, 3, size=(26, 6))
    swapped = window.copy()
    swapped[[3, 4]] = swapped[[4, 3]]
    original, permuted = run_window(network, window), run_window(network, swapped)
    assert not np.allclose(original, permuted)
    assert relative_error(permuted, forward_g(network, swapped)) <= 1e-5
