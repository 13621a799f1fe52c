"""
File: models/trainer.py
Purpose: Two-step training (end-to-end f, then the exit head on frozen g)
Version: 1.1.0
Author: StreamFirst Team

Revision History:
- v1.0.0: numpy backpropagation through Conv1D / MaxPoolChannels / Dense,
          mini-batch SGD on cross-entropy
- v1.1.0: Exit-head training with g frozen, finite-difference gradient check

Notes:
- Training runs in float64; trained weights are stored back as float32.
- The last layer's pre-activation values are the logits; the loss is
  softmax cross-entropy whatever that layer's declared activation.
- Max-pool backward sends the gradient to the first maximal channel.
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from models.datagen import dataset_arrays
from models.early_exit import ExitHead, ee_decide
from models.errors import DimensionMismatch, NonFiniteLoss
from models.network import (Conv1D, LayerWeights, MaxPoolChannels, Weights, activate, forward_g,
                            forward_h)

logger = logging.getLogger(__name__)

# ========== CONFIGURATION ==========

@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 60
    learning_rate: float = 0.05
    batch_size: int = 16
    seed: int = 0
    loss: str = 'cross_entropy'

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate < 0:
            raise ValueError('epochs and learning_rate must be non-negative, batch_size positive')
        if self.loss != 'cross_entropy':
            raise ValueError(f'unsupported loss {self.loss!r}')


# ========== LAYER PASSES ==========

def _conv_forward(layer, kernel, bias, x):
    """x: (B, F, C, L) -> pre-activation (B, n, C, L - K + 1)"""
    taps = sliding_window_view(x, layer.kernel_len, axis=-1)
    rk = kernel[:, ::-1]
    if x.shape[1] == 1:
        z = np.einsum('bclk,jk->bjcl', taps[:, 0], rk)
    else:
        z = np.einsum('bjclk,jk->bjcl', taps, rk)
    return z + bias[np.newaxis, :, np.newaxis, np.newaxis], taps


def _conv_backward(layer, kernel, x, taps, dz, need_input_grad):
    rk = kernel[:, ::-1]
    expand = x.shape[1] == 1
    if expand:
        drk = np.einsum('bclk,bjcl->jk', taps[:, 0], dz)
    else:
        drk = np.einsum('bjclk,bjcl->jk', taps, dz)
    dkernel = drk[:, ::-1]
    dbias = dz.sum(axis=(0, 2, 3))
    dx = None
    if need_input_grad:
        dx = np.zeros_like(x)
        out_len = dz.shape[-1]
        for k in range(layer.kernel_len):
            if expand:
                dx[:, 0, :, k:k + out_len] += np.einsum('bjcl,j->bcl', dz, rk[:, k])
            else:
                dx[:, :, :, k:k + out_len] += dz * rk[np.newaxis, :, k, np.newaxis, np.newaxis]
    return dkernel, dbias, dx


def _activation_grad(activation, z, da):
    if activation == 'relu':
        return da * (z > 0)
    if activation == 'softmax':
        raise DimensionMismatch('softmax is only supported on the last layer')
    return da


def forward_train(layers, params, x):
    """
    Batched forward pass keeping everything backward needs

    Args:
        layers: layer specs of the chain
        params: list of [kernel, bias] float64 arrays (None for pooling)
        x: (B, T, N_in) scaled windows, or (B, D) features for a Dense-first chain

    Returns:
        (logits, caches)
    """
    a = np.transpose(x, (0, 2, 1))[:, np.newaxis] if x.ndim == 3 else x
    caches = []
    last = len(layers) - 1
    for index, (layer, param) in enumerate(zip(layers, params)):
        if isinstance(layer, Conv1D):
            z, taps = _conv_forward(layer, param[0], param[1], a)
            caches.append((a, z, taps))
        elif isinstance(layer, MaxPoolChannels):
            argmax = np.argmax(a, axis=2)
            z = np.take_along_axis(a, argmax[:, :, np.newaxis, :], axis=2)
            caches.append((a, argmax))
            a = z
            continue
        else:
            flat = a.reshape(a.shape[0], -1)
            z = flat @ param[0].T + param[1]
            caches.append((a, z, flat))
        if index == last:
            return z, caches
        a = activate(z, layer.activation)
    return a.reshape(a.shape[0], -1), caches


def softmax_cross_entropy(logits, y):
    logits = logits.reshape(logits.shape[0], -1)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    batch = logits.shape[0]
    loss = -log_probs[np.arange(batch), y].mean()
    dlogits = np.exp(log_probs)
    dlogits[np.arange(batch), y] -= 1.0
    return loss, dlogits / batch


def backprop(layers, params, x, y):
    """Mean cross-entropy over the batch and its gradient for every parameter"""
    logits, caches = forward_train(layers, params, x)
    loss, dz = softmax_cross_entropy(logits, y)
    grads = [None] * len(layers)
    da = None
    for index in range(len(layers) - 1, -1, -1):
        layer, param, cache = layers[index], params[index], caches[index]
        need_input_grad = index > 0
        if isinstance(layer, MaxPoolChannels):
            a_in, argmax = cache
            dx = np.zeros_like(a_in)
            np.put_along_axis(dx, argmax[:, :, np.newaxis, :], da.reshape(argmax[:, :, np.newaxis, :].shape), axis=2)
            da = dx
            continue
        if index < len(layers) - 1:
            dz = _activation_grad(layer.activation, cache[1], da.reshape(cache[1].shape))
        if isinstance(layer, Conv1D):
            a_in, _, taps = cache
            dkernel, dbias, da = _conv_backward(layer, param[0], a_in, taps, dz, need_input_grad)
        else:
            a_in, _, flat = cache
            dz = dz.reshape(dz.shape[0], -1)
            dkernel = dz.T @ flat
            dbias = dz.sum(axis=0)
            da = (dz @ param[0]).reshape(a_in.shape) if need_input_grad else None
        grads[index] = [dkernel, dbias]
    return loss, grads


# ========== HELPERS ==========

def _params_from(layer_weights):
    return [None if w is None else [np.array(w.kernel, dtype=np.float64), np.array(w.bias, dtype=np.float64)]
            for w in layer_weights]


def _weights_from(params):
    return tuple(None if p is None else LayerWeights.frozen(p[0], p[1]) for p in params)


def _scaled(network, x):
    return x * network.spec.scale_vector(dtype=np.float64)


def _sgd_epochs(layers, params, x, y, cfg, what, history):
    """Shared SGD loop; loss over the whole set is recorded before epoch 1 and after each epoch"""
    rng = np.random.default_rng(cfg.seed)
    n = len(y)
    loss, _ = backprop(layers, params, x, y)
    history.append(float(loss))
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            batch_loss, grads = backprop(layers, params, x[batch], y[batch])
            if not np.isfinite(batch_loss):
                raise NonFiniteLoss(f'{what}: loss became {batch_loss} in epoch {epoch}', epoch=epoch)
            for param, grad in zip(params, grads):
                if param is not None:
                    param[0] -= cfg.learning_rate * grad[0]
                    param[1] -= cfg.learning_rate * grad[1]
        loss, _ = backprop(layers, params, x, y)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f'{what}: loss became {loss} after epoch {epoch}', epoch=epoch)
        history.append(float(loss))
        logger.debug('%s epoch %d loss %.6f', what, epoch, loss)
    logger.info('%s: %d epochs, loss %.4f -> %.4f', what, cfg.epochs, history[0], history[-1])
    return params


# ========== TRAINING ==========

def train_end_to_end(network, data, cfg=TrainConfig(), history=None):
    """
    Mini-batch SGD through h o g on the task labels

    Args:
        network: Network supplying the architecture and initial weights
        data: sequence of LabeledWindow
        cfg: TrainConfig
        history: optional list, receives the loss before training and after every epoch

    Returns:
        Weights (exit head carried over unchanged)
    """
    history = [] if history is None else history
    x, y = dataset_arrays(data)
    layers = network.spec.layers
    if len(y) and y.max() >= network.num_classes:
        raise DimensionMismatch(f'labels exceed the {network.num_classes} network outputs')
    params = _params_from(network.weights.layers)
    params = _sgd_epochs(layers, params, _scaled(network, x), y, cfg, 'end-to-end', history)
    return Weights(_weights_from(params), network.weights.ee)


def g_features(network, data):
    """Width-first g features for every window, float64"""
    x, _ = dataset_arrays(data)
    return np.stack([network.g_part.forward(window.T[np.newaxis]) for window in _scaled(network, x)])


def train_ee(network, data, cfg=TrainConfig(), history=None, threshold=None):
    """
    Fit the exit head on frozen g features

    Labels: worn -> activate (class 0), not_worn -> suppress (class 1).
    Only the head changes; network weights are not touched.
    """
    history = [] if history is None else history
    features = g_features(network, data)
    _, y = dataset_arrays(data)
    head = network.spec.ee_head
    params = _params_from([network.weights.ee])
    params = _sgd_epochs((head,), params, features, y, cfg, 'exit head', history)
    return ExitHead(_weights_from(params)[0], network.spec.ee_threshold if threshold is None else threshold)


# ========== EVALUATION ==========

def accuracy(network, data):
    """Task accuracy of the float32 network on labeled windows"""
    hits = 0
    for item in data:
        scores = forward_h(network, forward_g(network, item.window))
        hits += int(np.argmax(scores) == item.label_code)
    return hits / len(data) if data else 0.0


def ee_accuracy(network, head, data):
    """Share of windows where the gate wakes the host exactly for worn windows"""
    hits = 0
    for item in data:
        decision = ee_decide(head, forward_g(network, item.window))
        hits += int(decision.activate == (item.label_code == 0))
    return hits / len(data) if data else 0.0


# ========== GRADIENT CHECK ==========

def gradient_check(network, batch, eps=1e-4, max_params=None, seed=0):
    """
    Largest relative error between backprop and central differences

    rel = |analytic - numeric| / max(|analytic| + |numeric|, 1e-4)

    Args:
        network: Network (whole chain is checked)
        batch: (x, y) with x (B, T, N_in), or a sequence of LabeledWindow
        eps: finite-difference step
        max_params: check a seeded random subset of at most this many
            entries per tensor
    """
    if isinstance(batch, tuple):
        x, y = batch
    else:
        x, y = dataset_arrays(batch)
    x = _scaled(network, np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    layers = network.spec.layers
    params = _params_from(network.weights.layers)
    _, grads = backprop(layers, params, x, y)
    rng = np.random.default_rng(seed)

    worst = 0.0
    for param, grad in zip(params, grads):
        if param is None:
            continue
        for tensor, analytic in zip(param, grad):
            flat = tensor.reshape(-1)
            indices = np.arange(flat.size)
            if max_params is not None and flat.size > max_params:
                indices = rng.choice(flat.size, size=max_params, replace=False)
            for i in indices:
                saved = flat[i]
                flat[i] = saved + eps
                plus, _ = softmax_cross_entropy(forward_train(layers, params, x)[0], y)
                flat[i] = saved - eps
                minus, _ = softmax_cross_entropy(forward_train(layers, params, x)[0], y)
                flat[i] = saved
                numeric = (plus - minus) / (2 * eps)
                a = analytic.reshape(-1)[i]
                worst = max(worst, abs(a - numeric) / max(abs(a) + abs(numeric), 1e-4))
    return float(worst)
