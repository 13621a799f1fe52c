"""
File: models/model_io.py
Purpose: JSON model files and device profile files
Version: 1.1.0
Author: StreamFirst Team

Revision History:
- v1.0.0: load_model / save_model
- v1.1.0: Layers without weights are initialized from the file's seed;
          profile files validated through DeviceProfileForm

Model document:
    {
      "odr_hz": 26, "window_len": 26, "channels": 6,
      "input_scale": [0.5, 0.5, 0.5, 0.004, 0.004, 0.004],
      "layers": [
        {"type": "conv1d", "filters": 16, "kernel_len": 26, "activation": "relu",
         "weights": {"kernel": [[...]], "bias": [...]}},
        {"type": "maxpool_channels", "pool": 6},
        {"type": "dense", "in_dim": 16, "out_dim": 2, "activation": "softmax"}
      ],
      "split_index": 3,
      "ee": {"threshold": 0.5, "weights": {...}},
      "head": {"weights": {...}},
      "seed": 0
    }

`head.weights`, when present, fills the last layer if that layer has no
inline weights.
"""

import json
import logging
from dataclasses import replace
from pathlib import Path

import numpy as np

from forms.profile_forms import validate_profile_document
from models.errors import ModelFileError, ProfileError
from models.network import (Conv1D, Dense, FeatureShape, LayerWeights, MaxPoolChannels, NetworkSpec,
                            Weights, build_network, glorot_weights, layer_output_shape)

logger = logging.getLogger(__name__)

LAYER_TYPES = {'conv1d': Conv1D, 'maxpool_channels': MaxPoolChannels, 'dense': Dense}


# ========== PARSING ==========

def _require(document, key, where):
    if key not in document:
        raise ModelFileError(f'{where}: missing field {key!r}', field=key)
    return document[key]


def _parse_weights(raw, where):
    if raw is None:
        return None
    if not isinstance(raw, dict) or 'kernel' not in raw or 'bias' not in raw:
        raise ModelFileError(f'{where}: weights need "kernel" and "bias"', field=where)
    try:
        kernel = np.array(raw['kernel'], dtype=np.float64)
        bias = np.array(raw['bias'], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f'{where}: weights are not numeric arrays ({exc})', field=where) from exc
    return LayerWeights.frozen(kernel, bias)


def _parse_layer(raw, index):
    where = f'layers[{index}]'
    if not isinstance(raw, dict):
        raise ModelFileError(f'{where}: expected an object', field=where)
    kind = _require(raw, 'type', where)
    if kind not in LAYER_TYPES:
        raise ModelFileError(f'{where}: unknown layer type {kind!r}', field=f'{where}.type')
    try:
        if kind == 'conv1d':
            layer = Conv1D(int(_require(raw, 'filters', where)), int(_require(raw, 'kernel_len', where)),
                           raw.get('activation', 'relu'))
        elif kind == 'maxpool_channels':
            layer = MaxPoolChannels(int(_require(raw, 'pool', where)))
        else:
            layer = Dense(int(_require(raw, 'in_dim', where)), int(_require(raw, 'out_dim', where)),
                          raw.get('activation', 'none'))
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f'{where}: {exc}', field=where) from exc
    return layer, _parse_weights(raw.get('weights'), f'{where}.weights')


def model_from_document(document, seed=None):
    """
    Build a validated Network from a parsed model document

    Args:
        document: dict as described in the module docstring
        seed: overrides the document's seed for missing weights
    """
    if not isinstance(document, dict):
        raise ModelFileError('model document must be a JSON object')
    raw_layers = _require(document, 'layers', 'model')
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ModelFileError('model: "layers" must be a non-empty list', field='layers')
    parsed = [_parse_layer(raw, index) for index, raw in enumerate(raw_layers)]
    layers = tuple(layer for layer, _ in parsed)
    layer_weights = [weights for _, weights in parsed]

    head = document.get('head') or {}
    if layer_weights[-1] is None and head.get('weights') is not None:
        layer_weights[-1] = _parse_weights(head['weights'], 'head.weights')

    ee = document.get('ee') or {}
    threshold = float(ee.get('threshold', 0.5))
    if not 0.0 < threshold < 1.0:
        raise ModelFileError(f'ee.threshold must be in (0, 1), got {threshold}', field='ee.threshold')
    split_index = int(_require(document, 'split_index', 'model'))
    try:
        g_out = _g_output_dim(layers, split_index, int(_require(document, 'window_len', 'model')),
                              int(_require(document, 'channels', 'model')))
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f'model: {exc}') from exc
    spec = NetworkSpec(
        odr_hz=float(document.get('odr_hz', 26.0)),
        window_len=int(document['window_len']),
        channels=int(document['channels']),
        layers=layers,
        split_index=split_index,
        ee_head=Dense(g_out, 2, 'softmax'),
        ee_threshold=threshold,
        input_scale=document.get('input_scale'),
    )
    ee_weights = _parse_weights(ee.get('weights'), 'ee.weights')

    if ee_weights is None or any(w is None and layer.kind != 'maxpool_channels'
                                 for layer, w in zip(layers, layer_weights)):
        seed = int(document.get('seed', 0)) if seed is None else seed
        initial = glorot_weights(spec, seed)
        layer_weights = [w if w is not None else init for w, init in zip(layer_weights, initial.layers)]
        ee_weights = ee_weights if ee_weights is not None else initial.ee
        logger.debug('initialized missing weights from seed %d', seed)

    return build_network(spec, Weights(tuple(layer_weights), ee_weights))


def _g_output_dim(layers, split_index, window_len, channels):
    """Feature count g produces, used to size the exit head (best effort before validation)"""
    shape = FeatureShape(1, channels, window_len)
    for index, layer in enumerate(layers[:max(split_index, 0)]):
        shape = layer_output_shape(index, layer, shape)
    return shape.size


def load_model(path, seed=None):
    try:
        with open(path, encoding='utf-8') as handle:
            document = json.load(handle)
    except FileNotFoundError as exc:
        raise ModelFileError(f'{path}: no such file', path=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise ModelFileError(f'{path}: invalid JSON at line {exc.lineno} ({exc.msg})',
                             path=str(path), line=exc.lineno) from exc
    network = model_from_document(document, seed=seed)
    logger.info('loaded model %s: %r', path, network)
    return network


# ========== SERIALIZATION ==========

def _weights_document(weights):
    return {'kernel': np.asarray(weights.kernel, dtype=np.float64).tolist(),
            'bias': np.asarray(weights.bias, dtype=np.float64).tolist()}


def model_to_document(network):
    spec = network.spec
    layers = []
    for layer, weights in zip(spec.layers, network.weights.layers):
        entry = {'type': layer.kind}
        if isinstance(layer, Conv1D):
            entry.update(filters=layer.filters, kernel_len=layer.kernel_len, activation=layer.activation)
        elif isinstance(layer, MaxPoolChannels):
            entry.update(pool=layer.pool)
        else:
            entry.update(in_dim=layer.in_dim, out_dim=layer.out_dim, activation=layer.activation)
        if weights is not None:
            entry['weights'] = _weights_document(weights)
        layers.append(entry)
    document = {
        'odr_hz': spec.odr_hz,
        'window_len': spec.window_len,
        'channels': spec.channels,
        'layers': layers,
        'split_index': spec.split_index,
        'ee': {'threshold': spec.ee_threshold, 'weights': _weights_document(network.weights.ee)},
    }
    if spec.input_scale is not None:
        document['input_scale'] = list(spec.input_scale)
    return document


def save_model(network, path):
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(model_to_document(network), handle, indent=2, sort_keys=True)
        handle.write('\n')


def with_weights(network, weights=None, ee=None, threshold=None):
    """Copy of `network` with replaced layer weights, exit head and/or threshold"""
    spec = network.spec if threshold is None else replace(network.spec, ee_threshold=threshold)
    layers = network.weights.layers if weights is None else weights.layers
    ee_weights = network.weights.ee if ee is None else ee
    return build_network(spec, Weights(layers, ee_weights))


# ========== DEVICE PROFILES ==========

def load_profile(path):
    """Validated DeviceProfile from a JSON file; the file stem is the default name"""
    try:
        with open(path, encoding='utf-8') as handle:
            document = json.load(handle)
    except FileNotFoundError as exc:
        raise ProfileError(f'{path}: no such file', path=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise ProfileError(f'{path}: invalid JSON at line {exc.lineno} ({exc.msg})', path=str(path)) from exc
    profile, _ = validate_profile_document(document, default_name=Path(path).stem)
    return profile


def save_profile(profile, path, description=None):
    document = profile.to_dict()
    if description:
        document['description'] = description
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(document, handle, indent=2, sort_keys=True)
        handle.write('\n')
