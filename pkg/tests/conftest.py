"""
Shared fixtures: an app on an in-memory database, reference networks,
and one small trained model reused by the slower tests.
"""

import numpy as np
import pytest

from app import create_app
from models.datagen import SynthConfig, generate_dataset, train_test_split
from models.model_io import with_weights
from models.network import reference_network
from models.trainer import TrainConfig, train_ee, train_end_to_end


@pytest.fixture
def app():
    app = create_app({
        'TESTING': True,
        'SQLALCHEMY_DATABASE_URI': 'sqlite://',
        'STREAMFIRST_SEED': 0,
    })
    yield app


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def network():
    return reference_network(seed=0)


@pytest.fixture(scope='session')
def synthetic_split():
    data = generate_dataset(SynthConfig(seed=3, minutes_per_class=2.0))
    return train_test_split(data, 0.2, seed=3)


@pytest.fixture(scope='session')
def trained(synthetic_split):
    """Reference network after end-to-end training and exit-head training"""
    train_set, _ = synthetic_split
    network = reference_network(seed=0)
    history = []
    weights = train_end_to_end(network, train_set, TrainConfig(epochs=60, seed=0), history)
    network = with_weights(network, weights=weights)
    head = train_ee(network, train_set, TrainConfig(epochs=60, seed=0))
    return {'network': with_weights(network, ee=head.weights), 'head': head, 'history': history}
