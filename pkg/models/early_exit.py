"""
File: models/early_exit.py
Purpose: Binary gate on g's features deciding whether to wake the host
Version: 1.0.0
Author: StreamFirst Team

Notes:
- Two-logit softmax head; logit 0 is Activate, logit 1 is Suppress.
- Activate iff P(activate) >= threshold, so an exact tie wakes the host.
"""

from dataclasses import dataclass

import numpy as np

from models.errors import DimensionMismatch
from models.network import DTYPE, LayerWeights, activate

ACTIVATE = 'activate'
SUPPRESS = 'suppress'

# Class ids used by the trainer for the two head outputs
ACTIVATE_CLASS = 0
SUPPRESS_CLASS = 1


@dataclass(frozen=True, eq=False)
class ExitHead:
    weights: LayerWeights
    threshold: float = 0.5

    def __post_init__(self):
        if self.weights.kernel.ndim != 2 or self.weights.kernel.shape[0] != 2:
            raise DimensionMismatch(f'exit head kernel must be (2, d), got {self.weights.kernel.shape}',
                                    layer='ee', actual=self.weights.kernel.shape)
        if self.weights.bias.shape != (2,):
            raise DimensionMismatch(f'exit head bias must be (2,), got {self.weights.bias.shape}', layer='ee')
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f'threshold must be in (0, 1), got {self.threshold}')

    @property
    def in_dim(self):
        return self.weights.kernel.shape[1]

    @classmethod
    def from_network(cls, network, threshold=None):
        return cls(network.weights.ee, network.spec.ee_threshold if threshold is None else threshold)

    def with_threshold(self, threshold):
        return ExitHead(self.weights, threshold)

    def probabilities(self, features):
        x = np.asarray(features, dtype=DTYPE)
        if x.shape != (self.in_dim,):
            raise DimensionMismatch(f'exit head expects {self.in_dim} features, got {x.shape}',
                                    expected=self.in_dim, actual=x.shape)
        logits = self.weights.kernel @ x + self.weights.bias
        return activate(logits.astype(np.float64), 'softmax')


@dataclass(frozen=True)
class ExitDecision:
    variant: str
    confidence: float

    @property
    def activate(self):
        return self.variant == ACTIVATE

    def to_dict(self):
        return {'decision': self.variant, 'confidence': self.confidence}


def ee_decide(head, features):
    """Activate when the softmax probability of the Activate class reaches the threshold"""
    confidence = float(head.probabilities(features)[ACTIVATE_CLASS])
    return ExitDecision(ACTIVATE if confidence >= head.threshold else SUPPRESS, confidence)
