"""
Feed-forward attention over per-domain feature rows.

Scores e_k = v . tanh(W u_k + b), weights a = softmax(e), and the context
is the concatenation of a_k * u_k over k (length K * feature_dim).
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ams.exceptions import DimensionError
from ams.models.tensor import Parameter, Tensor
from ams.services.layers import softmax, softmax_backward, uniform_init


@dataclass
class AttentionCache:
    features: Tensor
    hidden: Tensor
    weights: Tensor


class AttentionUnit:
    """
    Attributes:
        w: Score weight matrix [A, D]
        b: Score bias [A]
        v: Score projection [A]
    """

    def __init__(self, feature_dim: int = 2, attention_size: int = 16,
                 rng: Optional[np.random.Generator] = None,
                 init_scale: float = 1.0, name: str = "attention"):
        self.feature_dim = feature_dim
        self.attention_size = attention_size
        self.w = Parameter(f"{name}.w",
                           uniform_init(rng, (attention_size, feature_dim), feature_dim, init_scale))
        self.b = Parameter(f"{name}.b", np.zeros(attention_size))
        self.v = Parameter(f"{name}.v",
                           uniform_init(rng, (attention_size,), attention_size, init_scale))

    def parameters(self) -> List[Parameter]:
        return [self.w, self.b, self.v]


def attention_forward(unit: AttentionUnit,
                      features: Tensor) -> Tuple[Tensor, Tensor, AttentionCache]:
    """
    Args:
        features: [K, D] matrix, one row u_k per domain

    Returns:
        (context [K*D], weights [K], cache)

    Raises:
        DimensionError: If K == 0 or the row width differs from D
    """
    if features.ndim != 2 or features.shape[0] == 0:
        raise DimensionError("attention needs at least one feature row")
    if features.shape[1] != unit.feature_dim:
        raise DimensionError(
            f"feature width {features.shape[1]} != {unit.feature_dim}")
    hidden = np.tanh(features @ unit.w.value.T + unit.b.value)
    scores = hidden @ unit.v.value
    weights = softmax(scores)
    context = (weights[:, None] * features).ravel()
    return context, weights, AttentionCache(features=features, hidden=hidden, weights=weights)


def attention_backward(unit: AttentionUnit, dcontext: Tensor, cache: AttentionCache,
                       dweights: Optional[Tensor] = None) -> Tensor:
    """
    Accumulate W, b, v gradients and return the gradient w.r.t. the features.
    """
    feats = cache.features
    k, d = feats.shape
    dctx = dcontext.reshape(k, d)
    da = np.sum(dctx * feats, axis=1)
    if dweights is not None:
        da = da + dweights
    dfeats = cache.weights[:, None] * dctx

    de = softmax_backward(da, cache.weights)
    unit.v.accumulate(cache.hidden.T @ de)
    dpre = np.outer(de, unit.v.value) * (1.0 - cache.hidden ** 2)
    unit.w.accumulate(dpre.T @ feats)
    unit.b.accumulate(dpre.sum(axis=0))
    dfeats += dpre @ unit.w.value
    return dfeats
