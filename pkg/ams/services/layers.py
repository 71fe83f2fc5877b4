"""
Dense layers with analytic forward/backward passes.

Each layer exposes a pure forward that returns (output, cache) and a
backward that accumulates parameter gradients and returns the input
gradient. The array-level helpers (affine, activation, softmax) are
stateless and safe to share across concurrent task evaluations.
"""

from typing import List, Optional, Tuple

import numpy as np

from ams.exceptions import DimensionError
from ams.models.tensor import Parameter, Tensor

ACTIVATIONS = ('tanh', 'sigmoid', 'relu')


def affine(weight: Tensor, bias: Tensor, x: Tensor) -> Tensor:
    """
    y = W.x + b for a single vector or a batch of row vectors.

    Raises:
        DimensionError: If the last dimension of x differs from W's input size
    """
    if x.ndim == 0 or x.shape[-1] != weight.shape[1]:
        raise DimensionError(
            f"input last dim {x.shape[-1] if x.ndim else 0} != layer input {weight.shape[1]}")
    return x @ weight.T + bias


def affine_backward(weight: Tensor, x: Tensor,
                    dy: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
    """Return (dW, db, dx) for y = W.x + b."""
    if x.ndim == 1:
        return np.outer(dy, x), dy.copy(), weight.T @ dy
    return dy.T @ x, dy.sum(axis=0), dy @ weight


def sigmoid(x: Tensor) -> Tensor:
    # split form keeps exp() from overflowing for large |x|
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def activation(x: Tensor, kind: str) -> Tensor:
    """Elementwise tanh, sigmoid or relu."""
    if kind == 'tanh':
        return np.tanh(x)
    if kind == 'sigmoid':
        return sigmoid(np.asarray(x, dtype=np.float64))
    if kind == 'relu':
        return np.maximum(x, 0.0)
    raise ValueError(f"unknown activation '{kind}', expected one of {ACTIVATIONS}")


def activation_backward(dy: Tensor, x: Tensor, y: Tensor, kind: str) -> Tensor:
    """
    Input gradient of an activation given its input x and output y.

    tanh and sigmoid use the output; relu uses the input sign.
    """
    if kind == 'tanh':
        return dy * (1.0 - y * y)
    if kind == 'sigmoid':
        return dy * y * (1.0 - y)
    if kind == 'relu':
        return dy * (x > 0)
    raise ValueError(f"unknown activation '{kind}', expected one of {ACTIVATIONS}")


def softmax(x: Tensor) -> Tensor:
    """
    Softmax over the last axis with max-subtraction.

    Raises:
        DimensionError: If the last axis is empty
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise DimensionError("softmax of an empty vector")
    shifted = x - np.max(x, axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / np.sum(ex, axis=-1, keepdims=True)


def softmax_backward(dp: Tensor, p: Tensor) -> Tensor:
    """Logit gradient given the output gradient dp and softmax output p."""
    return p * (dp - np.sum(dp * p, axis=-1, keepdims=True))


def log_softmax(x: Tensor) -> Tensor:
    shifted = x - np.max(x, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def uniform_init(rng: Optional[np.random.Generator], shape: Tuple[int, ...],
                 fan_in: int, scale: float = 1.0) -> Tensor:
    """U(-s, s) with s = scale / sqrt(fan_in); zeros when scale is 0 or rng is None."""
    if rng is None or scale == 0.0:
        return np.zeros(shape, dtype=np.float64)
    bound = scale / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


class LinearLayer:
    """
    Fully-connected layer y = W.x + b.

    Attributes:
        weight: Parameter of shape [out, in]
        bias: Parameter of shape [out]
    """

    def __init__(self, in_dim: int, out_dim: int,
                 rng: Optional[np.random.Generator] = None,
                 init_scale: float = 1.0, name: str = "linear"):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Parameter(f"{name}.weight",
                                uniform_init(rng, (out_dim, in_dim), in_dim, init_scale))
        self.bias = Parameter(f"{name}.bias", np.zeros(out_dim))

    def parameters(self) -> List[Parameter]:
        return [self.weight, self.bias]

    def forward(self, x: Tensor) -> Tuple[Tensor, Tensor]:
        return linear_forward(self, x)

    def backward(self, dy: Tensor, cache: Tensor) -> Tensor:
        return linear_backward(self, dy, cache)


def linear_forward(layer: LinearLayer, x: Tensor) -> Tuple[Tensor, Tensor]:
    """Return (y, cache) where cache is the input needed by the backward pass."""
    return affine(layer.weight.value, layer.bias.value, x), x


def linear_backward(layer: LinearLayer, dy: Tensor, cache: Tensor) -> Tensor:
    """Accumulate dW, db into the layer and return dx."""
    dw, db, dx = affine_backward(layer.weight.value, cache, dy)
    layer.weight.accumulate(dw)
    layer.bias.accumulate(db)
    return dx
