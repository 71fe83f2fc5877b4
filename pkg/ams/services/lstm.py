"""
Single-step LSTM cell with manual backpropagation.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ams.exceptions import DimensionError
from ams.models.tensor import Parameter, Tensor
from ams.services.layers import sigmoid, uniform_init


@dataclass
class LstmCache:
    """Intermediate values of one lstm_forward call."""
    x: Tensor
    h_prev: Tensor
    c_prev: Tensor
    i: Tensor
    f: Tensor
    o: Tensor
    g: Tensor
    c: Tensor
    tanh_c: Tensor


class LstmCell:
    """
    LSTM cell with gates stacked in the order input, forget, output, candidate.

    Attributes:
        w_x: Input-to-hidden weights [4H, I]
        w_h: Hidden-to-hidden weights [4H, H]
        bias: Gate biases [4H]
    """

    def __init__(self, input_size: int = 32, hidden_size: int = 100,
                 rng: Optional[np.random.Generator] = None,
                 init_scale: float = 1.0, name: str = "lstm"):
        self.input_size = input_size
        self.hidden_size = hidden_size
        fan_in = input_size + hidden_size
        self.w_x = Parameter(f"{name}.w_x",
                             uniform_init(rng, (4 * hidden_size, input_size), fan_in, init_scale))
        self.w_h = Parameter(f"{name}.w_h",
                             uniform_init(rng, (4 * hidden_size, hidden_size), fan_in, init_scale))
        self.bias = Parameter(f"{name}.bias", np.zeros(4 * hidden_size))

    def parameters(self) -> List[Parameter]:
        return [self.w_x, self.w_h, self.bias]

    def zero_state(self) -> Tuple[Tensor, Tensor]:
        return np.zeros(self.hidden_size), np.zeros(self.hidden_size)


def lstm_forward(cell: LstmCell, x: Tensor, h_prev: Tensor,
                 c_prev: Tensor) -> Tuple[Tensor, Tensor, Tensor, LstmCache]:
    """
    One LSTM step.

    Returns:
        (y, h, c, cache) with y == h

    Raises:
        DimensionError: If x, h_prev or c_prev have the wrong length
    """
    hs = cell.hidden_size
    if x.shape != (cell.input_size,):
        raise DimensionError(f"lstm input shape {x.shape} != ({cell.input_size},)")
    if h_prev.shape != (hs,) or c_prev.shape != (hs,):
        raise DimensionError(f"lstm state shapes {h_prev.shape}/{c_prev.shape} != ({hs},)")

    z = cell.w_x.value @ x + cell.w_h.value @ h_prev + cell.bias.value
    i = sigmoid(z[:hs])
    f = sigmoid(z[hs:2 * hs])
    o = sigmoid(z[2 * hs:3 * hs])
    g = np.tanh(z[3 * hs:])
    c = f * c_prev + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    cache = LstmCache(x=x, h_prev=h_prev, c_prev=c_prev,
                      i=i, f=f, o=o, g=g, c=c, tanh_c=tanh_c)
    return h, h, c, cache


def lstm_backward(cell: LstmCell, dh: Tensor, dc: Optional[Tensor],
                  cache: LstmCache) -> Tuple[Tensor, Tensor, Tensor]:
    """
    Backward pass of one step; accumulates into the cell's Parameters.

    Args:
        dh: Gradient w.r.t. the step's hidden output
        dc: Gradient w.r.t. the step's cell output (None for zero)

    Returns:
        (dx, dh_prev, dc_prev)
    """
    dc_total = dh * cache.o * (1.0 - cache.tanh_c ** 2)
    if dc is not None:
        dc_total = dc_total + dc
    do = dh * cache.tanh_c
    di = dc_total * cache.g
    df = dc_total * cache.c_prev
    dg = dc_total * cache.i

    dz = np.concatenate([
        di * cache.i * (1.0 - cache.i),
        df * cache.f * (1.0 - cache.f),
        do * cache.o * (1.0 - cache.o),
        dg * (1.0 - cache.g ** 2),
    ])
    cell.w_x.accumulate(np.outer(dz, cache.x))
    cell.w_h.accumulate(np.outer(dz, cache.h_prev))
    cell.bias.accumulate(dz)
    dx = cell.w_x.value.T @ dz
    dh_prev = cell.w_h.value.T @ dz
    dc_prev = dc_total * cache.f
    return dx, dh_prev, dc_prev
