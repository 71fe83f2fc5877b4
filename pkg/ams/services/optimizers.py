"""
First-order optimizers over Parameter lists.

Both steps update values in place and reset gradients to zero afterwards,
so callers never clear gradients themselves.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List

import numpy as np

from ams.exceptions import NumericError
from ams.models.tensor import Parameter, Tensor


def _check_grads(params: List[Parameter]) -> None:
    for p in params:
        if not np.all(np.isfinite(p.grad)):
            raise NumericError(f"non-finite gradient in {p.name}")


def sgd_step(params: Iterable[Parameter], lr: float, checked: bool = True) -> None:
    """value -= lr * grad, then zero the gradients."""
    params = list(params)
    if checked:
        _check_grads(params)
    for p in params:
        p.value -= lr * p.grad
        p.zero_grad()


@dataclass
class AdamState:
    """
    Adam moment estimates keyed by Parameter id.

    Attributes:
        beta1: First-moment decay
        beta2: Second-moment decay
        eps: Denominator floor
        maximize: Ascend instead of descend
        step: Number of completed updates
    """
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    maximize: bool = False
    step: int = 0
    m: Dict[int, Tensor] = field(default_factory=dict)
    v: Dict[int, Tensor] = field(default_factory=dict)

    def to_dict(self, params: Iterable[Parameter]) -> Dict[str, Any]:
        """Serialize moments keyed by parameter name."""
        moments = {}
        for p in params:
            if p.id in self.m:
                moments[p.name] = {'m': self.m[p.id].ravel().tolist(),
                                   'v': self.v[p.id].ravel().tolist()}
        return {'beta1': self.beta1, 'beta2': self.beta2, 'eps': self.eps,
                'maximize': self.maximize, 'step': self.step, 'moments': moments}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], params: Iterable[Parameter]) -> 'AdamState':
        state = cls(beta1=float(data.get('beta1', 0.9)),
                    beta2=float(data.get('beta2', 0.999)),
                    eps=float(data.get('eps', 1e-8)),
                    maximize=bool(data.get('maximize', False)),
                    step=int(data.get('step', 0)))
        moments = data.get('moments', {})
        for p in params:
            if p.name in moments:
                state.m[p.id] = np.array(moments[p.name]['m'], dtype=np.float64).reshape(p.shape)
                state.v[p.id] = np.array(moments[p.name]['v'], dtype=np.float64).reshape(p.shape)
        return state


def adam_step(state: AdamState, params: Iterable[Parameter], lr: float,
              checked: bool = True) -> None:
    """Bias-corrected Adam update, then zero the gradients."""
    params = list(params)
    if checked:
        _check_grads(params)
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for p in params:
        g = -p.grad if state.maximize else p.grad
        m = state.m.get(p.id)
        if m is None:
            m = state.m[p.id] = np.zeros_like(p.value)
            state.v[p.id] = np.zeros_like(p.value)
        v = state.v[p.id]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p.value -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        p.zero_grad()


class Optimizer:
    """Small facade so callers can hold either rule behind one interface."""

    def __init__(self, kind: str = "adam", maximize: bool = False, checked: bool = True):
        if kind not in ('sgd', 'adam'):
            raise ValueError(f"unknown optimizer '{kind}'")
        self.kind = kind
        self.checked = checked
        self.maximize = maximize
        self.adam = AdamState(maximize=maximize)

    def step(self, params: Iterable[Parameter], lr: float) -> None:
        if self.kind == 'adam':
            adam_step(self.adam, params, lr, checked=self.checked)
        else:
            params = list(params)
            if self.maximize:
                for p in params:
                    p.grad *= -1.0
            sgd_step(params, lr, checked=self.checked)
