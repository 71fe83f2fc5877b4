"""
Small fully-connected task model over a flat parameter vector.

All evaluation methods take theta explicitly and never mutate it, so the
same model object can score adapted copies of its parameters concurrently.
The Parameter objects returned by parameters() are views into self.theta
and are what the outer optimizer updates.
"""

import hashlib
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ams.exceptions import ConfigError, DimensionError
from ams.models.domain_models import DomainSuite, ExampleSet
from ams.models.tensor import Parameter, Tensor
from ams.services.layers import (
    activation, activation_backward, affine, affine_backward, log_softmax, softmax,
    uniform_init,
)

LOSS_KINDS = ('mse', 'cross_entropy')
DEFAULT_HIDDEN = (40, 40)


class TaskModel:
    """
    input -> hidden... -> output network with tanh units.

    Attributes:
        input_dim: Input feature count
        output_dim: Output count (1 for regression, class count for clusters)
        hidden: Hidden layer widths; empty gives a linear model
        loss_kind: 'mse' or 'cross_entropy'
        theta: Flat parameter vector (collectively the meta-learned init)
    """

    def __init__(self, input_dim: int = 1, output_dim: int = 1,
                 hidden: Sequence[int] = DEFAULT_HIDDEN, loss_kind: str = 'mse',
                 rng: Optional[np.random.Generator] = None, init_scale: float = 1.0,
                 act: str = 'tanh'):
        if loss_kind not in LOSS_KINDS:
            raise ConfigError(f"unknown loss kind '{loss_kind}'")
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.hidden = tuple(int(h) for h in hidden)
        self.loss_kind = loss_kind
        self.act = act

        widths = [input_dim, *self.hidden, output_dim]
        self.layout: List[Tuple[str, Tuple[int, ...], slice]] = []
        offset = 0
        for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
            for name, shape in ((f"layer{i}.weight", (fan_out, fan_in)),
                                (f"layer{i}.bias", (fan_out,))):
                size = int(np.prod(shape))
                self.layout.append((name, shape, slice(offset, offset + size)))
                offset += size
        self.theta = np.zeros(offset)
        for name, shape, sl in self.layout:
            if name.endswith('weight'):
                self.theta[sl] = uniform_init(rng, shape, shape[1], init_scale).ravel()
        self._params = [Parameter(name, self.theta[sl].reshape(shape))
                        for name, shape, sl in self.layout]

    @classmethod
    def for_suite(cls, suite: DomainSuite, rng: Optional[np.random.Generator] = None,
                  hidden: Sequence[int] = DEFAULT_HIDDEN) -> 'TaskModel':
        spec = suite.sources[0]
        loss_kind = 'cross_entropy' if suite.family == 'clusters' else 'mse'
        return cls(input_dim=spec.input_dim, output_dim=spec.output_dim,
                   hidden=hidden, loss_kind=loss_kind, rng=rng)

    @property
    def n_params(self) -> int:
        return self.theta.size

    def parameters(self) -> List[Parameter]:
        return self._params

    def _layers(self, theta: Tensor) -> List[Tuple[Tensor, Tensor]]:
        if theta.shape != self.theta.shape:
            raise DimensionError(f"theta has {theta.size} entries, model needs {self.theta.size}")
        views = [theta[sl].reshape(shape) for _, shape, sl in self.layout]
        return list(zip(views[0::2], views[1::2]))

    def _forward(self, theta: Tensor, x: Tensor):
        layers = self._layers(theta)
        inputs, pre = [], []
        h = x
        for i, (w, b) in enumerate(layers):
            inputs.append(h)
            z = affine(w, b, h)
            if i < len(layers) - 1:
                pre.append(z)
                h = activation(z, self.act)
            else:
                h = z
        return h, layers, inputs, pre

    def predict(self, theta: Tensor, x: Tensor) -> Tensor:
        return self._forward(theta, x)[0]

    def _loss_from_output(self, out: Tensor, y: np.ndarray) -> Tuple[float, Tensor]:
        n = out.shape[0]
        if self.loss_kind == 'cross_entropy':
            labels = y.astype(np.int64).reshape(-1)
            logp = log_softmax(out)
            loss = -float(np.mean(logp[np.arange(n), labels]))
            dout = softmax(out)
            dout[np.arange(n), labels] -= 1.0
            return loss, dout / n
        target = y.reshape(out.shape)
        diff = out - target
        return float(np.mean(diff * diff)), 2.0 * diff / diff.size

    def loss(self, theta: Tensor, examples: ExampleSet) -> float:
        """Mean per-example loss (squared error or cross-entropy)."""
        if len(examples) == 0:
            raise DimensionError("loss over an empty example set")
        out = self.predict(theta, examples.x)
        return self._loss_from_output(out, examples.y)[0]

    def loss_and_grad(self, theta: Tensor, examples: ExampleSet) -> Tuple[float, Tensor]:
        """Mean loss and its flat gradient with respect to theta."""
        if len(examples) == 0:
            raise DimensionError("loss over an empty example set")
        out, layers, inputs, pre = self._forward(theta, examples.x)
        loss, dout = self._loss_from_output(out, examples.y)
        grads: List[Tensor] = []
        for i in reversed(range(len(layers))):
            w, _ = layers[i]
            dw, db, dh = affine_backward(w, inputs[i], dout)
            grads.append(db)
            grads.append(dw)
            if i > 0:
                dout = activation_backward(dh, pre[i - 1], inputs[i], self.act)
        grads.reverse()
        return loss, np.concatenate([g.ravel() for g in grads])

    def assign_grad(self, flat_grad: Tensor) -> None:
        """Accumulate a flat gradient into the Parameter views."""
        for p, (_, shape, sl) in zip(self._params, self.layout):
            p.accumulate(flat_grad[sl].reshape(shape))

    def fingerprint(self, theta: Optional[Tensor] = None) -> str:
        """sha256 of the parameter bytes."""
        values = self.theta if theta is None else theta
        return hashlib.sha256(np.ascontiguousarray(values).tobytes()).hexdigest()

    def to_dict(self) -> Dict[str, Any]:
        return {
            'format_version': 1,
            'kind': 'task_model',
            'input_dim': self.input_dim,
            'output_dim': self.output_dim,
            'hidden': list(self.hidden),
            'loss_kind': self.loss_kind,
            'layout': [[name, list(shape)] for name, shape, _ in self.layout],
            'theta': self.theta.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TaskModel':
        if data.get('kind') != 'task_model':
            raise ConfigError("checkpoint is not a task model")
        model = cls(input_dim=int(data['input_dim']), output_dim=int(data['output_dim']),
                    hidden=data.get('hidden', []), loss_kind=data.get('loss_kind', 'mse'))
        theta = np.array(data['theta'], dtype=np.float64)
        if theta.shape != model.theta.shape:
            raise DimensionError("checkpoint theta does not match the model layout")
        model.theta[...] = theta
        return model
