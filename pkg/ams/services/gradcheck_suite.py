"""
Finite-difference report over every differentiable component: dense
layers, activations, softmax, LSTM cell, attention, the composed policy
network under both surrogates, the task-model loss and the MAML outer
gradient.
"""

import logging
from typing import Callable, Dict, List, NamedTuple, Tuple

import numpy as np

from ams.models.domain_models import ExampleSet, TaskInstance
from ams.models.meta_models import MetaConfig
from ams.models.sampler_models import PolicyConfig
from ams.models.tensor import Parameter, zero_grads
from ams.services.attention import AttentionUnit, attention_backward, attention_forward
from ams.services.gradcheck import (
    finite_difference_grad, finite_difference_vector, max_relative_error,
)
from ams.services.layers import (
    LinearLayer, activation, activation_backward, linear_backward, linear_forward,
    softmax, softmax_backward,
)
from ams.services.lstm import LstmCell, lstm_backward, lstm_forward
from ams.services.meta_learner import inner_adapt, query_loss, task_contribution
from ams.services.policy_network import (
    PolicyNetwork, policy_backward, policy_forward, surrogate, surrogate_value,
)
from ams.services.task_model import TaskModel
from ams.utils.seeding import make_rng

logger = logging.getLogger(__name__)

LAYER_TOLERANCE = 1e-4
MAML_TOLERANCE = 1e-3
GRADCHECK_TAG = 21


class GradcheckResult(NamedTuple):
    component: str
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance


def _param_check(params: List[Parameter], objective: Callable[[], float],
                 backward: Callable[[], None]) -> float:
    zero_grads(params)
    backward()
    analytic = [p.grad.copy() for p in params]
    zero_grads(params)
    numeric = finite_difference_grad(objective, params)
    return max_relative_error(analytic, numeric)


def check_linear(rng: np.random.Generator) -> float:
    layer = LinearLayer(4, 3, rng, name="check")
    layer.bias.value[...] = rng.normal(size=3)
    x = rng.normal(size=(5, 4))
    r = rng.normal(size=(5, 3))
    return _param_check(layer.parameters(),
                        lambda: float(np.sum(r * linear_forward(layer, x)[0])),
                        lambda: linear_backward(layer, r, x))


def check_activations(rng: np.random.Generator) -> float:
    worst = 0.0
    x = rng.normal(size=6)
    r = rng.normal(size=6)
    for kind in ('tanh', 'sigmoid'):
        y = activation(x, kind)
        analytic = activation_backward(r, x, y, kind)
        numeric = finite_difference_vector(lambda v: float(np.sum(r * activation(v, kind))), x)
        worst = max(worst, max_relative_error([analytic], [numeric]))
    return worst


def check_softmax(rng: np.random.Generator) -> float:
    x = rng.normal(size=5)
    r = rng.normal(size=5)
    analytic = softmax_backward(r, softmax(x))
    numeric = finite_difference_vector(lambda v: float(np.sum(r * softmax(v))), x)
    return max_relative_error([analytic], [numeric])


def check_lstm(rng: np.random.Generator) -> float:
    cell = LstmCell(3, 4, rng, name="check")
    cell.bias.value[...] = rng.normal(scale=0.5, size=cell.bias.value.shape)
    x, h0, c0 = rng.normal(size=3), rng.normal(size=4), rng.normal(size=4)
    rh, rc = rng.normal(size=4), rng.normal(size=4)

    def objective() -> float:
        _, h, c, _ = lstm_forward(cell, x, h0, c0)
        return float(rh @ h + rc @ c)

    def backward() -> None:
        _, _, _, cache = lstm_forward(cell, x, h0, c0)
        lstm_backward(cell, rh, rc, cache)

    return _param_check(cell.parameters(), objective, backward)


def check_attention(rng: np.random.Generator) -> float:
    unit = AttentionUnit(2, 5, rng, name="check")
    unit.b.value[...] = rng.normal(size=5)
    features = rng.normal(size=(4, 2))
    r = rng.normal(size=8)

    def backward() -> None:
        _, _, cache = attention_forward(unit, features)
        attention_backward(unit, r, cache)

    return _param_check(unit.parameters(),
                        lambda: float(r @ attention_forward(unit, features)[0]),
                        backward)


def check_policy(rng: np.random.Generator, surrogate_kind: str, K: int = 5) -> float:
    """Surrogate gradient of a small policy network (no step taken)."""
    cfg = PolicyConfig(surrogate=surrogate_kind, entropy_weight=1e-2,
                       attention_size=4, input_size=6, hidden_size=5)
    net = PolicyNetwork(K, cfg, rng)
    for p in net.parameters():
        if p.name.endswith('bias') or p.name.endswith('.b'):
            p.value[...] = rng.normal(scale=0.3, size=p.value.shape)
    state = net.initial_state()
    state.h[...] = rng.normal(scale=0.5, size=state.h.shape)
    state.c[...] = rng.normal(scale=0.5, size=state.c.shape)
    q = rng.normal(size=K)
    selected = [int(k) for k in rng.choice(K, size=2, replace=False)]
    rewards = rng.uniform(0.5, 2.0, size=2).tolist()

    def backward() -> None:
        out = policy_forward(net, state, q)
        _, dprobs = surrogate(out.trace.probs, selected, rewards, cfg)
        policy_backward(net, out.trace, dprobs)

    return _param_check(net.parameters(),
                        lambda: surrogate_value(net, state, q, selected, rewards, cfg),
                        backward)


def _small_task(rng: np.random.Generator, n: int = 6) -> TaskInstance:
    x = rng.uniform(-2.0, 2.0, size=(2 * n, 1))
    y = np.sin(x) + 0.1 * rng.normal(size=x.shape)
    return TaskInstance(domain_id=0, support=ExampleSet(x[:n], y[:n]),
                        query=ExampleSet(x[n:], y[n:]))


def check_task_model(rng: np.random.Generator) -> float:
    model = TaskModel(1, 1, hidden=(5,), rng=rng)
    task = _small_task(rng)
    _, analytic = model.loss_and_grad(model.theta, task.support)
    numeric = finite_difference_vector(lambda th: model.loss(th, task.support), model.theta)
    return max_relative_error([analytic], [numeric])


def check_maml(rng: np.random.Generator, inner_steps: int = 2) -> float:
    """Second-order outer gradient of a 10-parameter model against the full meta-objective."""
    model = TaskModel(1, 1, hidden=(3,), rng=rng)
    task = _small_task(rng)
    cfg = MetaConfig(variant='maml', alpha=0.1, inner_steps=inner_steps, M=1)

    def meta_objective(theta: np.ndarray) -> float:
        adapted = inner_adapt(model, theta, task.support, cfg.alpha, cfg.inner_steps)
        return query_loss(model, adapted, task.query)

    analytic = task_contribution(model, task, cfg).direction
    numeric = finite_difference_vector(meta_objective, model.theta)
    return max_relative_error([analytic], [numeric], floor=1e-4)


def run_checks(seed: int = 0, trials: int = 3) -> List[GradcheckResult]:
    """Worst relative error per component over `trials` random draws."""
    checks: List[Tuple[str, Callable[[np.random.Generator], float], float]] = [
        ('linear', check_linear, LAYER_TOLERANCE),
        ('activations', check_activations, LAYER_TOLERANCE),
        ('softmax', check_softmax, LAYER_TOLERANCE),
        ('lstm', check_lstm, LAYER_TOLERANCE),
        ('attention', check_attention, LAYER_TOLERANCE),
        ('policy/prob-weighted', lambda r: check_policy(r, 'prob-weighted'), LAYER_TOLERANCE),
        ('policy/logprob-weighted', lambda r: check_policy(r, 'logprob-weighted'), LAYER_TOLERANCE),
        ('task_model', check_task_model, LAYER_TOLERANCE),
        ('maml_outer', check_maml, MAML_TOLERANCE),
    ]
    results = []
    for index, (name, check, tolerance) in enumerate(checks):
        worst = 0.0
        for trial in range(trials):
            worst = max(worst, check(make_rng(seed, GRADCHECK_TAG, index, trial)))
        results.append(GradcheckResult(name, worst, tolerance))
        logger.debug("gradcheck %s max_rel_error=%.3e", name, worst)
    return results


def format_report(results: List[GradcheckResult]) -> str:
    lines = [f"{'component':<26}{'max_rel_error':>14}  status"]
    for r in results:
        lines.append(f"{r.component:<26}{r.max_rel_error:>14.3e}  {'ok' if r.passed else 'FAIL'}")
    return '\n'.join(lines) + '\n'


def run_gradcheck(seed: int = 0, trials: int = 3) -> Tuple[str, bool]:
    """(report text, all components within tolerance)."""
    results = run_checks(seed, trials)
    return format_report(results), all(r.passed for r in results)
