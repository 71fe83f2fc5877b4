"""
Inner/outer meta-training loops: MAML, FOMAML, Reptile and the non-meta
MTL mode.

The inner loop never touches the model's own theta. Outer contributions
are reduced in ascending domain-id order, so results do not depend on how
many worker threads evaluated the tasks.
"""

import logging
from concurrent.futures import Executor
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np

from ams.exceptions import ConfigError, NumericError
from ams.models.domain_models import DomainSuite, ExampleSet, TaskInstance
from ams.models.meta_models import (
    AdaptationResult, MetaBatchResult, MetaConfig, TaskContribution,
)
from ams.models.tensor import Parameter, Tensor
from ams.services.optimizers import Optimizer
from ams.services.task_generator import sample_task

logger = logging.getLogger(__name__)


class DifferentiableModel(Protocol):
    """What the meta-learning loops need from a task model."""
    theta: Tensor

    def loss(self, theta: Tensor, examples: ExampleSet) -> float: ...

    def loss_and_grad(self, theta: Tensor, examples: ExampleSet) -> Tuple[float, Tensor]: ...

    def parameters(self) -> List[Parameter]: ...

    def assign_grad(self, flat_grad: Tensor) -> None: ...


def _checked_loss_and_grad(model: DifferentiableModel, theta: Tensor,
                           examples: ExampleSet) -> Tuple[float, Tensor]:
    loss, grad = model.loss_and_grad(theta, examples)
    if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
        raise NumericError("non-finite loss or gradient during adaptation")
    return loss, grad


def adaptation_trajectory(model: DifferentiableModel, theta: Tensor, support: ExampleSet,
                          alpha: float, steps: int) -> List[Tensor]:
    """[theta_0, theta_1, ..., theta_steps] of plain gradient descent on the support loss."""
    if len(support) == 0:
        raise ValueError("support set is empty")
    thetas = [np.array(theta, dtype=np.float64)]
    for _ in range(steps):
        _, grad = _checked_loss_and_grad(model, thetas[-1], support)
        thetas.append(thetas[-1] - alpha * grad)
    return thetas


def inner_adapt(model: DifferentiableModel, theta: Tensor, support: ExampleSet,
                alpha: float, steps: int) -> Tensor:
    """
    Task-specific parameters after `steps` gradient steps on the support loss.

    Returns a new array; theta is left untouched.

    Raises:
        NumericError: If a support loss or gradient is non-finite
    """
    return adaptation_trajectory(model, theta, support, alpha, steps)[-1]


def query_loss(model: DifferentiableModel, theta_adapted: Tensor, query: ExampleSet) -> float:
    """Mean per-example loss of the adapted model on the query set."""
    if len(query) == 0:
        raise ValueError("query set is empty")
    return model.loss(theta_adapted, query)


def hessian_vector_product(model: DifferentiableModel, theta: Tensor, examples: ExampleSet,
                           vector: Tensor, hvp_eps: float) -> Tensor:
    """
    H(theta) @ vector by central differences of the gradient.

    The step along the vector has length hvp_eps * (1 + max|theta|).
    """
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        return np.zeros_like(vector)
    r = hvp_eps * (1.0 + float(np.max(np.abs(theta)))) / norm
    _, g_plus = model.loss_and_grad(theta + r * vector, examples)
    _, g_minus = model.loss_and_grad(theta - r * vector, examples)
    return (g_plus - g_minus) / (2.0 * r)


def task_contribution(model: DifferentiableModel, task: TaskInstance,
                      cfg: MetaConfig, theta: Optional[Tensor] = None) -> TaskContribution:
    """
    One task's share of the outer update.

    maml: d Q / d theta through every inner step (finite-difference HVPs);
    fomaml: grad of Q at theta'; reptile: theta' - theta (Q still reported);
    mtl: gradient of the combined support+query training loss at theta.
    """
    theta = model.theta if theta is None else theta
    if cfg.variant == 'mtl':
        train = ExampleSet.concat(task.support, task.query)
        loss, grad = _checked_loss_and_grad(model, theta, train)
        return TaskContribution(task.domain_id, loss, grad)

    thetas = adaptation_trajectory(model, theta, task.support, cfg.alpha, cfg.inner_steps)
    adapted = thetas[-1]
    if cfg.variant == 'reptile':
        loss = query_loss(model, adapted, task.query)
        if not np.isfinite(loss):
            raise NumericError(f"non-finite query loss for domain {task.domain_id}")
        return TaskContribution(task.domain_id, loss, adapted - theta)

    loss, grad = _checked_loss_and_grad(model, adapted, task.query)
    if cfg.variant == 'maml':
        for step_theta in reversed(thetas[:-1]):
            grad = grad - cfg.alpha * hessian_vector_product(
                model, step_theta, task.support, grad, cfg.hvp_eps)
    return TaskContribution(task.domain_id, loss, grad)


def reduce_contributions(contributions: Sequence[TaskContribution]) -> Tensor:
    """Sum directions in ascending domain-id order."""
    ordered = sorted(contributions, key=lambda c: c.domain_id)
    total = np.zeros_like(ordered[0].direction)
    for c in ordered:
        total = total + c.direction
    return total


def meta_step(model: DifferentiableModel, tasks: Sequence[TaskInstance], cfg: MetaConfig,
              optimizer: Optional[Optimizer] = None,
              executor: Optional[Executor] = None) -> MetaBatchResult:
    """
    One outer update of model.theta from M tasks.

    Args:
        model: Task model whose theta is updated in place
        tasks: Exactly cfg.M tasks
        cfg: Meta configuration
        optimizer: Outer optimizer for maml/fomaml/mtl (plain SGD if None)
        executor: Optional pool for evaluating tasks concurrently

    Returns:
        MetaBatchResult with per-task losses in task order

    Raises:
        ConfigError: If len(tasks) != cfg.M
        NumericError: On non-finite losses or gradients
    """
    if len(tasks) != cfg.M:
        raise ConfigError(f"expected {cfg.M} tasks, got {len(tasks)}", key='meta.M')
    theta = model.theta.copy()
    if executor is not None:
        contributions = list(executor.map(
            lambda t: task_contribution(model, t, cfg, theta), tasks))
    else:
        contributions = [task_contribution(model, t, cfg, theta) for t in tasks]

    total = reduce_contributions(contributions)
    if not np.all(np.isfinite(total)):
        raise NumericError("non-finite outer direction")

    if cfg.variant == 'reptile':
        step = total / len(contributions)
        model.theta += cfg.beta * step
        grad_norm = float(np.linalg.norm(step))
    else:
        grad_norm = float(np.linalg.norm(total))
        params = model.parameters()
        for p in params:
            p.zero_grad()
        model.assign_grad(total)
        (optimizer or Optimizer('sgd')).step(params, cfg.beta)

    logger.debug("meta_step %s domains=%s grad_norm=%.6g", cfg.variant,
                 [c.domain_id for c in contributions], grad_norm)
    return MetaBatchResult(query_losses=[c.loss for c in contributions],
                           domain_ids=[c.domain_id for c in contributions],
                           grad_norm=grad_norm)


def evaluate_on_tasks(model: DifferentiableModel, theta: Tensor, tasks: Sequence[TaskInstance],
                      shots: int, steps: int, alpha: float) -> AdaptationResult:
    """Adapt on the first `shots` support examples of each task and score its query set."""
    losses = []
    for task in tasks:
        support = task.support.head(shots) if shots else task.support
        adapted = inner_adapt(model, theta, support, alpha, steps)
        losses.append(query_loss(model, adapted, task.query))
    arr = np.array(losses)
    return AdaptationResult(mean=float(np.mean(arr)), std=float(np.std(arr)), losses=losses)


def evaluate_adaptation(model: DifferentiableModel, theta: Tensor, suite: DomainSuite,
                        target_domain: int, shots: int, steps: int, n_tasks: int,
                        rng: np.random.Generator, alpha: float = 0.01) -> AdaptationResult:
    """
    Mean and (population) std of post-adaptation query loss over n_tasks
    freshly drawn target tasks.
    """
    if n_tasks < 1:
        raise ValueError("n_tasks must be >= 1")
    tasks = [sample_task(suite, target_domain, rng) for _ in range(n_tasks)]
    return evaluate_on_tasks(model, theta, tasks, shots, steps, alpha)
