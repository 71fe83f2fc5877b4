"""
Data models for the meta-learning loops.
"""

from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional

import numpy as np

from ams.exceptions import ConfigError
from ams.utils.validation import (
    validate_choice, validate_positive_number, validate_strictly_positive,
)

VARIANTS = ('maml', 'fomaml', 'reptile', 'mtl')
OUTER_OPTIMIZERS = ('sgd', 'adam')


@dataclass
class MetaConfig:
    """
    Meta-learning hyperparameters.

    Attributes:
        variant: 'maml', 'fomaml', 'reptile' or 'mtl'
        alpha: Inner step size
        inner_steps: Inner gradient steps per task
        beta: Outer step size
        M: Domains per meta-batch
        optimizer: Outer optimizer, 'sgd' or 'adam'
        hvp_eps: Relative perturbation of the finite-difference
            Hessian-vector product used by 'maml'
    """
    variant: str = "fomaml"
    alpha: float = 0.01
    inner_steps: int = 1
    beta: float = 0.001
    M: int = 3
    optimizer: str = "adam"
    hvp_eps: float = 1e-4

    def validate(self, K: Optional[int] = None) -> None:
        """
        Raises:
            ConfigError: Naming the first offending key
        """
        checks = [
            ('meta.variant', validate_choice(self.variant, VARIANTS, 'variant')),
            ('meta.optimizer', validate_choice(self.optimizer, OUTER_OPTIMIZERS, 'optimizer')),
            ('meta.alpha', validate_positive_number(self.alpha, 'alpha')),
            ('meta.beta', validate_strictly_positive(self.beta, 'beta')),
            ('meta.hvp_eps', validate_strictly_positive(self.hvp_eps, 'hvp_eps')),
            ('meta.inner_steps', validate_positive_number(self.inner_steps, 'inner_steps')),
        ]
        for key, (is_valid, msg) in checks:
            if not is_valid:
                raise ConfigError(msg, key=key)
        if self.M < 1 or (K is not None and self.M > K):
            raise ConfigError(f"M={self.M} must satisfy 1 <= M <= K={K}", key='meta.M')

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MetaConfig':
        return cls(
            variant=data.get('variant', 'fomaml'),
            alpha=float(data.get('alpha', 0.01)),
            inner_steps=int(data.get('inner_steps', 1)),
            beta=float(data.get('beta', 0.001)),
            M=int(data.get('M', 3)),
            optimizer=data.get('optimizer', 'adam'),
            hvp_eps=float(data.get('hvp_eps', 1e-4)),
        )


@dataclass
class TaskContribution:
    """
    Per-task share of one meta-step.

    Attributes:
        domain_id: Domain the task came from
        loss: Query loss (training loss in 'mtl' mode)
        direction: Outer gradient contribution, or theta' - theta for 'reptile'
    """
    domain_id: int
    loss: float
    direction: np.ndarray


@dataclass
class MetaBatchResult:
    """Outcome of one meta-step, in the order the tasks were given."""
    query_losses: List[float] = field(default_factory=list)
    domain_ids: List[int] = field(default_factory=list)
    grad_norm: float = 0.0


@dataclass
class AdaptationResult:
    """Post-adaptation query losses on target tasks."""
    mean: float
    std: float
    losses: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {'mean': self.mean, 'std': self.std, 'losses': list(self.losses)}
