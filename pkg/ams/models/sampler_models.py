"""
Data models for the sampler layer: query-loss buffer, sampling
distribution, policy configuration/state and the sampler choice.
"""

from dataclasses import dataclass, field, asdict
from typing import Any, Dict, Iterable, List, Sequence
import math

import numpy as np

from ams.exceptions import ConfigError
from ams.models.tensor import Tensor
from ams.utils.validation import (
    validate_choice, validate_open_unit_interval, validate_positive_number,
    validate_probability_vector, validate_strictly_positive,
)

SAMPLER_KINDS = ('uniform', 'ppq', 'ppql', 'ppaql', 'ppeaql', 'ams', 'ams-noatt')
POLICY_KINDS = ('ams', 'ams-noatt')
SELECTION_MODES = ('top-m', 'stochastic')
NORMALIZATIONS = ('zscore', 'raw')
SURROGATES = ('prob-weighted', 'logprob-weighted')
REWARD_BASELINES = ('none', 'mean')
PPQ_MODES = ('pool', 'log-combination')


class QueryLossBuffer:
    """
    Last-known query loss per domain, initialised to zeros.

    Entry k changes only when domain k is among the ids passed to update().
    """

    def __init__(self, K: int):
        self.values = np.zeros(K)

    @property
    def K(self) -> int:
        return self.values.size

    def update(self, ids: Sequence[int], losses: Sequence[float]) -> None:
        """
        Overwrite the sampled entries; all others stay bit-identical.

        Raises:
            ValueError: If ids and losses differ in length
            IndexError: If an id is outside 0..K-1
        """
        if len(ids) != len(losses):
            raise ValueError(f"{len(ids)} ids but {len(losses)} losses")
        for k in ids:
            if not 0 <= int(k) < self.K:
                raise IndexError(f"domain id {k} out of range 0..{self.K - 1}")
        for k, loss in zip(ids, losses):
            self.values[int(k)] = float(loss)

    def snapshot(self) -> Tensor:
        return self.values.copy()


@dataclass
class SamplingDistribution:
    """K-dim probability vector P_T (nonnegative, sums to 1 within 1e-12)."""
    probs: Tensor

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        is_valid, msg = validate_probability_vector(self.probs)
        if not is_valid:
            raise ValueError(msg)

    @property
    def K(self) -> int:
        return self.probs.size

    @classmethod
    def normalized(cls, weights: Iterable[float]) -> 'SamplingDistribution':
        """Normalize nonnegative weights with compensated summation."""
        arr = np.asarray(list(weights), dtype=np.float64)
        return cls(arr / math.fsum(arr.tolist()))

    def tolist(self) -> List[float]:
        return self.probs.tolist()


@dataclass
class PolicyConfig:
    """
    AMS policy hyperparameters.

    Attributes:
        gamma: Policy learning rate
        entropy_weight: Weight of the entropy term (>= 0)
        entropy_sign: +1 adds entropy to the ascended surrogate (bonus), -1 subtracts it
        selection: 'top-m' (deterministic) or 'stochastic'
        normalization: 'zscore' or 'raw' policy input
        surrogate: 'prob-weighted' (sum P*L) or 'logprob-weighted' (sum log P * L)
        reward_baseline: 'none' or 'mean' (subtract the buffer mean from each reward)
        attention: Use the attention unit; False feeds [Q_k, P_k] straight to the projection
        attention_size: Width of the attention scoring layer
        input_size: LSTM input width
        hidden_size: LSTM hidden width
        init_scale: Weight initialisation scale (0 gives an all-zero network)
    """
    gamma: float = 0.035
    entropy_weight: float = 1e-5
    entropy_sign: float = 1.0
    selection: str = "top-m"
    normalization: str = "zscore"
    surrogate: str = "prob-weighted"
    reward_baseline: str = "mean"
    attention: bool = True
    attention_size: int = 16
    input_size: int = 32
    hidden_size: int = 100
    init_scale: float = 1.0

    def validate(self) -> None:
        checks = [
            ('policy.gamma', validate_positive_number(self.gamma, 'gamma')),
            ('policy.entropy_weight', validate_positive_number(self.entropy_weight, 'entropy_weight')),
            ('policy.selection', validate_choice(self.selection, SELECTION_MODES, 'selection')),
            ('policy.normalization', validate_choice(self.normalization, NORMALIZATIONS, 'normalization')),
            ('policy.surrogate', validate_choice(self.surrogate, SURROGATES, 'surrogate')),
            ('policy.reward_baseline', validate_choice(self.reward_baseline, REWARD_BASELINES, 'reward_baseline')),
            ('policy.attention_size', validate_strictly_positive(self.attention_size, 'attention_size')),
            ('policy.input_size', validate_strictly_positive(self.input_size, 'input_size')),
            ('policy.hidden_size', validate_strictly_positive(self.hidden_size, 'hidden_size')),
            ('policy.init_scale', validate_positive_number(self.init_scale, 'init_scale')),
        ]
        for key, (is_valid, msg) in checks:
            if not is_valid:
                raise ConfigError(msg, key=key)
        if self.entropy_sign not in (1.0, -1.0):
            raise ConfigError("entropy_sign must be 1 or -1", key='policy.entropy_sign')

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PolicyConfig':
        defaults = cls()
        return cls(**{k: type(getattr(defaults, k))(v) for k, v in data.items()
                      if hasattr(defaults, k)})


@dataclass
class PolicyState:
    """
    Recurrent state of the AMS policy.

    Attributes:
        h: LSTM hidden state
        c: LSTM cell state
        p_prev: Previous sampling distribution
        step: Number of forward steps taken
    """
    h: Tensor
    c: Tensor
    p_prev: Tensor
    step: int = 0

    @classmethod
    def initial(cls, K: int, hidden_size: int) -> 'PolicyState':
        return cls(h=np.zeros(hidden_size), c=np.zeros(hidden_size),
                   p_prev=np.full(K, 1.0 / K), step=0)

    def to_dict(self) -> Dict[str, Any]:
        return {'h': self.h.tolist(), 'c': self.c.tolist(),
                'p_prev': self.p_prev.tolist(), 'step': self.step}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PolicyState':
        return cls(h=np.array(data['h'], dtype=np.float64),
                   c=np.array(data['c'], dtype=np.float64),
                   p_prev=np.array(data['p_prev'], dtype=np.float64),
                   step=int(data.get('step', 0)))


@dataclass
class SamplerChoice:
    """
    Which sampler to run, with the baseline-specific knobs.

    Attributes:
        kind: One of SAMPLER_KINDS; 'ams-noatt' is the AMS policy without attention
        window: PPAQL window W (>= 1)
        decay: PPEAQL decay d in (0, 1)
        ppq_mode: 'pool' (P_k proportional to V_k) or 'log-combination'
        selection: Selection mode for the baselines
    """
    kind: str = "ams"
    window: int = 10
    decay: float = 0.9
    ppq_mode: str = "pool"
    selection: str = "stochastic"

    def validate(self) -> None:
        checks = [
            ('sampler.kind', validate_choice(self.kind, SAMPLER_KINDS, 'kind')),
            ('sampler.decay', validate_open_unit_interval(self.decay, 'decay')),
            ('sampler.ppq_mode', validate_choice(self.ppq_mode, PPQ_MODES, 'ppq_mode')),
            ('sampler.selection', validate_choice(self.selection, SELECTION_MODES, 'selection')),
        ]
        for key, (is_valid, msg) in checks:
            if not is_valid:
                raise ConfigError(msg, key=key)
        if self.window < 1:
            raise ConfigError("window must be >= 1", key='sampler.window')

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SamplerChoice':
        return cls(kind=data.get('kind', 'ams'),
                   window=int(data.get('window', 10)),
                   decay=float(data.get('decay', 0.9)),
                   ppq_mode=data.get('ppq_mode', 'pool'),
                   selection=data.get('selection', 'stochastic'))
