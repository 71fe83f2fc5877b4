"""
Domain samplers: the five baselines and the AMS policy sampler.

Every sampler owns a QueryLossBuffer and follows the same two-call cycle
per iteration: probabilities() before selection, observe(ids, losses)
after the meta-step.
"""

import copy
import logging
import math
from collections import deque
from dataclasses import replace
from typing import Any, Deque, Dict, List, Optional, Sequence

import numpy as np

from ams.exceptions import ConfigError, NumericError
from ams.models.domain_models import DomainSuite
from ams.models.sampler_models import (
    POLICY_KINDS, PolicyConfig, PolicyState, QueryLossBuffer, SamplerChoice,
    SamplingDistribution,
)
from ams.models.tensor import Tensor
from ams.services.file_manager import FileManager
from ams.services.optimizers import AdamState, Optimizer
from ams.services.policy_network import (
    PolicyNetwork, PolicyTrace, normalize_losses, policy_forward, policy_update,
)
from ams.services.task_generator import task_quantity

logger = logging.getLogger(__name__)

LOSS_FLOOR = 1e-12


# Closed-form distributions

def uniform_probs(K: int) -> SamplingDistribution:
    if K < 1:
        raise ConfigError("K must be >= 1", key='suite.K')
    return SamplingDistribution(np.full(K, 1.0 / K))


def ppq_probs(pool_sizes: Sequence[int], w: Optional[int] = None,
              mode: str = 'pool') -> SamplingDistribution:
    """
    Task-quantity proportional distribution.

    'pool' gives P_k proportional to V_k; 'log-combination' gives a softmax
    over ln C(V_k, w).
    """
    if mode == 'log-combination':
        if w is None:
            raise ConfigError("log-combination mode needs the task size w", key='sampler.ppq_mode')
        logs = np.array([task_quantity(int(v), int(w)) for v in pool_sizes])
        shifted = np.exp(logs - logs.max())
        return SamplingDistribution.normalized(shifted)
    if mode != 'pool':
        raise ConfigError(f"unknown ppq mode '{mode}'", key='sampler.ppq_mode')
    return SamplingDistribution.normalized(float(v) for v in pool_sizes)


def ppql_probs(losses: Tensor, eps: float = LOSS_FLOOR) -> SamplingDistribution:
    """
    P_k = max(Q_k, eps) / sum_i max(Q_i, eps); an all-zero (or all non-positive)
    vector falls back to uniform.
    """
    q = np.asarray(losses, dtype=np.float64)
    if not np.any(q > 0):
        return uniform_probs(q.size)
    return SamplingDistribution.normalized(np.maximum(q, eps))


class WindowedLossAverage:
    """Per-domain mean over the last W recorded losses (0 for unseen domains)."""

    def __init__(self, K: int, window: int = 10):
        if window < 1:
            raise ConfigError("window must be >= 1", key='sampler.window')
        self.window = window
        self.history: List[Deque[float]] = [deque(maxlen=window) for _ in range(K)]

    def record(self, ids: Sequence[int], losses: Sequence[float]) -> None:
        for k, loss in zip(ids, losses):
            self.history[int(k)].append(float(loss))

    def means(self) -> Tensor:
        return np.array([math.fsum(h) / len(h) if h else 0.0 for h in self.history])


class ExponentialLossAverage:
    """a_k <- d * a_k + (1 - d) * Q_k, applied only to sampled domains."""

    def __init__(self, K: int, decay: float = 0.9):
        if not 0.0 < decay < 1.0:
            raise ConfigError("decay must lie in (0, 1)", key='sampler.decay')
        self.decay = decay
        self.values = np.zeros(K)

    def record(self, ids: Sequence[int], losses: Sequence[float]) -> None:
        for k, loss in zip(ids, losses):
            k = int(k)
            self.values[k] = self.decay * self.values[k] + (1.0 - self.decay) * float(loss)


def ppaql_probs(average: WindowedLossAverage) -> SamplingDistribution:
    return ppql_probs(average.means())


def ppeaql_probs(average: ExponentialLossAverage) -> SamplingDistribution:
    return ppql_probs(average.values)


def select_domains(P: SamplingDistribution, M: int, mode: str,
                   rng: Optional[np.random.Generator] = None) -> List[int]:
    """
    M distinct domain ids.

    top-m: the M largest probabilities, ties to the lowest index, in rank order.
    stochastic: sequential draws without replacement proportional to P.

    Raises:
        ConfigError: If M > K or M < 1
    """
    probs = P.probs
    K = probs.size
    if M < 1 or M > K:
        raise ConfigError(f"M={M} must satisfy 1 <= M <= K={K}", key='meta.M')
    if mode == 'top-m':
        return [int(k) for k in np.argsort(-probs, kind='stable')[:M]]
    if mode != 'stochastic':
        raise ConfigError(f"unknown selection mode '{mode}'", key='policy.selection')
    if rng is None:
        raise ValueError("stochastic selection needs an rng")

    remaining = list(range(K))
    chosen: List[int] = []
    for _ in range(M):
        weights = probs[remaining]
        total = math.fsum(weights.tolist())
        if total <= 0.0:
            # every remaining entry underflowed; take the lowest index
            pick = 0
        else:
            cumulative = np.cumsum(weights / total)
            pick = int(np.searchsorted(cumulative, rng.random(), side='right'))
            pick = min(pick, len(remaining) - 1)
        chosen.append(remaining.pop(pick))
    return chosen


# Stateful samplers

class Sampler:
    """
    Base sampler: uniform distribution over a QueryLossBuffer.

    Attributes:
        K: Number of source domains
        selection: 'top-m' or 'stochastic'
        buffer: Last-known query loss per domain
    """

    kind = 'uniform'

    def __init__(self, K: int, selection: str = 'stochastic'):
        self.K = K
        self.selection = selection
        self.buffer = QueryLossBuffer(K)

    def probabilities(self) -> SamplingDistribution:
        return uniform_probs(self.K)

    def select(self, P: SamplingDistribution, M: int,
               rng: Optional[np.random.Generator] = None) -> List[int]:
        return select_domains(P, M, self.selection, rng)

    def observe(self, ids: Sequence[int], losses: Sequence[float]) -> None:
        self.buffer.update(ids, losses)

    def snapshot(self) -> Dict[str, Any]:
        """Copy of the mutable sampler state, for restore() after a rejected step."""
        return {'buffer': self.buffer.snapshot()}

    def restore(self, saved: Dict[str, Any]) -> None:
        self.buffer.values[...] = saved['buffer']


class UniformSampler(Sampler):
    kind = 'uniform'


class PpqSampler(Sampler):
    kind = 'ppq'

    def __init__(self, pool_sizes: Sequence[int], w: int, mode: str = 'pool',
                 selection: str = 'stochastic'):
        super().__init__(len(pool_sizes), selection)
        self._probs = ppq_probs(pool_sizes, w, mode)

    def probabilities(self) -> SamplingDistribution:
        return self._probs


class PpqlSampler(Sampler):
    kind = 'ppql'

    def probabilities(self) -> SamplingDistribution:
        return ppql_probs(self.buffer.values)


class PpaqlSampler(Sampler):
    kind = 'ppaql'

    def __init__(self, K: int, window: int = 10, selection: str = 'stochastic'):
        super().__init__(K, selection)
        self.average = WindowedLossAverage(K, window)

    def probabilities(self) -> SamplingDistribution:
        return ppaql_probs(self.average)

    def observe(self, ids: Sequence[int], losses: Sequence[float]) -> None:
        super().observe(ids, losses)
        self.average.record(ids, losses)

    def snapshot(self) -> Dict[str, Any]:
        saved = super().snapshot()
        saved['history'] = [list(h) for h in self.average.history]
        return saved

    def restore(self, saved: Dict[str, Any]) -> None:
        super().restore(saved)
        self.average.history = [deque(h, maxlen=self.average.window) for h in saved['history']]


class PpeaqlSampler(Sampler):
    kind = 'ppeaql'

    def __init__(self, K: int, decay: float = 0.9, selection: str = 'stochastic'):
        super().__init__(K, selection)
        self.average = ExponentialLossAverage(K, decay)

    def probabilities(self) -> SamplingDistribution:
        return ppeaql_probs(self.average)

    def observe(self, ids: Sequence[int], losses: Sequence[float]) -> None:
        super().observe(ids, losses)
        self.average.record(ids, losses)

    def snapshot(self) -> Dict[str, Any]:
        saved = super().snapshot()
        saved['average'] = self.average.values.copy()
        return saved

    def restore(self, saved: Dict[str, Any]) -> None:
        super().restore(saved)
        self.average.values[...] = saved['average']


class AmsSampler(Sampler):
    """
    Adversarial sampler: the policy network proposes P_T from the buffer and
    is pushed towards domains whose query loss stays high.

    observe() must follow the probabilities() call whose distribution drove
    the selection; it updates the buffer, then takes one policy step.
    """

    kind = 'ams'

    def __init__(self, K: int, cfg: Optional[PolicyConfig] = None,
                 rng: Optional[np.random.Generator] = None, checked: bool = True):
        cfg = cfg or PolicyConfig()
        super().__init__(K, cfg.selection)
        self.cfg = cfg
        self.net = PolicyNetwork(K, cfg, rng)
        self.state = self.net.initial_state()
        self.optimizer = Optimizer('adam', maximize=True, checked=checked)
        self._pending: Optional[PolicyTrace] = None
        self._next_state: Optional[PolicyState] = None
        self.last_surrogate = 0.0

    def probabilities(self) -> SamplingDistribution:
        q_input = normalize_losses(self.buffer.values, self.cfg.normalization)
        out = policy_forward(self.net, self.state, q_input)
        self._pending = out.trace
        self._next_state = out.state
        return out.distribution

    def observe(self, ids: Sequence[int], losses: Sequence[float]) -> None:
        """
        Record the losses and take one policy step.

        Raises:
            RuntimeError: If no probabilities() call is pending
            NumericError: If the policy update is non-finite; the buffer,
                parameters and optimizer are left as they were
        """
        if self._pending is None:
            raise RuntimeError("observe() called before probabilities()")
        saved = self.snapshot()
        super().observe(ids, losses)
        baseline = (float(np.mean(self.buffer.values))
                    if self.cfg.reward_baseline == 'mean' else 0.0)
        try:
            self.last_surrogate = policy_update(self.net, self.optimizer, self.cfg,
                                                self._pending, ids, losses, baseline)
        except NumericError:
            self.restore(saved)
            raise
        self.state = self._next_state
        self._pending = None
        self._next_state = None

    def snapshot(self) -> Dict[str, Any]:
        saved = super().snapshot()
        saved['parameters'] = [p.value.copy() for p in self.net.parameters()]
        saved['adam'] = copy.deepcopy(self.optimizer.adam)
        saved['state'] = copy.deepcopy(self.state)
        saved['last_surrogate'] = self.last_surrogate
        return saved

    def restore(self, saved: Dict[str, Any]) -> None:
        super().restore(saved)
        for p, value in zip(self.net.parameters(), saved['parameters']):
            p.value[...] = value
        self.optimizer.adam = copy.deepcopy(saved['adam'])
        self.state = copy.deepcopy(saved['state'])
        self.last_surrogate = saved['last_surrogate']

    def to_dict(self) -> Dict[str, Any]:
        params = self.net.parameters()
        return {
            'format_version': 1,
            'kind': 'policy',
            'K': self.K,
            'config': self.cfg.to_dict(),
            'parameters': self.net.to_dict(),
            'state': self.state.to_dict(),
            'buffer': self.buffer.values.tolist(),
            'optimizer': self.optimizer.adam.to_dict(params),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AmsSampler':
        if data.get('kind') != 'policy':
            raise ConfigError("checkpoint is not a policy")
        sampler = cls(int(data['K']), PolicyConfig.from_dict(data.get('config', {})))
        sampler.net.load_dict(data['parameters'])
        sampler.state = PolicyState.from_dict(data['state'])
        if 'buffer' in data:
            sampler.buffer.values[...] = np.array(data['buffer'], dtype=np.float64)
        if 'optimizer' in data:
            adam = AdamState.from_dict(data['optimizer'], sampler.net.parameters())
            adam.maximize = True
            sampler.optimizer.adam = adam
        return sampler


def save_policy(sampler: AmsSampler, filepath: str) -> None:
    FileManager.save_json(filepath, sampler.to_dict())


def load_policy(filepath: str) -> AmsSampler:
    return AmsSampler.from_dict(FileManager.load_json(filepath))


def build_sampler(choice: SamplerChoice, policy_cfg: Optional[PolicyConfig],
                  suite: DomainSuite, rng: Optional[np.random.Generator] = None,
                  checked: bool = True) -> Sampler:
    """
    Instantiate the sampler named by choice.kind for the suite's source domains.

    Raises:
        ConfigError: On an invalid choice or policy configuration
    """
    choice.validate()
    K = suite.K
    if choice.kind in POLICY_KINDS:
        policy_cfg = policy_cfg or PolicyConfig()
        if choice.kind == 'ams-noatt':
            policy_cfg = replace(policy_cfg, attention=False)
        policy_cfg.validate()
        return AmsSampler(K, policy_cfg, rng, checked=checked)
    if choice.kind == 'ppq':
        return PpqSampler(suite.pool_sizes, suite.w, choice.ppq_mode, choice.selection)
    if choice.kind == 'ppql':
        return PpqlSampler(K, choice.selection)
    if choice.kind == 'ppaql':
        return PpaqlSampler(K, choice.window, choice.selection)
    if choice.kind == 'ppeaql':
        return PpeaqlSampler(K, choice.decay, choice.selection)
    return UniformSampler(K, choice.selection)
