"""
AMS policy network: attention over per-domain [Q_k, P_k] features, a
projection to the LSTM input width, one LSTM step and a softmax head.

policy_forward is a pure function of (network, state, input); the trace it
returns carries the caches that policy_update back-propagates through.
Gradients flow through the current step only; the incoming recurrent state
is treated as a constant.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ams.exceptions import ConfigError, DimensionError, NumericError
from ams.models.sampler_models import PolicyConfig, PolicyState, SamplingDistribution
from ams.models.tensor import Parameter, Tensor, check_finite
from ams.services.attention import (
    AttentionCache, AttentionUnit, attention_backward, attention_forward,
)
from ams.services.layers import LinearLayer, linear_backward, linear_forward, softmax, softmax_backward
from ams.services.lstm import LstmCache, LstmCell, lstm_backward, lstm_forward
from ams.services.optimizers import Optimizer

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-300


class PolicyNetwork:
    """
    f_phi mapping (Q_T, P_T) to the next sampling distribution.

    Attributes:
        K: Number of source domains
        attention: AttentionUnit, or None for the no-attention ablation
        projection: LinearLayer 2K -> input_size (tanh applied after it)
        lstm: LstmCell input_size -> hidden_size
        head: LinearLayer hidden_size -> K
    """

    def __init__(self, K: int, cfg: Optional[PolicyConfig] = None,
                 rng: Optional[np.random.Generator] = None):
        cfg = cfg or PolicyConfig()
        if K < 1:
            raise DimensionError("policy network needs K >= 1")
        self.K = K
        self.cfg = cfg
        scale = cfg.init_scale
        self.attention = (AttentionUnit(2, cfg.attention_size, rng, scale)
                          if cfg.attention else None)
        self.projection = LinearLayer(2 * K, cfg.input_size, rng, scale, name="projection")
        self.lstm = LstmCell(cfg.input_size, cfg.hidden_size, rng, scale)
        self.head = LinearLayer(cfg.hidden_size, K, rng, scale, name="head")

    def parameters(self) -> List[Parameter]:
        params = self.attention.parameters() if self.attention else []
        return params + self.projection.parameters() + self.lstm.parameters() + self.head.parameters()

    def initial_state(self) -> PolicyState:
        return PolicyState.initial(self.K, self.cfg.hidden_size)

    def to_dict(self) -> Dict[str, Any]:
        return {p.name: p.value.ravel().tolist() for p in self.parameters()}

    def load_dict(self, data: Dict[str, Any]) -> None:
        for p in self.parameters():
            if p.name not in data:
                raise ConfigError(f"checkpoint lacks parameter {p.name}")
            values = np.array(data[p.name], dtype=np.float64)
            if values.size != p.value.size:
                raise DimensionError(f"checkpoint parameter {p.name} has the wrong size")
            p.value[...] = values.reshape(p.value.shape)


@dataclass
class PolicyTrace:
    """Caches of one forward step."""
    features: Tensor
    attention: Optional[AttentionCache]
    projection_in: Tensor
    projection_out: Tensor
    lstm: LstmCache
    head_in: Tensor
    probs: Tensor


class PolicyOutput(NamedTuple):
    distribution: SamplingDistribution
    state: PolicyState
    trace: PolicyTrace


def normalize_losses(q: Tensor, mode: str = 'zscore') -> Tensor:
    """z-score across the K entries (zero vector when they are all equal), or raw."""
    q = np.asarray(q, dtype=np.float64)
    if mode == 'raw':
        return q.copy()
    mean = float(np.mean(q))
    std = float(np.std(q))
    # round-off in the mean leaves a tiny nonzero std on constant vectors
    if np.ptp(q) == 0 or std <= 1e-12 * max(1.0, abs(mean)):
        return np.zeros_like(q)
    return (q - mean) / std


def policy_forward(net: PolicyNetwork, state: PolicyState, q_input: Tensor) -> PolicyOutput:
    """
    Next sampling distribution from the (normalized) loss vector and the state.

    Raises:
        NumericError: If the input or the output is non-finite
        DimensionError: If q_input does not have K entries
    """
    q_input = np.asarray(q_input, dtype=np.float64)
    if q_input.shape != (net.K,):
        raise DimensionError(f"policy input shape {q_input.shape} != ({net.K},)")
    check_finite(q_input, "policy input")

    features = np.stack([q_input, state.p_prev], axis=1)
    if net.attention is not None:
        context, _, att_cache = attention_forward(net.attention, features)
    else:
        context, att_cache = features.ravel(), None
    pre, proj_in = linear_forward(net.projection, context)
    lstm_in = np.tanh(pre)
    y, h, c, lstm_cache = lstm_forward(net.lstm, lstm_in, state.h, state.c)
    logits, head_in = linear_forward(net.head, y)
    probs = softmax(logits)
    check_finite(probs, "policy output")

    trace = PolicyTrace(features=features, attention=att_cache, projection_in=proj_in,
                        projection_out=lstm_in, lstm=lstm_cache, head_in=head_in, probs=probs)
    new_state = PolicyState(h=h, c=c, p_prev=probs.copy(), step=state.step + 1)
    return PolicyOutput(SamplingDistribution(probs), new_state, trace)


def policy_backward(net: PolicyNetwork, trace: PolicyTrace, dprobs: Tensor) -> None:
    """Accumulate d(objective)/d(phi) given d(objective)/d(P)."""
    dlogits = softmax_backward(dprobs, trace.probs)
    dy = linear_backward(net.head, dlogits, trace.head_in)
    dx, _, _ = lstm_backward(net.lstm, dy, None, trace.lstm)
    dpre = dx * (1.0 - trace.projection_out ** 2)
    dcontext = linear_backward(net.projection, dpre, trace.projection_in)
    if net.attention is not None:
        attention_backward(net.attention, dcontext, trace.attention)


def surrogate(probs: Tensor, selected: Sequence[int], rewards: Sequence[float],
              cfg: PolicyConfig) -> Tuple[float, Tensor]:
    """
    Policy objective and its gradient with respect to P.

    prob-weighted: sum_j P[t_j] * r_j; logprob-weighted: sum_j log P[t_j] * r_j;
    plus entropy_sign * entropy_weight * H(P).
    """
    dprobs = np.zeros_like(probs)
    value = 0.0
    for k, r in zip(selected, rewards):
        k = int(k)
        if cfg.surrogate == 'logprob-weighted':
            p = max(probs[k], PROB_FLOOR)
            value += np.log(p) * r
            dprobs[k] += r / p
        else:
            value += probs[k] * r
            dprobs[k] += r
    if cfg.entropy_weight > 0:
        safe = np.maximum(probs, PROB_FLOOR)
        entropy = -float(np.sum(probs * np.log(safe)))
        coeff = cfg.entropy_sign * cfg.entropy_weight
        value += coeff * entropy
        dprobs += coeff * -(np.log(safe) + 1.0)
    return float(value), dprobs


def surrogate_value(net: PolicyNetwork, state: PolicyState, q_input: Tensor,
                    selected: Sequence[int], rewards: Sequence[float],
                    cfg: Optional[PolicyConfig] = None) -> float:
    """Surrogate of a fresh forward pass (used by finite-difference checks)."""
    out = policy_forward(net, state, q_input)
    return surrogate(out.trace.probs, selected, rewards, cfg or net.cfg)[0]


def policy_update(net: PolicyNetwork, optimizer: Optimizer, cfg: PolicyConfig,
                  trace: PolicyTrace, selected: Sequence[int], losses: Sequence[float],
                  baseline: float = 0.0) -> float:
    """
    One ascent step on the surrogate with rate cfg.gamma.

    Losses are detached rewards: plain floats with no gradient path into phi.

    Args:
        net: Policy network to update in place
        optimizer: Ascending optimizer (maximize=True)
        cfg: Policy configuration
        trace: Trace of the forward pass that produced the selection
        selected: Selected domain ids t_j
        losses: Detached query (or training) losses of the selected tasks
        baseline: Value subtracted from every loss before weighting

    Returns:
        Surrogate value before the step

    Raises:
        NumericError: If the surrogate or its gradient is non-finite
    """
    if len(selected) != len(losses):
        raise ValueError(f"{len(selected)} ids but {len(losses)} losses")
    rewards = [float(loss) - baseline for loss in losses]
    value, dprobs = surrogate(trace.probs, selected, rewards, cfg)
    if not np.isfinite(value) or not np.all(np.isfinite(dprobs)):
        raise NumericError("non-finite policy surrogate")
    params = net.parameters()
    for p in params:
        p.zero_grad()
    policy_backward(net, trace, dprobs)
    optimizer.step(params, cfg.gamma)
    return value
