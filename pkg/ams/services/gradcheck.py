"""
Central finite-difference gradient oracle.
"""

from typing import Callable, Iterable, List, Sequence

import numpy as np

from ams.models.tensor import Parameter, Tensor

DEFAULT_EPS = 1e-5


def finite_difference_grad(f: Callable[[], float], params: Iterable[Parameter],
                           eps: float = DEFAULT_EPS) -> List[Tensor]:
    """
    Estimate df/dp for every coordinate of every parameter.

    f is evaluated with each coordinate perturbed in place by +/- eps and
    restored afterwards, so the parameters end bit-identical to how they
    started.

    Args:
        f: Zero-argument scalar function reading the parameters
        params: Parameters to differentiate with respect to
        eps: Perturbation size (> 0)

    Returns:
        One gradient estimate per parameter, shaped like its value
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    estimates = []
    for p in params:
        flat = p.value.reshape(-1)
        est = np.zeros(flat.size)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            f_plus = f()
            flat[idx] = orig - eps
            f_minus = f()
            flat[idx] = orig
            est[idx] = (f_plus - f_minus) / (2.0 * eps)
        estimates.append(est.reshape(p.value.shape))
    return estimates


def finite_difference_vector(f: Callable[[Tensor], float], x: Tensor,
                             eps: float = DEFAULT_EPS) -> Tensor:
    """Central differences of f at a flat vector x (x is not modified)."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in range(x.size):
        orig = x[idx]
        x[idx] = orig + eps
        f_plus = f(x)
        x[idx] = orig - eps
        f_minus = f(x)
        x[idx] = orig
        grad[idx] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def relative_error(analytic: Tensor, numeric: Tensor, floor: float = 1e-6) -> Tensor:
    """Elementwise |a - n| / max(|a|, |n|, floor)."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def max_relative_error(analytic: Sequence[Tensor], numeric: Sequence[Tensor],
                       floor: float = 1e-6) -> float:
    """Largest relative error over a list of gradient tensors."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        if np.size(a):
            worst = max(worst, float(np.max(relative_error(a, n, floor))))
    return worst
