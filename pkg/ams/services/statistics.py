"""
Summary statistics for runs and comparisons.
"""

import math
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """
    Spearman rank correlation with average ranks for ties.

    Returns 0.0 when either side is constant.

    Raises:
        ValueError: If the lengths differ or are below 2
    """
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise ValueError("spearman needs at least two pairs")
    rx = rankdata(np.asarray(xs, dtype=np.float64), method='average')
    ry = rankdata(np.asarray(ys, dtype=np.float64), method='average')
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = math.sqrt(float(np.sum(dx * dx)) * float(np.sum(dy * dy)))
    if denom == 0.0:
        return 0.0
    rho = float(np.sum(dx * dy)) / denom
    return max(-1.0, min(1.0, rho))


def mean_std(values: Sequence[float]) -> Tuple[float, float]:
    """Mean and population std; (nan, nan) for an empty sequence."""
    if len(values) == 0:
        return float('nan'), float('nan')
    arr = np.asarray(values, dtype=np.float64)
    return float(np.mean(arr)), float(np.std(arr))


def tail_mean(rows: Sequence[Sequence[float]], fraction: float = 0.2) -> List[float]:
    """Column means over the last `fraction` of the rows (at least one row)."""
    if not rows:
        return []
    n = max(1, int(math.ceil(len(rows) * fraction)))
    return np.mean(np.asarray(rows[-n:], dtype=np.float64), axis=0).tolist()


def deviation_from_uniform(probs: Sequence[float]) -> float:
    """Total variation distance between probs and the uniform distribution."""
    p = np.asarray(probs, dtype=np.float64)
    if p.size == 0:
        return 0.0
    return 0.5 * float(np.sum(np.abs(p - 1.0 / p.size)))


def win_counts(scores: Dict[str, Dict[int, float]]) -> Dict[str, Dict[str, int]]:
    """
    Pairwise wins: wins[a][b] is the number of seeds on which sampler a
    reached a strictly lower loss than sampler b. Only shared seeds count.
    """
    names = list(scores)
    wins: Dict[str, Dict[str, int]] = {a: {b: 0 for b in names} for a in names}
    for a in names:
        for b in names:
            if a == b:
                continue
            shared = set(scores[a]) & set(scores[b])
            wins[a][b] = sum(1 for s in shared if scores[a][s] < scores[b][s])
    return wins
