"""
Synthetic multi-domain task generator.

Builds domain suites with controllable task-quantity imbalance (pool sizes)
and task-difficulty imbalance (frequency/noise or cluster overlap), and
draws support/query tasks from the fixed per-domain pools.
"""

import logging
import math
from typing import List, Optional

import numpy as np
from scipy.special import gammaln

from ams.exceptions import ConfigError, InsufficientPoolError, TaskQuantityError
from ams.models.domain_models import (
    FAMILIES, DomainPool, DomainSpec, DomainSuite, ExampleSet, TaskInstance,
)
from ams.services.file_manager import FileManager
from ams.utils import seeding
from ams.utils.validation import validate_suite_parameters

logger = logging.getLogger(__name__)

PRESETS = ('balanced', 'quantity-imbalance', 'difficulty-imbalance', 'mixed')

OMEGA_RANGE = (0.5, 2.0)
NOISE_RANGE = (0.0, 0.3)
OVERLAP_RANGE = (0.3, 1.2)
OMEGA_BASE = 1.0
NOISE_BASE = 0.1
OVERLAP_BASE = 0.6
CLUSTER_RADIUS = 2.0
INT64_LIMIT = 2 ** 63


def _lerp(bounds, t: float) -> float:
    return bounds[0] + (bounds[1] - bounds[0]) * t


def geometric_pool_sizes(K: int, pool_min: int, ratio: float) -> List[int]:
    """Pool sizes from pool_min * ratio (domain 0) down to pool_min (domain K-1)."""
    return [int(round(pool_min * ratio ** ((K - 1 - k) / (K - 1)))) for k in range(K)]


def build_suite(preset: str, K: int = 8, w: int = 48, master_seed: int = 0,
                family: str = 'sinusoid', ratio: float = 8.0,
                n_targets: int = 2, pool_min: int = 0) -> DomainSuite:
    """
    Build a domain suite for one of the imbalance presets.

    balanced: equal pools and difficulty; quantity-imbalance: geometric pools
    (max:min = ratio), equal difficulty; difficulty-imbalance: equal pools,
    difficulty rising with k; mixed: both, with the hardest domain owning the
    smallest pool.

    Args:
        preset: One of PRESETS
        K: Number of source domains (>= 2)
        w: Examples per task (even, >= 4)
        master_seed: Seed for pools and per-domain streams
        family: 'sinusoid' or 'clusters'
        ratio: Largest-to-smallest pool ratio for quantity presets
        n_targets: Number of held-out target domains
        pool_min: Smallest pool size (0 selects 2*w)

    Returns:
        DomainSuite with pools attached

    Raises:
        ConfigError: On an unknown preset/family or invalid sizes
    """
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset '{preset}', expected one of {PRESETS}", key='suite.preset')
    if family not in FAMILIES:
        raise ConfigError(f"unknown family '{family}', expected one of {FAMILIES}", key='suite.family')
    pool_min = pool_min or 2 * w
    is_valid, msg = validate_suite_parameters(K, w, ratio, pool_min, n_targets)
    if not is_valid:
        raise ConfigError(msg)

    vary_quantity = preset in ('quantity-imbalance', 'mixed')
    vary_difficulty = preset in ('difficulty-imbalance', 'mixed')
    sizes = geometric_pool_sizes(K, pool_min, ratio) if vary_quantity else [pool_min] * K

    sources = []
    for k in range(K):
        t = k / (K - 1)
        spec = DomainSpec(domain_id=k, family=family, pool_size=sizes[k],
                          rng_stream=k + 1, phase=2.0 * math.pi * k / K)
        if family == 'sinusoid':
            spec.omega = _lerp(OMEGA_RANGE, t) if vary_difficulty else OMEGA_BASE
            spec.noise_std = _lerp(NOISE_RANGE, t) if vary_difficulty else NOISE_BASE
        else:
            spec.overlap = _lerp(OVERLAP_RANGE, t) if vary_difficulty else OVERLAP_BASE
        sources.append(spec)

    # targets sit strictly inside the source difficulty range, phases between source phases
    targets = []
    omegas = [s.omega for s in sources]
    noises = [s.noise_std for s in sources]
    overlaps = [s.overlap for s in sources]
    for j in range(n_targets):
        q = (j + 1) / (n_targets + 1)
        targets.append(DomainSpec(
            domain_id=K + j, family=family, pool_size=pool_min, rng_stream=K + j + 1,
            omega=_lerp((min(omegas), max(omegas)), q),
            noise_std=_lerp((min(noises), max(noises)), q),
            overlap=_lerp((min(overlaps), max(overlaps)), q),
            phase=2.0 * math.pi * ((j % K) + 0.5) / K,
        ))

    suite = DomainSuite(preset=preset, family=family, w=w, master_seed=master_seed,
                        sources=sources, targets=targets)
    attach_pools(suite)
    logger.debug("built suite %s K=%d w=%d pools=%s", preset, K, w, suite.pool_sizes)
    return suite


def generate_pool(spec: DomainSpec, master_seed: int) -> DomainPool:
    """Draw the fixed example pool of one domain from its own stream."""
    rng = seeding.make_rng(master_seed, seeding.POOL, spec.rng_stream)
    n = spec.pool_size
    if spec.family == 'clusters':
        labels = rng.integers(0, spec.n_classes, size=n)
        angles = spec.phase + 2.0 * math.pi * labels / spec.n_classes
        centres = CLUSTER_RADIUS * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        x = centres + spec.overlap * CLUSTER_RADIUS * rng.standard_normal((n, 2))
        return DomainPool(x=x, y=labels.astype(np.int64))
    x = rng.uniform(spec.x_low, spec.x_high, size=(n, 1))
    y = sinusoid_function(spec, x)
    if spec.noise_std > 0:
        y = y + spec.noise_std * rng.standard_normal((n, 1))
    return DomainPool(x=x, y=y)


def sinusoid_function(spec: DomainSpec, x: np.ndarray) -> np.ndarray:
    """Noiseless generative function A*sin(omega*x + phase)."""
    return spec.amplitude * np.sin(spec.omega * x + spec.phase)


def attach_pools(suite: DomainSuite) -> DomainSuite:
    """(Re)generate every domain pool from the suite seeds."""
    suite.pools = {spec.domain_id: generate_pool(spec, suite.master_seed)
                   for spec in suite.sources + suite.targets}
    return suite


def sample_task(suite: DomainSuite, domain_id: int, rng: np.random.Generator) -> TaskInstance:
    """
    Draw w distinct pool examples; the first w/2 form the support set.

    Raises:
        KeyError: If the domain does not exist
        InsufficientPoolError: If the pool holds fewer than w examples
    """
    spec = suite.domain(domain_id)
    w = suite.w
    if spec.pool_size < w:
        raise InsufficientPoolError(
            f"domain {domain_id} pool of {spec.pool_size} cannot supply {w} examples")
    pool = suite.pools.get(domain_id)
    if pool is None:
        pool = suite.pools[domain_id] = generate_pool(spec, suite.master_seed)
    idx = rng.choice(len(pool), size=w, replace=False)
    half = w // 2
    support = ExampleSet(x=pool.x[idx[:half]], y=pool.y[idx[:half]])
    query = ExampleSet(x=pool.x[idx[half:]], y=pool.y[idx[half:]])
    return TaskInstance(domain_id=domain_id, support=support, query=query,
                        indices=tuple(int(i) for i in idx))


def task_quantity(V: int, w: int) -> float:
    """
    ln C(V, w) via log-gamma.

    Raises:
        TaskQuantityError: If w > V or w < 0
    """
    if w < 0 or w > V:
        raise TaskQuantityError(f"cannot choose {w} of {V} examples")
    return float(gammaln(V + 1) - gammaln(w + 1) - gammaln(V - w + 1))


def exact_task_quantity(V: int, w: int) -> Optional[int]:
    """C(V, w) as an integer when it is below 2**63, else None."""
    if w < 0 or w > V:
        raise TaskQuantityError(f"cannot choose {w} of {V} examples")
    count = math.comb(V, w)
    return count if count < INT64_LIMIT else None


def save_suite(suite: DomainSuite, filepath: str) -> None:
    """Write the suite description (not the pools) to JSON."""
    FileManager.save_json(filepath, suite.to_dict())


def load_suite(filepath: str) -> DomainSuite:
    """Read a suite JSON file and regenerate its pools."""
    data = FileManager.load_json(filepath)
    try:
        return attach_pools(DomainSuite.from_dict(data))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid suite file {filepath}: {e}") from e
