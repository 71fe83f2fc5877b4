"""
Data models for synthetic task domains, suites and sampled tasks.
"""

from dataclasses import dataclass, field, asdict
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from ams.models.tensor import Tensor

FAMILIES = ('sinusoid', 'clusters')


@dataclass
class DomainSpec:
    """
    One source or target domain.

    Attributes:
        domain_id: Index of the domain (sources 0..K-1, targets after them)
        family: 'sinusoid' (regression) or 'clusters' (classification)
        pool_size: Number of examples V_k in the domain's fixed pool
        rng_stream: Per-domain seed offset mixed with the master seed
        amplitude: Sinusoid amplitude A_k
        omega: Sinusoid angular frequency (> 0)
        phase: Sinusoid phase, or cluster rotation angle
        noise_std: Label noise sigma_k (>= 0)
        n_classes: Cluster count (clusters family)
        overlap: Cluster spread relative to the centre radius (clusters family)
        x_low: Lower end of the input range
        x_high: Upper end of the input range
    """
    domain_id: int
    family: str
    pool_size: int
    rng_stream: int
    amplitude: float = 1.0
    omega: float = 1.0
    phase: float = 0.0
    noise_std: float = 0.0
    n_classes: int = 3
    overlap: float = 0.5
    x_low: float = -5.0
    x_high: float = 5.0

    @property
    def difficulty(self) -> float:
        """Scalar used to rank domains by hardness."""
        if self.family == 'clusters':
            return self.overlap
        return self.omega + self.noise_std

    @property
    def input_dim(self) -> int:
        return 2 if self.family == 'clusters' else 1

    @property
    def output_dim(self) -> int:
        return self.n_classes if self.family == 'clusters' else 1

    def difficulty_key(self) -> Tuple[float, ...]:
        return (self.amplitude, self.omega, self.phase, self.noise_std,
                float(self.n_classes), self.overlap)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DomainSpec':
        return cls(
            domain_id=int(data['domain_id']),
            family=data.get('family', 'sinusoid'),
            pool_size=int(data['pool_size']),
            rng_stream=int(data.get('rng_stream', data['domain_id'])),
            amplitude=float(data.get('amplitude', 1.0)),
            omega=float(data.get('omega', 1.0)),
            phase=float(data.get('phase', 0.0)),
            noise_std=float(data.get('noise_std', 0.0)),
            n_classes=int(data.get('n_classes', 3)),
            overlap=float(data.get('overlap', 0.5)),
            x_low=float(data.get('x_low', -5.0)),
            x_high=float(data.get('x_high', 5.0)),
        )


@dataclass
class DomainPool:
    """Fixed example pool of a domain: inputs [V, d] and labels."""
    x: Tensor
    y: np.ndarray

    def __len__(self) -> int:
        return self.x.shape[0]


@dataclass
class Example:
    """Single labelled example; y is a real vector or a class index."""
    x: Tensor
    y: Union[Tensor, int]


@dataclass
class ExampleSet:
    """
    Batch of examples.

    Attributes:
        x: Inputs [n, d]
        y: Regression targets [n, out] (float) or class indices [n] (int)
    """
    x: Tensor
    y: np.ndarray

    def __len__(self) -> int:
        return self.x.shape[0]

    def __iter__(self) -> Iterator[Example]:
        for i in range(len(self)):
            label = int(self.y[i]) if self.y.ndim == 1 else self.y[i]
            yield Example(x=self.x[i], y=label)

    def head(self, n: int) -> 'ExampleSet':
        return ExampleSet(x=self.x[:n], y=self.y[:n])

    @classmethod
    def concat(cls, first: 'ExampleSet', second: 'ExampleSet') -> 'ExampleSet':
        return cls(x=np.concatenate([first.x, second.x]),
                   y=np.concatenate([first.y, second.y]))


@dataclass
class TaskInstance:
    """
    One sampled task: w pool indices split into support and query halves.
    """
    domain_id: int
    support: ExampleSet
    query: ExampleSet
    indices: Tuple[int, ...] = ()


@dataclass
class DomainSuite:
    """
    K source domains plus held-out target domains.

    Pools are regenerated from the seeds and are never serialized.
    """
    preset: str
    family: str
    w: int
    master_seed: int
    sources: List[DomainSpec] = field(default_factory=list)
    targets: List[DomainSpec] = field(default_factory=list)
    pools: Dict[int, DomainPool] = field(default_factory=dict, repr=False, compare=False)

    @property
    def K(self) -> int:
        return len(self.sources)

    @property
    def pool_sizes(self) -> List[int]:
        return [d.pool_size for d in self.sources]

    def domain(self, domain_id: int) -> DomainSpec:
        for spec in self.sources + self.targets:
            if spec.domain_id == domain_id:
                return spec
        raise KeyError(f"unknown domain {domain_id}")

    def get_target(self, domain_id: int) -> Optional[DomainSpec]:
        for spec in self.targets:
            if spec.domain_id == domain_id:
                return spec
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'format_version': 1,
            'preset': self.preset,
            'family': self.family,
            'K': self.K,
            'w': self.w,
            'master_seed': self.master_seed,
            'sources': [d.to_dict() for d in self.sources],
            'targets': [d.to_dict() for d in self.targets],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DomainSuite':
        """Rebuild the suite description; call task_generator.attach_pools to regenerate data."""
        return cls(
            preset=data.get('preset', ''),
            family=data.get('family', 'sinusoid'),
            w=int(data['w']),
            master_seed=int(data.get('master_seed', 0)),
            sources=[DomainSpec.from_dict(d) for d in data.get('sources', [])],
            targets=[DomainSpec.from_dict(d) for d in data.get('targets', [])],
        )
