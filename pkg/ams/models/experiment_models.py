"""
Data models for experiment orchestration: the sectioned configuration,
per-iteration metrics records and per-run summaries.
"""

from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional

from ams.exceptions import ConfigError
from ams.models.domain_models import FAMILIES
from ams.models.meta_models import MetaConfig
from ams.models.sampler_models import SAMPLER_KINDS, PolicyConfig, SamplerChoice
from ams.utils.validation import validate_choice, validate_suite_parameters

PRESETS = ('balanced', 'quantity-imbalance', 'difficulty-imbalance', 'mixed')


@dataclass
class SuiteSettings:
    """Arguments for task_generator.build_suite."""
    preset: str = "mixed"
    family: str = "sinusoid"
    K: int = 8
    w: int = 48
    ratio: float = 8.0
    n_targets: int = 2
    master_seed: int = 0
    pool_min: int = 0

    def validate(self) -> None:
        for key, (is_valid, msg) in (
            ('suite.preset', validate_choice(self.preset, PRESETS, 'preset')),
            ('suite.family', validate_choice(self.family, FAMILIES, 'family')),
        ):
            if not is_valid:
                raise ConfigError(msg, key=key)
        is_valid, msg = validate_suite_parameters(self.K, self.w, self.ratio,
                                                  self.pool_min or 2 * self.w, self.n_targets)
        if not is_valid:
            raise ConfigError(msg, key='suite')


@dataclass
class RunSettings:
    """
    Loop length, evaluation schedule and output options.

    Attributes:
        iterations: Meta-training iterations S
        eval_every: Evaluate on the targets every E iterations (and after the last)
        eval_tasks: Fixed target tasks per target domain
        eval_shots: Support examples used when adapting at evaluation
        eval_steps: Inner steps at evaluation
        seeds: Seed list, "N" or "N..M"
        out_dir: Output root (empty falls back to AMS_OUT_DIR, then ./runs)
        jobs: Concurrent runs in compare
        task_workers: Threads evaluating one meta-batch
        checked: Raise on NaN/Inf in optimizer steps
        wall_clock: Record real per-iteration time (breaks byte-identical reruns)
    """
    iterations: int = 2000
    eval_every: int = 50
    eval_tasks: int = 50
    eval_shots: int = 24
    eval_steps: int = 5
    seeds: str = "0"
    out_dir: str = ""
    jobs: int = 1
    task_workers: int = 1
    checked: bool = True
    wall_clock: bool = False

    def validate(self) -> None:
        for key in ('iterations', 'eval_every', 'eval_tasks', 'jobs', 'task_workers'):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1", key=f'run.{key}')
        for key in ('eval_shots', 'eval_steps'):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be >= 0", key=f'run.{key}')


@dataclass
class CompareSettings:
    samplers: List[str] = field(
        default_factory=lambda: ['uniform', 'ppq', 'ppql', 'ppaql', 'ppeaql', 'ams', 'ams-noatt'])

    def validate(self) -> None:
        if len(self.samplers) < 2:
            raise ConfigError("a comparison needs at least two samplers", key='compare.samplers')
        for kind in self.samplers:
            is_valid, msg = validate_choice(kind, SAMPLER_KINDS, 'sampler')
            if not is_valid:
                raise ConfigError(msg, key='compare.samplers')


@dataclass
class ExperimentConfig:
    """
    Everything one run (or one comparison) needs.

    Sections map one-to-one onto the dotted-key prefixes of the config file.
    """
    suite: SuiteSettings = field(default_factory=SuiteSettings)
    sampler: SamplerChoice = field(default_factory=SamplerChoice)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    meta: MetaConfig = field(default_factory=MetaConfig)
    run: RunSettings = field(default_factory=RunSettings)
    compare: CompareSettings = field(default_factory=CompareSettings)

    SECTIONS = ('suite', 'sampler', 'policy', 'meta', 'run', 'compare')

    def validate(self) -> None:
        """
        Raises:
            ConfigError: Naming the first offending key
        """
        self.suite.validate()
        self.sampler.validate()
        self.policy.validate()
        self.meta.validate(self.suite.K)
        self.run.validate()
        self.compare.validate()

    def with_sampler(self, kind: str) -> 'ExperimentConfig':
        """
        Copy with a different sampler kind; the other sections are copied by value.

        'ams-noatt' also switches policy.attention off so the echoed config
        reads the way the sampler runs.
        """
        policy = asdict(self.policy)
        if kind == 'ams-noatt':
            policy['attention'] = False
        return ExperimentConfig(
            suite=SuiteSettings(**asdict(self.suite)),
            sampler=SamplerChoice(**{**asdict(self.sampler), 'kind': kind}),
            policy=PolicyConfig(**policy),
            meta=MetaConfig(**asdict(self.meta)),
            run=RunSettings(**asdict(self.run)),
            compare=CompareSettings(list(self.compare.samplers)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {name: asdict(getattr(self, name)) for name in self.SECTIONS}


@dataclass
class MetricsRecord:
    """
    One meta-training iteration.

    Attributes:
        iteration: 1-based iteration number
        domain_ids: Selected domains, in selection order
        probs: P_T used for the selection
        buffer: Q_T after the update
        task_losses: Query losses of the selected tasks, aligned with domain_ids
        metatest: target domain id -> mean post-adaptation loss (evaluation iterations only)
        wall_ms: Wall-clock milliseconds, 0 unless wall-clock recording is enabled
    """
    iteration: int
    domain_ids: List[int]
    probs: List[float]
    buffer: List[float]
    task_losses: List[float]
    metatest: Dict[int, float] = field(default_factory=dict)
    wall_ms: float = 0.0


@dataclass
class RunSummary:
    """
    Outcome of one (config, seed) run.

    Attributes:
        sampler: Sampler kind
        seed: Run seed
        iterations: Completed iterations
        final_metatest: target id -> final mean meta-test loss
        final_metatest_std: target id -> std of the final meta-test losses
        sample_counts: Cumulative selections per source domain
        difficulties: Difficulty of each source domain
        spearman: Rank correlation between difficulty and sample count
        mean_probs_tail: Mean P_T over the last 20% of iterations
        curve: (iteration, target id, loss) triples from every evaluation
        theta_fingerprint: sha256 of the final theta
        aborted: Error message if the run stopped on a numeric error
        checkpoint: Path of the last-good checkpoint of an aborted run
    """
    sampler: str
    seed: int
    iterations: int = 0
    final_metatest: Dict[int, float] = field(default_factory=dict)
    final_metatest_std: Dict[int, float] = field(default_factory=dict)
    sample_counts: List[int] = field(default_factory=list)
    difficulties: List[float] = field(default_factory=list)
    spearman: float = 0.0
    mean_probs_tail: List[float] = field(default_factory=list)
    curve: List[List[float]] = field(default_factory=list)
    theta_fingerprint: str = ""
    aborted: Optional[str] = None
    checkpoint: Optional[str] = None

    @property
    def mean_final_metatest(self) -> float:
        values = list(self.final_metatest.values())
        return sum(values) / len(values) if values else float('nan')

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['final_metatest'] = {str(k): v for k, v in self.final_metatest.items()}
        data['final_metatest_std'] = {str(k): v for k, v in self.final_metatest_std.items()}
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunSummary':
        return cls(
            sampler=data['sampler'],
            seed=int(data['seed']),
            iterations=int(data.get('iterations', 0)),
            final_metatest={int(k): float(v) for k, v in data.get('final_metatest', {}).items()},
            final_metatest_std={int(k): float(v)
                                for k, v in data.get('final_metatest_std', {}).items()},
            sample_counts=[int(c) for c in data.get('sample_counts', [])],
            difficulties=[float(d) for d in data.get('difficulties', [])],
            spearman=float(data.get('spearman', 0.0)),
            mean_probs_tail=[float(p) for p in data.get('mean_probs_tail', [])],
            curve=[list(row) for row in data.get('curve', [])],
            theta_fingerprint=data.get('theta_fingerprint', ''),
            aborted=data.get('aborted'),
            checkpoint=data.get('checkpoint'),
        )
