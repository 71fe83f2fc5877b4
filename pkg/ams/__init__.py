"""
AMS - adversarial meta sampling for multi-domain meta-learning

This package provides:
- Data models (domains and tasks, meta/policy/experiment configuration)
- Services (numeric core, task generator, meta-learners, samplers,
  experiment runner, comparisons)
- Utilities (formatting, validation, seeded RNG streams)
"""

__version__ = "1.0.0"

from .exceptions import (
    AmsError,
    ConfigError,
    DimensionError,
    InsufficientPoolError,
    NumericError,
    RunAbortedError,
    TaskQuantityError,
)
from .models import (
    DomainSuite,
    ExperimentConfig,
    MetaConfig,
    PolicyConfig,
    SamplerChoice,
    SamplingDistribution,
)
from .services import (
    build_sampler,
    build_suite,
    compare_samplers,
    load_config,
    meta_step,
    run_experiment,
    sample_task,
)

__all__ = [
    'AmsError',
    'ConfigError',
    'DimensionError',
    'InsufficientPoolError',
    'NumericError',
    'RunAbortedError',
    'TaskQuantityError',
    'DomainSuite',
    'ExperimentConfig',
    'MetaConfig',
    'PolicyConfig',
    'SamplerChoice',
    'SamplingDistribution',
    'build_sampler',
    'build_suite',
    'compare_samplers',
    'load_config',
    'meta_step',
    'run_experiment',
    'sample_task',
]
