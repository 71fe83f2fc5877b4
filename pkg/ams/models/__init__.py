"""Data models for the framework"""

from .tensor import Parameter, Tensor, as_tensor
from .domain_models import DomainSpec, DomainSuite, ExampleSet, TaskInstance
from .meta_models import AdaptationResult, MetaBatchResult, MetaConfig, TaskContribution
from .sampler_models import (
    PolicyConfig, PolicyState, QueryLossBuffer, SamplerChoice, SamplingDistribution,
)
from .experiment_models import ExperimentConfig, MetricsRecord, RunSummary

__all__ = [
    'Parameter', 'Tensor', 'as_tensor',
    'DomainSpec', 'DomainSuite', 'ExampleSet', 'TaskInstance',
    'AdaptationResult', 'MetaBatchResult', 'MetaConfig', 'TaskContribution',
    'PolicyConfig', 'PolicyState', 'QueryLossBuffer', 'SamplerChoice', 'SamplingDistribution',
    'ExperimentConfig', 'MetricsRecord', 'RunSummary',
]
