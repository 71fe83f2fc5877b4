"""Service layer for the framework"""

from .file_manager import FileManager
from .task_generator import build_suite, sample_task, task_quantity
from .task_model import TaskModel
from .meta_learner import evaluate_adaptation, inner_adapt, meta_step
from .samplers import build_sampler, select_domains
from .experiment_runner import run_experiment
from .comparison import compare_samplers
from .config_loader import load_config, write_config

__all__ = [
    'FileManager',
    'build_suite',
    'sample_task',
    'task_quantity',
    'TaskModel',
    'evaluate_adaptation',
    'inner_adapt',
    'meta_step',
    'build_sampler',
    'select_domains',
    'run_experiment',
    'compare_samplers',
    'load_config',
    'write_config',
]
