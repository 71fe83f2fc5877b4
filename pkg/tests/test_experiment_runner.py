"""
Tests for the end-to-end training loop and its run directory.
"""

import pytest
import sys
import os
import math

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from ams.exceptions import NumericError, RunAbortedError
from ams.models.experiment_models import RunSummary
from ams.services import experiment_runner
from ams.services.config_loader import apply_overrides, parse_config_text, parse_seeds
from ams.services.experiment_runner import (
    fixed_eval_tasks, run_dir_name, run_experiment, suite_from_config,
)
from ams.services.file_manager import FileManager
from ams.services.statistics import deviation_from_uniform
from ams.models.experiment_models import ExperimentConfig

SMALL = [
    'suite.K=4', 'suite.w=8', 'suite.n_targets=1', 'meta.M=2',
    'run.iterations=6', 'run.eval_every=3', 'run.eval_tasks=3', 'run.eval_shots=4',
    'run.eval_steps=1', 'policy.hidden_size=8', 'policy.input_size=6',
    'policy.attention_size=4',
]


def small_config(*overrides):
    cfg = apply_overrides(ExperimentConfig(), SMALL + list(overrides))
    cfg.validate()
    return cfg


class TestRunExperiment:
    """Tests for run_experiment."""

    def test_single_iteration_fills_m_entries(self):
        cfg = small_config('sampler.kind=uniform', 'meta.M=3', 'run.iterations=1')
        records, summary = run_experiment(cfg, seed=0)
        assert len(records) == 1
        assert sum(1 for q in records[0].buffer if q != 0.0) == 3
        assert sum(summary.sample_counts) == 3

    def test_counts_sum_to_iterations_times_m(self):
        cfg = small_config('sampler.kind=ppql')
        records, summary = run_experiment(cfg, seed=1)
        assert sum(summary.sample_counts) == 6 * 2
        assert all(len(set(r.domain_ids)) == 2 for r in records)

    def test_evaluation_schedule(self):
        cfg = small_config('sampler.kind=uniform', 'run.iterations=5', 'run.eval_every=2')
        records, summary = run_experiment(cfg, seed=0)
        assert [r.iteration for r in records if r.metatest] == [2, 4, 5]
        assert sorted({row[0] for row in summary.curve}) == [2, 4, 5]

    def test_wall_clock_off_by_default(self):
        records, _ = run_experiment(small_config('sampler.kind=uniform'), seed=0)
        assert all(r.wall_ms == 0.0 for r in records)

    def test_ams_run_writes_every_file(self, tmp_path):
        out = str(tmp_path / "ams_seed0")
        _, summary = run_experiment(small_config('sampler.kind=ams'), seed=0, out_dir=out)
        for name in ('config.cfg', 'suite.json', 'metrics.csv', 'theta.json',
                     'policy.json', 'summary.json'):
            assert os.path.exists(os.path.join(out, name))
        saved = RunSummary.from_dict(FileManager.load_json(os.path.join(out, 'summary.json')))
        assert saved.sample_counts == summary.sample_counts
        assert saved.theta_fingerprint == summary.theta_fingerprint

    def test_baseline_run_has_no_policy_file(self, tmp_path):
        out = str(tmp_path / "uniform_seed0")
        run_experiment(small_config('sampler.kind=uniform'), seed=0, out_dir=out)
        assert not os.path.exists(os.path.join(out, 'policy.json'))

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = small_config('sampler.kind=ams')
        paths = []
        for name in ('a', 'b'):
            out = str(tmp_path / name)
            run_experiment(cfg, seed=3, out_dir=out)
            paths.append(os.path.join(out, 'metrics.csv'))
        with open(paths[0], 'rb') as fa, open(paths[1], 'rb') as fb:
            assert fa.read() == fb.read()

    def test_task_workers_do_not_change_results(self, tmp_path):
        contents = []
        for workers in (1, 4):
            out = str(tmp_path / f"w{workers}")
            cfg = small_config('sampler.kind=ams', 'meta.variant=maml', 'meta.M=3',
                               f'run.task_workers={workers}')
            run_experiment(cfg, seed=2, out_dir=out)
            with open(os.path.join(out, 'metrics.csv'), 'rb') as f:
                contents.append(f.read())
        assert contents[0] == contents[1]

    def test_mtl_with_ams(self):
        cfg = small_config('sampler.kind=ams', 'meta.variant=mtl')
        records, summary = run_experiment(cfg, seed=0)
        assert summary.iterations == 6
        assert np.isfinite(summary.mean_final_metatest)

    @pytest.mark.parametrize("variant", ['maml', 'reptile'])
    def test_other_variants_complete(self, variant):
        cfg = small_config('sampler.kind=ppeaql', f'meta.variant={variant}', 'run.iterations=3')
        _, summary = run_experiment(cfg, seed=0)
        assert summary.iterations == 3
        assert summary.aborted is None

    def test_numeric_error_aborts_with_checkpoint(self, tmp_path, monkeypatch):
        real_step = experiment_runner.meta_step
        calls = {'n': 0}

        def failing_step(*args, **kwargs):
            calls['n'] += 1
            if calls['n'] == 3:
                raise NumericError("non-finite outer direction")
            return real_step(*args, **kwargs)

        monkeypatch.setattr(experiment_runner, 'meta_step', failing_step)
        out = str(tmp_path / "aborted")
        with pytest.raises(RunAbortedError) as excinfo:
            run_experiment(small_config('sampler.kind=ams'), seed=0, out_dir=out)
        assert excinfo.value.iteration == 3
        assert os.path.exists(os.path.join(excinfo.value.checkpoint_path, 'theta.json'))
        assert os.path.exists(os.path.join(excinfo.value.checkpoint_path, 'policy.json'))
        saved = FileManager.load_json(os.path.join(out, 'summary.json'))
        assert saved['iterations'] == 2
        assert saved['aborted']
        assert sum(saved['sample_counts']) == 2 * 2

    def test_evaluation_error_aborts_with_checkpoint(self, tmp_path, monkeypatch):
        cfg = small_config('sampler.kind=ams')
        clean, _ = run_experiment(cfg, seed=0)

        def diverge(*args, **kwargs):
            raise NumericError("non-finite adapted loss")

        monkeypatch.setattr(experiment_runner, 'evaluate_on_tasks', diverge)
        out = str(tmp_path / "aborted")
        with pytest.raises(RunAbortedError) as excinfo:
            run_experiment(cfg, seed=0, out_dir=out)
        assert excinfo.value.iteration == 3
        checkpoint = excinfo.value.checkpoint_path
        assert os.path.exists(os.path.join(checkpoint, 'theta.json'))
        saved = FileManager.load_json(os.path.join(out, 'summary.json'))
        assert saved['iterations'] == 2
        assert saved['aborted']
        assert excinfo.value.summary.iterations == 2
        # sampler state rolled back to the end of iteration 2
        policy = FileManager.load_json(os.path.join(checkpoint, 'policy.json'))
        assert policy['buffer'] == clean[1].buffer

    def test_config_echo_records_seed(self, tmp_path):
        out = str(tmp_path / "ppql_seed5")
        run_experiment(small_config('sampler.kind=ppql'), seed=5, out_dir=out)
        with open(os.path.join(out, 'config.cfg'), encoding='utf-8') as f:
            echoed = parse_config_text(f.read())
        assert parse_seeds(echoed.run.seeds) == [5]
        assert echoed.sampler.kind == 'ppql'

    def test_ams_without_attention(self, tmp_path):
        out = str(tmp_path / "ams-noatt_seed0")
        _, summary = run_experiment(small_config('sampler.kind=ams-noatt'), seed=0, out_dir=out)
        assert summary.sampler == 'ams-noatt'
        policy = FileManager.load_json(os.path.join(out, 'policy.json'))
        assert policy['config']['attention'] is False
        with open(os.path.join(out, 'config.cfg'), encoding='utf-8') as f:
            assert parse_config_text(f.read()).policy.attention is False

    @pytest.mark.slow
    def test_uniform_counts_within_multinomial_bounds(self):
        S, K, M = 500, 4, 2
        cfg = small_config('suite.preset=balanced', 'sampler.kind=uniform',
                           'meta.variant=fomaml', f'run.iterations={S}', f'run.eval_every={S}')
        _, summary = run_experiment(cfg, seed=0)
        expected = S * M / K
        sigma = math.sqrt(S * (M / K) * (1.0 - M / K))
        assert sum(summary.sample_counts) == S * M
        for count in summary.sample_counts:
            assert abs(count - expected) <= 3.0 * sigma

    @pytest.mark.slow
    def test_ams_stays_near_uniform_on_balanced_suite(self):
        deviations = {'ams': [], 'ppql': []}
        for kind in deviations:
            cfg = small_config('suite.preset=balanced', f'sampler.kind={kind}',
                               'meta.variant=fomaml', 'run.iterations=60', 'run.eval_every=60')
            for seed in range(10):
                _, summary = run_experiment(cfg, seed=seed)
                deviations[kind].append(deviation_from_uniform(summary.mean_probs_tail))
        assert np.mean(deviations['ams']) <= np.mean(deviations['ppql'])


class TestHelpers:
    """Tests for run-directory helpers."""

    def test_fixed_eval_tasks_depend_only_on_seed(self):
        suite = suite_from_config(small_config())
        a = fixed_eval_tasks(suite, 4, 3)
        b = fixed_eval_tasks(suite, 4, 3)
        target = suite.targets[0].domain_id
        assert [t.indices for t in a[target]] == [t.indices for t in b[target]]

    def test_run_dir_name(self):
        assert run_dir_name('ams', 7) == 'ams_seed7'
