"""
Tests for the command-line entry point.
"""

import pytest
import sys
import os

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from ams.cli import EXIT_CONFIG, EXIT_OK, main

SMALL = [
    'suite.K=3', 'suite.w=8', 'suite.n_targets=1', 'meta.M=2',
    'run.iterations=2', 'run.eval_every=2', 'run.eval_tasks=2', 'run.eval_shots=4',
    'run.eval_steps=1', 'policy.hidden_size=6', 'policy.input_size=4',
    'policy.attention_size=3',
]


def with_overrides(*args):
    argv = list(args)
    for item in SMALL:
        argv += ['--set', item]
    return argv


class TestCli:
    """Tests for subcommand dispatch and exit codes."""

    def test_gradcheck_is_deterministic(self, capsys):
        assert main(['gradcheck', '--seed', '7', '--trials', '1']) == EXIT_OK
        first = capsys.readouterr().out
        assert main(['gradcheck', '--seed', '7', '--trials', '1']) == EXIT_OK
        assert capsys.readouterr().out == first
        assert 'maml_outer' in first

    def test_missing_config_file(self, tmp_path):
        assert main(['train', '--config', str(tmp_path / 'absent.cfg')]) == EXIT_CONFIG

    def test_unknown_subcommand(self):
        assert main(['deploy']) == EXIT_CONFIG

    def test_unknown_config_key(self):
        assert main(['suite', '--set', 'suite.colour=blue']) == EXIT_CONFIG

    def test_suite_list(self, capsys):
        assert main(['suite', '--list']) == EXIT_OK
        out = capsys.readouterr().out.split()
        assert 'quantity-imbalance' in out and 'mixed' in out

    def test_suite_describe_and_save(self, tmp_path, capsys):
        path = str(tmp_path / 'suite.json')
        assert main(['suite', '--set', 'suite.K=3', '--out', path]) == EXIT_OK
        assert os.path.exists(path)
        assert 'source' in capsys.readouterr().out

    def test_train_then_eval(self, tmp_path, capsys):
        out = str(tmp_path)
        assert main(with_overrides('train', '--seed', '0', '--out', out,
                                   '--set', 'sampler.kind=uniform')) == EXIT_OK
        checkpoint = os.path.join(out, 'uniform_seed0', 'theta.json')
        assert os.path.exists(checkpoint)
        capsys.readouterr()
        assert main(with_overrides('eval', '--checkpoint', checkpoint)) == EXIT_OK
        assert 'target 3' in capsys.readouterr().out

    @pytest.mark.slow
    def test_compare_smoke(self, tmp_path, capsys):
        out = str(tmp_path)
        code = main(with_overrides('compare', '--seeds', '0..1', '--samplers', 'uniform,ams',
                                   '--out', out))
        assert code == EXIT_OK
        assert os.path.exists(os.path.join(out, 'comparison.csv'))
        assert os.path.exists(os.path.join(out, 'ams_seed1', 'metrics.csv'))
        printed = capsys.readouterr().out
        assert 'uniform' in printed and 'ams' in printed

    def test_train_jobs_leave_metrics_unchanged(self, tmp_path):
        contents = []
        for jobs in ('1', '3'):
            out = str(tmp_path / f"jobs{jobs}")
            assert main(with_overrides('train', '--seed', '1', '--jobs', jobs, '--out', out,
                                       '--set', 'sampler.kind=ams')) == EXIT_OK
            with open(os.path.join(out, 'ams_seed1', 'metrics.csv'), 'rb') as f:
                contents.append(f.read())
        assert contents[0] == contents[1]

    def test_train_rejects_zero_jobs(self, tmp_path):
        assert main(with_overrides('train', '--jobs', '0', '--out', str(tmp_path))) == EXIT_CONFIG

    def test_compare_needs_two_samplers(self, tmp_path):
        code = main(with_overrides('compare', '--seeds', '0', '--samplers', 'ams',
                                   '--out', str(tmp_path)))
        assert code == EXIT_CONFIG
