"""
Tests for the baseline samplers, domain selection and the query-loss buffer.
"""

import pytest
import sys
import os
import math

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from ams.exceptions import ConfigError, NumericError
from ams.models.sampler_models import (
    PolicyConfig, QueryLossBuffer, SamplerChoice, SamplingDistribution,
)
from ams.services import samplers as samplers_module
from ams.services.samplers import (
    AmsSampler, ExponentialLossAverage, PpaqlSampler, PpeaqlSampler, PpqSampler,
    PpqlSampler, UniformSampler, WindowedLossAverage, build_sampler, load_policy,
    ppaql_probs, ppeaql_probs, ppq_probs, ppql_probs, save_policy, select_domains,
    uniform_probs,
)
from ams.services.task_generator import build_suite, task_quantity


SMALL_POLICY = dict(attention_size=4, input_size=6, hidden_size=8)


class TestClosedFormDistributions:
    """Tests for uniform, PPQ and PPQL."""

    def test_uniform(self):
        assert np.allclose(uniform_probs(4).probs, [0.25] * 4)
        assert uniform_probs(1).probs[0] == 1.0

    def test_uniform_nine_sums_to_one_exactly(self):
        assert math.fsum(uniform_probs(9).probs.tolist()) == 1.0

    def test_uniform_needs_a_domain(self):
        with pytest.raises(ConfigError):
            uniform_probs(0)

    def test_ppq_pool_mode(self):
        assert ppq_probs([80, 10, 10]).probs == pytest.approx([0.8, 0.1, 0.1], abs=1e-15)

    def test_ppq_log_combination(self):
        logs = np.array([task_quantity(100, 48), task_quantity(50, 48)])
        expected = np.exp(logs) / np.exp(logs).sum()
        P = ppq_probs([100, 50], w=48, mode='log-combination')
        assert P.probs == pytest.approx(expected, rel=1e-12)

    def test_ppq_unknown_mode(self):
        with pytest.raises(ConfigError):
            ppq_probs([10, 10], mode='sqrt')

    def test_ppql_zero_losses_are_uniform(self):
        assert np.allclose(ppql_probs(np.zeros(3)).probs, [1 / 3] * 3)

    def test_ppql_proportional(self):
        assert ppql_probs(np.array([3.0, 1.0])).probs == pytest.approx([0.75, 0.25])

    def test_ppql_clamps_negative_losses(self):
        P = ppql_probs(np.array([-1.0, 2.0]))
        assert P.probs[0] > 0.0
        assert P.probs[1] == pytest.approx(1.0)


class TestLossAverages:
    """Tests for the windowed and exponential averages."""

    def test_window_of_one_equals_ppql(self):
        sampler = PpaqlSampler(3, window=1)
        sampler.observe([0, 2], [0.5, 1.5])
        sampler.observe([2], [3.0])
        assert np.array_equal(sampler.probabilities().probs,
                              ppql_probs(sampler.buffer.values).probs)

    def test_window_keeps_last_values(self):
        average = WindowedLossAverage(2, window=3)
        for loss in (1.0, 2.0, 3.0, 4.0):
            average.record([0], [loss])
        assert average.means()[0] == 3.0
        assert average.means()[1] == 0.0

    def test_window_must_be_positive(self):
        with pytest.raises(ConfigError):
            WindowedLossAverage(2, window=0)

    def test_ema_update(self):
        average = ExponentialLossAverage(2, decay=0.5)
        average.record([1], [4.0])
        average.record([1], [2.0])
        assert average.values.tolist() == [0.0, 2.0]

    def test_constant_stream_gives_uniform(self):
        sampler = PpeaqlSampler(4, decay=0.9)
        for _ in range(5):
            sampler.observe([0, 1, 2, 3], [0.7] * 4)
        assert np.allclose(sampler.probabilities().probs, 0.25)
        assert np.allclose(ppeaql_probs(sampler.average).probs, 0.25)

    def test_decay_range(self):
        with pytest.raises(ConfigError):
            ExponentialLossAverage(2, decay=1.0)

    def test_ppaql_before_any_observation(self):
        assert np.allclose(ppaql_probs(WindowedLossAverage(3)).probs, [1 / 3] * 3)

    @pytest.mark.parametrize("sampler", [PpaqlSampler(3, window=2), PpeaqlSampler(3, decay=0.5)])
    def test_restore_undoes_observe(self, sampler):
        sampler.observe([0, 1], [0.4, 0.9])
        saved = sampler.snapshot()
        before = sampler.probabilities().probs.copy()
        sampler.observe([1, 2], [5.0, 3.0])
        sampler.restore(saved)
        assert sampler.buffer.values.tolist() == [0.4, 0.9, 0.0]
        assert np.array_equal(sampler.probabilities().probs, before)


class TestSelectDomains:
    """Tests for top-M and stochastic selection."""

    def test_top_m_breaks_ties_by_index(self):
        P = SamplingDistribution(np.array([0.1, 0.4, 0.4, 0.1]))
        assert select_domains(P, 2, 'top-m') == [1, 2]
        assert select_domains(P, 3, 'top-m') == [1, 2, 0]

    def test_top_m_on_uniform(self):
        assert select_domains(uniform_probs(5), 3, 'top-m') == [0, 1, 2]

    def test_m_equals_k_takes_everything(self):
        ids = select_domains(uniform_probs(4), 4, 'stochastic', np.random.default_rng(0))
        assert sorted(ids) == [0, 1, 2, 3]

    def test_m_larger_than_k(self):
        with pytest.raises(ConfigError):
            select_domains(uniform_probs(3), 4, 'top-m')

    def test_m_zero(self):
        with pytest.raises(ConfigError):
            select_domains(uniform_probs(3), 0, 'top-m')

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            select_domains(uniform_probs(3), 1, 'greedy')

    def test_stochastic_ids_are_distinct(self):
        rng = np.random.default_rng(1)
        P = SamplingDistribution(np.array([0.7, 0.1, 0.1, 0.05, 0.05]))
        for _ in range(200):
            ids = select_domains(P, 3, 'stochastic', rng)
            assert len(set(ids)) == 3

    def test_stochastic_point_mass(self):
        P = SamplingDistribution(np.array([0.0, 1.0, 0.0]))
        assert select_domains(P, 1, 'stochastic', np.random.default_rng(2)) == [1]
        assert select_domains(P, 2, 'stochastic', np.random.default_rng(2)) == [1, 0]

    def test_stochastic_frequencies(self):
        rng = np.random.default_rng(3)
        P = SamplingDistribution(np.array([0.7, 0.2, 0.1]))
        draws = 10000
        first = sum(select_domains(P, 1, 'stochastic', rng)[0] == 0 for _ in range(draws))
        sigma = math.sqrt(draws * 0.7 * 0.3)
        assert abs(first - 0.7 * draws) < 4 * sigma

    def test_stochastic_is_reproducible(self):
        P = SamplingDistribution(np.array([0.4, 0.3, 0.2, 0.1]))
        a = [select_domains(P, 2, 'stochastic', np.random.default_rng(9)) for _ in range(3)]
        b = [select_domains(P, 2, 'stochastic', np.random.default_rng(9)) for _ in range(3)]
        assert a == b


class TestQueryLossBuffer:
    """Tests for the last-known loss buffer."""

    def test_starts_at_zero(self):
        assert not QueryLossBuffer(5).values.any()

    def test_update_touches_only_sampled_entries(self):
        buffer = QueryLossBuffer(4)
        buffer.update([0, 1, 2, 3], [0.1, 0.2, 0.3, 0.4])
        before = buffer.snapshot()
        buffer.update([2], [9.0])
        assert buffer.values[2] == 9.0
        for k in (0, 1, 3):
            assert buffer.values[k].tobytes() == before[k].tobytes()

    def test_out_of_range_id(self):
        with pytest.raises(IndexError):
            QueryLossBuffer(3).update([3], [1.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            QueryLossBuffer(3).update([0, 1], [1.0])

    def test_replay_matches_last_observation(self):
        rng = np.random.default_rng(4)
        buffer = QueryLossBuffer(6)
        last = {}
        for _ in range(100):
            ids = rng.choice(6, size=2, replace=False).tolist()
            losses = rng.random(2).tolist()
            buffer.update(ids, losses)
            last.update(zip(ids, losses))
        for k in range(6):
            assert buffer.values[k] == last.get(k, 0.0)


class TestBuildSampler:
    """Tests for sampler construction from a SamplerChoice."""

    @pytest.fixture
    def suite(self):
        return build_suite('quantity-imbalance', K=4)

    @pytest.mark.parametrize("kind, cls", [
        ('uniform', UniformSampler), ('ppq', PpqSampler), ('ppql', PpqlSampler),
        ('ppaql', PpaqlSampler), ('ppeaql', PpeaqlSampler),
    ])
    def test_baseline_kinds(self, suite, kind, cls):
        sampler = build_sampler(SamplerChoice(kind=kind), None, suite)
        assert isinstance(sampler, cls)
        assert sampler.K == 4

    def test_ams_kind(self, suite):
        sampler = build_sampler(SamplerChoice(kind='ams'), PolicyConfig(**SMALL_POLICY), suite,
                                np.random.default_rng(0))
        assert isinstance(sampler, AmsSampler)
        assert sampler.probabilities().K == 4

    def test_ams_without_attention_kind(self, suite):
        policy_cfg = PolicyConfig(**SMALL_POLICY)
        sampler = build_sampler(SamplerChoice(kind='ams-noatt'), policy_cfg, suite,
                                np.random.default_rng(0))
        assert isinstance(sampler, AmsSampler)
        assert sampler.net.attention is None
        assert policy_cfg.attention is True

    def test_unknown_kind(self, suite):
        with pytest.raises(ConfigError):
            build_sampler(SamplerChoice(kind='bandit'), None, suite)

    def test_ppq_follows_pool_sizes(self, suite):
        sampler = build_sampler(SamplerChoice(kind='ppq'), None, suite)
        sizes = np.array(suite.pool_sizes, dtype=float)
        assert np.allclose(sampler.probabilities().probs, sizes / sizes.sum())


class TestAmsSampler:
    """Tests for the sampler wrapper around the policy network."""

    def test_observe_requires_probabilities(self):
        sampler = AmsSampler(3, PolicyConfig(**SMALL_POLICY), np.random.default_rng(0))
        with pytest.raises(RuntimeError):
            sampler.observe([0], [1.0])
        assert not sampler.buffer.values.any()

    def test_failed_policy_update_leaves_sampler_unchanged(self, monkeypatch):
        sampler = AmsSampler(3, PolicyConfig(**SMALL_POLICY), np.random.default_rng(0))
        P = sampler.probabilities()
        sampler.observe(sampler.select(P, 2), [0.5, 0.2])
        buffer = sampler.buffer.values.copy()
        params = [p.value.copy() for p in sampler.net.parameters()]
        adam_step = sampler.optimizer.adam.step

        def diverge(*args, **kwargs):
            raise NumericError("non-finite policy surrogate")

        monkeypatch.setattr(samplers_module, 'policy_update', diverge)
        P = sampler.probabilities()
        with pytest.raises(NumericError):
            sampler.observe(sampler.select(P, 2), [7.0, 8.0])
        assert np.array_equal(sampler.buffer.values, buffer)
        assert all(np.array_equal(p.value, v) for p, v in zip(sampler.net.parameters(), params))
        assert sampler.optimizer.adam.step == adam_step
        assert sampler.state.step == 1

    def test_state_advances_after_observe(self):
        sampler = AmsSampler(3, PolicyConfig(**SMALL_POLICY), np.random.default_rng(0))
        P = sampler.probabilities()
        sampler.observe(sampler.select(P, 2), [0.5, 0.2])
        assert sampler.state.step == 1
        assert np.allclose(sampler.state.p_prev, P.probs)

    def test_checkpoint_round_trip(self, tmp_path):
        sampler = AmsSampler(3, PolicyConfig(**SMALL_POLICY), np.random.default_rng(0))
        for losses in ([0.5, 0.2], [0.9, 0.1]):
            P = sampler.probabilities()
            sampler.observe(sampler.select(P, 2), losses)
        path = str(tmp_path / "policy.json")
        save_policy(sampler, path)
        loaded = load_policy(path)
        assert np.array_equal(loaded.buffer.values, sampler.buffer.values)
        assert np.array_equal(loaded.probabilities().probs, sampler.probabilities().probs)

    def test_checkpoint_kind_checked(self):
        with pytest.raises(ConfigError):
            AmsSampler.from_dict({'kind': 'task_model'})
