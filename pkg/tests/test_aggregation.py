import numpy as np
import pytest

from cousinsq.aggregation import (
    AggregatedSampler,
    build_aggregation,
    cost_spread,
    wrap_aggregated,
)
from cousinsq.envs import MdpSampler
from cousinsq.qlearning import LearningSchedule, run_baseline
from cousinsq.wireless import Model1Config, Model3Config, build_model, materialize_ptt


class LineModel:
    """Minimal stand-in with scalar decoded states on a line."""

    def __init__(self, n):
        self.num_states = n
        self.num_actions = 1

    def decode_state(self, s):
        return np.array([s])


class TestBuildAggregation:
    def test_k_zero_is_identity(self):
        m = LineModel(5)
        agg = build_aggregation(m, 0)
        assert agg.cluster_count == 5
        assert np.array_equal(agg.state_to_cluster, np.arange(5))

    def test_line_graph_pairs(self):
        agg = build_aggregation(LineModel(8), 1)
        assert agg.cluster_count == 4
        assert np.array_equal(agg.state_to_cluster, [0, 0, 1, 1, 2, 2, 3, 3])
        assert np.array_equal(agg.representatives, [0, 2, 4, 6])

    def test_k_too_large_rejected(self):
        with pytest.raises(ValueError):
            build_aggregation(LineModel(4), 4)

    def test_memory_reduction_factor(self):
        model = build_model(3, Model3Config(num_tx=2, num_rx=2, buffer_size=2))
        for k in (1, 2, 4):
            agg = build_aggregation(model, k)
            assert agg.memory_reduction_factor >= 0.5 * k + 1

    def test_every_cluster_nonempty(self):
        model = build_model(1, Model1Config(num_tx=2, buffer_size=2))
        agg = build_aggregation(model, 3)
        counts = np.bincount(agg.state_to_cluster, minlength=agg.cluster_count)
        assert counts.min() >= 1

    def test_expand_policy(self):
        agg = build_aggregation(LineModel(4), 1)
        cluster_actions = np.array([5, 7])
        assert np.array_equal(agg.expand_policy(cluster_actions), [5, 5, 7, 7])


class TestWrapAggregated:
    def test_k_zero_bit_identical(self):
        model = build_model(1, Model1Config(num_tx=1, buffer_size=2), seed=4)
        agg = build_aggregation(model, 0)
        sched = LearningSchedule(epsilon_floor=0.3)
        plain = run_baseline("simple", model, sched, l=6, v=30, seeds=(8, 9))
        wrapped_env = wrap_aggregated(
            build_model(1, Model1Config(num_tx=1, buffer_size=2), seed=4), agg
        )
        wrapped = run_baseline("simple", wrapped_env, sched, l=6, v=30, seeds=(8, 9))
        assert np.array_equal(plain.q.values, wrapped.q.values)
        assert np.array_equal(plain.trace.visited, wrapped.trace.visited)

    def test_q_table_memory_is_cluster_count(self):
        model = build_model(1, Model1Config(num_tx=1, buffer_size=3), seed=1)
        agg = build_aggregation(model, 2)
        env = wrap_aggregated(model, agg)
        res = run_baseline(
            "simple", env, LearningSchedule(epsilon_floor=0.3), l=6, v=20, seeds=(0, 0)
        )
        assert res.q.values.shape == (agg.cluster_count, model.num_actions)

    def test_costs_pass_through(self):
        model = build_model(1, Model1Config(num_tx=1, buffer_size=1), seed=2)
        agg = build_aggregation(model, 1)
        env = wrap_aggregated(model, agg)
        inner = build_model(1, Model1Config(num_tx=1, buffer_size=1), seed=2)
        env.reset_to(0)
        inner.reset_to(int(agg.representatives[0]))
        for a in (0, 1, 0, 1):
            s_w, c_w = env.step(a)
            s_i, c_i = inner.step(a)
            assert c_w == c_i
            assert s_w == agg.state_to_cluster[s_i]

    def test_map_mismatch_rejected(self):
        model = build_model(1, Model1Config(num_tx=1, buffer_size=1))
        other = build_model(1, Model1Config(num_tx=1, buffer_size=3))
        agg = build_aggregation(model, 1)
        with pytest.raises(ValueError):
            AggregatedSampler(other, agg)


class TestCostSpread:
    def test_identity_map_has_zero_spread(self):
        model = build_model(1, Model1Config(num_tx=1, buffer_size=2))
        mdp = materialize_ptt(model)
        agg = build_aggregation(model, 0)
        assert cost_spread(agg, mdp.costs.expected_costs) == 0.0

    def test_spread_grows_with_k(self):
        model = build_model(1, Model1Config(num_tx=1, buffer_size=3))
        mdp = materialize_ptt(model)
        spreads = [
            cost_spread(build_aggregation(model, k), mdp.costs.expected_costs)
            for k in (0, 1, 3)
        ]
        assert spreads[0] <= spreads[1] <= spreads[2]
