import numpy as np
import pytest

from cousinsq import analysis
from cousinsq.colink import make_cousins
from cousinsq.envs import MdpSampler, make_rng
from cousinsq.esql import EnsembleConfig, run_esql
from cousinsq.mdp import Policy, optimal_q, random_mdp
from cousinsq.qlearning import LearningSchedule
from cousinsq.trace import CadenceError, ExperimentTrace


def synthetic_trace(qit, env_q, weights, episode=None):
    """Assemble a dense trace from explicit arrays; shapes (T,S,A), (T,K,S,A)."""
    qit = np.asarray(qit, dtype=float)
    env_q = np.asarray(env_q, dtype=float)
    weights = np.asarray(weights, dtype=float)
    t_len, k = weights.shape
    return ExperimentTrace(
        num_envs=k,
        episode=np.zeros(t_len, dtype=np.int64) if episode is None else episode,
        weights=weights,
        ape=np.full(t_len, np.nan),
        visited=np.zeros((t_len, 2), dtype=np.int64),
        snapshot_cadence=1,
        snapshot_steps=np.arange(t_len),
        qit=qit,
        env_q=env_q,
        final_visit_counts=np.zeros(qit.shape[1:], dtype=np.int64),
        seeds=(0,),
    )


def esql_trace(seed=0, k=3, min_visits=40, u=0.5, s_states=4):
    m = random_mdp(s_states, 2, 0.85, np.random.default_rng(seed))
    cousins = make_cousins(m, list(range(1, k + 1)))
    cfg = EnsembleConfig(
        orders=tuple(range(1, k + 1)),
        u=u,
        trajectory_len=8,
        min_visits=min_visits,
        schedule=LearningSchedule(alpha_tau=200.0, epsilon_floor=0.3),
        seeds=tuple((seed, n) for n in range(k)) + (seed,),
        snapshot_cadence=1,
    )
    res = run_esql([MdpSampler(c.mdp) for c in cousins], cfg)
    return m, res


class TestApe:
    def test_identical_and_disjoint(self):
        a = Policy(np.array([0, 1, 0, 1]))
        b = Policy(np.array([1, 0, 1, 0]))
        assert analysis.ape(a, a) == 0.0
        assert analysis.ape(a, b) == 1.0

    def test_single_mismatch(self):
        a = Policy(np.array([0, 1, 0, 1]))
        b = Policy(np.array([0, 1, 1, 1]))
        assert analysis.ape(a, b) == 0.25

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            analysis.ape(Policy(np.array([0])), Policy(np.array([0, 1])))

    def test_pseudometric(self):
        g = np.random.default_rng(0)
        pols = [Policy(g.integers(0, 3, size=6)) for _ in range(6)]
        for x in pols:
            for y in pols:
                assert analysis.ape(x, y) == analysis.ape(y, x)
                assert (analysis.ape(x, y) == 0.0) == np.array_equal(x.actions, y.actions)
                for z in pols:
                    assert analysis.ape(x, z) <= analysis.ape(x, y) + analysis.ape(y, z) + 1e-12


class TestDeltaTrace:
    def test_constant_output_is_zero(self):
        t_len = 10
        qit = np.tile(np.ones((1, 2, 2)), (t_len, 1, 1))
        trace = synthetic_trace(qit, np.zeros((t_len, 1, 2, 2)), np.ones((t_len, 1)))
        deltas, gaps = analysis.delta_trace(trace, 0, 0)
        assert np.all(deltas[1:] == 0.0)
        assert np.all(gaps[1:] == 0.0)

    def test_requires_dense_snapshots(self):
        _, res = esql_trace(min_visits=5)
        sparse = ExperimentTrace(
            **{
                **res.trace.__dict__,
                "snapshot_cadence": 2,
            }
        )
        with pytest.raises(CadenceError):
            analysis.delta_trace(sparse, 0, 0)


class TestFusionIdentity:
    def test_holds_on_real_run(self):
        _, res = esql_trace(seed=3, min_visits=30)
        assert analysis.fusion_identity_residual(res.trace, 0.5) < 1e-12

    def test_detects_wrong_u(self):
        _, res = esql_trace(seed=3, min_visits=30)
        assert analysis.fusion_identity_residual(res.trace, 0.7) > 1e-6


class TestUpdateBound:
    def test_zero_trace_holds_trivially(self):
        t_len = 8
        trace = synthetic_trace(
            np.zeros((t_len, 1, 1)), np.zeros((t_len, 2, 1, 1)), np.full((t_len, 2), 0.5)
        )
        res = analysis.update_magnitude_bound(trace, 0, 0)
        assert res.theta_sum == 0.0
        assert res.holds

    def test_holds_on_converged_run(self):
        _, res = esql_trace(seed=5, min_visits=60)
        s_count, a_count = res.q_it.values.shape
        for s in range(s_count):
            for a in range(a_count):
                assert analysis.update_magnitude_bound(res.trace, s, a).holds


class TestIterationsToThreshold:
    def test_half_life(self):
        assert analysis.iterations_to_update_threshold(0.5, 0.5, 1.0) == 1

    def test_paper_arithmetic(self):
        assert analysis.iterations_to_update_threshold(1.0, 0.9, 2.0) == 7

    def test_vacuous_beta_rejected(self):
        with pytest.raises(ValueError):
            analysis.iterations_to_update_threshold(2.0, 0.5, 1.0)
        with pytest.raises(ValueError):
            analysis.iterations_to_update_threshold(0.5, 1.0, 1.0)

    def test_first_passage_within_prediction(self):
        _, res = esql_trace(seed=7, min_visits=60)
        trace = res.trace
        s_count, a_count = res.q_it.values.shape
        for s in range(s_count):
            for a in range(a_count):
                bound = analysis.update_magnitude_bound(trace, s, a)
                if bound.theta_sum <= 0:
                    continue
                beta = 0.5 * bound.theta_sum
                predicted = analysis.iterations_to_update_threshold(
                    beta, 0.5, bound.theta_sum
                )
                reached = analysis.first_passage(trace, s, a, beta)
                assert reached is not None and reached <= predicted


class TestContractionRatio:
    def test_geometric_series(self):
        t_len = 30
        series = np.cumsum(0.9 ** np.arange(t_len))
        env_q = series[:, None, None, None] * np.ones((t_len, 1, 1, 1))
        trace = synthetic_trace(
            np.zeros((t_len, 1, 1)), env_q, np.ones((t_len, 1))
        )
        res = analysis.contraction_ratio_check(trace, 0, 0)
        assert res.phi_per_env[0] == pytest.approx(0.9, abs=1e-9)
        assert res.all_below_one

    def test_zero_series_flagged_vacuous(self):
        t_len = 10
        trace = synthetic_trace(
            np.zeros((t_len, 1, 1)), np.zeros((t_len, 2, 1, 1)), np.full((t_len, 2), 0.5)
        )
        res = analysis.contraction_ratio_check(trace, 0, 0)
        assert res.vacuous_per_env.all()
        assert res.skipped_per_env.sum() > 0


class TestWindowedMoments:
    def test_constant_series(self):
        mean, var = analysis.windowed_moments(np.full(100, 3.5), 50, 10)
        assert mean == 3.5
        assert var == 0.0

    def test_alternating_series(self):
        series = np.array([1.0, -1.0] * 200)
        mean, var = analysis.windowed_moments(series, 200, 100)
        assert abs(mean) < 0.01
        assert abs(var - 1.0) < 0.01

    def test_range_checks(self):
        series = np.zeros(50)
        with pytest.raises(ValueError):
            analysis.windowed_moments(series, 10, 10)  # t < 2*window
        with pytest.raises(ValueError):
            analysis.windowed_moments(series, 45, 10)  # right edge past the end


class TestVarianceBounds:
    def test_reference_point(self):
        b = analysis.variance_bounds(0.5, 1.0)
        assert b.strict == pytest.approx(1 / 9)
        assert b.modest == pytest.approx(1 / 3)
        assert b.none == pytest.approx(11 / 9)

    def test_high_u_kills_strict_and_modest(self):
        b = analysis.variance_bounds(0.999, 1.0)
        assert b.strict < 1e-3
        assert b.modest < 1e-2

    def test_ordering_on_grid(self):
        for u in np.linspace(0.01, 0.99, 10):
            for lam in np.linspace(0.05, 10.0, 10):
                b = analysis.variance_bounds(float(u), float(lam))
                assert b.strict <= b.modest <= b.none

    def test_validation(self):
        with pytest.raises(ValueError):
            analysis.variance_bounds(1.0, 1.0)
        with pytest.raises(ValueError):
            analysis.variance_bounds(0.5, -1.0)


class TestErrorDiagnostics:
    def test_moments_match_numpy(self):
        m, res = esql_trace(seed=9, min_visits=50)
        q_star = optimal_q(m, tol=1e-9)
        stats = analysis.error_distribution_diagnostics(res.trace, q_star, 0, 0)
        series = res.trace.env_q_series(1, 0, 0) - q_star.values[0, 0]
        assert stats[1].mean == pytest.approx(series.mean())
        assert stats[1].variance == pytest.approx(series.var())
        assert stats[1].lam == pytest.approx(np.sqrt(3 * series.var()))
        for st in stats:
            assert np.isfinite(st.lam) and st.lam >= 0

    def test_windowed_variant(self):
        m, res = esql_trace(seed=9, min_visits=50)
        q_star = optimal_q(m, tol=1e-9)
        t = res.trace.num_steps - 25
        stats = analysis.error_distribution_diagnostics(
            res.trace, q_star, 0, 0, t=t, window=20
        )
        assert len(stats) == 3


class TestDistanceCorrelation:
    def test_identity_and_affine(self):
        x = np.random.default_rng(0).random(200)
        assert analysis.distance_correlation(x, x) == pytest.approx(1.0)
        assert analysis.distance_correlation(x, 2 * x + 3) == pytest.approx(1.0)

    def test_independent_samples_small(self):
        g = np.random.default_rng(1)
        value = analysis.distance_correlation(g.random(1000), g.random(1000))
        assert value < 0.1

    def test_constant_input_degenerate(self):
        assert analysis.distance_correlation(np.ones(10), np.arange(10)) == 0.0

    def test_permutation_average_small(self):
        # finite-sample bias scales like 1/sqrt(n); 512 points leave margin
        g = np.random.default_rng(2)
        x = g.random(512)
        vals = []
        for _ in range(100):
            vals.append(analysis.distance_correlation(x, g.permutation(x)))
        assert np.mean(vals) < 0.1

    def test_length_checks(self):
        with pytest.raises(ValueError):
            analysis.distance_correlation(np.arange(3), np.arange(3))
        with pytest.raises(ValueError):
            analysis.distance_correlation(np.arange(5), np.arange(6))


class TestAdcMatrix:
    def test_shape_and_requirements(self):
        runs = []
        m = None
        for seed in range(5):
            m, res = esql_trace(seed=seed, k=2, min_visits=25, s_states=3)
            runs.append(res.trace)
        q_star = optimal_q(m, tol=1e-9)
        with pytest.raises(ValueError):
            analysis.adc_matrix(runs[:3], q_star, 0, 0, [0, 1], (0, 20))
        matrix = analysis.adc_matrix(
            runs, q_star, 0, 0, [0, 1], (5, 25), max_pairs=40, rng=make_rng(0)
        )
        assert matrix.shape == (2, 2)
        assert np.all(matrix >= 0) and np.all(matrix <= 1)


class TestBellman:
    def set_2env(self, seed=0):
        m = random_mdp(5, 2, 0.9, np.random.default_rng(seed))
        cousins = make_cousins(m, [1, 2, 3])
        return m, cousins

    def test_reference_env_scores_zero_and_first(self):
        m, cousins = self.set_2env()
        errors = dict(analysis.bellman_errors(cousins, m))
        assert errors[1] == pytest.approx(0.0, abs=1e-9)
        assert analysis.bellman_select(cousins, m, 1) == [1]

    def test_matches_direct_formula(self):
        from cousinsq.mdp import policy_evaluation, value_iteration

        m, cousins = self.set_2env(seed=4)
        _, pi = value_iteration(m, tol=1e-10)
        v_ref = policy_evaluation(m, pi).values
        errors = dict(analysis.bellman_errors(cousins, m))
        for cousin in cousins:
            v_n = policy_evaluation(cousin.mdp, pi).values
            be = np.zeros(m.num_states)
            for s in range(m.num_states):
                acc = m.costs.expected_costs[s, pi.actions[s]]
                for s2 in range(m.num_states):
                    acc += m.gamma * m.transitions.probs[pi.actions[s], s, s2] * v_n[s2]
                be[s] = acc - v_ref[s]
            assert errors[cousin.order] == pytest.approx(
                float(np.linalg.norm(be)), abs=1e-10
            )

    def test_greedy_ranking_runs(self):
        m, cousins = self.set_2env(seed=6)
        ranking = analysis.greedy_ape_ranking(cousins, m, 2)
        assert len(ranking) == 2
        assert ranking[0] == 1  # the original has zero policy error


class TestMeanGapSeries:
    def test_shrinks_on_converged_run(self):
        _, res = esql_trace(seed=11, min_visits=80)
        gaps = analysis.mean_gap_series(res.trace)
        early = gaps[: len(gaps) // 10].mean()
        late = gaps[-len(gaps) // 10 :].mean()
        assert late < early
