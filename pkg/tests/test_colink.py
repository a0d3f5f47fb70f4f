import numpy as np
import pytest

from cousinsq.colink import (
    SimilarityTensor,
    build_colink,
    estimate_ptt,
    l1_normalize,
    make_cousins,
)
from cousinsq.envs import MdpSampler, make_rng
from cousinsq.mdp import InvariantError, TransitionTensor, random_mdp


def random_tensor(num_states, num_actions, seed):
    return random_mdp(num_states, num_actions, 0.9, np.random.default_rng(seed)).transitions


def naive_colink(probs: np.ndarray, order: int) -> np.ndarray:
    """Brute-force double-sided sum via repeated matrix powers."""
    out = np.zeros_like(probs)
    for i in range(probs.shape[0]):
        p = probs[i]
        pt = p.T
        acc = np.zeros_like(p)
        for k in range(order - 1):
            acc += np.linalg.matrix_power(p, order - k - 1) @ np.linalg.matrix_power(
                pt, k + 1
            )
            acc += np.linalg.matrix_power(pt, order - k - 1) @ np.linalg.matrix_power(
                p, k + 1
            )
        out[i] = acc
    return out


class TestBuildColink:
    def test_identity_second_order(self):
        eye = TransitionTensor(np.eye(3)[None, :, :])
        sim = build_colink(eye, 2)
        assert np.allclose(sim.raw[0], 2 * np.eye(3), atol=1e-15)

    def test_symmetric_doubly_stochastic(self):
        p = np.array([[0.5, 0.3, 0.2], [0.3, 0.4, 0.3], [0.2, 0.3, 0.5]])
        sim = build_colink(TransitionTensor(p[None, :, :]), 2)
        assert np.allclose(sim.raw[0], 2 * (p @ p), atol=1e-14)

    def test_matches_naive_double_sum(self):
        tensor = random_tensor(4, 2, seed=11)
        sim = build_colink(tensor, 5)
        assert np.abs(sim.raw - naive_colink(tensor.probs, 5)).max() < 1e-12

    def test_order_one_copies_source(self):
        tensor = random_tensor(5, 2, seed=3)
        sim = build_colink(tensor, 1)
        assert sim.order == 1
        assert np.array_equal(sim.raw, tensor.probs)

    def test_order_below_one_rejected(self):
        tensor = random_tensor(3, 1, seed=1)
        with pytest.raises(ValueError):
            build_colink(tensor, 0)

    def test_recursion_consistency_and_symmetry(self):
        # property sweep over random tensors up to order 8, |S| <= 16
        g = np.random.default_rng(99)
        for _ in range(12):
            s = int(g.integers(2, 17))
            a = int(g.integers(1, 3))
            order = int(g.integers(2, 9))
            tensor = random_tensor(s, a, seed=int(g.integers(1 << 30)))
            sim = build_colink(tensor, order)
            assert np.abs(sim.raw - naive_colink(tensor.probs, order)).max() < 1e-12
            assert np.abs(sim.raw - sim.raw.transpose(0, 2, 1)).max() < 1e-12


class TestL1Normalize:
    def test_simple_row(self):
        raw = np.array([[[2.0, 2.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 3.0]]])
        out = l1_normalize(SimilarityTensor(1, raw))
        assert np.allclose(out.probs[0, 0], [0.5, 0.5, 0.0])

    def test_zero_row_becomes_uniform(self):
        raw = np.zeros((1, 4, 4))
        raw[0, 1, 2] = 1.0
        out = l1_normalize(SimilarityTensor(1, raw))
        assert np.allclose(out.probs[0, 0], 0.25)
        assert np.allclose(out.probs[0, 3], 0.25)

    def test_negative_entry_rejected(self):
        with pytest.raises(InvariantError):
            SimilarityTensor(1, -np.ones((1, 2, 2)))

    def test_idempotent_on_stochastic_input(self):
        tensor = random_tensor(6, 2, seed=8)
        again = l1_normalize(SimilarityTensor(1, tensor.probs))
        assert np.abs(again.probs - tensor.probs).max() < 1e-12

    def test_preserves_irreducibility(self):
        # ring chain plus self loops: irreducible and sparse
        s = 6
        p = np.zeros((s, s))
        for i in range(s):
            p[i, i] = 0.5
            p[i, (i + 1) % s] = 0.5
        out = l1_normalize(build_colink(TransitionTensor(p[None]), 2))
        # strong connectivity via breadth-first search over the support graph
        support = out.probs[0] > 0
        for start in range(s):
            seen = {start}
            frontier = [start]
            while frontier:
                node = frontier.pop()
                for j in np.nonzero(support[node])[0]:
                    if int(j) not in seen:
                        seen.add(int(j))
                        frontier.append(int(j))
            assert seen == set(range(s))


class TestMakeCousins:
    def test_order_one_is_source(self):
        m = random_mdp(4, 2, 0.9, np.random.default_rng(0))
        (cousin,) = make_cousins(m, [1])
        assert cousin.mdp is m

    def test_shared_cost_model_and_gamma(self):
        m = random_mdp(4, 2, 0.9, np.random.default_rng(1))
        cousins = make_cousins(m, [1, 2, 3, 4, 5])
        assert [c.order for c in cousins] == [1, 2, 3, 4, 5]
        for c in cousins:
            assert c.mdp.costs is m.costs
            assert c.mdp.gamma == m.gamma

    def test_identity_source_stays_identity(self):
        eye = TransitionTensor(np.eye(4)[None, :, :])
        from cousinsq.mdp import CostModel, Mdp

        m = Mdp(eye, CostModel(np.zeros((4, 1))), 0.9)
        for cousin in make_cousins(m, [1, 2, 4]):
            assert np.allclose(cousin.mdp.transitions.probs, eye.probs)

    def test_duplicate_orders_rejected(self):
        m = random_mdp(3, 2, 0.9, np.random.default_rng(2))
        with pytest.raises(ValueError):
            make_cousins(m, [1, 2, 2])


class TestEstimatePtt:
    def test_deterministic_exact(self):
        probs = np.zeros((2, 3, 3))
        probs[:, :, 1] = 1.0
        from cousinsq.mdp import CostModel, Mdp

        m = Mdp(TransitionTensor(probs), CostModel(np.zeros((3, 2))), 0.9)
        est, counts = estimate_ptt(MdpSampler(m), 1, make_rng(0))
        assert np.array_equal(est.probs, probs)
        assert counts.min() == 1

    def test_binomial_concentration(self):
        probs = np.full((1, 2, 2), 0.5)
        from cousinsq.mdp import CostModel, Mdp

        m = Mdp(TransitionTensor(probs), CostModel(np.zeros((2, 1))), 0.9)
        est, _ = estimate_ptt(MdpSampler(m), 10_000, make_rng(7))
        assert np.abs(est.probs - probs).max() <= 0.02

    def test_impossible_transitions_stay_zero(self):
        probs = np.zeros((1, 3, 3))
        probs[0, :, 0] = 1.0
        from cousinsq.mdp import CostModel, Mdp

        m = Mdp(TransitionTensor(probs), CostModel(np.zeros((3, 1))), 0.9)
        est, _ = estimate_ptt(MdpSampler(m), 50, make_rng(1))
        assert est.probs[0, :, 1:].max() == 0.0

    def test_min_visits_validated(self):
        m = random_mdp(2, 1, 0.9, np.random.default_rng(0))
        with pytest.raises(ValueError):
            estimate_ptt(MdpSampler(m), 0, make_rng(0))

    def test_error_shrinks_with_budget(self):
        m = random_mdp(3, 2, 0.9, np.random.default_rng(5))
        budgets = (100, 1000, 10_000)
        means = []
        for visits in budgets:
            errs = []
            for rep in range(5):
                est, _ = estimate_ptt(MdpSampler(m), visits, make_rng(rep, visits))
                errs.append(np.abs(est.probs - m.transitions.probs).max())
            means.append(np.mean(errs))
        assert means[0] >= means[1] >= means[2]
