import numpy as np
import pytest

from cousinsq.envs import make_rng
from cousinsq.wireless import (
    GilbertElliotChannel,
    Model1,
    Model1Config,
    Model2Config,
    Model3Config,
    Model4Config,
    SizeError,
    build_model,
    materialize_ptt,
)


def tiny_model1(**overrides):
    cfg = dict(
        num_tx=1,
        buffer_size=1,
        arrival_prob=0.5,
        num_channel_states=2,
        channel_persist=0.7,
        best_quality=0.9,
        worst_quality=0.2,
        gamma=0.9,
    )
    cfg.update(overrides)
    return build_model(1, Model1Config(**cfg), seed=3)


class TestGilbertElliot:
    def test_default_structure(self):
        ch = GilbertElliotChannel.default(3, persist=0.6)
        assert ch.transition.shape == (3, 3)
        assert np.allclose(ch.transition.sum(axis=1), 1.0)
        assert ch.quality[0] >= ch.quality[1] >= ch.quality[2]

    def test_quality_must_descend(self):
        with pytest.raises(ValueError):
            GilbertElliotChannel(np.full((2, 2), 0.5), np.array([0.1, 0.9]))

    def test_stationary_matches_long_run(self):
        ch = GilbertElliotChannel.default(3, persist=0.5)
        pi = ch.stationary()
        rng = make_rng(0)
        cdf = np.cumsum(ch.transition, axis=1)
        state, counts = 0, np.zeros(3)
        for _ in range(100_000):
            state = int(np.searchsorted(cdf[state], rng.random(), side="right"))
            counts[state] += 1
        assert np.abs(counts / counts.sum() - pi).max() < 0.01


class TestModel1:
    def test_tiny_dimensions(self):
        m = tiny_model1()
        assert m.num_states == 4
        assert m.num_actions == 2

    def test_materialized_rows_stochastic(self):
        mdp = materialize_ptt(tiny_model1())
        sums = mdp.transitions.probs.sum(axis=2)
        assert np.abs(sums - 1.0).max() < 1e-12

    def test_hand_enumerated_row(self):
        # state (buffer=1, channel=best), transmit: arrival is dropped either
        # way, success 0.9 empties the buffer, channel persists w.p. 0.7
        m = tiny_model1()
        s = m.encode([1, 0])
        row = m.transition_row(s, 1)
        expect = np.zeros(4)
        expect[m.encode([0, 0])] = 0.9 * 0.7
        expect[m.encode([0, 1])] = 0.9 * 0.3
        expect[m.encode([1, 0])] = 0.1 * 0.7
        expect[m.encode([1, 1])] = 0.1 * 0.3
        assert np.abs(row - expect).max() < 1e-12

    def test_deterministic_channel_entries_follow_arrival_law(self):
        # frozen channel and 0/1 success: every transition probability is a
        # {0,1} multiple of the arrival law
        m = tiny_model1(channel_persist=1.0, best_quality=1.0, worst_quality=0.0)
        mdp = materialize_ptt(m)
        values = {round(float(x), 10) for x in np.unique(mdp.transitions.probs)}
        assert values <= {0.0, 0.5, 1.0}

    def test_sampler_matches_materialized_rows(self):
        m = tiny_model1()
        mdp = materialize_ptt(m)
        rng = make_rng(1)
        for (s, a) in [(1, 1), (3, 0)]:
            counts = np.zeros(m.num_states)
            for _ in range(100_000):
                nxt, _ = m.sample(s, a, rng)
                counts[nxt] += 1
            assert np.abs(counts / counts.sum() - mdp.transitions.probs[a, s]).max() < 0.01

    def test_sampled_costs_match_expected_in_mean(self):
        m = tiny_model1()
        mdp = materialize_ptt(m)
        rng = make_rng(2)
        s, a = 3, 1
        total = sum(m.sample(s, a, rng)[1] for _ in range(100_000))
        assert abs(total / 100_000 - mdp.costs.expected_costs[s, a]) < 0.02

    def test_encode_decode_bijective(self):
        m = tiny_model1(num_tx=2, buffer_size=2)
        seen = set()
        for s in range(m.num_states):
            comps = tuple(int(c) for c in m.decode_state(s))
            assert m.encode(comps) == s
            seen.add(comps)
        assert len(seen) == m.num_states


class TestCostLinearity:
    @pytest.mark.parametrize("model_id", [1, 2, 3, 4])
    def test_zero_weights_zero_costs(self, model_id):
        zero = dict(
            {
                1: dict(buffer_w=0, channel_w=0, collision_w=0, drop_penalty=0),
                2: dict(neg_throughput_w=0, drop_w=0, battery_w=0),
                3: dict(
                    buffer_w=0, channel_w=0, collision_w=0, rx_load_w=0, drop_penalty=0
                ),
                4: dict(neg_throughput_w=0, rx_load_w=0, interference_w=0),
            }[model_id]
        )
        base = {
            1: dict(num_tx=2, buffer_size=1),
            2: dict(num_tx=1, battery_size=1),
            3: dict(num_tx=2, num_rx=2, buffer_size=1),
            4: dict(num_tx=2, grid_width=3, grid_height=2, rx_positions=((1, 1),)),
        }[model_id]
        cfg_cls = {1: Model1Config, 2: Model2Config, 3: Model3Config, 4: Model4Config}
        m = build_model(model_id, cfg_cls[model_id](**base, **zero), seed=0)
        m.reset_to(0)
        for _ in range(200):
            a = int(make_rng(7).integers(m.num_actions))
            _, cost = m.step(a)
            assert cost == 0.0

    @pytest.mark.parametrize("model_id", [1, 2, 3, 4])
    def test_costs_scale_linearly_with_weights(self, model_id):
        base = {
            1: dict(num_tx=2, buffer_size=1),
            2: dict(num_tx=1, battery_size=1),
            3: dict(num_tx=2, num_rx=2, buffer_size=1),
            4: dict(num_tx=2, grid_width=3, grid_height=2, rx_positions=((1, 1),)),
        }[model_id]
        weights = {
            1: ("buffer_w", "channel_w", "collision_w", "drop_penalty"),
            2: ("neg_throughput_w", "drop_w", "battery_w"),
            3: ("buffer_w", "channel_w", "collision_w", "rx_load_w", "drop_penalty"),
            4: ("neg_throughput_w", "rx_load_w", "interference_w"),
        }[model_id]
        cfg_cls = {1: Model1Config, 2: Model2Config, 3: Model3Config, 4: Model4Config}
        base_cfg = cfg_cls[model_id](**base)
        single = build_model(model_id, base_cfg, seed=9)
        doubled = build_model(
            model_id,
            cfg_cls[model_id](
                **base, **{w: 2.0 * getattr(base_cfg, w) for w in weights}
            ),
            seed=9,
        )
        single.reset_to(0)
        doubled.reset_to(0)
        rng_a = make_rng(31)
        rng_b = make_rng(31)
        for t in range(300):
            a = t % single.num_actions
            s1, c1 = single.sample(t % single.num_states, a, rng_a)
            s2, c2 = doubled.sample(t % single.num_states, a, rng_b)
            assert s1 == s2
            assert c2 == pytest.approx(2.0 * c1, abs=1e-12)


class TestModel2:
    def test_materializes_and_solves(self):
        m = build_model(2, Model2Config(num_tx=1, num_relays=1, battery_size=2))
        mdp = materialize_ptt(m)
        assert np.abs(mdp.transitions.probs.sum(axis=2) - 1.0).max() < 1e-12

    def test_relay_overload_drops(self):
        cfg = Model2Config(
            num_tx=2, num_relays=1, battery_size=2, harvest_prob=0.0,
            relay_capacity=1, energy_cost_relay=1, neg_throughput_w=0.0,
            battery_w=0.0, drop_w=1.0,
        )
        m = build_model(2, cfg)
        # both TX full battery, both route via the single relay: one is dropped
        s = m.encode([2, 2, 0, 0, 0])
        cost = m.expected_cost(s, 0b11)
        assert cost == pytest.approx(1.0)


class TestModel3:
    def test_routing_prefers_better_channel(self):
        cfg = Model3Config(num_tx=1, num_rx=2, buffer_size=1, tx_max_packets=1,
                           distance_falloff=1.0)
        m = build_model(3, cfg)
        # channels (0,0) bad, (0,1) good: the single packet goes to rx 1
        routed = m._route(0, 1, np.array([1, 0]))
        assert routed == [1]
        # equal states tie-break to the lower receiver
        routed = m._route(0, 1, np.array([0, 0]))
        assert routed == [0]

    def test_tx_permutation_symmetry(self):
        cfg = Model3Config(
            num_tx=2, num_rx=2, buffer_size=1, tx_max_packets=1,
            distance_falloff=1.0, gamma=0.9,
        )
        m = build_model(3, cfg)
        mdp = materialize_ptt(m)
        base = cfg.tx_max_packets + 1

        def perm_state(s):
            b0, b1, h00, h01, h10, h11 = (int(c) for c in m.decode_state(s))
            return m.encode([b1, b0, h10, h11, h00, h01])

        def perm_action(a):
            p0, p1 = a % base, a // base
            return p1 % base + p0 * base

        perm = np.array([perm_state(s) for s in range(m.num_states)])
        for a in range(m.num_actions):
            pa = perm_action(a)
            for s in range(m.num_states):
                row = mdp.transitions.probs[a, s]
                permuted_row = mdp.transitions.probs[pa, perm[s]][perm]
                assert np.abs(row - permuted_row).max() < 1e-12
                assert mdp.costs.expected_costs[s, a] == pytest.approx(
                    mdp.costs.expected_costs[perm[s], pa], abs=1e-12
                )


class TestModel4:
    def test_movement_marginal(self):
        cfg = Model4Config(num_tx=1, grid_width=2, grid_height=2,
                           rx_positions=((1, 1),), tx_speeds=1)
        m = build_model(4, cfg)
        row = m.transition_row(0, 0)
        rng = make_rng(5)
        counts = np.zeros(m.num_states)
        for _ in range(100_000):
            nxt, _ = m.sample(0, 0, rng)
            counts[nxt] += 1
        assert np.abs(counts / counts.sum() - row).max() < 0.01

    def test_tx_never_on_receiver(self):
        cfg = Model4Config(num_tx=1, grid_width=2, grid_height=2, rx_positions=((1, 1),))
        m = build_model(4, cfg)
        assert (1, 1) not in m.cells

    def test_decode_gives_coordinates(self):
        cfg = Model4Config(num_tx=2, grid_width=3, grid_height=2, rx_positions=((1, 1),))
        m = build_model(4, cfg)
        coords = m.decode_state(0)
        assert coords.shape == (4,)  # x, y per transmitter


class TestCaps:
    def test_state_cap(self):
        with pytest.raises(SizeError):
            build_model(
                1,
                Model1Config(num_tx=3, buffer_size=30, num_channel_states=4),
                state_cap=1000,
            )

    def test_materialize_cap(self):
        m = tiny_model1(num_tx=2, buffer_size=2)
        with pytest.raises(SizeError):
            materialize_ptt(m, max_entries=10)
