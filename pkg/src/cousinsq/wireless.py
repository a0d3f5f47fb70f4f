"""Generators for four wireless-network MDP families.

Every model exposes the sampler interface for learners plus analytic
transition rows and expected costs so small instances can be materialized
into exact MDPs for the oracle solvers. Within one step the stochastic
kernels apply in a fixed, documented order:

    arrivals / energy harvest  ->  action effects (transmission outcomes,
    cost accrual)  ->  channel / position transitions.

Costs are charged on the post-transmission buffer and battery levels and on
the channel states or positions current when the action was taken. State
indices are mixed-radix encodings with the controlled components (buffers,
batteries, positions) in the major digits and channel states in the minor
digits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .envs import EnvironmentSampler
from .mdp import CostModel, Mdp, TransitionTensor

DEFAULT_STATE_CAP = 1_000_000
DEFAULT_MATERIALIZE_ENTRIES = 50_000_000


class SizeError(ValueError):
    """The configuration would exceed a declared state-space or memory cap."""


@dataclass(frozen=True)
class GilbertElliotChannel:
    """Finite-state Markov channel; state 0 is the best by convention."""

    transition: np.ndarray  # (m, m) row-stochastic
    quality: np.ndarray  # (m,) success probabilities, sorted descending

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=float)
        q = np.asarray(self.quality, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 2:
            raise ValueError("channel needs a square transition matrix, >= 2 states")
        if np.abs(t.sum(axis=1) - 1.0).max() > 1e-9 or t.min() < 0:
            raise ValueError("channel transition matrix must be row-stochastic")
        if q.shape != (t.shape[0],) or q.min() < 0 or q.max() > 1:
            raise ValueError("quality must be per-state probabilities")
        if np.any(np.diff(q) > 1e-12):
            raise ValueError("quality must be sorted descending (state 0 best)")
        tt = t.copy()
        tt.setflags(write=False)
        qq = q.copy()
        qq.setflags(write=False)
        object.__setattr__(self, "transition", tt)
        object.__setattr__(self, "quality", qq)

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @staticmethod
    def default(
        num_states: int = 2,
        persist: float = 0.7,
        best_quality: float = 0.9,
        worst_quality: float = 0.2,
    ) -> "GilbertElliotChannel":
        m = num_states
        t = np.full((m, m), (1.0 - persist) / (m - 1))
        np.fill_diagonal(t, persist)
        return GilbertElliotChannel(t, np.linspace(best_quality, worst_quality, m))

    def stationary(self) -> np.ndarray:
        vals, vecs = np.linalg.eig(self.transition.T)
        idx = int(np.argmin(np.abs(vals - 1.0)))
        pi = np.real(vecs[:, idx])
        return pi / pi.sum()


def _bernoulli_combos(probs: Sequence[float]):
    """All 0/1 outcome vectors of independent Bernoullis with their weights."""
    n = len(probs)
    for bits in itertools.product((0, 1), repeat=n):
        p = 1.0
        for b, pr in zip(bits, probs):
            p *= pr if b else 1.0 - pr
        if p > 0.0:
            yield np.array(bits, dtype=np.int64), p


class WirelessModel(EnvironmentSampler):
    """Mixed-radix product state space plus per-channel Markov dynamics."""

    model_id: int = 0

    def __init__(
        self,
        controlled_radices: Sequence[int],
        channels: Sequence[GilbertElliotChannel],
        num_actions: int,
        gamma: float,
        seed: int | tuple[int, ...] = 0,
        state_cap: int = DEFAULT_STATE_CAP,
    ):
        radices = tuple(int(r) for r in controlled_radices) + tuple(
            ch.num_states for ch in channels
        )
        total = int(np.prod([1] + list(radices)))
        if total > state_cap:
            raise SizeError(f"|S| = {total} exceeds the state cap {state_cap}")
        self._radices = radices
        self._num_controlled = len(controlled_radices)
        self.channels = list(channels)
        self._channel_cdfs = [np.cumsum(ch.transition, axis=1) for ch in self.channels]
        self.num_states = total
        self.num_actions = int(num_actions)
        self.gamma = float(gamma)
        grids = np.unravel_index(np.arange(total), radices) if radices else ()
        self._decode_table = (
            np.stack(grids, axis=1).astype(np.int64)
            if radices
            else np.zeros((1, 0), dtype=np.int64)
        )
        place = np.ones(len(radices), dtype=np.int64)
        for i in range(len(radices) - 2, -1, -1):
            place[i] = place[i + 1] * radices[i + 1]
        self._place = place
        self._channel_space = int(np.prod([1] + [ch.num_states for ch in channels]))
        super().__init__(seed)

    # -- state coding ------------------------------------------------------

    def decode_state(self, state: int) -> np.ndarray:
        return self._decode_table[state]

    def encode(self, components: Sequence[int]) -> int:
        return int(np.dot(np.asarray(components, dtype=np.int64), self._place))

    def split(self, state: int) -> tuple[np.ndarray, np.ndarray]:
        comps = self._decode_table[state]
        return comps[: self._num_controlled], comps[self._num_controlled :]

    def _check_indices(self, state: int, action: int) -> None:
        if not (0 <= state < self.num_states):
            raise IndexError(f"state {state} out of range")
        if not (0 <= action < self.num_actions):
            raise IndexError(f"action {action} out of range")

    # -- channel helpers ----------------------------------------------------

    def _step_channels(self, ch_states: np.ndarray, rng: np.random.Generator) -> list[int]:
        out = []
        for cdf, h in zip(self._channel_cdfs, ch_states):
            u = rng.random()
            out.append(int(min(np.searchsorted(cdf[h], u, side="right"), len(cdf) - 1)))
        return out

    def _joint_channel_row(self, ch_states: np.ndarray) -> np.ndarray:
        row = np.ones(1)
        for ch, h in zip(self.channels, ch_states):
            row = np.kron(row, ch.transition[h])
        return row

    # -- hooks implemented per model ----------------------------------------

    def controlled_outcomes(self, controlled, channels_now, action):
        """Yield (probability, next controlled components, instantaneous cost)."""
        raise NotImplementedError

    def realize_step(self, controlled, channels_now, action, rng):
        """Sample (next controlled components, instantaneous cost)."""
        raise NotImplementedError

    # -- sampler interface ----------------------------------------------------

    def _draw(self, state, action, rng):
        self._check_indices(state, action)
        controlled, ch = self.split(state)
        next_controlled, cost = self.realize_step(controlled, ch, action, rng)
        next_ch = self._step_channels(ch, rng)
        nxt = self.encode(list(next_controlled) + list(next_ch))
        return nxt, float(cost)

    # -- analytic kernels ------------------------------------------------------

    def transition_row(self, state: int, action: int) -> np.ndarray:
        self._check_indices(state, action)
        controlled, ch = self.split(state)
        ctrl_space = self.num_states // self._channel_space
        ctrl_dist = np.zeros(ctrl_space)
        ctrl_place = self._place[: self._num_controlled] // self._channel_space
        for prob, nxt_ctrl, _ in self.controlled_outcomes(controlled, ch, action):
            idx = int(np.dot(np.asarray(nxt_ctrl, dtype=np.int64), ctrl_place))
            ctrl_dist[idx] += prob
        return np.kron(ctrl_dist, self._joint_channel_row(ch))

    def expected_cost(self, state: int, action: int) -> float:
        self._check_indices(state, action)
        controlled, ch = self.split(state)
        total = 0.0
        for prob, _, cost in self.controlled_outcomes(controlled, ch, action):
            total += prob * cost
        return total


def _pairwise_inverse_distance(positions: np.ndarray, members: Sequence[int]) -> float:
    acc = 0.0
    for i_idx in range(len(members)):
        for j_idx in range(i_idx + 1, len(members)):
            d = abs(positions[members[i_idx]] - positions[members[j_idx]])
            acc += 1.0 / max(d, 1e-9)
    return acc


# --------------------------------------------------------------------------
# Model 1: multiple transmitters with buffers sharing one receiver;
# action chooses which transmitters send this slot.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Model1Config:
    num_tx: int = 3
    buffer_size: int = 3
    arrival_prob: float | tuple[float, ...] = 0.4
    num_channel_states: int = 2
    channel_persist: float = 0.7
    best_quality: float = 0.9
    worst_quality: float = 0.2
    tx_positions: tuple[float, ...] | None = None
    buffer_w: float = 1.0
    channel_w: float = 1.0
    collision_w: float = 1.0
    drop_penalty: float = 1.0
    gamma: float = 0.95

    def __post_init__(self):
        if self.num_tx < 1 or self.buffer_size < 1:
            raise ValueError("need at least one transmitter and a positive buffer")
        for w in (self.buffer_w, self.channel_w, self.collision_w, self.drop_penalty):
            if w < 0:
                raise ValueError("cost weights must be nonnegative")

    def arrivals(self) -> np.ndarray:
        p = self.arrival_prob
        arr = np.full(self.num_tx, p) if np.isscalar(p) else np.asarray(p, dtype=float)
        if arr.shape != (self.num_tx,) or arr.min() < 0 or arr.max() > 1:
            raise ValueError("arrival probabilities out of range")
        return arr

    def positions(self) -> np.ndarray:
        if self.tx_positions is None:
            return np.arange(1, self.num_tx + 1, dtype=float)
        pos = np.asarray(self.tx_positions, dtype=float)
        if pos.shape != (self.num_tx,):
            raise ValueError("tx_positions length mismatch")
        return pos


class Model1(WirelessModel):
    model_id = 1

    def __init__(self, config: Model1Config, seed=0, state_cap=DEFAULT_STATE_CAP):
        self.config = config
        self.arrival = config.arrivals()
        self.positions = config.positions()
        channels = [
            GilbertElliotChannel.default(
                config.num_channel_states,
                config.channel_persist,
                config.best_quality,
                config.worst_quality,
            )
            for _ in range(config.num_tx)
        ]
        super().__init__(
            controlled_radices=[config.buffer_size + 1] * config.num_tx,
            channels=channels,
            num_actions=2**config.num_tx,
            gamma=config.gamma,
            seed=seed,
            state_cap=state_cap,
        )
        ntx, b = config.num_tx, config.buffer_size
        self.cost_bound = (
            config.buffer_w * ntx * b
            + config.drop_penalty * ntx
            + config.channel_w * ntx
            + config.collision_w
            * max(ntx - 1, 0)
            * _pairwise_inverse_distance(self.positions, range(ntx))
        )

    def _action_bits(self, action: int) -> np.ndarray:
        return np.array(
            [(action >> i) & 1 for i in range(self.config.num_tx)], dtype=np.int64
        )

    def _cost(self, buffers_after, drops, senders, channels_now) -> float:
        cfg = self.config
        cost = cfg.buffer_w * float(buffers_after.sum())
        cost += cfg.drop_penalty * float(drops.sum())
        qualities = [self.channels[i].quality[channels_now[i]] for i in senders]
        cost += cfg.channel_w * float(sum(1.0 - q for q in qualities))
        if len(senders) > 1:
            cost += (
                cfg.collision_w
                * (len(senders) - 1)
                * _pairwise_inverse_distance(self.positions, senders)
            )
        return cost

    def _apply(self, buffers, channels_now, action, arrivals, successes):
        cfg = self.config
        raw = buffers + arrivals
        drops = (raw > cfg.buffer_size).astype(np.int64)
        b_arr = np.minimum(raw, cfg.buffer_size)
        bits = self._action_bits(action)
        senders = [i for i in range(cfg.num_tx) if bits[i] and b_arr[i] >= 1]
        b_final = b_arr.copy()
        for i, ok in zip(senders, successes):
            b_final[i] -= int(ok)
        return b_final, drops, senders

    def controlled_outcomes(self, controlled, channels_now, action):
        cfg = self.config
        bits = self._action_bits(action)
        for arrivals, p_arr in _bernoulli_combos(self.arrival):
            raw = controlled + arrivals
            b_arr = np.minimum(raw, cfg.buffer_size)
            senders = [i for i in range(cfg.num_tx) if bits[i] and b_arr[i] >= 1]
            succ_probs = [self.channels[i].quality[channels_now[i]] for i in senders]
            for successes, p_succ in _bernoulli_combos(succ_probs):
                b_final, drops, _ = self._apply(
                    controlled, channels_now, action, arrivals, successes
                )
                cost = self._cost(b_final, drops, senders, channels_now)
                yield p_arr * p_succ, b_final, cost

    def realize_step(self, controlled, channels_now, action, rng):
        cfg = self.config
        arrivals = (rng.random(cfg.num_tx) < self.arrival).astype(np.int64)
        raw = controlled + arrivals
        b_arr = np.minimum(raw, cfg.buffer_size)
        bits = self._action_bits(action)
        senders = [i for i in range(cfg.num_tx) if bits[i] and b_arr[i] >= 1]
        successes = [
            int(rng.random() < self.channels[i].quality[channels_now[i]])
            for i in senders
        ]
        b_final, drops, senders = self._apply(
            controlled, channels_now, action, arrivals, successes
        )
        return b_final, self._cost(b_final, drops, senders, channels_now)


# --------------------------------------------------------------------------
# Model 2: energy-harvesting transmitters choosing direct or relayed
# transmission; relays have limited capacity and noisy outputs.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Model2Config:
    num_tx: int = 2
    num_relays: int = 1
    battery_size: int = 2
    harvest_prob: float = 0.5
    num_channel_states: int = 2
    direct_persist: float = 0.7
    direct_best: float = 0.6
    direct_worst: float = 0.1
    relay_persist: float = 0.7
    relay_best: float = 0.9
    relay_worst: float = 0.4
    relay_corruption: float = 0.1
    relay_capacity: int = 1
    energy_cost_direct: int = 2
    energy_cost_relay: int = 1
    neg_throughput_w: float = 1.0
    drop_w: float = 1.0
    battery_w: float = 0.1
    gamma: float = 0.95

    def __post_init__(self):
        if self.num_tx < 1 or self.num_relays < 1 or self.battery_size < 1:
            raise ValueError("invalid topology sizes")
        if not (0 <= self.harvest_prob <= 1) or not (0 <= self.relay_corruption <= 1):
            raise ValueError("probabilities out of range")
        if min(self.energy_cost_direct, self.energy_cost_relay) < 1:
            raise ValueError("energy costs must be >= 1")


class Model2(WirelessModel):
    model_id = 2

    def __init__(self, config: Model2Config, seed=0, state_cap=DEFAULT_STATE_CAP):
        self.config = config
        direct = [
            GilbertElliotChannel.default(
                config.num_channel_states,
                config.direct_persist,
                config.direct_best,
                config.direct_worst,
            )
            for _ in range(config.num_tx)
        ]
        relay = [
            GilbertElliotChannel.default(
                config.num_channel_states,
                config.relay_persist,
                config.relay_best,
                config.relay_worst,
            )
            for _ in range(config.num_relays)
        ]
        super().__init__(
            controlled_radices=[config.battery_size + 1] * config.num_tx,
            channels=direct + relay,
            num_actions=2**config.num_tx,
            gamma=config.gamma,
            seed=seed,
            state_cap=state_cap,
        )
        ntx = config.num_tx
        self.cost_bound = (
            config.neg_throughput_w * ntx
            + config.drop_w * ntx
            + config.battery_w * ntx * max(config.energy_cost_direct, config.energy_cost_relay)
        )

    def _relay_of(self, tx: int) -> int:
        return tx % self.config.num_relays

    def _resolve(self, batteries, channels_now, action, harvest):
        """Deterministic part of a step: energy accounting and relay loads.

        Returns (next batteries, energy used, transmitting TXs with their
        per-TX success probabilities, number of packets dropped at relays).
        """
        cfg = self.config
        b = np.minimum(batteries + harvest, cfg.battery_size)
        used = np.zeros(cfg.num_tx, dtype=np.int64)
        attempts: list[tuple[int, float]] = []
        relay_load = [0] * cfg.num_relays
        drops = 0
        for i in range(cfg.num_tx):
            via_relay = (action >> i) & 1
            need = cfg.energy_cost_relay if via_relay else cfg.energy_cost_direct
            if b[i] < need:
                continue
            b[i] -= need
            used[i] = need
            if via_relay:
                j = self._relay_of(i)
                relay_load[j] += 1
                if relay_load[j] > cfg.relay_capacity:
                    drops += 1
                    continue
                h = channels_now[cfg.num_tx + j]
                q = self.channels[cfg.num_tx + j].quality[h] * (1.0 - cfg.relay_corruption)
            else:
                q = self.channels[i].quality[channels_now[i]]
            attempts.append((i, float(q)))
        return b, used, attempts, drops

    def _cost(self, throughput, drops, used) -> float:
        cfg = self.config
        return (
            -cfg.neg_throughput_w * float(throughput)
            + cfg.drop_w * float(drops)
            + cfg.battery_w * float(used.sum())
        )

    def controlled_outcomes(self, controlled, channels_now, action):
        cfg = self.config
        for harvest, p_h in _bernoulli_combos([cfg.harvest_prob] * cfg.num_tx):
            b, used, attempts, drops = self._resolve(
                controlled, channels_now, action, harvest
            )
            # success randomness does not touch the next state, so costs can
            # be averaged analytically
            expected_throughput = sum(q for _, q in attempts)
            yield p_h, b, self._cost(expected_throughput, drops, used)

    def realize_step(self, controlled, channels_now, action, rng):
        cfg = self.config
        harvest = (rng.random(cfg.num_tx) < cfg.harvest_prob).astype(np.int64)
        b, used, attempts, drops = self._resolve(controlled, channels_now, action, harvest)
        throughput = sum(int(rng.random() < q) for _, q in attempts)
        return b, self._cost(throughput, drops, used)


# --------------------------------------------------------------------------
# Model 3: multiple transmitters and receivers; action picks how many
# packets each transmitter sends, routed over its currently best channels.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Model3Config:
    num_tx: int = 2
    num_rx: int = 2
    buffer_size: int = 3
    arrival_prob: float = 0.4
    tx_max_packets: int = 1
    num_channel_states: int = 2
    channel_persist: float = 0.7
    best_quality: float = 0.9
    worst_quality: float = 0.3
    distance_falloff: float = 0.6
    buffer_w: float = 1.0
    channel_w: float = 1.0
    collision_w: float = 1.0
    rx_load_w: float = 1.0
    drop_penalty: float = 1.0
    gamma: float = 0.95

    def __post_init__(self):
        if min(self.num_tx, self.num_rx, self.buffer_size, self.tx_max_packets) < 1:
            raise ValueError("invalid topology sizes")
        if self.tx_max_packets > self.num_rx:
            raise ValueError("per-slot packets cannot exceed the receiver count")


class Model3(WirelessModel):
    model_id = 3

    def __init__(self, config: Model3Config, seed=0, state_cap=DEFAULT_STATE_CAP):
        self.config = config
        channels = []
        # one channel per TX-RX pair, flattened i * num_rx + j; farther pairs
        # see proportionally worse qualities
        for i in range(config.num_tx):
            for j in range(config.num_rx):
                scale = config.distance_falloff ** abs(i - j)
                channels.append(
                    GilbertElliotChannel.default(
                        config.num_channel_states,
                        config.channel_persist,
                        max(config.best_quality * scale, 0.05),
                        max(config.worst_quality * scale, 0.02),
                    )
                )
        super().__init__(
            controlled_radices=[config.buffer_size + 1] * config.num_tx,
            channels=channels,
            num_actions=(config.tx_max_packets + 1) ** config.num_tx,
            gamma=config.gamma,
            seed=seed,
            state_cap=state_cap,
        )
        self.tx_positions = np.arange(1, config.num_tx + 1, dtype=float)
        ntx, b = config.num_tx, config.buffer_size
        max_packets = ntx * config.tx_max_packets
        self.cost_bound = (
            config.buffer_w * ntx * b
            + config.drop_penalty * ntx
            + config.channel_w * max_packets
            + config.collision_w
            * max(max_packets - 1, 0)
            * _pairwise_inverse_distance(self.tx_positions, range(ntx))
            + config.rx_load_w * max_packets**2
        )

    def _packets(self, action: int) -> np.ndarray:
        base = self.config.tx_max_packets + 1
        out = np.zeros(self.config.num_tx, dtype=np.int64)
        for i in range(self.config.num_tx):
            out[i] = action % base
            action //= base
        return out

    def _route(self, tx: int, count: int, channels_now) -> list[int]:
        """Indices of the receivers used: best current quality, ties low."""
        cfg = self.config
        quals = [
            -self.channels[tx * cfg.num_rx + j].quality[channels_now[tx * cfg.num_rx + j]]
            for j in range(cfg.num_rx)
        ]
        order = np.lexsort((np.arange(cfg.num_rx), np.asarray(quals)))
        return [int(j) for j in order[:count]]

    def _layout(self, b_arr, channels_now, action):
        """Per-TX reserved slots [(tx, rx, success prob, has payload), ...].

        A transmitter reserves as many of its currently best channels as the
        action requests; airtime costs apply to every reserved slot, while
        only the slots that actually carry a buffered packet can succeed.
        """
        cfg = self.config
        slots = []
        requested = self._packets(action)
        for i in range(cfg.num_tx):
            count = int(requested[i])
            payload = int(min(count, b_arr[i]))
            for rank, j in enumerate(self._route(i, count, channels_now)):
                q = self.channels[i * cfg.num_rx + j].quality[
                    channels_now[i * cfg.num_rx + j]
                ]
                slots.append((i, j, float(q), rank < payload))
        return slots

    def _cost(self, buffers_after, drops, slots) -> float:
        cfg = self.config
        cost = cfg.buffer_w * float(buffers_after.sum())
        cost += cfg.drop_penalty * float(drops.sum())
        cost += cfg.channel_w * float(sum(1.0 - q for _, _, q, _ in slots))
        loads = np.zeros(cfg.num_rx)
        for _, j, _, _ in slots:
            loads[j] += 1.0
        for j in range(cfg.num_rx):
            senders = sorted({i for i, r, _, _ in slots if r == j})
            if loads[j] > 1:
                cost += (
                    cfg.collision_w
                    * (loads[j] - 1.0)
                    * _pairwise_inverse_distance(self.tx_positions, senders)
                )
        if slots:
            cost += cfg.rx_load_w * float(np.var(loads))
        return cost

    def controlled_outcomes(self, controlled, channels_now, action):
        cfg = self.config
        for arrivals, p_arr in _bernoulli_combos([cfg.arrival_prob] * cfg.num_tx):
            raw = controlled + arrivals
            drops = (raw > cfg.buffer_size).astype(np.int64)
            b_arr = np.minimum(raw, cfg.buffer_size)
            slots = self._layout(b_arr, channels_now, action)
            payload = [(i, q) for i, _, q, has in slots if has]
            for successes, p_succ in _bernoulli_combos([q for _, q in payload]):
                b_final = b_arr.copy()
                for (i, _), ok in zip(payload, successes):
                    b_final[i] -= int(ok)  # failures stay queued
                cost = self._cost(b_final, drops, slots)
                yield p_arr * p_succ, b_final, cost

    def realize_step(self, controlled, channels_now, action, rng):
        cfg = self.config
        arrivals = (rng.random(cfg.num_tx) < cfg.arrival_prob).astype(np.int64)
        raw = controlled + arrivals
        drops = (raw > cfg.buffer_size).astype(np.int64)
        b_arr = np.minimum(raw, cfg.buffer_size)
        slots = self._layout(b_arr, channels_now, action)
        b_final = b_arr.copy()
        for i, _, q, has in slots:
            if has and rng.random() < q:
                b_final[i] -= 1
        return b_final, self._cost(b_final, drops, slots)


# --------------------------------------------------------------------------
# Model 4: mobile transmitters on an integer grid choosing which fixed
# receiver to associate with; channels follow a path-loss law.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Model4Config:
    num_tx: int = 2
    grid_width: int = 3
    grid_height: int = 3
    rx_positions: tuple[tuple[int, int], ...] = ((1, 1),)
    tx_speeds: tuple[int, ...] | int = 1
    path_loss_exponent: float = 2.0
    neg_throughput_w: float = 1.0
    rx_load_w: float = 1.0
    interference_w: float = 1.0
    gamma: float = 0.95

    def __post_init__(self):
        if self.num_tx < 1 or self.grid_width < 1 or self.grid_height < 1:
            raise ValueError("invalid grid")
        if not self.rx_positions:
            raise ValueError("need at least one receiver")
        for (x, y) in self.rx_positions:
            if not (0 <= x < self.grid_width and 0 <= y < self.grid_height):
                raise ValueError("receiver outside the grid")

    def speeds(self) -> np.ndarray:
        sp = self.tx_speeds
        arr = np.full(self.num_tx, sp) if np.isscalar(sp) else np.asarray(sp)
        if arr.shape != (self.num_tx,) or arr.min() < 1:
            raise ValueError("speeds must be positive integers, one per TX")
        return arr.astype(np.int64)


_DIRECTIONS = ((0, 1), (0, -1), (1, 0), (-1, 0))


class Model4(WirelessModel):
    model_id = 4

    def __init__(self, config: Model4Config, seed=0, state_cap=DEFAULT_STATE_CAP):
        self.config = config
        self.speeds = config.speeds()
        rx_set = set(config.rx_positions)
        self.cells = [
            (x, y)
            for x in range(config.grid_width)
            for y in range(config.grid_height)
            if (x, y) not in rx_set
        ]
        if not self.cells:
            raise ValueError("no cells left for transmitters")
        self._cell_index = {cell: i for i, cell in enumerate(self.cells)}
        n_cells = len(self.cells)
        super().__init__(
            controlled_radices=[n_cells] * config.num_tx,
            channels=[],
            num_actions=len(config.rx_positions) ** config.num_tx,
            gamma=config.gamma,
            seed=seed,
            state_cap=state_cap,
        )
        self.rx_positions = [np.array(p, dtype=float) for p in config.rx_positions]
        # per-TX move distributions are position-only, so precompute them
        self._move_rows = [
            np.stack([self._move_row(c, int(sp)) for c in range(n_cells)])
            for sp in self.speeds
        ]
        self._move_cdfs = [np.cumsum(rows, axis=1) for rows in self._move_rows]
        ntx = config.num_tx
        self.cost_bound = (
            config.neg_throughput_w * ntx
            + config.rx_load_w * ntx**2
            + config.interference_w * ntx * (ntx - 1) / 2.0
        )

    def decode_state(self, state: int) -> np.ndarray:
        """Per-TX grid coordinates, so neighborhood distance is Manhattan."""
        cells = self._decode_table[state]
        coords = []
        for c in cells:
            coords.extend(self.cells[int(c)])
        return np.array(coords, dtype=np.int64)

    def _move_row(self, cell: int, speed: int) -> np.ndarray:
        x, y = self.cells[cell]
        feasible = []
        for dx, dy in _DIRECTIONS:
            nx, ny = x + dx * speed, y + dy * speed
            if (nx, ny) in self._cell_index:
                feasible.append(self._cell_index[(nx, ny)])
        row = np.zeros(len(self.cells))
        if not feasible:
            row[cell] = 1.0
        else:
            for c in feasible:
                row[c] += 1.0 / len(feasible)
        return row

    def _success_prob(self, tx_cell: int, rx: int) -> float:
        pos = np.array(self.cells[tx_cell], dtype=float)
        d = float(np.linalg.norm(pos - self.rx_positions[rx]))
        return float(np.clip(max(d, 1.0) ** (-self.config.path_loss_exponent), 0.05, 0.95))

    def _assoc(self, action: int) -> np.ndarray:
        base = len(self.config.rx_positions)
        out = np.zeros(self.config.num_tx, dtype=np.int64)
        for i in range(self.config.num_tx):
            out[i] = action % base
            action //= base
        return out

    def _deterministic_cost(self, cells, assoc) -> float:
        cfg = self.config
        loads = np.zeros(len(cfg.rx_positions))
        for r in assoc:
            loads[r] += 1.0
        cost = cfg.rx_load_w * float(np.var(loads))
        for i in range(cfg.num_tx):
            for j in range(i + 1, cfg.num_tx):
                if assoc[i] == assoc[j]:
                    pi = np.array(self.cells[int(cells[i])], dtype=float)
                    pj = np.array(self.cells[int(cells[j])], dtype=float)
                    d2 = float(np.sum((pi - pj) ** 2))
                    cost += cfg.interference_w / max(d2, 1.0)
        return cost

    def controlled_outcomes(self, controlled, channels_now, action):
        assoc = self._assoc(action)
        expected_throughput = sum(
            self._success_prob(int(controlled[i]), int(assoc[i]))
            for i in range(self.config.num_tx)
        )
        base = self._deterministic_cost(controlled, assoc)
        cost = base - self.config.neg_throughput_w * expected_throughput
        # positions move independently of the action
        dists = [self._move_rows[i][int(controlled[i])] for i in range(self.config.num_tx)]
        for combo in itertools.product(*[np.nonzero(d)[0] for d in dists]):
            p = 1.0
            for d, c in zip(dists, combo):
                p *= d[c]
            yield p, np.array(combo, dtype=np.int64), cost

    def realize_step(self, controlled, channels_now, action, rng):
        cfg = self.config
        assoc = self._assoc(action)
        throughput = sum(
            int(rng.random() < self._success_prob(int(controlled[i]), int(assoc[i])))
            for i in range(cfg.num_tx)
        )
        cost = (
            self._deterministic_cost(controlled, assoc)
            - cfg.neg_throughput_w * throughput
        )
        nxt = []
        for i in range(cfg.num_tx):
            cdf = self._move_cdfs[i][int(controlled[i])]
            u = rng.random()
            nxt.append(int(min(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)))
        return np.array(nxt, dtype=np.int64), cost


# --------------------------------------------------------------------------


MODEL_CLASSES = {1: (Model1, Model1Config), 2: (Model2, Model2Config),
                 3: (Model3, Model3Config), 4: (Model4, Model4Config)}


def build_model(model_id: int, config, seed=0, state_cap=DEFAULT_STATE_CAP) -> WirelessModel:
    if model_id not in MODEL_CLASSES:
        raise ValueError(f"model_id must be 1..4, got {model_id}")
    cls, cfg_cls = MODEL_CLASSES[model_id]
    if not isinstance(config, cfg_cls):
        raise TypeError(f"model {model_id} expects {cfg_cls.__name__}")
    return cls(config, seed=seed, state_cap=state_cap)


def materialize_ptt(
    model: WirelessModel, max_entries: int = DEFAULT_MATERIALIZE_ENTRIES
) -> Mdp:
    """Exact MDP of a model via analytic enumeration of its kernels."""
    s_count, a_count = model.num_states, model.num_actions
    if a_count * s_count * s_count > max_entries:
        raise SizeError(
            f"materialization needs {a_count * s_count * s_count} entries, "
            f"cap is {max_entries}"
        )
    probs = np.zeros((a_count, s_count, s_count))
    costs = np.zeros((s_count, a_count))
    for s in range(s_count):
        for a in range(a_count):
            row = model.transition_row(s, a)
            if abs(row.sum() - 1.0) > 1e-12:
                raise ArithmeticError(
                    f"enumerated row ({s}, {a}) sums to {row.sum():.15f}"
                )
            probs[a, s] = row
            costs[s, a] = model.expected_cost(s, a)
    return Mdp(TransitionTensor(probs), CostModel(costs), model.gamma)
