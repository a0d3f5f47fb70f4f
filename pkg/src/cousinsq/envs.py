"""Environment sampler interface shared by all learners.

A sampler owns its random stream, tracks a current state for trajectory
stepping, and (when the dynamics allow it) supports directed draws from an
arbitrary (state, action) pair, which the transition-estimation code relies
on.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .mdp import Mdp


class CapabilityError(RuntimeError):
    """The environment cannot honor the requested sampling mode."""


def make_rng(*entropy: int) -> np.random.Generator:
    """Deterministic generator keyed by an integer tuple."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_env_seeds(seed: int, count: int) -> list[tuple[int, int]]:
    """Stable per-environment seed keys for one experiment seed.

    The layout is independent of the environment count so runs with different
    ensemble sizes still share the stream of any environment they have in
    common (and the start-state stream, keyed separately).
    """
    return [(seed, n) for n in range(count)]


START_STREAM_KEY = 1_000_000
AUX_STREAM_KEY = 1_000_001


def start_stream(seed: int) -> np.random.Generator:
    return make_rng(seed, START_STREAM_KEY)


def aux_stream(seed: int) -> np.random.Generator:
    return make_rng(seed, AUX_STREAM_KEY)


class EnvironmentSampler:
    """Base class: subclasses fill in `_draw(state, action, rng)`."""

    num_states: int
    num_actions: int
    gamma: float
    cost_bound: float

    def __init__(self, seed: int | tuple[int, ...] = 0):
        self.reseed(seed)
        self._state = 0

    def reseed(self, seed: int | tuple[int, ...]) -> None:
        entropy = seed if isinstance(seed, tuple) else (seed,)
        self.rng = make_rng(*entropy)

    def reset_to(self, state: int) -> None:
        if not (0 <= state < self.num_states):
            raise IndexError(f"state {state} out of range")
        self._state = int(state)

    @property
    def current_state(self) -> int:
        return self._state

    def step(self, action: int) -> tuple[int, float]:
        """Advance the tracked state with this sampler's own stream."""
        nxt, cost = self._draw(self._state, action, self.rng)
        self._state = nxt
        return nxt, cost

    def sample(
        self, state: int, action: int, rng: np.random.Generator | None = None
    ) -> tuple[int, float]:
        """Directed draw from (state, action) without touching the trajectory."""
        return self._draw(state, action, self.rng if rng is None else rng)

    def _draw(
        self, state: int, action: int, rng: np.random.Generator
    ) -> tuple[int, float]:
        raise NotImplementedError


class MdpSampler(EnvironmentSampler):
    """Sampler backed by an explicit MDP; transition rows are pre-integrated."""

    def __init__(self, mdp: Mdp, seed: int | tuple[int, ...] = 0):
        self.mdp = mdp
        self.num_states = mdp.num_states
        self.num_actions = mdp.num_actions
        self.gamma = mdp.gamma
        self.cost_bound = mdp.costs.c_max
        self._cdfs = np.cumsum(mdp.transitions.probs, axis=2)
        super().__init__(seed)

    def _draw(self, state, action, rng):
        if not (0 <= state < self.num_states):
            raise IndexError(f"state {state} out of range")
        if not (0 <= action < self.num_actions):
            raise IndexError(f"action {action} out of range")
        u = rng.random()
        nxt = int(
            min(
                np.searchsorted(self._cdfs[action, state], u, side="right"),
                self.num_states - 1,
            )
        )
        tc = self.mdp.costs.transition_costs
        if tc is not None:
            cost = float(tc[action, state, nxt])
        else:
            cost = float(self.mdp.costs.expected_costs[state, action])
        return nxt, cost


def check_compatible(envs: Sequence[EnvironmentSampler]) -> None:
    """All ensemble members must share the state/action space and discount."""
    if not envs:
        raise ValueError("need at least one environment")
    first = envs[0]
    for env in envs[1:]:
        if (env.num_states, env.num_actions) != (first.num_states, first.num_actions):
            raise ValueError("environments disagree on state/action dimensions")
        if abs(env.gamma - first.gamma) > 1e-12:
            raise ValueError("environments disagree on the discount factor")
