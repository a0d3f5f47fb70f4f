"""Tabular Q-learning primitives and the single-environment baseline variants.

All learners share one trajectory strategy: episodes of a fixed length
started from a common random state, running until every (state, action)
pair of the environment has been visited a minimum number of times (with a
step cap guarding against starvation). Within a step the random draws occur
in a fixed documented order - exploration coin, optional uniform action,
environment transition, then any variant-internal coins - so identically
seeded runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .envs import EnvironmentSampler, start_stream
from .mdp import Policy, QTable
from .trace import CoverageError, ExperimentTrace, TraceRecorder

BASELINE_VARIANTS = ("simple", "speedy", "double", "maxmin", "ensemble_bootstrap")

DEFAULT_STEP_CAP = 10_000_000


@dataclass(frozen=True)
class LearningSchedule:
    """Learning-rate and exploration-rate curves as pure functions of t.

    The default learning rate is 1 / (1 + t / alpha_tau). The default
    exploration rate decays geometrically onto a floor,
    max(epsilon_decay^t, epsilon_floor); setting `epsilon_floor_mode=False`
    selects min(epsilon_decay^t, epsilon_floor) instead, which decays to zero
    once the curves cross.
    """

    alpha_tau: float = 1000.0
    alpha_constant: float | None = None
    epsilon_decay: float = 0.99
    epsilon_floor: float = 0.01
    epsilon_floor_mode: bool = True

    def __post_init__(self):
        if self.alpha_constant is not None and not (0 < self.alpha_constant <= 1):
            raise ValueError("constant alpha must lie in (0, 1]")
        if self.alpha_tau <= 0:
            raise ValueError("alpha_tau must be positive")
        if not (0 < self.epsilon_decay <= 1) or not (0 <= self.epsilon_floor <= 1):
            raise ValueError("epsilon parameters out of range")

    def alpha_at(self, t: int) -> float:
        if self.alpha_constant is not None:
            return self.alpha_constant
        return 1.0 / (1.0 + t / self.alpha_tau)

    def epsilon_at(self, t: int) -> float:
        decayed = self.epsilon_decay**t
        if self.epsilon_floor_mode:
            return max(decayed, self.epsilon_floor)
        return min(decayed, self.epsilon_floor)


class VisitCounter:
    """Monotone per-(state, action) visit counts."""

    def __init__(self, num_states: int, num_actions: int):
        self.counts = np.zeros((num_states, num_actions), dtype=np.int64)

    def visit(self, state: int, action: int) -> None:
        self.counts[state, action] += 1

    def all_at_least(self, v: int) -> bool:
        return bool(self.counts.min() >= v)

    def starved(self, v: int) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(self.counts < v)
        return list(zip(rows.tolist(), cols.tolist()))


def q_update(
    q: np.ndarray,
    s: int,
    a: int,
    s_next: int,
    cost: float,
    alpha: float,
    gamma: float,
) -> float:
    """In-place single-entry update toward cost + gamma * min_a' Q(s', a')."""
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    target = cost + gamma * q[s_next].min()
    q[s, a] = (1.0 - alpha) * q[s, a] + alpha * target
    return float(q[s, a])


def epsilon_greedy(
    q: np.ndarray, s: int, epsilon: float, rng: np.random.Generator
) -> int:
    """Uniform action with probability epsilon, else lowest-index argmin.

    Always consumes one uniform draw; a second only when exploring.
    """
    if not (0 <= epsilon <= 1):
        raise ValueError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        return int(rng.integers(q.shape[1]))
    return int(np.argmin(q[s]))


def greedy_policy(q: np.ndarray | QTable) -> Policy:
    values = q.values if isinstance(q, QTable) else q
    return Policy(np.argmin(values, axis=1))


def _policy_error(q: np.ndarray, oracle: np.ndarray) -> float:
    return float(np.mean(np.argmin(q, axis=1) != oracle))


class _Variant:
    """Update rule plus the table combination that defines the estimator."""

    def __init__(self, s_count: int, a_count: int):
        self.tables = [np.zeros((s_count, a_count))]

    def behavior_table(self) -> np.ndarray:
        return self.tables[0]

    def estimate(self) -> np.ndarray:
        return self.tables[0]

    def update(self, s, a, s_next, cost, alpha, gamma, rng) -> None:
        raise NotImplementedError


class _Simple(_Variant):
    def update(self, s, a, s_next, cost, alpha, gamma, rng):
        q_update(self.tables[0], s, a, s_next, cost, alpha, gamma)


class _Speedy(_Variant):
    """Keeps a lazily trailing copy of the previous iterate per entry."""

    def __init__(self, s_count, a_count):
        super().__init__(s_count, a_count)
        self.prev = np.zeros((s_count, a_count))

    def update(self, s, a, s_next, cost, alpha, gamma, rng):
        q = self.tables[0]
        target_cur = cost + gamma * q[s_next].min()
        target_prev = cost + gamma * self.prev[s_next].min()
        old = q[s, a]
        q[s, a] = old + alpha * (target_prev - old) + (1.0 - alpha) * (
            target_cur - target_prev
        )
        self.prev[s, a] = old


class _Double(_Variant):
    def __init__(self, s_count, a_count):
        super().__init__(s_count, a_count)
        self.tables.append(np.zeros((s_count, a_count)))

    def behavior_table(self):
        return 0.5 * (self.tables[0] + self.tables[1])

    def estimate(self):
        return self.behavior_table()

    def update(self, s, a, s_next, cost, alpha, gamma, rng):
        # coin drawn after the transition, from the same env stream
        first = rng.random() < 0.5
        qa, qb = (self.tables[0], self.tables[1]) if first else (
            self.tables[1],
            self.tables[0],
        )
        best = int(np.argmin(qa[s_next]))
        target = cost + gamma * qb[s_next, best]
        qa[s, a] += alpha * (target - qa[s, a])


class _MaxMin(_Variant):
    """Cost-minimization mirror of the ensemble min-combination: the acting
    and final estimator is the entrywise max over tables, which counters the
    downward bias of min-based targets."""

    def __init__(self, s_count, a_count, size: int):
        self.tables = [np.zeros((s_count, a_count)) for _ in range(size)]

    def behavior_table(self):
        return np.maximum.reduce(self.tables)

    def estimate(self):
        return self.behavior_table()

    def update(self, s, a, s_next, cost, alpha, gamma, rng):
        comb = self.behavior_table()
        target = cost + gamma * comb[s_next].min()
        j = int(rng.integers(len(self.tables)))
        q = self.tables[j]
        q[s, a] += alpha * (target - q[s, a])


class _EnsembleBootstrap(_Variant):
    """Each table trains on an independent Bernoulli(1/2) subsample."""

    def __init__(self, s_count, a_count, size: int):
        self.tables = [np.zeros((s_count, a_count)) for _ in range(size)]

    def behavior_table(self):
        return np.mean(self.tables, axis=0)

    def estimate(self):
        return self.behavior_table()

    def update(self, s, a, s_next, cost, alpha, gamma, rng):
        mask = rng.random(len(self.tables)) < 0.5
        for include, q in zip(mask, self.tables):
            if include:
                q_update(q, s, a, s_next, cost, alpha, gamma)


def _make_variant(name: str, s_count: int, a_count: int, size: int) -> _Variant:
    if name == "simple":
        return _Simple(s_count, a_count)
    if name == "speedy":
        return _Speedy(s_count, a_count)
    if name == "double":
        return _Double(s_count, a_count)
    if name == "maxmin":
        return _MaxMin(s_count, a_count, size)
    if name == "ensemble_bootstrap":
        return _EnsembleBootstrap(s_count, a_count, size)
    raise ValueError(f"unknown variant '{name}'; choose from {BASELINE_VARIANTS}")


@dataclass
class BaselineResult:
    q: QTable
    policy: Policy
    trace: ExperimentTrace


def run_baseline(
    variant: str,
    env: EnvironmentSampler,
    schedule: LearningSchedule,
    l: int,
    v: int,
    seeds: tuple[int, int],
    *,
    max_steps: int = DEFAULT_STEP_CAP,
    on_cap: str = "error",
    ensemble_size: int = 2,
    oracle_policy: Policy | None = None,
    ape_fn: Callable[[np.ndarray], float] | None = None,
    ape_cadence: int = 1,
    snapshot_cadence: int = 0,
) -> BaselineResult:
    """Run one baseline learner to visit-count termination.

    `seeds` is (environment seed, start-state seed); the environment seed
    drives exploration, transitions and variant-internal coins, the start
    seed only the common episode start states. `ape_fn`, when given, maps the
    current estimator table to a policy-error number recorded in the trace
    (overrides `oracle_policy`).
    """
    if l < 1 or v < 1:
        raise ValueError("l and v must both be >= 1")
    if on_cap not in ("error", "stop"):
        raise ValueError("on_cap must be 'error' or 'stop'")
    env.reseed(seeds[0])
    starts = start_stream(seeds[1])
    s_count, a_count = env.num_states, env.num_actions
    gamma = env.gamma
    learner = _make_variant(variant, s_count, a_count, ensemble_size)
    visits = VisitCounter(s_count, a_count)
    recorder = TraceRecorder(num_envs=1, snapshot_cadence=snapshot_cadence)
    if ape_fn is None and oracle_policy is not None:
        oracle = np.asarray(oracle_policy.actions)
        ape_fn = lambda q: _policy_error(q, oracle)  # noqa: E731
    q_bound = env.cost_bound / (1.0 - gamma) + 1.0
    one = np.ones(1)

    t = 0
    episode = 0
    capped = False
    while not visits.all_at_least(v):
        if t >= max_steps:
            capped = True
            break
        start = int(starts.integers(s_count))
        env.reset_to(start)
        s = start
        for _ in range(l):
            if t >= max_steps:
                break
            alpha = schedule.alpha_at(t)
            eps = schedule.epsilon_at(t)
            a = epsilon_greedy(learner.behavior_table(), s, eps, env.rng)
            s_next, cost = env.step(a)
            learner.update(s, a, s_next, cost, alpha, gamma, env.rng)
            visits.visit(s, a)
            ape = np.nan
            if ape_fn is not None and t % ape_cadence == 0:
                ape = ape_fn(learner.estimate())
            est = learner.estimate() if snapshot_cadence else None
            recorder.record(
                t,
                episode,
                one,
                ape,
                (s, a),
                qit=est,
                env_q=None if est is None else est[None, :, :],
            )
            s = s_next
            t += 1
        episode += 1
        for q in learner.tables:
            if np.abs(q).max(initial=0.0) > q_bound:
                raise RuntimeError("Q values escaped the discounted cost bound")

    if capped and not visits.all_at_least(v):
        if on_cap == "error":
            starved = visits.starved(v)
            raise CoverageError(
                f"step cap {max_steps} hit with {len(starved)} starved pairs: "
                f"{starved[:8]}{'...' if len(starved) > 8 else ''}",
                starved,
            )

    trace = recorder.finalize(visits.counts, (seeds[0], seeds[1]))
    q_final = learner.estimate()
    return BaselineResult(QTable(q_final), greedy_policy(q_final), trace)
