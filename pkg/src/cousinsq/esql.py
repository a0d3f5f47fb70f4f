"""Ensemble synthetic Q-learning (ESQL).

K tabular learners run in lockstep on K related environments (the original
plus its co-link cousins). Each iteration every learner takes one
epsilon-greedy step in its own environment and applies the standard update;
the greedy policies are then compared against the original environment's
policy, the per-environment agreement fractions are softmax-normalized into
weights, and the fused output table moves toward the weighted combination:
Q_it <- u * Q_it + (1 - u) * sum_n w_n * Q_n.

Termination counts visits in the original environment only. The fusion
reduces in fixed index order, so results are independent of any worker
scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .envs import EnvironmentSampler, check_compatible, start_stream, aux_stream
from .mdp import Mdp, Policy, QTable, policy_evaluation, value_iteration
from .qlearning import LearningSchedule, VisitCounter, epsilon_greedy, greedy_policy
from .trace import CoverageError, ExperimentTrace, TraceRecorder

WEIGHT_TOL = 1e-12


def softmax(x: np.ndarray) -> np.ndarray:
    z = np.exp(x - np.max(x))
    return z / z.sum()


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) < 1 or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("weights must sum to 1")
        # the singleton vector is exactly (1.0,); otherwise entries are interior
        if len(w) > 1 and (np.any(w <= 0.0) or np.any(w >= 1.0)):
            raise ValueError("weights must be softmax-normalized")
        out = w.copy()
        out.setflags(write=False)
        object.__setattr__(self, "weights", out)

    def __len__(self) -> int:
        return len(self.weights)


def init_weights(k: int, rng: np.random.Generator) -> WeightVector:
    """Softmax of k uniform[0,1] draws; breaks symmetry at startup."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return WeightVector(softmax(rng.random(k)))


def correct_estimation_rate(reference: Policy, candidate: Policy) -> float:
    """Fraction of states whose actions agree."""
    if len(reference) != len(candidate):
        raise ValueError("policies must have equal length")
    return float(np.mean(reference.actions == candidate.actions))


def ensemble_update(
    q_it: np.ndarray, q_tables: np.ndarray, weights: np.ndarray, u: float
) -> np.ndarray:
    """Entrywise fusion u * q_it + (1 - u) * sum_n w_n * q_n."""
    if not (0.0 <= u <= 1.0):
        raise ValueError("u must lie in [0, 1]")
    q_tables = np.asarray(q_tables)
    weights = np.asarray(weights, dtype=float)
    if q_tables.shape[0] != weights.shape[0] or q_tables.shape[1:] != q_it.shape:
        raise ValueError("dimension mismatch between tables and weights")
    return u * q_it + (1.0 - u) * np.einsum("n,nsa->sa", weights, q_tables)


@dataclass(frozen=True)
class EnsembleConfig:
    """Inputs of the ensemble run.

    `seeds` holds one entry per environment plus a final one for the common
    episode start states (and the weight initialization).
    """

    orders: tuple[int, ...]
    u: float | Callable[[int], float] = 0.5
    trajectory_len: int = 15
    min_visits: int = 50
    schedule: LearningSchedule = field(default_factory=LearningSchedule)
    seeds: tuple[int, ...] = (0, 1)
    max_steps: int = 10_000_000
    on_cap: str = "error"
    weight_every: int = 1
    snapshot_cadence: int = 0
    ape_cadence: int = 1

    def __post_init__(self):
        orders = tuple(self.orders)
        if len(set(orders)) != len(orders):
            raise ValueError("orders must be distinct")
        if not orders or orders[0] != 1:
            raise ValueError("orders must start with the original environment (1)")
        if not callable(self.u) and not (0.0 < self.u < 1.0):
            raise ValueError("constant u must lie strictly inside (0, 1)")
        if self.trajectory_len < 1 or self.min_visits < 1:
            raise ValueError("trajectory_len and min_visits must be >= 1")
        if len(self.seeds) != len(orders) + 1:
            raise ValueError("need one seed per environment plus a start seed")
        if self.weight_every < 1:
            raise ValueError("weight_every must be >= 1")
        if self.on_cap not in ("error", "stop"):
            raise ValueError("on_cap must be 'error' or 'stop'")
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "seeds", tuple(self.seeds))

    @property
    def num_envs(self) -> int:
        return len(self.orders)


@dataclass
class EnsembleResult:
    q_it: QTable
    policy: Policy
    trace: ExperimentTrace
    final_weights: np.ndarray
    env_q: np.ndarray  # (K, S, A) final per-environment tables


def run_esql(
    envs: Sequence[EnvironmentSampler],
    config: EnsembleConfig,
    oracle_policy: Policy | None = None,
    ape_fn: Callable[[np.ndarray], float] | None = None,
    config_hash: str = "",
) -> EnsembleResult:
    """Run the ensemble until the primary environment meets its visit quota."""
    check_compatible(envs)
    k = len(envs)
    if k != config.num_envs:
        raise ValueError("environment count does not match config orders")
    s_count, a_count = envs[0].num_states, envs[0].num_actions
    gamma = envs[0].gamma
    for env, seed in zip(envs, config.seeds):
        env.reseed(seed)
    starts = start_stream(config.seeds[k])
    w = init_weights(k, aux_stream(config.seeds[k])).weights.copy()

    qs = np.zeros((k, s_count, a_count))
    q_it = np.zeros((s_count, a_count))
    policies = np.zeros((k, s_count), dtype=np.int64)
    visits = VisitCounter(s_count, a_count)
    recorder = TraceRecorder(num_envs=k, snapshot_cadence=config.snapshot_cadence)
    if ape_fn is None and oracle_policy is not None:
        oracle = np.asarray(oracle_policy.actions)
        ape_fn = lambda q: float(np.mean(np.argmin(q, axis=1) != oracle))  # noqa: E731
    u_fn = config.u if callable(config.u) else None
    q_bound = envs[0].cost_bound / (1.0 - gamma) + 1.0

    t = 0
    episode = 0
    capped = False
    states = np.zeros(k, dtype=np.int64)
    while not visits.all_at_least(config.min_visits):
        if t >= config.max_steps:
            capped = True
            break
        start = int(starts.integers(s_count))
        for env in envs:
            env.reset_to(start)
        states[:] = start
        for _ in range(config.trajectory_len):
            if t >= config.max_steps:
                break
            alpha = config.schedule.alpha_at(t)
            eps = config.schedule.epsilon_at(t)
            visited = (0, 0)
            for n, env in enumerate(envs):
                s = int(states[n])
                a = epsilon_greedy(qs[n], s, eps, env.rng)
                s_next, cost = env.step(a)
                target = cost + gamma * qs[n, s_next].min()
                qs[n, s, a] = (1.0 - alpha) * qs[n, s, a] + alpha * target
                policies[n, s] = int(np.argmin(qs[n, s]))
                if n == 0:
                    visits.visit(s, a)
                    visited = (s, a)
                states[n] = s_next
            if t % config.weight_every == 0:
                agreement = (policies == policies[0]).mean(axis=1)
                w = softmax(agreement)
            u_t = u_fn(t) if u_fn is not None else config.u
            q_it = ensemble_update(q_it, qs, w, u_t)
            ape = np.nan
            if ape_fn is not None and t % config.ape_cadence == 0:
                ape = ape_fn(q_it)
            recorder.record(t, episode, w, ape, visited, qit=q_it, env_q=qs)
            t += 1
        episode += 1
        if np.abs(qs).max(initial=0.0) > q_bound:
            raise RuntimeError("Q values escaped the discounted cost bound")

    if capped and not visits.all_at_least(config.min_visits):
        if config.on_cap == "error":
            starved = visits.starved(config.min_visits)
            raise CoverageError(
                f"step cap {config.max_steps} hit with {len(starved)} starved "
                f"pairs: {starved[:8]}{'...' if len(starved) > 8 else ''}",
                starved,
            )

    trace = recorder.finalize(visits.counts, config.seeds, config_hash)
    return EnsembleResult(
        q_it=QTable(q_it),
        policy=greedy_policy(q_it),
        trace=trace,
        final_weights=w.copy(),
        env_q=qs.copy(),
    )


def closed_form_weights(envs: Sequence[Mdp], gamma: float | None = None) -> WeightVector:
    """Limit weights computed directly from each environment's exact optimum.

    Each environment is solved for its own optimal policy; the weight of
    environment n is the softmax of its policy's agreement fraction with the
    first environment's policy. The first environment always agrees with
    itself, so its weight is maximal.
    """
    if not envs:
        raise ValueError("need at least one environment")
    solved = []
    for env in envs:
        if gamma is not None and abs(env.gamma - gamma) > 1e-12:
            env = Mdp(env.transitions, env.costs, gamma)
        _, policy = value_iteration(env, tol=1e-10)
        solved.append(policy)
    agreement = np.array(
        [correct_estimation_rate(solved[0], pol) for pol in solved]
    )
    w = softmax(agreement)
    assert w[0] >= w.max() - WEIGHT_TOL
    return WeightVector(w)
