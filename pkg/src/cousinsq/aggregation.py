"""Structural state aggregation: nearest-neighbor clustering of states.

Each cluster is served by a single Q-table row; learners run unchanged on
the reduced space through a wrapping sampler while the underlying
simulation keeps stepping true states. Distances are L1 between decoded
component vectors, which respects the product structure of the wireless
state spaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs import EnvironmentSampler


@dataclass(frozen=True)
class AggregationMap:
    k: int
    state_to_cluster: np.ndarray  # (S,)
    representatives: np.ndarray  # (cluster_count,), true-state index per cluster

    def __post_init__(self):
        m = np.asarray(self.state_to_cluster, dtype=np.int64)
        reps = np.asarray(self.representatives, dtype=np.int64)
        counts = np.bincount(m, minlength=len(reps))
        if len(reps) == 0 or counts.min() < 1:
            raise ValueError("every cluster must be nonempty")
        if self.k == 0 and not np.array_equal(m, np.arange(len(m))):
            raise ValueError("k=0 must be the identity map")
        mm = m.copy()
        mm.setflags(write=False)
        rr = reps.copy()
        rr.setflags(write=False)
        object.__setattr__(self, "state_to_cluster", mm)
        object.__setattr__(self, "representatives", rr)

    @property
    def cluster_count(self) -> int:
        return len(self.representatives)

    @property
    def num_states(self) -> int:
        return len(self.state_to_cluster)

    @property
    def memory_reduction_factor(self) -> float:
        return self.num_states / self.cluster_count

    def expand_policy(self, cluster_actions: np.ndarray) -> np.ndarray:
        """Lift a per-cluster action array back to the full state space."""
        return np.asarray(cluster_actions)[self.state_to_cluster]


def build_aggregation(model, k: int) -> AggregationMap:
    """Greedy scan: each unassigned state becomes a representative and
    absorbs its k nearest unassigned neighbors (L1 on decoded components,
    ties to the lower state index)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    s_count = model.num_states
    if k >= s_count:
        raise ValueError(f"k={k} must be smaller than the state count {s_count}")
    decoded = np.stack([model.decode_state(s) for s in range(s_count)]).astype(float)
    assignment = np.full(s_count, -1, dtype=np.int64)
    reps: list[int] = []
    for s in range(s_count):
        if assignment[s] >= 0:
            continue
        cluster = len(reps)
        reps.append(s)
        assignment[s] = cluster
        if k == 0:
            continue
        free = np.nonzero(assignment < 0)[0]
        if len(free) == 0:
            continue
        dists = np.abs(decoded[free] - decoded[s]).sum(axis=1)
        order = np.lexsort((free, dists))
        for idx in order[:k]:
            assignment[free[idx]] = cluster
    return AggregationMap(k, assignment, np.array(reps, dtype=np.int64))


def cost_spread(map_: AggregationMap, expected_costs: np.ndarray) -> float:
    """Largest within-cluster spread of expected costs over any action.

    The policy-error-vs-k trend is only meaningful when this is small; the
    verification harness reports it alongside the trend.
    """
    costs = np.asarray(expected_costs)
    worst = 0.0
    for c in range(map_.cluster_count):
        members = np.nonzero(map_.state_to_cluster == c)[0]
        block = costs[members]
        worst = max(worst, float((block.max(axis=0) - block.min(axis=0)).max()))
    return worst


class AggregatedSampler(EnvironmentSampler):
    """Presents cluster indices to the learner; simulates true states.

    Directed resets land on the cluster representative. Costs pass through
    unmodified.
    """

    def __init__(self, inner: EnvironmentSampler, map_: AggregationMap):
        if map_.num_states != inner.num_states:
            raise ValueError("aggregation map was built for a different state space")
        self.inner = inner
        self.map = map_
        self.num_states = map_.cluster_count
        self.num_actions = inner.num_actions
        self.gamma = inner.gamma
        self.cost_bound = inner.cost_bound

    def reseed(self, seed) -> None:
        self.inner.reseed(seed)

    @property
    def rng(self):
        return self.inner.rng

    @rng.setter
    def rng(self, value):  # base-class __init__ assigns through reseed
        self.inner.rng = value

    def reset_to(self, cluster: int) -> None:
        self.inner.reset_to(int(self.map.representatives[cluster]))

    @property
    def current_state(self) -> int:
        return int(self.map.state_to_cluster[self.inner.current_state])

    def step(self, action: int) -> tuple[int, float]:
        nxt, cost = self.inner.step(action)
        return int(self.map.state_to_cluster[nxt]), cost

    def sample(self, cluster: int, action: int, rng=None) -> tuple[int, float]:
        nxt, cost = self.inner.sample(
            int(self.map.representatives[cluster]), action, rng
        )
        return int(self.map.state_to_cluster[nxt]), cost


def wrap_aggregated(env: EnvironmentSampler, map_: AggregationMap) -> AggregatedSampler:
    return AggregatedSampler(env, map_)
