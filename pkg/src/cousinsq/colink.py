"""Co-link similarity tensors and the synthetic environments built from them.

For n >= 2 the order-n tensor of a per-action transition matrix P is the
double-sided sum over k = 0..n-2 of P^(n-k-1) (P^T)^(k+1) + (P^T)^(n-k-1)
P^(k+1); order 1 is the source tensor itself. Row normalization turns the
result back into a transition tensor, giving a family of structurally
related chains over the same state space that all keep the original cost
model and discount.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .envs import EnvironmentSampler, make_rng
from .mdp import InvariantError, Mdp, TransitionTensor, mdp_to_dict

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class SimilarityTensor:
    order: int
    raw: np.ndarray  # (A, S, S), nonnegative

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        raw = np.asarray(self.raw, dtype=float)
        if raw.ndim != 3 or raw.shape[1] != raw.shape[2]:
            raise InvariantError(f"expected (A, S, S) tensor, got {raw.shape}")
        if raw.min() < 0:
            raise InvariantError("similarities must be nonnegative")
        if self.order >= 2:
            skew = np.abs(raw - raw.transpose(0, 2, 1)).max()
            if skew > SYMMETRY_TOL * max(1.0, np.abs(raw).max()):
                raise InvariantError(f"order-{self.order} tensor not symmetric ({skew:.3e})")
        out = raw.copy()
        out.setflags(write=False)
        object.__setattr__(self, "raw", out)


@dataclass(frozen=True)
class SyntheticEnvironment:
    """Row-normalized order-n chain paired with the source cost model."""

    order: int
    mdp: Mdp


def build_colink(source: TransitionTensor, order: int) -> SimilarityTensor:
    """Order-n similarity tensor from memoized powers of P and P^T.

    Costs n-2 extra multiplies for the power table and n-1 products per side,
    rather than the quadratic count of the naive double loop.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if order == 1:
        return SimilarityTensor(1, source.probs.copy())
    a_count, s_count = source.num_actions, source.num_states
    raw = np.empty((a_count, s_count, s_count))
    for i in range(a_count):
        p = source.probs[i]
        powers = [np.eye(s_count), p]
        for _ in range(order - 2):
            powers.append(powers[-1] @ p)
        acc = np.zeros((s_count, s_count))
        for k in range(order - 1):
            fwd = powers[order - k - 1]
            bwd = powers[k + 1].T
            acc += fwd @ bwd + bwd @ fwd
        raw[i] = acc
    return SimilarityTensor(order, raw)


def l1_normalize(sim: SimilarityTensor) -> TransitionTensor:
    """Divide each row by its sum; an all-zero row becomes uniform."""
    raw = np.asarray(sim.raw, dtype=float)
    if raw.min() < 0:
        raise InvariantError("cannot normalize negative similarities")
    sums = raw.sum(axis=2, keepdims=True)
    s_count = raw.shape[1]
    with np.errstate(invalid="ignore", divide="ignore"):
        normalized = np.where(sums > 0, raw / np.where(sums > 0, sums, 1.0), 1.0 / s_count)
    return TransitionTensor(normalized)


def make_cousins(env: Mdp, orders: Sequence[int]) -> list[SyntheticEnvironment]:
    """One synthetic environment per order; order 1 is the source itself.

    Every cousin shares the source cost model object and discount factor.
    """
    orders = list(orders)
    if len(set(orders)) != len(orders):
        raise ValueError(f"duplicate orders in {orders}")
    if any(o < 1 for o in orders):
        raise ValueError("orders must all be >= 1")
    cousins = []
    for order in orders:
        if order == 1:
            cousins.append(SyntheticEnvironment(1, env))
            continue
        tensor = l1_normalize(build_colink(env.transitions, order))
        cousins.append(SyntheticEnvironment(order, Mdp(tensor, env.costs, env.gamma)))
    return cousins


def cousin_to_dict(cousin: SyntheticEnvironment) -> dict:
    doc = mdp_to_dict(cousin.mdp)
    doc["order"] = cousin.order
    return doc


def estimate_ptt(
    sampler: EnvironmentSampler, min_visits: int, rng: np.random.Generator
) -> tuple[TransitionTensor, np.ndarray]:
    """Estimate the transition tensor by directed sample averaging.

    Every (state, action) pair is drawn exactly `min_visits` times; rows are
    stochastic by construction. Returns the estimate and the visit counts.
    """
    if min_visits < 1:
        raise ValueError("min_visits must be >= 1")
    s_count, a_count = sampler.num_states, sampler.num_actions
    counts = np.zeros((a_count, s_count, s_count), dtype=np.int64)
    for s in range(s_count):
        for a in range(a_count):
            for _ in range(min_visits):
                nxt, _ = sampler.sample(s, a, rng)
                counts[a, s, nxt] += 1
    probs = counts / float(min_visits)
    visit_counts = np.full((s_count, a_count), min_visits, dtype=np.int64)
    return TransitionTensor(probs), visit_counts


def estimated_mdp(
    sampler: EnvironmentSampler,
    costs,
    gamma: float,
    min_visits: int,
    rng: np.random.Generator | None = None,
    seed: int = 0,
) -> Mdp:
    """Convenience wrapper: estimated tensor plus a known cost model."""
    if rng is None:
        rng = make_rng(seed)
    tensor, _ = estimate_ptt(sampler, min_visits, rng)
    return Mdp(tensor, costs, gamma)
