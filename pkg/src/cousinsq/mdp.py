"""Finite discounted-cost MDPs: types, simulation stepping, and exact solvers.

The solvers here (value iteration, direct policy evaluation) are the
ground-truth oracles used by every learner and diagnostic in the package.
Transition tensors are stored densely as one row-stochastic matrix per
action, shape (num_actions, num_states, num_states).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

PROB_TOL = 1e-9
DEFAULT_SOLVER_TOL = 1e-6


class InvariantError(ValueError):
    """A structural invariant (stochasticity, nonnegativity, ...) is violated."""


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations. Carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TransitionTensor:
    """Per-action transition matrices; every row of every matrix sums to 1."""

    probs: np.ndarray  # (A, S, S)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 3 or p.shape[1] != p.shape[2]:
            raise InvariantError(f"expected (A, S, S) tensor, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise InvariantError("transition probabilities must be finite")
        if p.min() < -PROB_TOL:
            raise InvariantError(f"negative transition probability {p.min()}")
        rows = p.sum(axis=2)
        worst = np.abs(rows - 1.0).max()
        if worst > PROB_TOL:
            raise InvariantError(f"rows must sum to 1 (max deviation {worst:.3e})")
        object.__setattr__(self, "probs", _frozen(np.clip(p, 0.0, None)))

    @property
    def num_actions(self) -> int:
        return self.probs.shape[0]

    @property
    def num_states(self) -> int:
        return self.probs.shape[1]

    def matrix(self, action: int) -> np.ndarray:
        return self.probs[action]


@dataclass(frozen=True)
class CostModel:
    """Expected per-(state, action) costs, optionally backed by transition costs.

    When transition costs are present the expected costs must equal their
    transition-weighted average; `attach_transitions` performs that check
    because the weighting depends on the transition tensor.
    """

    expected_costs: np.ndarray  # (S, A)
    transition_costs: np.ndarray | None = None  # (A, S, S)

    def __post_init__(self):
        c = np.asarray(self.expected_costs, dtype=float)
        if c.ndim != 2:
            raise InvariantError(f"expected (S, A) cost matrix, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InvariantError("costs must be finite")
        object.__setattr__(self, "expected_costs", _frozen(c))
        if self.transition_costs is not None:
            tc = np.asarray(self.transition_costs, dtype=float)
            if tc.shape != (c.shape[1], c.shape[0], c.shape[0]):
                raise InvariantError(
                    f"transition costs shape {tc.shape} inconsistent with {c.shape}"
                )
            if not np.all(np.isfinite(tc)):
                raise InvariantError("transition costs must be finite")
            object.__setattr__(self, "transition_costs", _frozen(tc))

    @property
    def c_max(self) -> float:
        """Declared bound on |cost|; computed, not assumed."""
        bound = float(np.abs(self.expected_costs).max(initial=0.0))
        if self.transition_costs is not None:
            bound = max(bound, float(np.abs(self.transition_costs).max(initial=0.0)))
        return bound

    def check_consistency(self, transitions: TransitionTensor) -> None:
        if self.transition_costs is None:
            return
        implied = np.einsum("ast,ast->sa", transitions.probs, self.transition_costs)
        worst = np.abs(implied - self.expected_costs).max()
        if worst > PROB_TOL:
            raise InvariantError(
                f"expected costs disagree with transition costs (max {worst:.3e})"
            )


@dataclass(frozen=True)
class Mdp:
    transitions: TransitionTensor
    costs: CostModel
    gamma: float

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise InvariantError(f"gamma must lie strictly inside (0, 1), got {self.gamma}")
        if self.costs.expected_costs.shape != (self.num_states, self.num_actions):
            raise InvariantError("cost matrix dimensions do not match transitions")
        self.costs.check_consistency(self.transitions)

    @property
    def num_states(self) -> int:
        return self.transitions.num_states

    @property
    def num_actions(self) -> int:
        return self.transitions.num_actions

    @property
    def value_bound(self) -> float:
        """Sup-norm bound c_max / (1 - gamma) on any value or Q function."""
        return self.costs.c_max / (1.0 - self.gamma)


@dataclass(frozen=True)
class Policy:
    """Deterministic stationary policy: one action index per state."""

    actions: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.actions, dtype=np.int64)
        if a.ndim != 1:
            raise InvariantError("policy must be a flat action array")
        if a.min(initial=0) < 0:
            raise InvariantError("negative action index in policy")
        out = a.copy()
        out.setflags(write=False)
        object.__setattr__(self, "actions", out)

    def __len__(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class ValueFunction:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise InvariantError("value function must be a finite flat array")
        object.__setattr__(self, "values", _frozen(v))


@dataclass(frozen=True)
class QTable:
    """Action-value table, shape (num_states, num_actions)."""

    values: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.values, dtype=float)
        if q.ndim != 2 or not np.all(np.isfinite(q)):
            raise InvariantError("Q table must be a finite (S, A) matrix")
        object.__setattr__(self, "values", _frozen(q))


def validate_policy(policy: Policy, mdp: Mdp) -> None:
    if len(policy) != mdp.num_states:
        raise ValueError("policy length does not match state count")
    if policy.actions.max(initial=0) >= mdp.num_actions:
        raise ValueError("policy contains out-of-range action")


def step(
    mdp: Mdp, state: int, action: int, rng: np.random.Generator
) -> tuple[int, float]:
    """Sample one transition; returns (next_state, instantaneous cost).

    Consumes exactly one uniform draw from `rng`.
    """
    if not (0 <= state < mdp.num_states):
        raise IndexError(f"state {state} out of range")
    if not (0 <= action < mdp.num_actions):
        raise IndexError(f"action {action} out of range")
    row = mdp.transitions.probs[action, state]
    cdf = np.cumsum(row)
    nxt = int(min(np.searchsorted(cdf, rng.random(), side="right"), mdp.num_states - 1))
    if mdp.costs.transition_costs is not None:
        cost = float(mdp.costs.transition_costs[action, state, nxt])
    else:
        cost = float(mdp.costs.expected_costs[state, action])
    return nxt, cost


def _bellman_values(mdp: Mdp, v: np.ndarray) -> np.ndarray:
    """Q-matrix (S, A) of the Bellman minimization backup at v."""
    future = np.einsum("ast,t->sa", mdp.transitions.probs, v)
    return mdp.costs.expected_costs + mdp.gamma * future


def value_iteration(
    mdp: Mdp, tol: float = DEFAULT_SOLVER_TOL, max_iters: int = 1_000_000
) -> tuple[ValueFunction, Policy]:
    """Solve the optimality fixed point to sup-norm residual <= tol.

    Greedy tie-breaks go to the lowest action index so repeated runs and the
    policy-error metric are reproducible.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = np.zeros(mdp.num_states)
    prev_delta = np.inf
    # stopping at this sweep-delta keeps the value itself within tol of the
    # fixed point, which is stronger than a tol-sized backup residual
    stop = tol * (1.0 - mdp.gamma) / mdp.gamma
    for _ in range(max_iters):
        q = _bellman_values(mdp, v)
        v_next = q.min(axis=1)
        delta = float(np.abs(v_next - v).max())
        # gamma-contraction of the backup operator, checked on every sweep
        assert delta <= mdp.gamma * prev_delta + 1e-12 * (1.0 + prev_delta)
        prev_delta = delta
        v = v_next
        if delta <= stop:
            q = _bellman_values(mdp, v)
            policy = Policy(np.argmin(q, axis=1))
            assert np.abs(v).max(initial=0.0) <= mdp.value_bound + tol
            return ValueFunction(v), policy
    raise ConvergenceError(
        f"value iteration did not reach tol={tol} in {max_iters} iterations",
        residual=prev_delta,
    )


def policy_evaluation(mdp: Mdp, policy: Policy) -> ValueFunction:
    """Exact policy value via a direct linear solve of (I - gamma P_pi) v = c_pi."""
    validate_policy(policy, mdp)
    idx = np.arange(mdp.num_states)
    p_pi = mdp.transitions.probs[policy.actions, idx, :]
    c_pi = mdp.costs.expected_costs[idx, policy.actions]
    system = np.eye(mdp.num_states) - mdp.gamma * p_pi
    v = np.linalg.solve(system, c_pi)
    residual = np.abs(system @ v - c_pi).max(initial=0.0)
    if residual > 1e-8 * (np.abs(c_pi).max(initial=0.0) + 1e-12):
        raise ArithmeticError(f"policy evaluation residual too large: {residual:.3e}")
    return ValueFunction(v)


def optimal_q(mdp: Mdp, tol: float = DEFAULT_SOLVER_TOL, max_iters: int = 1_000_000) -> QTable:
    """Fixed point of the Q backup, to within tol; min over actions equals v*."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    q = np.zeros((mdp.num_states, mdp.num_actions))
    delta = np.inf
    stop = tol * (1.0 - mdp.gamma) / mdp.gamma
    for _ in range(max_iters):
        q_next = _bellman_values(mdp, q.min(axis=1))
        delta = float(np.abs(q_next - q).max())
        q = q_next
        if delta <= stop:
            assert np.abs(q).max(initial=0.0) <= mdp.value_bound + tol
            return QTable(q)
    raise ConvergenceError(
        f"Q iteration did not reach tol={tol} in {max_iters} iterations", residual=delta
    )


def random_mdp(
    num_states: int,
    num_actions: int,
    gamma: float,
    rng: np.random.Generator,
    row_support: int | None = None,
    cost_low: float = 0.0,
    cost_high: float = 1.0,
) -> Mdp:
    """Random dense (or row-sparse) MDP with uniform costs; test/CLI utility."""
    probs = np.zeros((num_actions, num_states, num_states))
    for a in range(num_actions):
        for s in range(num_states):
            if row_support is None or row_support >= num_states:
                weights = rng.random(num_states)
                probs[a, s] = weights / weights.sum()
            else:
                support = rng.choice(num_states, size=row_support, replace=False)
                weights = rng.random(row_support)
                probs[a, s, support] = weights / weights.sum()
    costs = cost_low + (cost_high - cost_low) * rng.random((num_states, num_actions))
    return Mdp(TransitionTensor(probs), CostModel(costs), gamma)


# --- JSON serialization -----------------------------------------------------

_KNOWN_FIELDS = {
    "num_states",
    "num_actions",
    "gamma",
    "probs",
    "expected_costs",
    "transition_costs",
    "order",
}


def mdp_to_dict(mdp: Mdp) -> dict:
    doc = {
        "num_states": mdp.num_states,
        "num_actions": mdp.num_actions,
        "gamma": mdp.gamma,
        "probs": mdp.transitions.probs.tolist(),
        "expected_costs": mdp.costs.expected_costs.tolist(),
    }
    if mdp.costs.transition_costs is not None:
        doc["transition_costs"] = mdp.costs.transition_costs.tolist()
    return doc


def mdp_from_dict(doc: dict) -> Mdp:
    unknown = set(doc) - _KNOWN_FIELDS
    if unknown:
        raise ValueError(f"unknown MDP document fields: {sorted(unknown)}")
    for key in ("num_states", "num_actions", "gamma", "probs", "expected_costs"):
        if key not in doc:
            raise ValueError(f"MDP document missing field '{key}'")
    probs = np.asarray(doc["probs"], dtype=float)
    expected = np.asarray(doc["expected_costs"], dtype=float)
    tensor = TransitionTensor(probs)
    if tensor.num_states != doc["num_states"] or tensor.num_actions != doc["num_actions"]:
        raise ValueError("declared dimensions disagree with probs shape")
    tc = doc.get("transition_costs")
    costs = CostModel(expected, None if tc is None else np.asarray(tc, dtype=float))
    return Mdp(tensor, costs, float(doc["gamma"]))


def save_mdp(mdp: Mdp, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mdp_to_dict(mdp), fh)


def load_mdp(path: str) -> Mdp:
    with open(path, "r", encoding="utf-8") as fh:
        return mdp_from_dict(json.load(fh))
