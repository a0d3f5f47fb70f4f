"""Evaluation metrics and convergence/variance diagnostics.

Everything here is a pure function of recorded traces and exact solver
output: the policy-error metric, the fused-update stability checks with
their geometric-tail bounds, windowed moment estimators, the variance
ceilings under three independence regimes, distance-correlation
diagnostics, and the Bellman-error ranking of candidate environments.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .colink import SyntheticEnvironment
from .mdp import Mdp, Policy, QTable, policy_evaluation, value_iteration
from .trace import ExperimentTrace


def ape(optimal: Policy, estimated: Policy) -> float:
    """Average policy error: fraction of states whose actions disagree."""
    if len(optimal) != len(estimated):
        raise ValueError("policies must have equal length")
    return float(np.mean(optimal.actions != estimated.actions))


def delta_trace(trace: ExperimentTrace, s: int, a: int) -> tuple[np.ndarray, np.ndarray]:
    """Fused-table updates at (s, a) and the gaps between consecutive ones."""
    deltas = trace.delta_series(s, a)
    return deltas, np.abs(np.diff(deltas))


def mean_gap_series(trace: ExperimentTrace) -> np.ndarray:
    """|delta_t - delta_{t-1}| averaged over all (s, a), per iteration."""
    trace._require_dense()
    deltas = np.diff(trace.qit, axis=0, prepend=np.zeros_like(trace.qit[:1]))
    gaps = np.abs(np.diff(deltas, axis=0))
    return gaps.reshape(gaps.shape[0], -1).mean(axis=1)


def fusion_identity_residual(trace: ExperimentTrace, u: float) -> float:
    """Max violation of delta_t = u * delta_{t-1} + (1-u) * sum_n eps_{t-1}.

    This single identity mechanically verifies the recursion behind the
    stability bounds; it should hold to floating-point precision.
    """
    trace._require_dense()
    deltas = np.diff(trace.qit, axis=0, prepend=np.zeros_like(trace.qit[:1]))
    weighted = np.einsum("tk,tksa->tsa", trace.weights, trace.env_q)
    eps_sum = np.diff(weighted, axis=0)
    lhs = deltas[1:]
    rhs = u * deltas[:-1] + (1.0 - u) * eps_sum
    return float(np.abs(lhs - rhs).max(initial=0.0))


@dataclass(frozen=True)
class UpdateBoundResult:
    theta_per_env: np.ndarray
    theta_sum: float
    tail_max_delta: float
    holds: bool


def update_magnitude_bound(
    trace: ExperimentTrace, s: int, a: int, tail_fraction: float = 0.1
) -> UpdateBoundResult:
    """Empirical ceiling on the fused update from per-environment pieces.

    theta_n is the smallest constant dominating |eps_n| over the whole run;
    the bound says the tail of |delta_t| stays below their sum.
    """
    k = trace.num_envs
    thetas = np.array(
        [np.abs(trace.eps_series(n, s, a)).max(initial=0.0) for n in range(k)]
    )
    deltas = trace.delta_series(s, a)
    tail = max(1, int(len(deltas) * tail_fraction))
    tail_max = float(np.abs(deltas[-tail:]).max(initial=0.0))
    theta_sum = float(thetas.sum())
    return UpdateBoundResult(thetas, theta_sum, tail_max, tail_max <= theta_sum + 1e-12)


def iterations_to_update_threshold(beta: float, u: float, theta_sum: float) -> int:
    """Steps after which the geometric-tail envelope keeps |delta| <= beta."""
    if not (0.0 < u < 1.0):
        raise ValueError("u must lie strictly inside (0, 1)")
    if not (0.0 < beta < theta_sum):
        raise ValueError("beta must lie strictly between 0 and theta_sum")
    return int(np.ceil(np.log(1.0 - beta / theta_sum) / np.log(u)))


def first_passage(trace: ExperimentTrace, s: int, a: int, beta: float) -> int | None:
    """First iteration with |delta_t| <= beta, or None if never reached."""
    hits = np.nonzero(np.abs(trace.delta_series(s, a)) <= beta)[0]
    return int(hits[0]) if len(hits) else None


@dataclass(frozen=True)
class ContractionCheckResult:
    phi_per_env: np.ndarray
    all_below_one: bool
    skipped_per_env: np.ndarray  # zero-denominator ratios that were dropped
    vacuous_per_env: np.ndarray  # environments whose series was identically 0


def contraction_ratio_check(trace: ExperimentTrace, s: int, a: int) -> ContractionCheckResult:
    """Max consecutive-ratio of |eps_n|; ratios below one certify convergence."""
    k = trace.num_envs
    phis = np.zeros(k)
    skipped = np.zeros(k, dtype=np.int64)
    vacuous = np.zeros(k, dtype=bool)
    for n in range(k):
        eps = np.abs(trace.eps_series(n, s, a))
        denom = eps[:-1]
        numer = eps[1:]
        ok = denom > 0
        skipped[n] = int((~ok).sum())
        if not ok.any():
            vacuous[n] = True
            phis[n] = 0.0
            continue
        phis[n] = float((numer[ok] / denom[ok]).max())
    return ContractionCheckResult(phis, bool(np.all(phis < 1.0)), skipped, vacuous)


def windowed_moments(series: np.ndarray, t: int, window: int) -> tuple[float, float]:
    """Sliding-window mean and biased variance over [t-window, t+window]."""
    series = np.asarray(series, dtype=float)
    if window < 1:
        raise ValueError("window must be >= 1")
    if t < 2 * window:
        raise ValueError(f"need t >= 2*window (t={t}, window={window})")
    if t + window >= len(series):
        raise ValueError("series does not cover the requested window")
    chunk = series[t - window : t + window + 1]
    mean = float(chunk.mean())
    return mean, float(chunk.var())


@dataclass(frozen=True)
class VarianceBounds:
    strict: float
    modest: float
    none: float


def variance_bounds(u: float, lam: float) -> VarianceBounds:
    """Limit ceilings on Var[Q_it - Q*] under three independence regimes:
    across environments and time (strict), across time only (modest), and
    with no independence at all."""
    if not (0.0 < u < 1.0):
        raise ValueError("u must lie strictly inside (0, 1)")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    ratio = (1.0 - u) / (1.0 + u)
    strict = ratio * lam**2 / 3.0
    modest = ratio * lam**2
    none = 2.0 * lam**2 / (1.0 + u) ** 2 + ratio * lam**2
    return VarianceBounds(strict, modest, none)


@dataclass(frozen=True)
class EnvErrorStats:
    mean: float
    variance: float
    normal_mu: float
    normal_sigma: float
    lam: float  # scale with variance = lam^2 / 3


def error_distribution_diagnostics(
    trace: ExperimentTrace,
    q_star: QTable,
    s: int,
    a: int,
    t: int | None = None,
    window: int | None = None,
) -> list[EnvErrorStats]:
    """Per-environment moments and Gaussian fit of Q_n(s,a) - Q*(s,a).

    With `t` and `window` given, statistics are taken over that sliding
    window; otherwise over the whole recorded series.
    """
    out = []
    target = float(q_star.values[s, a])
    for n in range(trace.num_envs):
        series = trace.env_q_series(n, s, a) - target
        if t is not None and window is not None:
            if t < 2 * window or t + window >= len(series):
                raise ValueError("window not covered by the series")
            series = series[t - window : t + window + 1]
        mean = float(series.mean())
        var = float(series.var())
        out.append(EnvErrorStats(mean, var, mean, float(np.sqrt(var)), float(np.sqrt(3.0 * var))))
    return out


def fused_error_series(trace: ExperimentTrace, q_star: QTable, s: int, a: int) -> np.ndarray:
    return trace.qit_series(s, a) - float(q_star.values[s, a])


def distance_correlation(x: np.ndarray, y: np.ndarray) -> float:
    """Distance correlation of two samples; 0 for degenerate (constant) input.

    Captures nonlinear dependence; affine transforms of either variable leave
    it unchanged, and independent samples score near zero.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if len(x) != len(y):
        raise ValueError("inputs must have equal length")
    if len(x) < 4:
        raise ValueError("need at least 4 samples")
    a = np.abs(x[:, None] - x[None, :])
    b = np.abs(y[:, None] - y[None, :])
    a_c = a - a.mean(axis=0) - a.mean(axis=1)[:, None] + a.mean()
    b_c = b - b.mean(axis=0) - b.mean(axis=1)[:, None] + b.mean()
    n2 = float(len(x) ** 2)
    dcov2 = (a_c * b_c).sum() / n2
    dvar_x = (a_c * a_c).sum() / n2
    dvar_y = (b_c * b_c).sum() / n2
    if dvar_x <= 0 or dvar_y <= 0:
        return 0.0
    value = np.sqrt(max(dcov2, 0.0)) / np.sqrt(np.sqrt(dvar_x * dvar_y))
    return float(min(max(value, 0.0), 1.0))


def adc_matrix(
    traces: Sequence[ExperimentTrace],
    q_star: QTable,
    s: int,
    a: int,
    env_indices: Sequence[int],
    time_range: tuple[int, int],
    max_pairs: int = 200,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Averaged distance correlation between per-environment error samples.

    Entry (i, j) averages, over sampled time pairs t1 != t2 inside
    `time_range`, the distance correlation between the across-run samples of
    environment i's error at t1 and environment j's error at t2. Requires at
    least four runs recorded with dense snapshots.
    """
    if len(traces) < 4:
        raise ValueError("averaged distance correlation needs >= 4 runs")
    lo, hi = time_range
    horizon = min(tr.num_steps for tr in traces)
    hi = min(hi, horizon)
    if hi - lo < 2:
        raise ValueError("time range too short")
    if rng is None:
        rng = np.random.default_rng(0)
    # samples[n][t] across runs
    target = float(q_star.values[s, a])
    errors = np.stack(
        [
            np.stack([tr.env_q_series(n, s, a)[lo:hi] - target for n in env_indices])
            for tr in traces
        ]
    )  # (runs, envs, time)
    n_env = len(env_indices)
    span = hi - lo
    pair_count = min(max_pairs, span * (span - 1))
    t1 = rng.integers(span, size=pair_count)
    t2 = rng.integers(span, size=pair_count)
    keep = t1 != t2
    t1, t2 = t1[keep], t2[keep]
    out = np.zeros((n_env, n_env))
    for i in range(n_env):
        for j in range(n_env):
            vals = [
                distance_correlation(errors[:, i, u1], errors[:, j, u2])
                for u1, u2 in zip(t1, t2)
            ]
            out[i, j] = float(np.mean(vals)) if vals else 0.0
    return out


# -- environment ranking ------------------------------------------------------


def bellman_errors(
    envs: Sequence[SyntheticEnvironment], reference: Mdp
) -> list[tuple[int, float]]:
    """L2 norms of c_pi + gamma P_pi v_n - v_1 per candidate environment.

    pi is the greedy policy of the (typically estimated) reference MDP, v_n
    the value of pi inside environment n, and v_1 its value in the reference;
    an environment identical to the reference scores exactly zero by the
    policy fixed-point identity.
    """
    _, pi = value_iteration(reference, tol=1e-10)
    idx = np.arange(reference.num_states)
    p_pi = reference.transitions.probs[pi.actions, idx, :]
    c_pi = reference.costs.expected_costs[idx, pi.actions]
    v_ref = policy_evaluation(reference, pi).values
    out = []
    for env in envs:
        v_n = policy_evaluation(env.mdp, pi).values
        be = c_pi + reference.gamma * (p_pi @ v_n) - v_ref
        out.append((env.order, float(np.linalg.norm(be))))
    return out


def bellman_select(
    envs: Sequence[SyntheticEnvironment], reference: Mdp, k: int
) -> list[int]:
    """The k candidate orders with the smallest Bellman error, ascending."""
    scored = bellman_errors(envs, reference)
    scored.sort(key=lambda item: (item[1], item[0]))
    return [order for order, _ in scored[:k]]


def greedy_ape_ranking(
    envs: Sequence[SyntheticEnvironment], true_mdp: Mdp, k: int
) -> list[int]:
    """Oracle comparator: rank candidates by the policy error their own exact
    optimum incurs against the true optimal policy."""
    _, pi_star = value_iteration(true_mdp, tol=1e-10)
    scored = []
    for env in envs:
        _, pi_n = value_iteration(env.mdp, tol=1e-10)
        scored.append((env.order, ape(pi_star, pi_n)))
    scored.sort(key=lambda item: (item[1], item[0]))
    return [order for order, _ in scored[:k]]
