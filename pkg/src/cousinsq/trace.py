"""Per-iteration experiment traces shared by all learners and diagnostics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


class CadenceError(RuntimeError):
    """The trace was not recorded densely enough for the requested analysis."""


class CoverageError(RuntimeError):
    """The step cap fired before every (s, a) pair reached its visit quota."""

    def __init__(self, message: str, starved_pairs: list[tuple[int, int]]):
        super().__init__(message)
        self.starved_pairs = starved_pairs


@dataclass
class ExperimentTrace:
    """Arrays indexed by iteration t = 0..T-1.

    `weights[t]` is the softmax-normalized weight vector used by the fusion at
    iteration t, `qit[t]` the fused table *after* that fusion, and `env_q[t]`
    the per-environment tables after their iteration-t updates. Snapshots are
    kept only when `snapshot_cadence` is 1 (dense) or a positive stride.
    """

    num_envs: int
    episode: np.ndarray  # (T,)
    weights: np.ndarray  # (T, K)
    ape: np.ndarray  # (T,), NaN where not evaluated
    visited: np.ndarray  # (T, 2) state/action taken in the primary env
    snapshot_cadence: int
    snapshot_steps: np.ndarray  # (M,) iteration indices of the snapshots
    qit: np.ndarray | None  # (M, S, A)
    env_q: np.ndarray | None  # (M, K, S, A)
    final_visit_counts: np.ndarray  # (S, A)
    seeds: tuple[int, ...]
    config_hash: str = ""

    @property
    def num_steps(self) -> int:
        return len(self.episode)

    def _require_dense(self) -> None:
        if self.snapshot_cadence != 1 or self.qit is None:
            raise CadenceError("analysis requires snapshot_cadence=1")

    def qit_series(self, s: int, a: int) -> np.ndarray:
        """Fused-table entry after each iteration (value of Q_it at t+1)."""
        self._require_dense()
        return self.qit[:, s, a]

    def env_q_series(self, n: int, s: int, a: int) -> np.ndarray:
        self._require_dense()
        return self.env_q[:, n, s, a]

    def weighted_env_series(self, n: int, s: int, a: int) -> np.ndarray:
        """w_t^(n) * Q_t^(n)(s, a) for every iteration."""
        self._require_dense()
        return self.weights[:, n] * self.env_q[:, n, s, a]

    def delta_series(self, s: int, a: int) -> np.ndarray:
        """Per-iteration fused update, with the table starting from zero."""
        series = self.qit_series(s, a)
        return np.diff(series, prepend=0.0)

    def eps_series(self, n: int, s: int, a: int) -> np.ndarray:
        """Consecutive differences of the weighted per-environment entries.

        The leading element is the jump from the all-zero initialization, so
        the geometric envelope built from these increments dominates the
        fused update series from t = 0 on.
        """
        return np.diff(self.weighted_env_series(n, s, a), prepend=0.0)

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            header = ["t", "episode"] + [f"w_{n + 1}" for n in range(self.num_envs)]
            header.append("ape")
            writer.writerow(header)
            for t in range(self.num_steps):
                row = [t, int(self.episode[t])]
                row.extend(f"{w:.17g}" for w in self.weights[t])
                row.append("" if np.isnan(self.ape[t]) else f"{self.ape[t]:.17g}")
                writer.writerow(row)


class TraceRecorder:
    """Accumulates per-step rows and optional table snapshots."""

    def __init__(self, num_envs: int, snapshot_cadence: int = 0):
        if snapshot_cadence < 0:
            raise ValueError("snapshot_cadence must be >= 0")
        self.num_envs = num_envs
        self.snapshot_cadence = snapshot_cadence
        self._episode: list[int] = []
        self._weights: list[np.ndarray] = []
        self._ape: list[float] = []
        self._visited: list[tuple[int, int]] = []
        self._snapshot_steps: list[int] = []
        self._qit: list[np.ndarray] = []
        self._env_q: list[np.ndarray] = []

    def record(
        self,
        t: int,
        episode: int,
        weights: np.ndarray,
        ape: float,
        visited: tuple[int, int],
        qit: np.ndarray | None = None,
        env_q: np.ndarray | None = None,
    ) -> None:
        self._episode.append(episode)
        self._weights.append(weights.copy())
        self._ape.append(ape)
        self._visited.append(visited)
        if self.snapshot_cadence and t % self.snapshot_cadence == 0:
            assert qit is not None and env_q is not None
            self._snapshot_steps.append(t)
            self._qit.append(qit.copy())
            self._env_q.append(env_q.copy())

    def finalize(
        self,
        final_visit_counts: np.ndarray,
        seeds: tuple[int, ...],
        config_hash: str = "",
    ) -> ExperimentTrace:
        n = len(self._episode)
        return ExperimentTrace(
            num_envs=self.num_envs,
            episode=np.array(self._episode, dtype=np.int64),
            weights=(
                np.stack(self._weights) if n else np.zeros((0, self.num_envs))
            ),
            ape=np.array(self._ape, dtype=float),
            visited=np.array(self._visited, dtype=np.int64).reshape(n, 2),
            snapshot_cadence=self.snapshot_cadence,
            snapshot_steps=np.array(self._snapshot_steps, dtype=np.int64),
            qit=np.stack(self._qit) if self._qit else None,
            env_q=np.stack(self._env_q) if self._env_q else None,
            final_visit_counts=final_visit_counts.copy(),
            seeds=tuple(seeds),
            config_hash=config_hash,
        )
