"""Performance and fairness statistics over allocation traces."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .bandit import Reason, required_pulls

__all__ = [
    "EpisodeTrace",
    "FairnessReport",
    "TraceRecord",
    "disparity_onset",
    "fair_pseudo_regret",
    "fairness_report",
    "gini",
    "jain_index",
    "pseudo_regret",
    "violation_count",
    "windowed_share",
]

DEFAULT_ONSET_THRESHOLD = 0.2


@dataclass(frozen=True, slots=True)
class TraceRecord:
    round: int
    arm: int
    reason: Reason
    reward: float
    per_player_gain: tuple[float, ...]


@dataclass
class EpisodeTrace:
    """Column-oriented record of one episode; rounds are implicitly 1..T."""

    k: int
    min_rate: Fraction = Fraction(0)
    arms: list[int] = field(default_factory=list)
    reasons: list[Reason] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    gains: list[tuple[float, ...]] = field(default_factory=list)

    def append(self, arm: int, reason: Reason, reward: float, per_player_gain: Sequence[float] = ()) -> None:
        if not 0 <= arm < self.k:
            raise ValueError(f"arm {arm} out of range for {self.k} arms")
        self.arms.append(arm)
        self.reasons.append(reason)
        self.rewards.append(reward)
        self.gains.append(tuple(per_player_gain))

    @classmethod
    def from_arms(cls, arms: Sequence[int], k: int = 2, min_rate: Fraction = Fraction(0), rewards=None) -> "EpisodeTrace":
        """Build a scripted trace (reason ``Baseline``), mostly for analysis and tests."""
        trace = cls(k=k, min_rate=Fraction(min_rate))
        rewards = [0.0] * len(arms) if rewards is None else rewards
        for a, r in zip(arms, rewards, strict=True):
            trace.append(int(a), Reason.BASELINE, float(r))
        return trace

    def __len__(self) -> int:
        return len(self.arms)

    @property
    def records(self) -> Iterator[TraceRecord]:
        for t, (a, why, r, g) in enumerate(zip(self.arms, self.reasons, self.rewards, self.gains), start=1):
            yield TraceRecord(t, a, why, r, g)

    def counts(self) -> np.ndarray:
        return np.bincount(np.asarray(self.arms, dtype=np.int64), minlength=self.k)

    def running_counts(self) -> np.ndarray:
        """``(T, k)`` array; row ``t-1`` holds the pull counts after round ``t``."""
        arms = np.asarray(self.arms, dtype=np.int64)
        onehot = np.zeros((len(arms), self.k), dtype=np.int64)
        onehot[np.arange(len(arms)), arms] = 1
        return np.cumsum(onehot, axis=0)

    @property
    def total_reward(self) -> float:
        return float(np.sum(self.rewards))


@dataclass(frozen=True)
class FairnessReport:
    shares: tuple[float, ...]
    jain: float
    gini: float
    violations: int
    disparity_onset: int | None


def _as_counts(counts) -> np.ndarray:
    x = np.asarray(counts, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("counts must be a non-empty 1-d sequence")
    if np.any(x < 0):
        raise ValueError("counts must be non-negative")
    if not np.any(x > 0):
        raise ValueError("at least one count must be positive")
    return x


def _exact(x: float) -> Fraction:
    # decimal value of the shortest repr, so 0.9 - 0.6 is exactly 3/10
    return Fraction(repr(float(x)))


def pseudo_regret(counts: Sequence[int], true_means: Sequence[float]) -> float:
    """Gap-weighted pull counts ``sum_i (mu* - mu_i) * n_i``.

    Evaluated in rational arithmetic on the means' decimal values.
    """
    if len(counts) != len(true_means):
        raise ValueError(f"length mismatch: {len(counts)} counts vs {len(true_means)} means")
    mu = [_exact(m) for m in true_means]
    best = max(mu)
    return float(sum((best - m) * int(n) for m, n in zip(mu, counts)))


def fair_pseudo_regret(counts: Sequence[int], true_means: Sequence[float], min_rate: Fraction) -> float:
    """Regret against the best allocation that meets the rate constraint.

    That comparator gives every arm other than the best exactly
    ``floor(v * T)`` pulls, so the result is
    ``sum_i (mu* - mu_i) * (n_i - floor(v * T))``. It equals
    :func:`pseudo_regret` when ``v = 0`` and is negative only if the trace
    ends below quota.
    """
    if len(counts) != len(true_means):
        raise ValueError(f"length mismatch: {len(counts)} counts vs {len(true_means)} means")
    quota = required_pulls(sum(int(n) for n in counts), Fraction(min_rate))
    mu = [_exact(m) for m in true_means]
    best = max(mu)
    return float(sum((best - m) * (int(n) - quota) for m, n in zip(mu, counts) if m != best))


def jain_index(counts: Sequence[float]) -> float:
    """Jain's index ``(sum x)^2 / (k * sum x^2)``; 1 at equality, 1/k when concentrated."""
    x = _as_counts(counts)
    return float(x.sum() ** 2 / (x.size * np.dot(x, x)))


def gini(counts: Sequence[float]) -> float:
    """Gini coefficient ``sum_ij |x_i - x_j| / (2 k sum x)``."""
    x = _as_counts(counts)
    return float(np.abs(x[:, None] - x[None, :]).sum() / (2 * x.size * x.sum()))


def violation_count(trace: EpisodeTrace) -> int:
    """Number of (round, arm) pairs whose count after the round is below quota."""
    if len(trace) == 0 or trace.min_rate == 0:
        return 0
    T = len(trace)
    p, q = trace.min_rate.numerator, trace.min_rate.denominator
    if p * T < 2**62:
        quota = (np.arange(1, T + 1, dtype=np.int64) * p) // q
    else:
        quota = np.array([required_pulls(t, trace.min_rate) for t in range(1, T + 1)], dtype=object)
    return int(np.sum(trace.running_counts() < quota[:, None]))


def windowed_share(trace: EpisodeTrace, window: int) -> np.ndarray:
    """Selection share per arm within consecutive, non-overlapping windows.

    Returns an array of shape ``(T // window, k)``; a trailing partial window
    is dropped.
    """
    if window < 1:
        raise ValueError("window must be a positive integer")
    if window > len(trace):
        raise ValueError(f"window {window} exceeds trace length {len(trace)}")
    n = len(trace) // window
    arms = np.asarray(trace.arms[: n * window], dtype=np.int64).reshape(n, window)
    shares = np.stack([(arms == i).sum(axis=1) for i in range(trace.k)], axis=1)
    return shares / window


def disparity_onset(trace: EpisodeTrace, threshold: float = DEFAULT_ONSET_THRESHOLD, start_round: int = 2) -> int | None:
    """First round ``t >= start_round`` with ``|n_0(t) - n_1(t)| / t > threshold``.

    Round 1 is skipped by default because every trace has a gap of 1 there.
    Only defined for two-arm traces.
    """
    if trace.k != 2:
        raise ValueError(f"disparity onset is defined for 2-arm traces, got k={trace.k}")
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    if len(trace) == 0:
        return None
    n = trace.running_counts()
    t = np.arange(1, len(trace) + 1)
    gap = np.abs(n[:, 0] - n[:, 1]) / t
    hits = np.nonzero((gap > threshold) & (t >= start_round))[0]
    return int(t[hits[0]]) if hits.size else None


def fairness_report(trace: EpisodeTrace, threshold: float = DEFAULT_ONSET_THRESHOLD) -> FairnessReport:
    counts = trace.counts()
    return FairnessReport(
        shares=tuple(float(c) for c in counts / counts.sum()),
        jain=jain_index(counts),
        gini=gini(counts),
        violations=violation_count(trace),
        disparity_onset=disparity_onset(trace, threshold) if trace.k == 2 else None,
    )
