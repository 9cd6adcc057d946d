"""Allocation policies: strict-rate-constrained UCB, UCB1 and simple baselines.

Every policy shares one interface::

    state = make_policy("strict_rate_ucb", k=2, params=FairnessParams("1/2"))
    decision = select_arm(state, rng)
    update(state, decision.arm, reward)

``PolicyState`` is the allocator's entire memory. ``select_arm`` never
changes it; ``update`` records the observed reward and advances the round.

The rate constraint is enforced with an exact per-round quota: before round
``t`` every arm must have been chosen at least ``floor(v * t)`` times, and any
arm short of that pre-empts the UCB choice (largest deficit first, then the
lowest index).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConfigError, InfeasibleError

__all__ = [
    "ArmStats",
    "Decision",
    "FairnessParams",
    "PolicyKind",
    "PolicyState",
    "Reason",
    "baseline_select",
    "make_policy",
    "parse_rate",
    "required_pulls",
    "select_arm",
    "starving_set",
    "ucb_index",
    "update",
]


class Reason(str, Enum):
    """Why a policy picked the arm it picked."""

    UCB_EXPLOIT = "UcbExploit"
    FAIRNESS_OVERRIDE = "FairnessOverride"
    INITIALIZATION = "Initialization"
    BASELINE = "Baseline"

    def __str__(self) -> str:
        return self.value


class PolicyKind(str, Enum):
    STRICT_RATE_UCB = "strict_rate_ucb"
    UCB1 = "ucb1"
    ROUND_ROBIN = "round_robin"
    EPSILON_GREEDY = "epsilon_greedy"
    UNIFORM = "uniform"
    ORACLE = "oracle"

    def __str__(self) -> str:
        return self.value

    @property
    def is_baseline(self) -> bool:
        return self not in (PolicyKind.STRICT_RATE_UCB, PolicyKind.UCB1)


def parse_rate(value: object, key: str = "min_rate") -> Fraction:
    """Parse a selection rate into an exact fraction.

    Accepts ``Fraction``, ints, ``"p/q"`` strings and decimal strings such as
    ``"0.25"``. Floats are converted through their shortest repr, so ``0.1``
    becomes exactly ``1/10``.
    """
    if isinstance(value, bool):
        raise ConfigError(f"expected a rational 'p/q', got {value!r}", key)
    if isinstance(value, Fraction):
        rate = value
    elif isinstance(value, int):
        rate = Fraction(value)
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigError(f"expected a rational 'p/q', got {value!r}", key)
        rate = Fraction(repr(value))
    elif isinstance(value, str):
        try:
            rate = Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"expected a rational 'p/q', got {value!r}", key) from None
    else:
        raise ConfigError(f"expected a rational 'p/q', got {value!r}", key)
    if not 0 <= rate <= 1:
        raise ConfigError(f"rate {format_rate(rate)} is outside [0, 1]", key)
    return rate


def format_rate(rate: Fraction) -> str:
    """Render a rate as ``p/q`` (``0`` is written ``0/1``)."""
    return f"{rate.numerator}/{rate.denominator}"


@dataclass(frozen=True)
class FairnessParams:
    """Minimum selection rate ``v`` and the UCB exploration coefficient ``c``."""

    min_rate: Fraction = Fraction(0)
    exploration_coeff: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "min_rate", parse_rate(self.min_rate))
        c = self.exploration_coeff
        if isinstance(c, bool) or not isinstance(c, (int, float)) or not c > 0 or not math.isfinite(c):
            raise ConfigError(f"must be a positive real, got {c!r}", "exploration_coeff")
        object.__setattr__(self, "exploration_coeff", float(c))

    def check_feasible(self, arm_count: int) -> None:
        if arm_count * self.min_rate.numerator > self.min_rate.denominator:
            raise InfeasibleError(
                f"{format_rate(self.min_rate)} is infeasible for {arm_count} arms "
                f"({arm_count} * {format_rate(self.min_rate)} > 1)",
                "min_rate",
            )


@dataclass(slots=True)
class ArmStats:
    pull_count: int = 0
    reward_sum: float = 0.0

    @property
    def mean(self) -> float:
        """Empirical mean reward; only defined once the arm has been pulled."""
        if self.pull_count == 0:
            raise ValueError("empirical mean of an unpulled arm is undefined")
        return self.reward_sum / self.pull_count


@dataclass(frozen=True, slots=True)
class Decision:
    arm: int
    reason: Reason


@dataclass
class PolicyState:
    """Counts, reward sums and configuration of one allocation policy."""

    arm_count: int
    kind: PolicyKind = PolicyKind.STRICT_RATE_UCB
    params: FairnessParams = field(default_factory=FairnessParams)
    stats: list[ArmStats] = field(default_factory=list)
    rounds_elapsed: int = 0
    epsilon: float = 0.1
    true_means: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.stats:
            self.stats = [ArmStats() for _ in range(self.arm_count)]

    @property
    def counts(self) -> list[int]:
        return [s.pull_count for s in self.stats]

    @property
    def reward_sums(self) -> list[float]:
        return [s.reward_sum for s in self.stats]


def make_policy(
    kind: str | PolicyKind,
    k: int,
    params: FairnessParams | None = None,
    *,
    epsilon: float = 0.1,
    true_means: Sequence[float] | None = None,
) -> PolicyState:
    """Build a fresh policy state, rejecting infeasible or incomplete configs."""
    try:
        kind = PolicyKind(kind)
    except ValueError:
        names = ", ".join(p.value for p in PolicyKind)
        raise ConfigError(f"unknown policy {kind!r} (expected one of {names})", "policy") from None
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ConfigError(f"arm count must be a positive integer, got {k!r}", "k")
    params = params or FairnessParams()
    params.check_feasible(k)
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigError(f"must lie in [0, 1], got {epsilon!r}", "epsilon")
    if kind is PolicyKind.ORACLE:
        if true_means is None:
            raise ConfigError("oracle policy needs the environment's true means", "policy")
        if len(true_means) != k:
            raise ConfigError(f"expected {k} true means, got {len(true_means)}", "policy")
        true_means = tuple(float(m) for m in true_means)
    return PolicyState(
        arm_count=k,
        kind=kind,
        params=params,
        epsilon=float(epsilon),
        true_means=tuple(true_means) if true_means is not None else None,
    )


def ucb_index(stats: ArmStats, rounds_elapsed: int, exploration_coeff: float = 2.0) -> float:
    """UCB1 index ``mean + sqrt(c ln t / n)``; ``inf`` for an unpulled arm."""
    n = stats.pull_count
    if n == 0:
        return math.inf
    return stats.reward_sum / n + math.sqrt(exploration_coeff * math.log(rounds_elapsed) / n)


def required_pulls(round: int, min_rate: Fraction) -> int:
    """Quota ``floor(v * round)`` in exact integer arithmetic."""
    return min_rate.numerator * round // min_rate.denominator


def starving_set(state: PolicyState, round: int) -> list[tuple[int, int]]:
    """Arms below quota for ``round`` as ``(arm, deficit)`` pairs.

    Sorted by deficit (largest first), then by arm index.
    """
    quota = required_pulls(round, state.params.min_rate)
    if quota == 0:
        return []
    starving = [(i, quota - s.pull_count) for i, s in enumerate(state.stats) if s.pull_count < quota]
    starving.sort(key=lambda pair: (-pair[1], pair[0]))
    return starving


def _check_consistent(state: PolicyState) -> None:
    state.params.check_feasible(state.arm_count)
    if len(state.stats) != state.arm_count:
        raise ConfigError(f"expected {state.arm_count} arm stats, got {len(state.stats)}", "stats")


def _argmax(values: Sequence[float]) -> int:
    best, best_value = 0, values[0]
    for i in range(1, len(values)):
        if values[i] > best_value:
            best, best_value = i, values[i]
    return best


def _ucb_select(state: PolicyState, t: int, constrained: bool) -> Decision:
    stats = state.stats
    for i, s in enumerate(stats):
        if s.pull_count == 0:
            return Decision(i, Reason.INITIALIZATION)
    if constrained:
        starving = starving_set(state, t)
        if starving:
            return Decision(starving[0][0], Reason.FAIRNESS_OVERRIDE)
    c = state.params.exploration_coeff
    log_t = math.log(t)
    indices = [s.reward_sum / s.pull_count + math.sqrt(c * log_t / s.pull_count) for s in stats]
    return Decision(_argmax(indices), Reason.UCB_EXPLOIT)


def select_arm(state: PolicyState, rng: np.random.Generator | None = None) -> Decision:
    """Choose the arm for round ``rounds_elapsed + 1``; the state is not modified.

    ``rng`` is only consulted by the randomized baselines.
    """
    _check_consistent(state)
    t = state.rounds_elapsed + 1
    if state.kind is PolicyKind.STRICT_RATE_UCB:
        return _ucb_select(state, t, constrained=True)
    if state.kind is PolicyKind.UCB1:
        return _ucb_select(state, t, constrained=False)
    return baseline_select(state, rng)


def baseline_select(state: PolicyState, rng: np.random.Generator | None = None) -> Decision:
    """Selection rule of the comparison baselines (round-robin, uniform, ...).

    Epsilon-greedy tries every arm once before trusting its empirical means.
    """
    kind = state.kind
    k = state.arm_count
    if not kind.is_baseline:
        raise ConfigError(f"{kind} is not a baseline policy", "policy")
    if kind is PolicyKind.ROUND_ROBIN:
        return Decision(state.rounds_elapsed % k, Reason.BASELINE)
    if kind is PolicyKind.ORACLE:
        if state.true_means is None:
            raise ConfigError("oracle policy needs the environment's true means", "policy")
        return Decision(_argmax(state.true_means), Reason.BASELINE)
    if rng is None:
        raise ValueError(f"{kind} policy needs a random generator")
    if kind is PolicyKind.UNIFORM:
        return Decision(int(rng.integers(k)), Reason.BASELINE)
    # epsilon-greedy
    if state.epsilon > 0 and rng.random() < state.epsilon:
        return Decision(int(rng.integers(k)), Reason.BASELINE)
    for i, s in enumerate(state.stats):
        if s.pull_count == 0:
            return Decision(i, Reason.BASELINE)
    return Decision(_argmax([s.mean for s in state.stats]), Reason.BASELINE)


def update(state: PolicyState, arm: int, reward: float) -> PolicyState:
    """Record ``reward`` for ``arm`` and advance one round (in place).

    Returns the same state object for chaining.
    """
    if isinstance(arm, bool) or not 0 <= arm < state.arm_count:
        raise ValueError(f"arm {arm!r} out of range for {state.arm_count} arms")
    if not 0.0 <= reward <= 1.0:
        raise ValueError(f"reward {reward!r} outside [0, 1]")
    s = state.stats[int(arm)]
    s.pull_count += 1
    s.reward_sum += float(reward)
    state.rounds_elapsed += 1
    return state
