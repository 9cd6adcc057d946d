"""Stochastic team-allocation tasks behind a reset/step interface.

Two tasks are simulated:

* ``co_tetris`` -- each round one falling block is handed to one teammate,
  who places it successfully with probability equal to their current skill.
  Skill may improve with the number of blocks received.
* ``space_invaders`` -- two players clear enemies on their own side; each
  decision epoch a third player supports one side, raising that side's
  per-tick elimination probability.

Randomness comes from a per-episode uniform stream seeded from a 64-bit
integer. Every Bernoulli draw is ``u < p`` on the next uniform, so the
reward sequence is a pure function of (config, seed, action sequence).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError

__all__ = [
    "EnvConfig",
    "EnvKind",
    "EnvState",
    "StepOutcome",
    "TeammateModel",
    "UniformStream",
    "co_tetris_step",
    "effective_skill",
    "env_reset",
    "env_step",
    "space_invaders_step",
    "true_means",
]

_BLOCK = 4096
_SEED_LIMIT = 1 << 64


class EnvKind(str, Enum):
    CO_TETRIS = "co_tetris"
    SPACE_INVADERS = "space_invaders"

    def __str__(self) -> str:
        return self.value


def _probability(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
        raise ConfigError(f"must be a probability in [0, 1], got {value!r}", key)
    return float(value)


@dataclass(frozen=True)
class TeammateModel:
    """A simulated teammate whose skill rises from ``base_skill`` toward ``max_skill``.

    ``max_skill`` defaults to ``base_skill`` (a constant-skill teammate).
    """

    base_skill: float
    max_skill: float | None = None
    learning_rate: float = 0.0

    def __post_init__(self):
        p0 = _probability(self.base_skill, "p0")
        p_max = p0 if self.max_skill is None else _probability(self.max_skill, "p_max")
        if p_max < p0:
            raise ConfigError(f"p_max ({p_max}) must be >= p0 ({p0})", "p_max")
        lam = self.learning_rate
        if isinstance(lam, bool) or not isinstance(lam, (int, float)) or not (lam >= 0 and math.isfinite(lam)):
            raise ConfigError(f"must be a finite real >= 0, got {lam!r}", "lambda")
        object.__setattr__(self, "base_skill", p0)
        object.__setattr__(self, "max_skill", p_max)
        object.__setattr__(self, "learning_rate", float(lam))

    @property
    def stationary(self) -> bool:
        return self.learning_rate == 0.0 or self.max_skill == self.base_skill


def effective_skill(model: TeammateModel, allocations: int) -> float:
    """Success probability after ``allocations`` blocks of practice.

    Saturating exponential ``p_max - (p_max - p0) * exp(-lambda * n)``.
    """
    if model.learning_rate == 0.0:
        return model.base_skill
    gap = model.max_skill - model.base_skill
    skill = model.max_skill - gap * math.exp(-model.learning_rate * allocations)
    return min(max(skill, model.base_skill), model.max_skill)


@dataclass(frozen=True)
class EnvConfig:
    kind: EnvKind
    horizon: int
    teammates: tuple[TeammateModel, ...] = ()
    base_rate: tuple[float, float] = (0.5, 0.5)
    support_boost: float = 0.0
    epoch_length: int = 1

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", EnvKind(self.kind))
        except ValueError:
            raise ConfigError(
                f"unknown environment {self.kind!r} (expected co_tetris or space_invaders)", "env"
            ) from None
        h = self.horizon
        if isinstance(h, bool) or not isinstance(h, int) or h < 1:
            raise ConfigError(f"must be a positive integer, got {h!r}", "horizon")
        object.__setattr__(self, "teammates", tuple(self.teammates))
        if self.kind is EnvKind.CO_TETRIS:
            if len(self.teammates) < 2:
                raise ConfigError(f"co_tetris needs at least 2 teammates, got {len(self.teammates)}", "teammates")
            return
        if self.teammates and len(self.teammates) != 2:
            raise ConfigError("space_invaders has exactly 2 supported players", "teammates")
        rates = self.base_rate
        if isinstance(rates, (int, float)):
            rates = (rates, rates)
        if len(rates) != 2:
            raise ConfigError(f"expected one rate or one per side, got {rates!r}", "base_rate")
        rates = tuple(_probability(r, "base_rate") for r in rates)
        boost = _probability(self.support_boost, "support_boost")
        if max(rates) + boost > 1.0:
            raise ConfigError(f"base_rate + support_boost must not exceed 1 (got {max(rates)} + {boost})", "support_boost")
        ep = self.epoch_length
        if isinstance(ep, bool) or not isinstance(ep, int) or ep < 1:
            raise ConfigError(f"must be a positive integer, got {ep!r}", "epoch_length")
        object.__setattr__(self, "base_rate", rates)
        object.__setattr__(self, "support_boost", boost)

    @property
    def arm_count(self) -> int:
        return len(self.teammates) if self.kind is EnvKind.CO_TETRIS else 2

    @property
    def stationary(self) -> bool:
        return self.kind is EnvKind.SPACE_INVADERS or all(m.stationary for m in self.teammates)


class UniformStream:
    """Buffered stream of uniforms in [0, 1) from a PCG64 generator."""

    def __init__(self, seed: int):
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < _SEED_LIMIT:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}", "seed")
        self._gen = np.random.Generator(np.random.PCG64(int(seed)))
        self._buf: list[float] = []
        self._pos = 0

    def _refill(self) -> None:
        self._buf = self._gen.random(_BLOCK).tolist()
        self._pos = 0

    def next(self) -> float:
        if self._pos >= len(self._buf):
            self._refill()
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def take(self, n: int) -> list[float]:
        out: list[float] = []
        while len(out) < n:
            if self._pos >= len(self._buf):
                self._refill()
            chunk = self._buf[self._pos : self._pos + n - len(out)]
            self._pos += len(chunk)
            out.extend(chunk)
        return out


@dataclass
class EnvState:
    config: EnvConfig
    rng: UniformStream
    allocations_per_arm: list[int] = field(default_factory=list)
    round: int = 0

    @property
    def kind(self) -> EnvKind:
        return self.config.kind

    @property
    def horizon(self) -> int:
        return self.config.horizon

    @property
    def teammates(self) -> tuple[TeammateModel, ...]:
        return self.config.teammates

    @property
    def done(self) -> bool:
        return self.round >= self.config.horizon


@dataclass(frozen=True, slots=True)
class StepOutcome:
    reward: float
    per_player_gain: tuple[float, ...]


def env_reset(config: EnvConfig, seed: int) -> EnvState:
    return EnvState(config=config, rng=UniformStream(seed), allocations_per_arm=[0] * config.arm_count)


def _check_step(state: EnvState, arm: int, kind: EnvKind) -> None:
    if state.kind is not kind:
        raise ValueError(f"cannot take a {kind} step in a {state.kind} episode")
    if state.done:
        raise RuntimeError(f"episode finished: all {state.horizon} rounds have been played")
    if isinstance(arm, bool) or not 0 <= arm < state.config.arm_count:
        raise ValueError(f"arm {arm!r} out of range for {state.config.arm_count} arms")


def co_tetris_step(state: EnvState, arm: int) -> tuple[StepOutcome, EnvState]:
    """Hand one block to teammate ``arm``; reward 1 if they place it."""
    _check_step(state, arm, EnvKind.CO_TETRIS)
    skill = effective_skill(state.config.teammates[arm], state.allocations_per_arm[arm])
    success = 1.0 if state.rng.next() < skill else 0.0
    gains = [0.0] * state.config.arm_count
    gains[arm] = success
    state.allocations_per_arm[arm] += 1
    state.round += 1
    return StepOutcome(success, tuple(gains)), state


def space_invaders_step(state: EnvState, supported_side: int) -> tuple[StepOutcome, EnvState]:
    """Play one decision epoch with the supporter helping ``supported_side``.

    Each side gets ``epoch_length`` elimination attempts; the reward is the
    total number of eliminations divided by ``2 * epoch_length``.
    """
    _check_step(state, supported_side, EnvKind.SPACE_INVADERS)
    cfg = state.config
    n = cfg.epoch_length
    draws = state.rng.take(2 * n)
    gains = []
    for side in (0, 1):
        p = cfg.base_rate[side] + (cfg.support_boost if side == supported_side else 0.0)
        gains.append(float(sum(u < p for u in draws[side * n : (side + 1) * n])))
    state.allocations_per_arm[supported_side] += 1
    state.round += 1
    return StepOutcome((gains[0] + gains[1]) / (2 * n), tuple(gains)), state


def env_step(state: EnvState, arm: int) -> tuple[StepOutcome, EnvState]:
    if state.kind is EnvKind.CO_TETRIS:
        return co_tetris_step(state, arm)
    return space_invaders_step(state, arm)


def true_means(state: EnvState) -> list[float]:
    """Expected reward of allocating to each arm in the current state."""
    cfg = state.config
    if cfg.kind is EnvKind.CO_TETRIS:
        return [effective_skill(m, n) for m, n in zip(cfg.teammates, state.allocations_per_arm)]
    total = sum(cfg.base_rate)
    return [(total + cfg.support_boost) / 2 for _ in range(2)]

