import math

import mpmath
import numpy as np
import pytest

from fairbandit import (
    ConfigError,
    EnvConfig,
    TeammateModel,
    co_tetris_step,
    effective_skill,
    env_reset,
    env_step,
    space_invaders_step,
    true_means,
)


def tetris(skills, horizon=100, **kw):
    return EnvConfig("co_tetris", horizon, tuple(TeammateModel(p) for p in skills), **kw)


def invaders(horizon=100, base_rate=0.5, boost=0.3, epoch=5):
    return EnvConfig("space_invaders", horizon, base_rate=base_rate, support_boost=boost, epoch_length=epoch)


class TestEffectiveSkill:
    def test_constant_without_learning(self):
        m = TeammateModel(0.4, 0.9, 0.0)
        assert all(effective_skill(m, n) == 0.4 for n in (0, 1, 100, 10**6))

    def test_no_practice(self):
        assert effective_skill(TeammateModel(0.3, 0.9, 0.5), 0) == 0.3

    def test_learning_curve_value(self):
        # independent high-precision evaluation of 0.9 - 0.6 e^{-1}
        mpmath.mp.dps = 30
        expected = float(mpmath.mpf("0.9") - mpmath.mpf("0.6") * mpmath.exp(-1))
        got = effective_skill(TeammateModel(0.3, 0.9, 0.1), 10)
        assert got == pytest.approx(expected, abs=1e-15)
        assert round(got, 4) == 0.6793

    def test_monotone_and_bounded(self):
        m = TeammateModel(0.2, 0.7, 0.05)
        values = [effective_skill(m, n) for n in range(500)]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert min(values) >= 0.2 and max(values) <= 0.7

    @pytest.mark.parametrize("args", [(1.2,), (0.5, 0.4), (0.5, 0.9, -1.0), (-0.1,)])
    def test_invalid_models(self, args):
        with pytest.raises(ConfigError):
            TeammateModel(*args)


class TestReset:
    def test_same_seed_same_episode(self):
        cfg = tetris([0.6, 0.4], horizon=50)
        actions = [i % 2 for i in range(50)]
        runs = []
        for _ in range(2):
            env = env_reset(cfg, 42)
            runs.append([env_step(env, a)[0] for a in actions])
        assert runs[0] == runs[1]

    def test_unequal_pair_starts_clean(self):
        env = env_reset(tetris([0.9, 0.3]), 7)
        assert env.allocations_per_arm == [0, 0]
        assert env.round == 0

    def test_zero_horizon(self):
        with pytest.raises(ConfigError, match="horizon"):
            tetris([0.5, 0.5], horizon=0)

    def test_needs_two_teammates(self):
        with pytest.raises(ConfigError, match="teammates"):
            tetris([0.5])

    def test_seed_range(self):
        with pytest.raises(ConfigError):
            env_reset(tetris([0.5, 0.5]), -1)
        with pytest.raises(ConfigError):
            env_reset(tetris([0.5, 0.5]), 2**64)
        env_reset(tetris([0.5, 0.5]), 2**64 - 1)

    def test_boost_cap(self):
        with pytest.raises(ConfigError, match="support_boost"):
            invaders(base_rate=0.8, boost=0.3)


class TestCoTetris:
    def test_perfect_and_hopeless(self):
        env = env_reset(tetris([1.0, 0.0], horizon=200), 3)
        for i in range(200):
            out, env = co_tetris_step(env, i % 2)
            assert out.reward == (1.0 if i % 2 == 0 else 0.0)
        assert env.allocations_per_arm == [100, 100]

    def test_gain_for_chosen_player_only(self):
        env = env_reset(tetris([1.0, 1.0, 1.0]), 0)
        out, _ = co_tetris_step(env, 2)
        assert out.per_player_gain == (0.0, 0.0, 1.0)

    def test_finished_episode(self):
        env = env_reset(tetris([0.5, 0.5], horizon=1), 0)
        co_tetris_step(env, 0)
        with pytest.raises(RuntimeError):
            co_tetris_step(env, 1)

    def test_bad_arm(self):
        with pytest.raises(ValueError):
            co_tetris_step(env_reset(tetris([0.5, 0.5]), 0), 2)

    def test_practice_counts_selections_not_successes(self):
        cfg = EnvConfig("co_tetris", 30, (TeammateModel(0.0, 1.0, 0.1), TeammateModel(0.5)))
        env = env_reset(cfg, 1)
        for _ in range(10):
            co_tetris_step(env, 0)
        assert true_means(env)[0] == effective_skill(cfg.teammates[0], 10)


class TestSpaceInvaders:
    def test_deterministic_support(self):
        env = env_reset(invaders(base_rate=0.0, boost=1.0, epoch=5), 9)
        out, env = space_invaders_step(env, 0)
        assert out.per_player_gain == (5.0, 0.0)
        assert out.reward == 0.5
        assert env.allocations_per_arm == [1, 0]

    def test_symmetric_without_boost(self):
        env = env_reset(invaders(horizon=4000, base_rate=0.4, boost=0.0, epoch=5), 2)
        gains = np.array([space_invaders_step(env, 0)[0].per_player_gain for _ in range(4000)])
        mean = gains.mean(axis=0)
        assert abs(mean[0] - mean[1]) < 0.1  # each mean ~2.0, sd/sqrt(n) ~ 0.017

    def test_true_means(self):
        assert true_means(env_reset(invaders(), 0)) == pytest.approx([0.65, 0.65], abs=1e-12)

    def test_per_side_rates(self):
        cfg = invaders(base_rate=(0.6, 0.2), boost=0.3)
        assert true_means(env_reset(cfg, 0)) == pytest.approx([0.55, 0.55])

    def test_only_two_sides(self):
        with pytest.raises(ValueError):
            space_invaders_step(env_reset(invaders(), 0), 2)

    def test_wrong_kind(self):
        with pytest.raises(ValueError):
            space_invaders_step(env_reset(tetris([0.5, 0.5]), 0), 0)


class TestTrueMeans:
    def test_stationary_identity(self):
        assert true_means(env_reset(tetris([0.9, 0.3]), 0)) == [0.9, 0.3]

    def test_stationary_flag(self):
        assert tetris([0.9, 0.3]).stationary
        assert not EnvConfig("co_tetris", 5, (TeammateModel(0.3, 0.9, 0.1), TeammateModel(0.5))).stationary
        assert invaders().stationary


@pytest.mark.parametrize("seed", range(5))
def test_rewards_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    for cfg in (tetris([0.3, 0.7, 0.5], horizon=300), invaders(horizon=300, base_rate=0.3, boost=0.5, epoch=7)):
        env = env_reset(cfg, seed)
        for _ in range(300):
            out, env = env_step(env, int(rng.integers(cfg.arm_count)))
            assert 0.0 <= out.reward <= 1.0
            assert all(g >= 0 for g in out.per_player_gain)
            assert sum(env.allocations_per_arm) == env.round
        assert math.isclose(env.round, 300)
