"""
Strict-rate UCB on two teammates of unequal skill
=================================================

A block goes to one of two players each round. Player 0 places blocks 90%
of the time, player 1 only 30%. Plain UCB1 quickly learns to favour player
0; the rate-constrained version keeps giving player 1 at least a fixed share.
"""

# %%
import numpy as np

from fairbandit import (
    EnvConfig, EpisodeTrace, FairnessParams, TeammateModel, Reason,
    co_tetris_step, env_reset, fairness_report, make_policy, select_arm, update,
)

env_cfg = EnvConfig("co_tetris", horizon=400, teammates=(TeammateModel(0.9), TeammateModel(0.3)))


def play(kind, min_rate="0", seed=0):
    env = env_reset(env_cfg, seed)
    policy = make_policy(kind, 2, FairnessParams(min_rate))
    trace = EpisodeTrace(k=2, min_rate=policy.params.min_rate)
    for _ in range(env_cfg.horizon):
        d = select_arm(policy)
        out, env = co_tetris_step(env, d.arm)
        update(policy, d.arm, out.reward)
        trace.append(d.arm, d.reason, out.reward)
    return trace


# %%
# The first few decisions, with the reason each one was taken.
trace = play("strict_rate_ucb", "1/3")
for r in list(trace.records)[:12]:
    print(f"t={r.round:3d}  arm={r.arm}  {r.reason.value:17s} reward={r.reward:.0f}")

# %%
# Shares and fairness indices for UCB1 and several minimum rates.
for kind, v in [("ucb1", "0"), ("strict_rate_ucb", "1/10"), ("strict_rate_ucb", "1/3"), ("strict_rate_ucb", "1/2")]:
    t = play(kind, v)
    rep = fairness_report(t)
    overrides = sum(r is Reason.FAIRNESS_OVERRIDE for r in t.reasons)
    print(f"{kind:16s} v={v:5s} reward={t.total_reward:5.0f} shares={np.round(rep.shares, 3)} "
          f"jain={rep.jain:.3f} gini={rep.gini:.3f} overrides={overrides} violations={rep.violations}")
