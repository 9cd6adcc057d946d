"""
Teammates who improve with practice
===================================

The weaker player's success rate climbs from 0.3 toward 0.95 with every
block they receive. A learner that never hands them blocks never sees the
improvement; a minimum rate guarantees practice. With changing skills a
fixed best arm does not exist, so only total reward is compared.
"""

# %%
from fairbandit import TeammateModel, effective_skill
from fairbandit.harness import config_from_dict, sweep

learner = TeammateModel(0.3, 0.95, 0.01)
print("skill after n blocks:", {n: round(effective_skill(learner, n), 3) for n in (0, 50, 100, 200, 400)})

cfg = config_from_dict({
    "horizon": 2000, "replications": 40, "base_seed": 11,
    "sweep": ["0", "1/10", "1/4", "1/2"],
    "policy": {"kind": "strict_rate_ucb"},
    "env": {"kind": "co_tetris", "teammates": [{"p0": 0.8}, {"p0": 0.3, "p_max": 0.95, "lambda": 0.01}]},
})

# %%
for v, run in sweep(cfg).runs.items():
    mean, std = run.aggregate["total_reward"]
    share = run.aggregate["share_1"][0]
    print(f"v={str(v):5s} mean total reward {mean:7.1f} ± {std:5.1f}   learner share {share:.3f}")
