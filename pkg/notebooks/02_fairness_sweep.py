"""
How much reward does fairness cost?
===================================

Sweep the minimum selection rate of the weaker teammate and compare mean
team reward, regret and fairness over many seeded replications. Every row
of the sweep sees the same environment random draws, so differences come
from the allocation decisions alone.
"""

# %%
import matplotlib.pyplot as plt
import numpy as np

from fairbandit.harness import config_from_dict, sweep

cfg = config_from_dict({
    "horizon": 1000,
    "replications": 100,
    "base_seed": 99,
    "sweep": ["0", "1/20", "1/10", "1/5", "3/10", "2/5", "1/2"],
    "policy": {"kind": "strict_rate_ucb"},
    "env": {"kind": "co_tetris", "teammates": [{"p0": 0.9}, {"p0": 0.3}]},
})
result = sweep(cfg)

# %%
rates = [float(v) for v in result.runs]
reward = np.array([r.aggregate["total_reward"] for r in result.runs.values()])
jain = np.array([r.aggregate["jain"][0] for r in result.runs.values()])
for row in result.summary_rows():
    print(row["min_rate"], row["mean_total_reward"][:7], row["mean_pseudo_regret"][:7], row["mean_jain"][:6])

# With a forced share v for the weaker player the expected reward per round
# is about (1 - v) * 0.9 + v * 0.3 once exploration has settled.
print("analytic per-round reward at v=1/2:", (0.9 + 0.3) / 2)

# %%
fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
ax[0].errorbar(rates, reward[:, 0] / 1000, yerr=reward[:, 1] / 1000, marker="o")
ax[0].plot(rates, [(1 - v) * 0.9 + v * 0.3 for v in rates], "k--", lw=1)
ax[0].set_xlabel("minimum rate v")
ax[0].set_ylabel("reward per round")
ax[1].plot(rates, jain, marker="o")
ax[1].set_xlabel("minimum rate v")
ax[1].set_ylabel("Jain index")
fig.tight_layout()
plt.show()
