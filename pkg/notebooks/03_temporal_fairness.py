"""
When does an allocation start to look unfair?
=============================================

Two scripted traces with the same final counts: one favours player 0 early,
the other late. The running share gap crosses a threshold at very
different times. The same tools are then applied to a supporter in the
two-sided shooting task.
"""

# %%
import numpy as np

from fairbandit import EpisodeTrace, disparity_onset, windowed_share
from fairbandit.harness import config_from_dict, run_replication

early = EpisodeTrace.from_arms([0, 0, 0, 0] + [1, 0] * 8)
late = EpisodeTrace.from_arms([0, 1] * 8 + [0, 0, 0, 0])
for name, tr in [("early skew", early), ("late skew", late)]:
    print(f"{name:10s} counts={tr.counts().tolist()} onset(0.4)={disparity_onset(tr, 0.4)} "
          f"onset(0.15)={disparity_onset(tr, 0.15)}")
    print("  windowed shares:", windowed_share(tr, 4)[:, 0].round(2).tolist())

# %%
# A supporter choosing which side to help, with and without a rate floor.
base = {
    "horizon": 300, "base_seed": 5,
    "env": {"kind": "space_invaders", "base_rate": [0.6, 0.3], "support_boost": 0.3, "epoch_length": 10},
}
for kind, v in [("ucb1", "0"), ("strict_rate_ucb", "1/2")]:
    rep = run_replication(config_from_dict({**base, "policy": {"kind": kind, "min_rate": v}}), 0)
    gains = np.array(rep.trace.gains).sum(axis=0)
    shares = windowed_share(rep.trace, 50)[:, 0]
    print(f"{kind:16s} v={v}: side-0 share per 50 epochs {shares.round(2).tolist()}, "
          f"eliminations per side {gains.tolist()}, onset {rep.row['disparity_onset']}")
