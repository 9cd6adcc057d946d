"""Fairness-constrained allocation among teammates of unequal skill.

A strict-rate-constrained UCB allocator, stochastic team-task simulators,
fairness and regret metrics, and a seeded Monte-Carlo experiment harness.
"""

__version__ = "0.1.0"

from .bandit import (
    ArmStats,
    Decision,
    FairnessParams,
    PolicyKind,
    PolicyState,
    Reason,
    baseline_select,
    make_policy,
    parse_rate,
    required_pulls,
    select_arm,
    starving_set,
    ucb_index,
    update,
)
from .environments import (
    EnvConfig,
    EnvKind,
    EnvState,
    StepOutcome,
    TeammateModel,
    co_tetris_step,
    effective_skill,
    env_reset,
    env_step,
    space_invaders_step,
    true_means,
)
from .errors import ConfigError, InfeasibleError
from .metrics import (
    EpisodeTrace,
    FairnessReport,
    disparity_onset,
    fair_pseudo_regret,
    fairness_report,
    gini,
    jain_index,
    pseudo_regret,
    violation_count,
    windowed_share,
)
