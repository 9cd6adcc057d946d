"""Config-driven Monte-Carlo runner: replications, fairness sweeps, CSV output.

A replication's random streams are a pure function of
``(base_seed, rep_index, stream_role)`` via :func:`hash64`, so results never
depend on worker count or execution order. The environment and the policy
draw from separate streams; the environment seed ignores the policy and the
minimum rate, so every row of a sweep sees the same reward draws.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .bandit import FairnessParams, PolicyKind, format_rate, make_policy, parse_rate, select_arm, update
from .environments import EnvConfig, EnvKind, TeammateModel, env_reset, true_means
from .environments import co_tetris_step, space_invaders_step
from .errors import ConfigError, InfeasibleError
from .metrics import DEFAULT_ONSET_THRESHOLD, EpisodeTrace, fair_pseudo_regret, fairness_report, pseudo_regret

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "PolicySpec",
    "Replication",
    "RunResult",
    "SweepResult",
    "apply_override",
    "config_from_dict",
    "hash64",
    "load_config",
    "run_experiment",
    "run_replication",
    "stream_seed",
    "sweep",
]

SCHEMA_VERSION = "1"
ENV_STREAM = 1
POLICY_STREAM = 2

TRACE_HEADER = ["rep", "t", "arm", "reason", "reward", "cum_reward"]
SUMMARY_HEADER = [
    "min_rate",
    "policy",
    "mean_total_reward",
    "std_total_reward",
    "mean_pseudo_regret",
    "std_pseudo_regret",
    "mean_jain",
    "mean_gini",
    "mean_violations",
]

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def hash64(*words: int) -> int:
    """Fold 64-bit words through SplitMix64: ``h <- mix(h xor w)`` from ``h = 0``."""
    h = 0
    for w in words:
        h = _splitmix64(h ^ (int(w) & _MASK64))
    return h


def stream_seed(base_seed: int, rep_index: int, role: int) -> int:
    return hash64(base_seed, rep_index, role)


# --------------------------------------------------------------------------
# configuration

_TOP_KEYS = {
    "policy", "env", "horizon", "replications", "base_seed", "sweep",
    "out_dir", "write_traces", "workers", "onset_threshold",
}
_POLICY_KEYS = {"kind", "min_rate", "exploration_coeff", "epsilon"}
_ENV_KEYS = {"kind", "teammates", "base_rate", "support_boost", "epoch_length"}
_TEAMMATE_KEYS = {"p0", "p_max", "lambda"}


@dataclass(frozen=True)
class PolicySpec:
    kind: PolicyKind = PolicyKind.STRICT_RATE_UCB
    params: FairnessParams = field(default_factory=FairnessParams)
    epsilon: float = 0.1

    @property
    def min_rate(self) -> Fraction:
        return self.params.min_rate

    def with_rate(self, rate: Fraction) -> "PolicySpec":
        return PolicySpec(self.kind, FairnessParams(rate, self.params.exploration_coeff), self.epsilon)


@dataclass(frozen=True)
class ExperimentConfig:
    policy: PolicySpec
    env: EnvConfig
    replications: int = 1
    base_seed: int = 0
    sweep: tuple[Fraction, ...] | None = None
    out_dir: Path | None = None
    write_traces: bool = False
    workers: int = 1
    onset_threshold: float = DEFAULT_ONSET_THRESHOLD
    raw: Mapping[str, Any] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        r = self.replications
        if isinstance(r, bool) or not isinstance(r, int) or r < 1:
            raise ConfigError(f"must be a positive integer, got {r!r}", "replications")
        s = self.base_seed
        if isinstance(s, bool) or not isinstance(s, int) or not 0 <= s <= _MASK64:
            raise ConfigError(f"must be an unsigned 64-bit integer, got {s!r}", "base_seed")
        w = self.workers
        if isinstance(w, bool) or not isinstance(w, int) or w < 0:
            raise ConfigError(f"must be a non-negative integer (0 = all cores), got {w!r}", "workers")
        if not 0 < self.onset_threshold <= 1:
            raise ConfigError(f"must lie in (0, 1], got {self.onset_threshold!r}", "onset_threshold")
        k = self.env.arm_count
        self.policy.params.check_feasible(k)
        if self.sweep is not None:
            if not self.sweep:
                raise ConfigError("sweep list is empty", "sweep")
            for v in self.sweep:
                if k * v > 1:
                    raise InfeasibleError(
                        f"{format_rate(v)} is infeasible for {k} arms ({k} * {format_rate(v)} > 1)", "sweep"
                    )

    @property
    def horizon(self) -> int:
        return self.env.horizon

    @property
    def arm_count(self) -> int:
        return self.env.arm_count

    def with_rate(self, rate: Fraction, out_dir: Path | None = None) -> "ExperimentConfig":
        raw = copy.deepcopy(dict(self.raw)) if self.raw is not None else None
        if raw is not None:
            raw.setdefault("policy", {})["min_rate"] = format_rate(rate)
            raw.pop("sweep", None)
        return ExperimentConfig(
            policy=self.policy.with_rate(rate),
            env=self.env,
            replications=self.replications,
            base_seed=self.base_seed,
            sweep=None,
            out_dir=out_dir,
            write_traces=self.write_traces,
            workers=self.workers,
            onset_threshold=self.onset_threshold,
            raw=raw,
        )


def _normalize(raw: Mapping[str, Any]) -> dict[str, Any]:
    """Fold the flat spelling (``policy = "ucb1"``, top-level ``min_rate``) into tables."""
    d = copy.deepcopy(dict(raw))
    for section, keys in (("policy", _POLICY_KEYS), ("env", _ENV_KEYS)):
        table = d.get(section, {})
        if isinstance(table, str):
            table = {"kind": table}
        elif not isinstance(table, dict):
            raise ConfigError(f"expected a table or a name, got {table!r}", section)
        for key in sorted(keys - {"kind"}):
            if key in d:
                if key in table:
                    raise ConfigError(f"given both at top level and in [{section}]", key)
                table[key] = d.pop(key)
        d[section] = table
    return d


def _check_keys(table: Mapping[str, Any], allowed: set[str], prefix: str = "") -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError("unknown key", prefix + key)


def _typed(value, types, key: str, what: str):
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(f"expected {what}, got {value!r}", key)
    if not isinstance(value, types):
        raise ConfigError(f"expected {what}, got {value!r}", key)
    return value


def _teammate(entry, i: int) -> TeammateModel:
    key = f"env.teammates[{i}]"
    if isinstance(entry, (int, float)) and not isinstance(entry, bool):
        entry = {"p0": entry}
    if not isinstance(entry, dict):
        raise ConfigError(f"expected a table {{p0, p_max, lambda}}, got {entry!r}", key)
    _check_keys(entry, _TEAMMATE_KEYS, key + ".")
    if "p0" not in entry:
        raise ConfigError("missing required key", key + ".p0")
    try:
        return TeammateModel(entry["p0"], entry.get("p_max"), entry.get("lambda", 0.0))
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], f"{key}.{exc.key}") from None


def config_from_dict(raw: Mapping[str, Any]) -> ExperimentConfig:
    """Validate a parsed config mapping and build an :class:`ExperimentConfig`."""
    d = _normalize(raw)
    _check_keys(d, _TOP_KEYS)
    pol, env = d["policy"], d["env"]
    _check_keys(pol, _POLICY_KEYS, "policy.")
    _check_keys(env, _ENV_KEYS, "env.")

    kind = _typed(pol.get("kind", "strict_rate_ucb"), (str,), "policy.kind", "a policy name")
    try:
        kind = PolicyKind(kind)
    except ValueError:
        names = ", ".join(p.value for p in PolicyKind)
        raise ConfigError(f"unknown policy {kind!r} (expected one of {names})", "policy.kind") from None
    min_rate = parse_rate(pol.get("min_rate", 0), "policy.min_rate")
    coeff = _typed(pol.get("exploration_coeff", 2.0), (int, float), "policy.exploration_coeff", "a positive real")
    if not coeff > 0:
        raise ConfigError(f"must be positive, got {coeff!r}", "policy.exploration_coeff")
    eps = _typed(pol.get("epsilon", 0.1), (int, float), "policy.epsilon", "a real in [0, 1]")
    if not 0 <= eps <= 1:
        raise ConfigError(f"must lie in [0, 1], got {eps!r}", "policy.epsilon")
    policy = PolicySpec(kind, FairnessParams(min_rate, float(coeff)), float(eps))

    if "horizon" not in d:
        raise ConfigError("missing required key", "horizon")
    horizon = _typed(d["horizon"], (int,), "horizon", "a positive integer")
    env_kind = _typed(env.get("kind", "co_tetris"), (str,), "env.kind", "an environment name")
    teammates = env.get("teammates", [])
    if not isinstance(teammates, list):
        raise ConfigError(f"expected a list, got {teammates!r}", "env.teammates")
    models = tuple(_teammate(t, i) for i, t in enumerate(teammates))
    extra = {}
    for key in ("base_rate", "support_boost", "epoch_length"):
        if key in env:
            extra[key] = env[key]
    if isinstance(extra.get("base_rate"), list):
        extra["base_rate"] = tuple(extra["base_rate"])
    try:
        env_cfg = EnvConfig(kind=env_kind, horizon=horizon, teammates=models, **extra)
    except ConfigError as exc:
        if exc.key in ("horizon", None) or exc.key.startswith("env."):
            raise
        raise ConfigError(str(exc).split(": ", 1)[-1], f"env.{exc.key}") from None
    if env_cfg.kind is EnvKind.CO_TETRIS and extra:
        raise ConfigError("only applies to space_invaders", "env." + sorted(extra)[0])

    sweep = d.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, list):
            raise ConfigError(f"expected a list of rationals, got {sweep!r}", "sweep")
        sweep = tuple(parse_rate(v, "sweep") for v in sweep)

    out_dir = d.get("out_dir")
    if out_dir is not None:
        out_dir = Path(_typed(out_dir, (str,), "out_dir", "a path string"))

    return ExperimentConfig(
        policy=policy,
        env=env_cfg,
        replications=_typed(d.get("replications", 1), (int,), "replications", "a positive integer"),
        base_seed=_typed(d.get("base_seed", 0), (int,), "base_seed", "an unsigned 64-bit integer"),
        sweep=sweep,
        out_dir=out_dir,
        write_traces=_typed(d.get("write_traces", False), (bool,), "write_traces", "true or false"),
        workers=_typed(d.get("workers", 1), (int,), "workers", "a non-negative integer"),
        onset_threshold=float(
            _typed(d.get("onset_threshold", DEFAULT_ONSET_THRESHOLD), (int, float), "onset_threshold", "a real in (0, 1]")
        ),
        raw=d,
    )


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(raw: dict[str, Any], assignment: str) -> dict[str, Any]:
    """Apply a dotted ``key.path=value`` override in place.

    The value is read as a TOML literal when possible (``3``, ``0.5``,
    ``true``, ``[0.9, 0.3]``) and kept as a bare string otherwise (``1/3``).
    """
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value", assignment)
    key, _, text = assignment.partition("=")
    key = key.strip()
    parts = key.split(".")
    if not all(parts):
        raise ConfigError("malformed override key", key)
    node = raw
    for i, part in enumerate(parts[:-1]):
        child = node.get(part)
        if isinstance(child, str) and i == 0 and part in ("policy", "env"):
            child = {"kind": child}
        if child is None:
            child = {}
        if not isinstance(child, dict):
            raise ConfigError(f"cannot descend into non-table value {child!r}", ".".join(parts[: i + 1]))
        node[part] = child
        node = child
    node[parts[-1]] = _parse_value(text.strip())
    return raw


def load_config(path: str | os.PathLike, overrides: Iterable[str] = ()) -> ExperimentConfig:
    """Read a TOML config, apply ``key=value`` overrides, validate."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}", "config") from None
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", "config") from None
    raw = _normalize(raw)
    for assignment in overrides:
        apply_override(raw, assignment)
    return config_from_dict(raw)


# --------------------------------------------------------------------------
# running


@dataclass
class Replication:
    rep: int
    row: dict[str, Any]
    trace: EpisodeTrace | None = None


@dataclass
class RunResult:
    min_rate: Fraction
    policy: PolicyKind
    rows: list[dict[str, Any]]
    aggregate: dict[str, tuple[float, float]]
    manifest: dict[str, Any]
    traces: list[EpisodeTrace] | None = None

    def summary_row(self) -> dict[str, str]:
        agg = self.aggregate
        return {
            "min_rate": format_rate(self.min_rate),
            "policy": str(self.policy),
            "mean_total_reward": _fmt(agg["total_reward"][0]),
            "std_total_reward": _fmt(agg["total_reward"][1]),
            "mean_pseudo_regret": _fmt(agg["pseudo_regret"][0]),
            "std_pseudo_regret": _fmt(agg["pseudo_regret"][1]),
            "mean_jain": _fmt(agg["jain"][0]),
            "mean_gini": _fmt(agg["gini"][0]),
            "mean_violations": _fmt(agg["violations"][0]),
        }


@dataclass
class SweepResult:
    runs: dict[Fraction, RunResult]

    def summary_rows(self) -> list[dict[str, str]]:
        return [r.summary_row() for r in self.runs.values()]


def run_replication(config: ExperimentConfig, rep_index: int, keep_trace: bool = True) -> Replication:
    """Play one seeded episode of ``config`` and compute its metric row."""
    env = env_reset(config.env, stream_seed(config.base_seed, rep_index, ENV_STREAM))
    prng = np.random.Generator(np.random.PCG64(stream_seed(config.base_seed, rep_index, POLICY_STREAM)))
    means = true_means(env)
    spec = config.policy
    policy = make_policy(spec.kind, config.arm_count, spec.params, epsilon=spec.epsilon, true_means=means)
    step = co_tetris_step if env.kind is EnvKind.CO_TETRIS else space_invaders_step
    trace = EpisodeTrace(k=config.arm_count, min_rate=spec.min_rate)
    for _ in range(config.horizon):
        decision = select_arm(policy, prng)
        outcome, env = step(env, decision.arm)
        update(policy, decision.arm, outcome.reward)
        trace.append(decision.arm, decision.reason, outcome.reward, outcome.per_player_gain)

    counts = trace.counts()
    report = fairness_report(trace, config.onset_threshold)
    # regret against a fixed comparator is only meaningful for stationary skills
    stationary = config.env.stationary
    row: dict[str, Any] = {
        "rep": rep_index,
        "total_reward": trace.total_reward,
        "pseudo_regret": pseudo_regret(counts, means) if stationary else math.nan,
        "fair_pseudo_regret": fair_pseudo_regret(counts, means, spec.min_rate) if stationary else math.nan,
    }
    for i, share in enumerate(report.shares):
        row[f"share_{i}"] = share
    row.update(jain=report.jain, gini=report.gini, violations=report.violations, disparity_onset=report.disparity_onset)
    return Replication(rep_index, row, trace if keep_trace else None)


def _replicate(args) -> Replication:
    config, rep, keep_trace = args
    return run_replication(config, rep, keep_trace)


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    x = np.asarray(values, dtype=float)
    if x.size == 0 or np.all(np.isnan(x)):
        return math.nan, math.nan
    mean = float(x.mean())
    std = float(x.std(ddof=1)) if x.size > 1 else 0.0
    return mean, std


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def _resolve_workers(workers: int | None, config: ExperimentConfig) -> int:
    w = config.workers if workers is None else workers
    return (os.cpu_count() or 1) if w == 0 else w


def _run_all(config: ExperimentConfig, workers: int, keep_trace: bool) -> list[Replication]:
    jobs = [(config, rep, keep_trace) for rep in range(config.replications)]
    if workers <= 1 or config.replications == 1:
        return [_replicate(job) for job in jobs]
    chunk = max(1, config.replications // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_replicate, jobs, chunksize=chunk))


def _aggregate(rows: list[dict[str, Any]]) -> dict[str, tuple[float, float]]:
    metrics = [k for k in rows[0] if k != "rep"]
    out = {}
    for m in metrics:
        vals = [math.nan if r[m] is None else r[m] for r in rows]
        out[m] = _mean_std(vals)
    return out


def _manifest(config: ExperimentConfig) -> dict[str, Any]:
    return {
        "config": _jsonable(config.raw) if config.raw is not None else None,
        "base_seed": config.base_seed,
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return format_rate(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _write_csv(path: Path, header: list[str], rows: Iterable[Mapping[str, Any] | Sequence[Any]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if isinstance(row, Mapping):
            row = [row[h] for h in header]
        writer.writerow(row)
    path.write_text(buf.getvalue())


def write_trace_csv(path: Path, traces: Sequence[EpisodeTrace], reps: Sequence[int] | None = None) -> None:
    reps = range(len(traces)) if reps is None else reps
    path.write_text(format_trace_csv(traces, reps))


def format_trace_csv(traces: Sequence[EpisodeTrace], reps: Sequence[int]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for rep, trace in zip(reps, traces):
        cum = 0.0
        for t, (arm, why, r) in enumerate(zip(trace.arms, trace.reasons, trace.rewards), start=1):
            cum += r
            writer.writerow([rep, t, arm, why.value, _fmt(float(r)), _fmt(cum)])
    return buf.getvalue()


def _write_outputs(out_dir: Path, result: RunResult, reps: Sequence[int]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "summary.csv", SUMMARY_HEADER, [result.summary_row()])
    rep_header = list(result.rows[0])
    _write_csv(out_dir / "replications.csv", rep_header, [[_fmt(r[h]) for h in rep_header] for r in result.rows])
    if result.traces is not None:
        write_trace_csv(out_dir / "trace.csv", result.traces, reps)
    (out_dir / "manifest.json").write_text(json.dumps(result.manifest, indent=2) + "\n")


def run_experiment(config: ExperimentConfig, workers: int | None = None, out_dir: str | os.PathLike | None = None) -> RunResult:
    """Run every replication at ``config.policy.min_rate`` and aggregate.

    Outputs are written to ``out_dir`` (default ``config.out_dir``) when one
    is set: ``summary.csv``, ``replications.csv``, ``manifest.json`` and,
    with ``write_traces``, ``trace.csv``.
    """
    n_workers = _resolve_workers(workers, config)
    out = Path(out_dir) if out_dir is not None else config.out_dir
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"output directory {out} is not writable")
    log.info("running %d replications of %s (min_rate=%s, workers=%d)",
             config.replications, config.policy.kind, format_rate(config.policy.min_rate), n_workers)
    reps = _run_all(config, n_workers, keep_trace=config.write_traces)
    rows = [r.row for r in reps]
    result = RunResult(
        min_rate=config.policy.min_rate,
        policy=config.policy.kind,
        rows=rows,
        aggregate=_aggregate(rows),
        manifest=_manifest(config),
        traces=[r.trace for r in reps] if config.write_traces else None,
    )
    if out is not None:
        _write_outputs(out, result, [r.rep for r in reps])
    return result


def _rate_dirname(rate: Fraction) -> str:
    return f"min_rate_{rate.numerator}_{rate.denominator}"


def sweep(config: ExperimentConfig, workers: int | None = None, out_dir: str | os.PathLike | None = None) -> SweepResult:
    """Run the experiment once per swept minimum rate, sharing the base seed.

    Every rate is checked for feasibility before anything runs. With an
    output directory, each rate gets its own subdirectory and a combined
    ``summary.csv`` is written at the top level.
    """
    if not config.sweep:
        raise ConfigError("no sweep values given", "sweep")
    k = config.arm_count
    for v in config.sweep:
        if k * v > 1:
            raise InfeasibleError(f"{format_rate(v)} is infeasible for {k} arms ({k} * {format_rate(v)} > 1)", "sweep")
    out = Path(out_dir) if out_dir is not None else config.out_dir
    runs: dict[Fraction, RunResult] = {}
    for v in config.sweep:
        sub = out / _rate_dirname(v) if out is not None else None
        runs[v] = run_experiment(config.with_rate(v), workers=workers, out_dir=sub)
    result = SweepResult(runs)
    if out is not None:
        _write_csv(out / "summary.csv", SUMMARY_HEADER, result.summary_rows())
        manifest = _manifest(config)
        manifest["sweep"] = [format_rate(v) for v in config.sweep]
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return result
