"""Experiment runner: wires an adversary, a policy, offline benchmarks and the
metric suite into reproducible runs with CSV/JSON outputs."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .bandit import AlphaFairCBBandit, SfMabBaseline
from .benchmark import benchmark_checkpoints
from .core import AdversarySequence, CumulativeRewards, RunTrace, c_alpha, update_expected
from .data import MOVIELENS_GENRES, empirical_context_distribution, gen_synthetic, load_ratings_csv
from .full_info import GRADIENT_TIMINGS, AlphaFairCB, FloorFairCB, Hedge
from .metrics import jain_index, reduction_bound

log = logging.getLogger(__name__)

FULL_INFO_POLICIES = ("alpha_faircb", "hedge", "faircb_floor")
BANDIT_POLICIES = ("alpha_faircb", "sfmab_baseline")
METRICS = (
    "alpha_performance",
    "jain_index",
    "approx_regret",
    "surrogate_regret",
    "standard_regret",
    "avg_cumulative_reward",
)
SUMMARY_SCHEMA = "alphafair.summary/1"
DEFAULT_BANDIT_SEEDS = 30


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    feedback: str = "full_info"
    policy: str = "alpha_faircb"
    alpha: float = 0.9
    nu: Optional[float] = None
    gradient_timing: str = "previous_occurrence"
    hedge_eta: Optional[float] = None
    # data source: "synthetic" or "csv"
    data: str = "synthetic"
    csv_path: Optional[str] = None
    movies_csv: Optional[str] = None
    limit_rows: Optional[int] = 5000
    min_context_frequency: Optional[int] = None
    genres: List[str] = field(default_factory=lambda: list(MOVIELENS_GENRES))
    delta: float = 0.2
    synthetic_kind: str = "context_dependent_best"
    num_arms: int = 5
    num_contexts: int = 4
    horizon: int = 20000
    synthetic_seed: int = 1337
    # None: 30 seeds for bandit runs, a single seed for deterministic full information
    seeds: Optional[List[int]] = None
    checkpoint_schedule: str = "linear"
    checkpoint_count: int = 200
    benchmark_tol: float = 1e-8
    out_dir: str = "runs/default"
    workers: int = 1
    write_traces: bool = True

    def validate(self) -> "ExperimentConfig":
        if self.feedback not in ("full_info", "bandit"):
            raise ConfigError(f"feedback must be full_info or bandit, got {self.feedback!r}")
        allowed = FULL_INFO_POLICIES if self.feedback == "full_info" else BANDIT_POLICIES
        if self.policy not in allowed:
            raise ConfigError(
                f"policy {self.policy!r} is not available with {self.feedback} feedback; "
                f"choose from {allowed}"
            )
        if not (0.0 <= self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.gradient_timing not in GRADIENT_TIMINGS:
            raise ConfigError(f"gradient_timing must be one of {GRADIENT_TIMINGS}")
        if self.data not in ("synthetic", "csv"):
            raise ConfigError(f"data must be synthetic or csv, got {self.data!r}")
        if self.data == "csv" and not self.csv_path:
            raise ConfigError("data = 'csv' needs csv_path")
        if self.checkpoint_schedule not in ("linear", "geometric"):
            raise ConfigError("checkpoint_schedule must be linear or geometric")
        if self.seeds is None:
            self.seeds = list(range(DEFAULT_BANDIT_SEEDS)) if self.feedback == "bandit" else [0]
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.checkpoint_count < 1 or self.workers < 1:
            raise ConfigError("checkpoint_count and workers must be positive")
        return self

    def replace(self, **changes) -> "ExperimentConfig":
        return ExperimentConfig(**{**asdict(self), **changes}).validate()


def load_config(path, overrides: Optional[Dict] = None) -> ExperimentConfig:
    """Read a flat TOML file; ``overrides`` (e.g. from CLI flags) win."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    raw.update(overrides or {})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    nested = [k for k, v in raw.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config must be flat; tables found under {nested}")
    try:
        return ExperimentConfig(**raw).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def build_sequence(config: ExperimentConfig) -> AdversarySequence:
    if config.data == "csv":
        seq, _ = load_ratings_csv(
            config.csv_path,
            limit_rows=config.limit_rows,
            delta=config.delta,
            min_context_frequency=config.min_context_frequency,
            movies_csv=config.movies_csv,
            genres=config.genres,
        )
        return seq
    return gen_synthetic(
        config.synthetic_kind,
        config.num_arms,
        config.num_contexts,
        config.horizon,
        config.delta,
        config.synthetic_seed,
    )


def sequence_hash(seq: AdversarySequence) -> str:
    """Git blob-style SHA-1 of a canonical serialisation of the sequence."""
    header = f"N={seq.num_arms} M={seq.num_contexts} T={seq.horizon} delta={seq.delta!r}\n"
    body = (
        header.encode()
        + np.ascontiguousarray(seq.contexts, dtype="<i8").tobytes()
        + np.ascontiguousarray(seq.rewards, dtype="<f8").tobytes()
    )
    return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()


def checkpoint_rounds(horizon: int, schedule: str = "linear", count: int = 200) -> List[int]:
    """Rounds at which metrics and benchmarks are evaluated; always holds 0 and T."""
    if horizon <= 0:
        return [0]
    if schedule == "geometric":
        pts = np.unique(np.round(np.geomspace(1, horizon, count)).astype(np.int64))
    else:
        step = max(1, horizon // count)
        pts = np.arange(step, horizon + 1, step, dtype=np.int64)
    rounds = sorted(set(int(t) for t in pts) | {0, horizon})
    return rounds


def make_policy(config: ExperimentConfig, seq: AdversarySequence, seed: int):
    n, m = seq.num_arms, seq.num_contexts
    if config.feedback == "full_info":
        if config.policy == "alpha_faircb":
            return AlphaFairCB(n, m, config.alpha, config.gradient_timing)
        if config.policy == "hedge":
            return Hedge(n, eta=config.hedge_eta, horizon=max(1, seq.horizon))
        return FloorFairCB(
            n, m, nu=config.nu, eta=config.hedge_eta, horizon=max(1, seq.horizon),
            context_distribution=(
                empirical_context_distribution(seq) if seq.horizon else None
            ),
        )
    if config.policy == "alpha_faircb":
        return AlphaFairCBBandit(n, m, config.alpha, seed)
    return SfMabBaseline(n, seed)


def simulate(policy, seq: AdversarySequence, alpha: float) -> RunTrace:
    """Play ``policy`` against ``seq`` and record every round."""
    n = seq.num_arms
    trace = RunTrace(seq.horizon, n, seq.num_contexts, policy.feedback)
    R = CumulativeRewards(n)
    contexts, rewards = seq.contexts, seq.rewards
    full_info = policy.feedback == "full_info"
    for k in range(seq.horizon):
        c = int(contexts[k])
        r = rewards[k]
        R_prev = R.values.copy()
        g = R_prev ** (-alpha) * r
        if full_info:
            x = policy.select(c, R_prev)
            policy.observe(c, r, R_prev)
            update_expected(R, x, r, check=__debug__)
            trace.record(c, x, None, r, R.values, g)
        else:
            arm, p = policy.play(c, r, R)
            trace.record(c, p, arm, r, R.values, g)
    return trace


def checkpoint_metrics(
    trace: RunTrace,
    rounds: Sequence[int],
    bench_objectives: Sequence[float],
    alpha: float,
) -> Dict[str, np.ndarray]:
    """Every metric at every checkpoint, accumulated in one pass over the trace."""
    m, n = trace.num_contexts, trace.num_arms
    G = np.zeros((m, n))  # per-context surrogate gradient sums
    W = np.zeros((m, n))  # per-context raw reward sums
    earned_sur = 0.0
    earned_raw = 0.0
    ca = c_alpha(alpha)
    out = {name: np.zeros(len(rounds)) for name in METRICS}
    prev = 0
    for k, t in enumerate(rounds):
        if t > prev:
            ctx = trace.contexts[prev:t]
            acts = trace.actions(t, start=prev)
            np.add.at(G, ctx, trace.grads[prev:t])
            np.add.at(W, ctx, trace.rewards[prev:t])
            earned_sur += float(np.einsum("ti,ti->", trace.grads[prev:t], acts))
            earned_raw += float(np.einsum("ti,ti->", trace.rewards[prev:t], acts))
            prev = t
        R = trace.cumulative_at(t)
        perf = float(np.sum(R ** (1.0 - alpha)) / (1.0 - alpha))
        out["alpha_performance"][k] = perf
        out["jain_index"][k] = jain_index(R)
        out["approx_regret"][k] = bench_objectives[k] - ca * perf
        out["surrogate_regret"][k] = float(G.max(axis=1).sum()) - earned_sur
        out["standard_regret"][k] = float(W.max(axis=1).sum()) - earned_raw
        out["avg_cumulative_reward"][k] = float(R.mean())
    return out


def _run_seed(args):
    config, seq, seed = args
    policy = make_policy(config, seq, seed)
    return simulate(policy, seq, config.alpha)


def write_trace_csv(path: Path, trace: RunTrace) -> None:
    n = trace.num_arms
    header = (
        ["t", "context", "arm"]
        + [f"p_{i}" for i in range(n)]
        + [f"r_{i}" for i in range(n)]
        + [f"R_{i}" for i in range(n)]
        + [f"g_{i}" for i in range(n)]
    )
    T = trace.length
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        if T:
            idx = np.column_stack([np.arange(1, T + 1), trace.contexts[:T], trace.arms[:T]])
            vals = np.hstack([trace.played[:T], trace.rewards[:T], trace.cumulative[:T], trace.grads[:T]])
            np.savetxt(fh, np.hstack([idx.astype(np.float64), vals]),
                       fmt=["%d"] * 3 + ["%.17g"] * (4 * n), delimiter=",")


def _mean_stderr(values: np.ndarray):
    """Mean and standard error along axis 0."""
    k = values.shape[0]
    mean = values.mean(axis=0)
    if k < 2:
        return mean, np.zeros_like(mean)
    return mean, values.std(axis=0, ddof=1) / math.sqrt(k)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rounds: List[int]
    per_seed: Dict[int, Dict[str, np.ndarray]]
    final_cumulative: Dict[int, List[float]]
    traces: Dict[int, RunTrace]
    benchmark_objectives: List[float]
    benchmark_converged: bool
    summary: Dict

    def final(self, metric: str) -> float:
        return float(self.summary[f"final_{metric}"]["mean"])


def run_experiment(
    config: ExperimentConfig,
    seq: Optional[AdversarySequence] = None,
    write: bool = True,
    label: Optional[str] = None,
) -> ExperimentResult:
    """Run every seed of ``config``, compute checkpoint metrics, and (if
    ``write``) emit trace CSVs, ``metrics.csv`` and ``summary.json``."""
    config.validate()
    if seq is None:
        seq = build_sequence(config)
    rounds = checkpoint_rounds(seq.horizon, config.checkpoint_schedule, config.checkpoint_count)
    sols = benchmark_checkpoints(seq, config.alpha, rounds, config.benchmark_tol)
    bench = [s.objective for s in sols]
    converged = all(s.converged for s in sols)
    if not converged:
        log.warning("offline benchmark did not converge at %d checkpoint(s)",
                    sum(not s.converged for s in sols))

    seeds = list(config.seeds)
    jobs = [(config, seq, s) for s in seeds]
    if config.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            traces = dict(zip(seeds, pool.map(_run_seed, jobs)))
    else:
        traces = {s: _run_seed(job) for s, job in zip(seeds, jobs)}

    per_seed = {s: checkpoint_metrics(traces[s], rounds, bench, config.alpha) for s in seeds}
    final_R = {s: traces[s].cumulative_at(seq.horizon).tolist() for s in seeds}

    summary = {
        "schema": SUMMARY_SCHEMA,
        "label": label or ("synthetic desk-scale instance" if config.data == "synthetic"
                           else "ratings log"),
        "feedback": config.feedback,
        "policy": config.policy,
        "alpha": config.alpha,
        "c_alpha": c_alpha(config.alpha),
        "num_arms": seq.num_arms,
        "num_contexts": seq.num_contexts,
        "horizon": seq.horizon,
        "seeds": seeds,
        "n_seeds": len(seeds),
        "averaging": "mean over seeds" if config.feedback == "bandit" else "deterministic",
        "input_hash": sequence_hash(seq),
        "benchmark": {
            "objective": bench[-1],
            "iterations": sols[-1].iterations,
            "gradient_mapping_norm": sols[-1].gradient_mapping_norm,
            "converged": converged,
        },
        "final_cumulative_rewards": {str(s): final_R[s] for s in seeds},
        "config": asdict(config),
    }
    for name in METRICS:
        finals = np.array([per_seed[s][name][-1] for s in seeds])
        mean, se = _mean_stderr(finals)
        summary[f"final_{name}"] = {
            "mean": float(mean),
            "stderr": float(se),
            "per_seed": finals.tolist(),
        }
    summary["reduction_bound"] = reduction_bound(
        summary["final_surrogate_regret"]["mean"], config.alpha, seq.num_arms
    )

    result = ExperimentResult(config, rounds, per_seed, final_R, traces, bench, converged, summary)
    if write:
        write_outputs(result)
    return result


def write_outputs(result: ExperimentResult) -> Path:
    out = Path(result.config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if result.config.write_traces:
        for s, trace in result.traces.items():
            write_trace_csv(out / f"trace_seed{s}.csv", trace)
    seeds = list(result.per_seed)
    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "metric", "mean", "stderr", "n_seeds"])
        for name in METRICS:
            values = np.array([result.per_seed[s][name] for s in seeds])
            mean, se = _mean_stderr(values)
            for t, mu, e in zip(result.rounds, mean, se):
                w.writerow([t, name, repr(float(mu)), repr(float(e)), len(seeds)])
    with open(out / "summary.json", "w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def parse_alpha_grid(spec: str) -> List[float]:
    """``"lo:hi:count"`` -> evenly spaced values; ``"a,b,c"`` -> explicit list."""
    if ":" in spec:
        lo, hi, count = spec.split(":")
        return [float(a) for a in np.linspace(float(lo), float(hi), int(count))]
    return [float(a) for a in spec.split(",") if a.strip()]


def sweep_alpha(config: ExperimentConfig, alpha_values: Sequence[float],
                write: bool = True) -> List[Dict]:
    """One full-information run per alpha; returns rows of final Jain index and
    average cumulative reward (also written to ``sweep_alpha.csv``)."""
    if config.feedback != "full_info":
        raise ConfigError("sweep_alpha runs in full_info mode")
    seq = build_sequence(config)
    label = ("synthetic desk-scale stand-in" if config.data == "synthetic" else "ratings log")
    rows = []
    base = Path(config.out_dir)
    for a in alpha_values:
        cfg = config.replace(alpha=float(a), out_dir=str(base / f"alpha_{a:.6f}"))
        res = run_experiment(cfg, seq=seq, write=write, label=label)
        rows.append({
            "alpha": float(a),
            "jain_index": res.final("jain_index"),
            "avg_cumulative_reward": res.final("avg_cumulative_reward"),
            "benchmark_converged": res.benchmark_converged,
        })
    if write:
        base.mkdir(parents=True, exist_ok=True)
        with open(base / "sweep_alpha.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["alpha", "jain_index", "avg_cumulative_reward", "label"])
            for row in rows:
                w.writerow([repr(row["alpha"]), repr(row["jain_index"]),
                            repr(row["avg_cumulative_reward"]), label])
    return rows
