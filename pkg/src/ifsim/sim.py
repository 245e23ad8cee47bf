"""Seeded Monte Carlo engine over an SNR grid.

Every (snr point, trial) pair gets its own counter-based RNG substream,
so results are a pure function of the configuration no matter how trials
are scheduled.  Aggregation walks trials in index order; means use
numpy's pairwise summation on arrays assembled in that fixed order.
"""

from __future__ import annotations

import multiprocessing
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ifsim import baselines, channel, ifmr, oracle
from ifsim.coeff_opt import SearchConfig
from ifsim.oracle import OracleBound

SCHEMES = ("ifmr", "iflr", "mmse", "zf", "oracle")


class TrialFailure(Exception):
    """A per-trial error; carries the trial index and snr point."""

    def __init__(self, snr_db, trial, cause):
        super().__init__(snr_db, trial, cause)
        self.snr_db = snr_db
        self.trial = trial
        self.cause = cause

    def __str__(self):
        return f"trial {self.trial} at {self.snr_db} dB failed: {self.cause}"


@dataclass(frozen=True)
class SimConfig:
    K: int = 3
    Nt: tuple = 1
    Nr: tuple = 1
    rho2: float = 1.0
    snr_grid_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    trials: int = 1000
    seed: int = 1
    schemes: tuple = ("ifmr", "mmse", "zf")
    search: SearchConfig = field(default_factory=SearchConfig)
    oracle_bound: OracleBound = field(default_factory=OracleBound)
    target_rate: float = 1.0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not all(np.isfinite(self.snr_grid_db)):
            raise ValueError("snr grid must be finite")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ValueError(f"unknown schemes {bad}; valid: {SCHEMES}")
        if self.target_rate < 0:
            raise ValueError("target_rate must be nonnegative")


@dataclass
class TrialMetrics:
    """Per-realization outcome: per-scheme rate per receiver, plus costs."""

    rates: dict
    iterations: list
    wall_time: float


def run_trial(cfg: SimConfig, snr_db: float, substream: int) -> TrialMetrics:
    """One channel realization: every selected scheme at every receiver."""
    start = time.perf_counter()
    cs = channel.generate(cfg.K, cfg.Nt, cfg.Nr, cfg.rho2, cfg.seed, substream=substream)
    snr = 10.0 ** (snr_db / 10.0)
    rates = {scheme: [] for scheme in cfg.schemes}
    iterations = []
    for k in range(cfg.K):
        ctx = channel.receiver_context(cs, k, snr)
        if "ifmr" in rates:
            result = ifmr.run_receiver(ctx, cfg.search)
            rates["ifmr"].append(result.sum_rate)
            iterations.extend(stage.iterations for stage in result.stages)
        if "iflr" in rates:
            rates["iflr"].append(baselines.iflr_rate(ctx, cfg.search))
        if "mmse" in rates:
            rates["mmse"].append(baselines.mmse_rate(ctx))
        if "zf" in rates:
            rates["zf"].append(baselines.zf_rate(ctx))
        if "oracle" in rates:
            rates["oracle"].append(oracle.sequential_rates(ctx, cfg.oracle_bound).sum_rate)
    return TrialMetrics(rates=rates, iterations=iterations,
                        wall_time=time.perf_counter() - start)


def _worker(args):
    cfg, snr_db, substream, trial = args
    try:
        return run_trial(cfg, snr_db, substream)
    except Exception as exc:  # noqa: BLE001 - rewrap with trial context
        raise TrialFailure(snr_db, trial, repr(exc)) from exc


@dataclass
class SimResult:
    """Aggregates per (snr, scheme) plus the raw per-trial rate samples."""

    config: SimConfig
    rows: list
    samples: dict          # (snr_db, scheme) -> array (trials, K)
    iteration_means: dict  # snr_db -> mean stage iterations
    wall_time: float

    def to_csv(self) -> str:
        header = "snr_db,scheme,mean_rate,stderr,outage,throughput,mean_iters"
        lines = [header]
        for row in self.rows:
            lines.append(
                f"{row['snr_db']:.6g},{row['scheme']},{row['mean_rate']:.10g},"
                f"{row['stderr']:.10g},{row['outage']:.10g},{row['throughput']:.10g},"
                f"{row['mean_iters']:.10g}")
        return "\n".join(lines) + "\n"

    def manifest(self) -> dict:
        from ifsim import __version__

        cfg = self.config
        return {
            "version": __version__,
            "wall_time_s": self.wall_time,
            "config": {
                "K": cfg.K,
                "Nt": list(np.atleast_1d(cfg.Nt).astype(int)) if not np.isscalar(cfg.Nt) else cfg.Nt,
                "Nr": list(np.atleast_1d(cfg.Nr).astype(int)) if not np.isscalar(cfg.Nr) else cfg.Nr,
                "rho2": cfg.rho2 if np.isscalar(cfg.rho2) else np.asarray(cfg.rho2).tolist(),
                "snr_grid_db": list(cfg.snr_grid_db),
                "trials": cfg.trials,
                "seed": cfg.seed,
                "schemes": list(cfg.schemes),
                "target_rate": cfg.target_rate,
                "search": {
                    "w": cfg.search.w,
                    "r_max": cfg.search.r_max,
                    "factor_bound": cfg.search.factor_bound,
                    "sdp_tol": cfg.search.sdp_tol,
                    "delta": cfg.search.delta,
                    "max_iters": cfg.search.max_iters,
                },
                "oracle_bound": {
                    "factor_bound": cfg.oracle_bound.factor_bound,
                    "a_bound": cfg.oracle_bound.a_bound,
                    "c_bound": cfg.oracle_bound.c_bound,
                },
            },
            "per_receiver_mean_rate": {
                f"{snr_db}:{scheme}": np.asarray(arr).mean(axis=0).tolist()
                for (snr_db, scheme), arr in sorted(self.samples.items(), key=lambda kv: str(kv[0]))
            },
        }


def outage(rate_samples, target_rate: float) -> float:
    """Empirical probability that the achievable rate falls below target."""
    samples = np.asarray(rate_samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("need at least one sample")
    return float(np.count_nonzero(samples < target_rate)) / samples.size


def throughput(rate_samples, target_rate: float) -> float:
    """Goodput at a fixed target rate: target_rate * (1 - outage)."""
    return target_rate * (1.0 - outage(rate_samples, target_rate))


def run(cfg: SimConfig, workers: int = 1, log=None) -> SimResult:
    """Run the full grid; deterministic for a fixed config at any worker count."""
    start = time.perf_counter()
    snr_grid = list(cfg.snr_grid_db)
    metrics = {}
    for snr_idx, snr_db in enumerate(snr_grid):
        tasks = [(cfg, snr_db, snr_idx * cfg.trials + trial, trial)
                 for trial in range(cfg.trials)]
        if workers > 1:
            with multiprocessing.Pool(workers) as pool:
                results = pool.map(_worker, tasks, chunksize=max(1, cfg.trials // (8 * workers)))
        else:
            results = [_worker(task) for task in tasks]
        metrics[snr_db] = results
        if log is not None:
            log(f"snr {snr_db:g} dB: {cfg.trials} trials done")

    rows = []
    samples = {}
    iteration_means = {}
    for snr_db in snr_grid:
        trials = metrics[snr_db]
        iters = [it for tm in trials for it in tm.iterations]
        iteration_means[snr_db] = float(np.mean(iters)) if iters else 0.0
        for scheme in cfg.schemes:
            arr = np.array([tm.rates[scheme] for tm in trials], dtype=float)
            samples[(snr_db, scheme)] = arr
            per_trial = arr.mean(axis=1)
            mean_rate = float(per_trial.mean())
            stderr = float(per_trial.std(ddof=1) / np.sqrt(len(per_trial))) if len(per_trial) > 1 else 0.0
            rows.append({
                "snr_db": snr_db,
                "scheme": scheme,
                "mean_rate": mean_rate,
                "stderr": stderr,
                "outage": outage(arr, cfg.target_rate),
                "throughput": throughput(arr, cfg.target_rate),
                "mean_iters": iteration_means[snr_db] if scheme == "ifmr" else 0.0,
            })
    return SimResult(config=cfg, rows=rows, samples=samples,
                     iteration_means=iteration_means, wall_time=time.perf_counter() - start)


def with_target_rate(result: SimResult, scheme: str, target_rates) -> list:
    """Re-evaluate outage and throughput of stored samples on a target grid."""
    rows = []
    for snr_db in result.config.snr_grid_db:
        arr = result.samples[(snr_db, scheme)]
        for rt in target_rates:
            rows.append({
                "snr_db": snr_db,
                "scheme": scheme,
                "target_rate": float(rt),
                "outage": outage(arr, rt) if rt > 0 else outage(arr, 0.0),
                "throughput": throughput(arr, rt),
            })
    return rows
