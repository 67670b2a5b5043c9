"""Unified estimation, replication and time-variance benchmarking.

estimate() drives any engine to a target relative standard error;
replicate() repeats a fixed-budget run for calibration and coverage;
benchmark() produces comparable rows whose figure of merit is
se^2 * wall_seconds (work-normalized variance), reported relative to the
adaptive engine.
"""

from __future__ import annotations

import io
import csv
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .ais import AisConfig, EstimateReport, ais_run
from .cftp import cftp_sample
from .mh import MhConfig, mh_init, mh_run, mh_step
from .models import Model, Statistic
from .rng import as_seed_tree

__all__ = [
    "ENGINES",
    "BenchmarkCase",
    "BenchmarkRow",
    "ReplicationSummary",
    "estimate",
    "replicate",
    "cftp_run",
    "benchmark",
    "rows_to_csv",
    "pool_reports",
    "run_metadata",
    "TIMER_NOISE_REL",
]

ENGINES = ("ais", "mh", "cftp")

# declared tolerance for comparing time-variance of real split runs, where
# wall clocks of the pieces do not add exactly
TIMER_NOISE_REL = 0.25

CSV_HEADER = "engine,beta,gamma,mu_hat,se,wall_seconds,n_samples,time_variance,tv_ratio_vs_ais"


def _check_engine(engine: str) -> str:
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")
    return engine


class _Welford:
    """Streaming mean / variance."""

    __slots__ = ("n", "mean", "m2")

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add(self, v: float) -> None:
        self.n += 1
        delta = v - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (v - self.mean)

    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    def se(self) -> float:
        return math.sqrt(self.variance() / self.n) if self.n > 1 else math.inf


def estimate(
    engine: str,
    m: Model,
    K: Statistic,
    target_rel_se: float,
    rng,
    *,
    ais_cfg: Optional[AisConfig] = None,
    mh_cfg: Optional[MhConfig] = None,
    t_max: int = 20,
    min_samples: int = 10,
    max_samples: int = 10**6,
    trace: Optional[list] = None,
) -> EstimateReport:
    """Estimate E[K] with one engine until se / |mu_hat| <= target_rel_se.

    The adaptive engine receives the target through its relative-variance
    threshold (eta1 = target^2); the samplers keep drawing until the
    running standard error of their retained values meets the target, or
    max_samples is hit (stop_reason 'max_steps' in that case).
    """
    _check_engine(engine)
    if not target_rel_se > 0:
        raise ValueError("target_rel_se must be positive")
    tree = as_seed_tree(rng)
    if engine == "ais":
        cfg = ais_cfg if ais_cfg is not None else AisConfig()
        cfg = replace(cfg, eta1=target_rel_se**2, eps=None, alpha=None)
        return ais_run(m, K, cfg, tree.child("ais"), trace=trace)

    t_start = time.perf_counter()
    acc = _Welford()
    stop_reason = "max_steps"
    if engine == "mh":
        cfg = mh_cfg if mh_cfg is not None else MhConfig()
        gen = tree.child("mh").generator()
        state = mh_init(m, cfg, gen)
        for _ in range(cfg.burn_in):
            state = mh_step(state, m, cfg, gen)
        steps = cfg.burn_in
        while acc.n < max_samples:
            for _ in range(cfg.thin):
                state = mh_step(state, m, cfg, gen)
            steps += cfg.thin
            acc.add(K.evaluate(state.x))
            if acc.n >= min_samples and acc.mean != 0.0:
                if acc.se() <= target_rel_se * abs(acc.mean):
                    stop_reason = "converged"
                    break
    else:
        cftp_tree = tree.child("cftp")
        steps = 0
        while acc.n < max_samples:
            info: dict = {}
            x = cftp_sample(m, cftp_tree.child(acc.n).generator(), t_max=t_max, info=info)
            steps += info["events_processed"]
            acc.add(K.evaluate(x))
            if acc.n >= min_samples and acc.mean != 0.0:
                if acc.se() <= target_rel_se * abs(acc.mean):
                    stop_reason = "converged"
                    break

    wall = time.perf_counter() - t_start
    se = acc.se()
    return EstimateReport(
        engine=engine,
        mu_hat=acc.mean,
        se=se,
        rho_final=None,
        steps=steps,
        n_total=acc.n,
        wall_seconds=wall,
        time_variance=se * se * wall,
        stop_reason=stop_reason,
    )


def cftp_run(m: Model, K: Statistic, n_samples: int, rng, t_max: int = 20) -> tuple[np.ndarray, EstimateReport]:
    """Fixed number of exact draws, reported like the other engines."""
    if n_samples < 2:
        raise ValueError("need at least two draws")
    tree = as_seed_tree(rng)
    t_start = time.perf_counter()
    ks = np.empty(n_samples)
    events = 0
    for i in range(n_samples):
        info: dict = {}
        x = cftp_sample(m, tree.child(i).generator(), t_max=t_max, info=info)
        events += info["events_processed"]
        ks[i] = K.evaluate(x)
    wall = time.perf_counter() - t_start
    mu = float(np.mean(ks))
    se = float(np.std(ks, ddof=1) / math.sqrt(n_samples))
    report = EstimateReport(
        engine="cftp",
        mu_hat=mu,
        se=se,
        rho_final=None,
        steps=events,
        n_total=n_samples,
        wall_seconds=wall,
        time_variance=se * se * wall,
        stop_reason="converged",
    )
    return ks, report


@dataclass(frozen=True)
class ReplicationSummary:
    engine: str
    R: int
    budget: int
    mu_hats: tuple
    ses: tuple
    reference_mu: Optional[float]

    @property
    def empirical_mean(self) -> float:
        return float(np.mean(self.mu_hats))

    @property
    def empirical_variance(self) -> float:
        return float(np.var(self.mu_hats, ddof=1))

    @property
    def mean_reported_variance(self) -> float:
        return float(np.mean(np.square(self.ses)))

    @property
    def coverage(self) -> float:
        """Fraction of 95% normal intervals containing the reference."""
        if self.reference_mu is None:
            raise ValueError("no reference value was supplied")
        mus = np.asarray(self.mu_hats)
        ses = np.asarray(self.ses)
        return float(np.mean(np.abs(mus - self.reference_mu) <= 1.96 * ses))


def _pmap(fn, n_items: int, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in range(n_items)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n_items)))


def replicate(
    engine: str,
    m: Model,
    K: Statistic,
    budget: int,
    R: int,
    rng,
    *,
    reference_mu: Optional[float] = None,
    threads: int = 1,
    ais_cfg: Optional[AisConfig] = None,
    mh_cfg: Optional[MhConfig] = None,
    t_max: int = 20,
) -> ReplicationSummary:
    """R independent fixed-budget runs of one engine.

    Budget counts samples (AIS: total proposal draws; MH: retained states;
    CFTP: exact draws).  Replication streams are addressed by index, so the
    result is independent of the thread count.
    """
    _check_engine(engine)
    if R < 2:
        raise ValueError("need at least two replications")
    tree = as_seed_tree(rng).child("replicate")

    def one(i: int) -> tuple[float, float]:
        sub = tree.child(i)
        if engine == "ais":
            cfg = ais_cfg if ais_cfg is not None else AisConfig()
            rep = ais_run(m, K, cfg, sub, sample_budget=budget)
        elif engine == "mh":
            cfg = mh_cfg if mh_cfg is not None else MhConfig()
            _, rep = mh_run(m, K, cfg, budget, sub.generator())
        else:
            _, rep = cftp_run(m, K, budget, sub, t_max=t_max)
        return rep.mu_hat, rep.se

    results = _pmap(one, R, threads)
    mus = tuple(r[0] for r in results)
    ses = tuple(r[1] for r in results)
    return ReplicationSummary(
        engine=engine, R=R, budget=budget, mu_hats=mus, ses=ses, reference_mu=reference_mu
    )


@dataclass(frozen=True)
class BenchmarkCase:
    """One model/statistic cell of a benchmark grid."""

    model: Model
    statistic: Statistic
    engines: tuple = ENGINES

    def __post_init__(self):
        for e in self.engines:
            _check_engine(e)
        if "ais" not in self.engines:
            raise ValueError("every benchmark case needs the 'ais' baseline engine")


@dataclass(frozen=True)
class BenchmarkRow:
    engine: str
    beta: float
    gamma: float
    mu_hat: float
    se: float
    wall_seconds: float
    n_samples: int
    time_variance: float
    tv_ratio_vs_ais: float


def benchmark(
    cases: Sequence[BenchmarkCase],
    target_rel_se: float,
    rng,
    *,
    threads: int = 1,
    ais_cfg: Optional[AisConfig] = None,
    mh_cfg: Optional[MhConfig] = None,
    t_max: int = 20,
    min_samples: int = 10,
    max_samples: int = 10**6,
) -> list[BenchmarkRow]:
    """Run every (case, engine) cell and normalize time-variance by the
    case's AIS row.  Cells are independent tasks with index-derived
    streams; rows come back grouped by case, AIS first."""
    tree = as_seed_tree(rng).child("benchmark")
    tasks = []
    for ci, case in enumerate(cases):
        ordered = ("ais",) + tuple(e for e in case.engines if e != "ais")
        for engine in ordered:
            tasks.append((ci, case, engine))

    def one(i: int) -> EstimateReport:
        ci, case, engine = tasks[i]
        return estimate(
            engine,
            case.model,
            case.statistic,
            target_rel_se,
            tree.child(ci, engine),
            ais_cfg=ais_cfg,
            mh_cfg=mh_cfg,
            t_max=t_max,
            min_samples=min_samples,
            max_samples=max_samples,
        )

    reports = _pmap(one, len(tasks), threads)
    ais_tv = {}
    for (ci, _case, engine), rep in zip(tasks, reports):
        if engine == "ais":
            ais_tv[ci] = rep.time_variance
    rows = []
    for (ci, case, engine), rep in zip(tasks, reports):
        params = getattr(case.model, "params", None)
        base = ais_tv[ci]
        rows.append(
            BenchmarkRow(
                engine=engine,
                beta=getattr(params, "beta", math.nan),
                gamma=getattr(params, "gamma", math.nan),
                mu_hat=rep.mu_hat,
                se=rep.se,
                wall_seconds=rep.wall_seconds,
                n_samples=rep.n_total,
                time_variance=rep.time_variance,
                tv_ratio_vs_ais=rep.time_variance / base if base > 0 else math.nan,
            )
        )
    return rows


def rows_to_csv(rows: Sequence[BenchmarkRow]) -> str:
    """Fixed-schema CSV ('.' decimal separator, LF line endings)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for r in rows:
        writer.writerow(
            [
                r.engine,
                repr(float(r.beta)),
                repr(float(r.gamma)),
                repr(float(r.mu_hat)),
                repr(float(r.se)),
                repr(float(r.wall_seconds)),
                r.n_samples,
                repr(float(r.time_variance)),
                repr(float(r.tv_ratio_vs_ais)),
            ]
        )
    return buf.getvalue()


def pool_reports(a: EstimateReport, b: EstimateReport) -> EstimateReport:
    """Merge two fixed-budget reports of the same engine as if their
    samples had formed a single run: pooled mean and variance, summed
    wall clock.  time_variance is then invariant to the split, up to the
    declared timer noise for real runs."""
    if a.engine != b.engine:
        raise ValueError("cannot pool reports from different engines")
    na, nb = a.n_total, b.n_total
    n = na + nb
    mean = (na * a.mu_hat + nb * b.mu_hat) / n
    var_a = a.se**2 * na
    var_b = b.se**2 * nb
    ss = (
        var_a * (na - 1)
        + var_b * (nb - 1)
        + na * (a.mu_hat - mean) ** 2
        + nb * (b.mu_hat - mean) ** 2
    )
    var = ss / (n - 1)
    se = math.sqrt(var / n)
    wall = a.wall_seconds + b.wall_seconds
    return EstimateReport(
        engine=a.engine,
        mu_hat=mean,
        se=se,
        rho_final=None,
        steps=a.steps + b.steps,
        n_total=n,
        wall_seconds=wall,
        time_variance=se * se * wall,
        stop_reason="converged",
    )


def run_metadata() -> dict:
    """Hardware / software context recorded next to benchmark outputs."""
    from . import kernels

    return {
        "platform": platform.platform(),
        "processor": platform.processor() or "unknown",
        "python": platform.python_version(),
        "numpy": np.__version__,
        "kernel_backend": kernels.BACKEND,
    }
