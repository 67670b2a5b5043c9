"""Monte Carlo expectation estimation for locally stable finite point processes.

The package estimates E[K(X)] for a statistic K of a point process X given
by an unnormalised density with respect to the unit-rate Poisson process on
a bounded box.  Three engines are provided: adaptive importance sampling
with a self-tuned Poisson proposal, a birth-death Metropolis-Hastings
chain, and dominated coupling from the past for exact draws.  A brute-force
low-count series oracle and a time-variance benchmark harness round out the
toolkit.
"""

from .ais import AisConfig, EstimateReport, SignedLogSum, TraceRow, ais_run
from .cftp import CftpHorizonError, DominatingTrajectory, cftp_sample, sandwich_replay
from .geometry import PointPattern, Window, close_pair_count
from .harness import (
    ENGINES,
    BenchmarkCase,
    BenchmarkRow,
    ReplicationSummary,
    benchmark,
    cftp_run,
    estimate,
    pool_reports,
    replicate,
    rows_to_csv,
    run_metadata,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .mh import MhConfig, mh_init, mh_run, mh_step
from .models import (
    BoundaryCount,
    InhomStraussModel,
    InhomStraussParams,
    Model,
    PapangelouOrigin,
    PointCount,
    Statistic,
    StraussModel,
    StraussParams,
    model_from_spec,
    statistic_from_spec,
)
from .oracle import (
    OracleResult,
    OracleSpec,
    TailBoundError,
    brute_force_expectation,
    count_distribution,
    series_tail_bound,
)
from .poisson import log_g, sample_poisson
from .rng import SeedTree

__version__ = "0.1.0"

__all__ = [
    "AisConfig",
    "BenchmarkCase",
    "BenchmarkRow",
    "BoundaryCount",
    "CftpHorizonError",
    "DominatingTrajectory",
    "ENGINES",
    "EstimateReport",
    "InhomStraussModel",
    "InhomStraussParams",
    "KERNEL_BACKEND",
    "MhConfig",
    "Model",
    "OracleResult",
    "OracleSpec",
    "PapangelouOrigin",
    "PointCount",
    "PointPattern",
    "ReplicationSummary",
    "SeedTree",
    "SignedLogSum",
    "Statistic",
    "StraussModel",
    "StraussParams",
    "TailBoundError",
    "TraceRow",
    "Window",
    "ais_run",
    "benchmark",
    "brute_force_expectation",
    "cftp_run",
    "cftp_sample",
    "close_pair_count",
    "count_distribution",
    "estimate",
    "log_g",
    "mh_init",
    "mh_run",
    "mh_step",
    "model_from_spec",
    "pool_reports",
    "replicate",
    "rows_to_csv",
    "run_metadata",
    "sample_poisson",
    "sandwich_replay",
    "series_tail_bound",
    "statistic_from_spec",
    "__version__",
]
