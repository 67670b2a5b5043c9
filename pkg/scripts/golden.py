#!/usr/bin/env python3
"""Regenerate the frozen tiny-window golden values used by the test suite.

Run from the repository root:

    python3 scripts/golden.py

Prints the expectation of the point count under the tiny-window model
(Strauss beta=50, gamma=0.5, r=0.1 on [0, 0.2]^2) computed by the series
oracle with its documented settings, in full precision.  The printed
numbers must match GOLDEN_MU / GOLDEN_MC_SE / GOLDEN_TAIL in
tests/test_oracle.py and tests/test_acceptance.py; update those constants
only together with this script.
"""

from ptproc import (
    OracleSpec,
    PointCount,
    StraussModel,
    StraussParams,
    Window,
    brute_force_expectation,
)
from ptproc.rng import SeedTree

MASTER_SEED = 2026


def main() -> None:
    model = StraussModel(
        StraussParams(beta=50.0, gamma=0.5, r=0.1),
        Window([0.0, 0.0], [0.2, 0.2]),
    )
    spec = OracleSpec(n_max=13, mc_points=10**6, tail_tol=1e-6, batches=100)
    res = brute_force_expectation(model, PointCount(), spec, SeedTree(MASTER_SEED))
    print(f"GOLDEN_MU = {res.mu!r}")
    print(f"GOLDEN_MC_SE = {res.mc_se!r}")
    print(f"GOLDEN_TAIL = {res.tail_bound!r}")


if __name__ == "__main__":
    main()
