"""Checks for the brute-force series reference instrument.

This module is the measuring stick for everything else, so it is tested
against closed forms that do not depend on any sampler: a constant
statistic integrates to exactly 1, the non-interacting case has a known
mean count, and the truncation tail bound matches a direct series sum.
"""

import math

import numpy as np
import pytest

from ptproc import (
    OracleResult,
    OracleSpec,
    PointCount,
    Statistic,
    StraussModel,
    StraussParams,
    TailBoundError,
    Window,
    brute_force_expectation,
    count_distribution,
    series_tail_bound,
)
from ptproc.models import Model
from ptproc.rng import SeedTree

# frozen reference numbers for the tiny-window repulsive case
# (window [0,0.2]^2, beta=50, gamma=0.5, r=0.1, K = point count,
# n_max=13, mc_points=10**6, master seed 2026)
GOLDEN_MU = 1.4134049099881763
GOLDEN_MC_SE = 0.00013070237639992927
GOLDEN_TAIL = 2.080507234109934e-07


def tiny_model() -> StraussModel:
    window = Window([0.0, 0.0], [0.2, 0.2])
    return StraussModel(StraussParams(beta=50.0, gamma=0.5, r=0.1), window)


class ConstantOne(Statistic):
    def evaluate(self, x) -> float:
        return 1.0


def test_constant_statistic_integrates_to_one():
    res = brute_force_expectation(
        tiny_model(), ConstantOne(), OracleSpec(n_max=13, mc_points=2000), SeedTree(5)
    )
    assert res.mu == pytest.approx(1.0, abs=1e-12)


def test_non_interacting_mean_count_is_closed_form():
    # gamma=1 makes h(x) = beta^n, a Poisson(beta) process: E[n] = beta*|S|.
    # The count statistic is constant given n, so the Monte Carlo part
    # cancels in the ratio and the series value is essentially exact.
    window = Window([0.0, 0.0], [0.2, 0.2])
    m = StraussModel(StraussParams(beta=50.0, gamma=1.0, r=0.1), window)
    res = brute_force_expectation(
        m, PointCount(), OracleSpec(n_max=16, mc_points=1000), SeedTree(6)
    )
    assert res.mu == pytest.approx(50.0 * 0.04, rel=1e-9)
    assert res.mc_se < 1e-12


def test_tail_bound_matches_direct_series_sum():
    m = tiny_model()
    lam = m.phi_integral  # 50 * 0.04 = 2
    assert lam == pytest.approx(2.0)
    for n_max in (5, 9, 13):
        # the bound is exp(c* - |S|) * P(N > n_max) with N ~ Poisson(c*);
        # compute the Poisson tail by direct summation with a recursive term
        term = math.exp(-lam)
        for n in range(1, n_max + 1):
            term *= lam / n
        tail = 0.0
        for n in range(n_max + 1, n_max + 80):
            term *= lam / n
            tail += term
        expected = math.exp(lam - m.window.area) * tail
        assert series_tail_bound(m, n_max) == pytest.approx(expected, rel=1e-10)
    assert series_tail_bound(m, 13) == pytest.approx(GOLDEN_TAIL, rel=1e-12)


def test_tail_gate_raises_when_truncation_too_short():
    with pytest.raises(TailBoundError) as err:
        brute_force_expectation(
            tiny_model(), PointCount(), OracleSpec(n_max=5, mc_points=100), SeedTree(7)
        )
    assert err.value.tail_bound > 1e-6
    assert err.value.n_max == 5


def test_golden_value_regression():
    # small Monte Carlo size re-run must stay statistically compatible with
    # the frozen high-precision golden number
    res = brute_force_expectation(
        tiny_model(), PointCount(), OracleSpec(n_max=13, mc_points=20000), SeedTree(99)
    )
    assert abs(res.mu - GOLDEN_MU) < 4 * math.sqrt(res.mc_se**2 + GOLDEN_MC_SE**2)


def test_oracle_is_deterministic():
    spec = OracleSpec(n_max=13, mc_points=3000)
    a = brute_force_expectation(tiny_model(), PointCount(), spec, SeedTree(42))
    b = brute_force_expectation(tiny_model(), PointCount(), spec, SeedTree(42))
    assert a.mu == b.mu
    assert a.mc_se == b.mc_se
    assert np.array_equal(a.count_masses, b.count_masses)


class LoopStatistic(Statistic):
    """Forces the generic per-pattern route; must agree with the vectorized
    count path bit for bit because both see the same coordinates."""

    def evaluate(self, x) -> float:
        return float(x.n)


def test_generic_statistic_route_matches_vectorized():
    spec = OracleSpec(n_max=13, mc_points=2000)
    fast = brute_force_expectation(tiny_model(), PointCount(), spec, SeedTree(13))
    slow = brute_force_expectation(tiny_model(), LoopStatistic(), spec, SeedTree(13))
    assert slow.mu == fast.mu


class OpaqueStrauss(Model):
    """Pass-through wrapper hiding the Strauss type, forcing the generic
    per-pattern density route in the oracle."""

    def __init__(self, inner: StraussModel):
        self._inner = inner
        self.window = inner.window
        self.phi_integral = inner.phi_integral
        self.interaction_range = inner.interaction_range

    def log_h(self, x) -> float:
        return self._inner.log_h(x)

    def log_papangelou_coords(self, coords, xi) -> float:
        return self._inner.log_papangelou_coords(coords, xi)


def test_generic_density_route_matches_vectorized():
    spec = OracleSpec(n_max=10, mc_points=1500, tail_tol=1e-4)
    fast = brute_force_expectation(tiny_model(), PointCount(), spec, SeedTree(21))
    slow = brute_force_expectation(OpaqueStrauss(tiny_model()), PointCount(), spec, SeedTree(21))
    assert slow.mu == pytest.approx(fast.mu, rel=1e-9)


def test_count_distribution_sums_to_one_and_matches_result():
    spec = OracleSpec(n_max=13, mc_points=3000)
    dist = count_distribution(tiny_model(), spec, SeedTree(31))
    assert dist.shape == (14,)
    assert dist.sum() == pytest.approx(1.0, abs=1e-12)
    res = brute_force_expectation(tiny_model(), PointCount(), spec, SeedTree(31))
    assert np.allclose(dist, res.count_distribution())
    # mean of the count distribution must equal the oracle mean for K = n
    assert float(np.arange(14) @ dist) == pytest.approx(res.mu, rel=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        OracleSpec(n_max=-1)
    with pytest.raises(ValueError):
        OracleSpec(mc_points=0)
    with pytest.raises(ValueError):
        OracleSpec(tail_tol=0.0)
    with pytest.raises(ValueError):
        OracleSpec(batches=0)
    with pytest.raises(ValueError):
        OracleSpec(mc_points=50, batches=100)


def test_result_reports_inputs():
    spec = OracleSpec(n_max=13, mc_points=1000)
    res = brute_force_expectation(tiny_model(), PointCount(), spec, SeedTree(3))
    assert isinstance(res, OracleResult)
    assert res.n_max == 13
    assert res.mc_points == 1000
    assert res.tail_bound == pytest.approx(GOLDEN_TAIL, rel=1e-12)
