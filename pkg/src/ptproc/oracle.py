"""Brute-force reference values on tiny windows.

The target expectation is a ratio of two unit-rate-Poisson expectations,
each expanded as a series over the point count n; every order is an
ordinary n-fold uniform integral estimated by plain Monte Carlo.  The
series is truncated at n_max with an explicit bound on the neglected mass
(local stability gives h <= envelope^n), and truncation is refused when
the bound exceeds the declared tolerance.

This path shares no sampling or accumulation machinery with the engines it
cross-checks: densities and statistics are re-evaluated here with direct
numpy broadcasting, and the numerator/denominator (and any statistic
variants) always see identical draws, so comparisons are common-random-
number comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln

from .models import (
    BoundaryCount,
    InhomStraussModel,
    Model,
    PapangelouOrigin,
    PointCount,
    Statistic,
    StraussModel,
)
from .geometry import PointPattern
from .rng import as_seed_tree

__all__ = ["OracleSpec", "OracleResult", "TailBoundError", "brute_force_expectation", "count_distribution"]


class TailBoundError(RuntimeError):
    """Truncation refused: the neglected series mass exceeds the tolerance."""

    def __init__(self, tail_bound: float, tol: float, n_max: int):
        self.tail_bound = tail_bound
        self.tol = tol
        self.n_max = n_max
        super().__init__(
            f"series tail bound {tail_bound:.3e} at n_max={n_max} exceeds tolerance {tol:.1e}"
        )


@dataclass(frozen=True)
class OracleSpec:
    n_max: int = 12
    mc_points: int = 10**6
    tail_tol: float = 1e-6
    batches: int = 100

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError("n_max must be non-negative")
        if self.batches < 2:
            raise ValueError("need at least two batches for a standard error")
        if self.mc_points < self.batches:
            raise ValueError("mc_points must be at least the batch count")
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")


@dataclass(frozen=True)
class OracleResult:
    mu: float
    mc_se: float
    tail_bound: float
    count_masses: tuple  # unnormalized series mass of the denominator per order
    n_max: int
    mc_points: int

    def count_distribution(self) -> np.ndarray:
        masses = np.asarray(self.count_masses)
        return masses / masses.sum()


def series_tail_bound(m: Model, n_max: int) -> float:
    """exp(-|S|) * sum_{n > n_max} (envelope integral)^n / n!, evaluated
    through the regularized incomplete gamma for stability."""
    area = m.window.area
    lam = m.phi_integral
    return float(np.exp(lam - area) * gammainc(n_max + 1, lam))


def _batch_log_h(m: Model, coords: np.ndarray) -> np.ndarray:
    """log h for a (B, n, d) stack of patterns, broadcast re-evaluation."""
    B, n, _ = coords.shape
    if isinstance(m, StraussModel):
        p = m.params
        out = np.full(B, n * math.log(p.beta))
        if n >= 2 and p.gamma < 1.0:
            diff = coords[:, :, None, :] - coords[:, None, :, :]
            d2 = np.einsum("bijk,bijk->bij", diff, diff)
            iu = np.triu_indices(n, k=1)
            pairs = np.count_nonzero(d2[:, iu[0], iu[1]] <= p.r * p.r, axis=1)
            out += pairs * math.log(p.gamma)
        if isinstance(m, InhomStraussModel) and n >= 1 and p.alpha != 0.0:
            out -= p.alpha * np.sum(coords[:, :, 1] ** 2, axis=1)
        return out
    window = m.window
    return np.array(
        [m.log_h(PointPattern(c, window, validate=False)) for c in coords]
    )


def _batch_statistic(K: Statistic, m: Model, coords: np.ndarray) -> np.ndarray:
    B, n, _ = coords.shape
    if isinstance(K, PointCount):
        return np.full(B, float(n))
    if isinstance(K, BoundaryCount):
        if n == 0:
            return np.zeros(B)
        return np.count_nonzero(np.abs(coords[:, :, 1]) >= K.band, axis=1).astype(float)
    if isinstance(K, PapangelouOrigin) and isinstance(m, StraussModel):
        p = m.params
        if n == 0 or p.gamma == 1.0:
            lam = np.full(B, p.beta)
        else:
            d2 = np.einsum("bij,bij->bi", coords, coords)  # origin at zero
            near = np.count_nonzero(d2 <= p.r * p.r, axis=1)
            lam = p.beta * p.gamma**near
        # the taper factor at the origin is exp(-alpha * 0) = 1
        return lam.astype(float)
    window = m.window
    return np.array(
        [K.evaluate(PointPattern(c, window, validate=False)) for c in coords]
    )


def brute_force_expectation(m: Model, K: Statistic, spec: OracleSpec, rng) -> OracleResult:
    """Series-truncated, batched-MC estimate of E[K] under the model.

    Draw streams are addressed by (order, batch), so repeated calls with
    the same seed see identical draws regardless of the statistic: variant
    comparisons are paired.  The standard error comes from a ratio
    linearization over batches.
    """
    tail = series_tail_bound(m, spec.n_max)
    if tail >= spec.tail_tol:
        raise TailBoundError(tail, spec.tail_tol, spec.n_max)

    tree = as_seed_tree(rng).child("oracle")
    w = m.window
    area = w.area
    bsize = -(-spec.mc_points // spec.batches)  # ceil
    actual_points = bsize * spec.batches

    num = np.zeros(spec.batches)
    den = np.zeros(spec.batches)
    masses = []
    for n in range(spec.n_max + 1):
        # log of exp(-|S|) |S|^n / n!
        log_cn = -area + n * math.log(area) - float(gammaln(n + 1))
        mass_n = 0.0
        for b in range(spec.batches):
            gen = tree.child(n, b).generator()
            coords = gen.uniform(w.lower, w.upper, size=(bsize, n, w.dim))
            weights = np.exp(log_cn + _batch_log_h(m, coords))
            kvals = _batch_statistic(K, m, coords)
            num[b] += float(kvals @ weights) / bsize
            d_nb = float(np.sum(weights)) / bsize
            den[b] += d_nb
            mass_n += d_nb
        masses.append(mass_n / spec.batches)

    mu = float(np.sum(num) / np.sum(den))
    den_mean = float(np.mean(den))
    g = (num - mu * den) / den_mean
    mc_se = float(np.std(g, ddof=1) / math.sqrt(spec.batches))
    return OracleResult(
        mu=mu,
        mc_se=mc_se,
        tail_bound=tail,
        count_masses=tuple(masses),
        n_max=spec.n_max,
        mc_points=actual_points,
    )


def count_distribution(m: Model, spec: OracleSpec, rng) -> np.ndarray:
    """Truncated distribution of the point count under the model."""
    return brute_force_expectation(m, PointCount(), spec, rng).count_distribution()
