"""Homogeneous Poisson sampling and the matching reference density.

The proposal family used by the adaptive engine is the homogeneous Poisson
process with intensity rho on the window; its density with respect to the
unit-rate Poisson process is g(x; rho) = exp((1 - rho) |S|) * rho^n(x).
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import PointPattern, Window

__all__ = ["sample_poisson", "log_g"]


def sample_poisson(w: Window, rho: float, rng: np.random.Generator) -> PointPattern:
    """Draw one pattern of the Poisson process with intensity rho on w."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    n = int(rng.poisson(rho * w.area))
    coords = rng.uniform(w.lower, w.upper, size=(n, w.dim))
    return PointPattern(coords, w, validate=False)


def log_g(x: PointPattern, rho: float) -> float:
    """log density of Poisson(rho) w.r.t. the unit-rate Poisson on x.window."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    return (1.0 - rho) * x.window.area + x.n * math.log(rho)
