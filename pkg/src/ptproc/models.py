"""Locally stable point-process models and the statistics evaluated on them.

A model supplies its unnormalized density h through ``log_h`` (with
h(empty) = 1), the conditional intensity ratio through ``log_papangelou``,
and a constant stability envelope phi with known integral, which is what
the exact samplers and the importance-sampling engine need.  Everything is
kept in the log domain; nothing here ever exponentiates a density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import PointPattern, Window, uniform_point

__all__ = [
    "StraussParams",
    "InhomStraussParams",
    "Model",
    "StraussModel",
    "InhomStraussModel",
    "strauss_log_h",
    "strauss_log_papangelou",
    "inhom_strauss_log_h",
    "inhom_strauss_log_papangelou",
    "Statistic",
    "PointCount",
    "BoundaryCount",
    "PapangelouOrigin",
    "k_papangelou_origin",
    "k_boundary_count",
    "model_from_spec",
    "statistic_from_spec",
]


@dataclass(frozen=True)
class StraussParams:
    """Pairwise-interaction parameters: intensity beta, inhibition gamma,
    interaction range r.  gamma = 1 is admitted and reduces to Poisson."""

    beta: float
    gamma: float
    r: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if not self.r > 0:
            raise ValueError("interaction range r must be positive")


@dataclass(frozen=True)
class InhomStraussParams(StraussParams):
    """Strauss interaction with a Gaussian intensity taper exp(-alpha * x2^2)
    in the second coordinate."""

    alpha: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")


def _close_pairs(coords: np.ndarray, r: float, window: Window) -> int:
    if len(coords) < 32:
        return kernels.pair_count_naive(coords, r)
    return kernels.pair_count_grid(coords, r, window.lower, window.upper)


def strauss_log_h(p: StraussParams, x: PointPattern) -> float:
    """log of beta^n * gamma^(number of close pairs)."""
    n = x.n
    if n == 0:
        return 0.0
    out = n * math.log(p.beta)
    log_gamma = math.log(p.gamma)
    if log_gamma != 0.0:
        out += _close_pairs(x.coords, p.r, x.window) * log_gamma
    return out


def strauss_log_papangelou(p: StraussParams, x: PointPattern, xi) -> float:
    """log conditional intensity log_h(x + xi) - log_h(x), computed directly
    from the neighbor count of xi so no pair enumeration is needed."""
    out = math.log(p.beta)
    log_gamma = math.log(p.gamma)
    if log_gamma != 0.0:
        q = np.ascontiguousarray(xi, dtype=float)
        out += kernels.neighbor_count(x.coords, q, p.r) * log_gamma
    return out


def inhom_strauss_log_h(p: InhomStraussParams, x: PointPattern) -> float:
    out = strauss_log_h(p, x)
    if x.n and p.alpha != 0.0:
        out -= p.alpha * float(np.sum(x.coords[:, 1] ** 2))
    return out


def inhom_strauss_log_papangelou(p: InhomStraussParams, x: PointPattern, xi) -> float:
    out = strauss_log_papangelou(p, x, xi)
    if p.alpha != 0.0:
        out -= p.alpha * float(xi[1]) ** 2
    return out


class Model:
    """Interface shared by the engines.

    Subclasses provide log_h / log_papangelou plus a constant envelope:
    phi(xi) with log_papangelou(x, xi) <= log(phi(xi)) for every x, its
    integral over the window, and a sampler for the normalized envelope
    density phi / phi_integral.
    """

    window: Window
    phi_integral: float
    interaction_range: float

    def log_h(self, x: PointPattern) -> float:
        raise NotImplementedError

    def log_papangelou(self, x: PointPattern, xi) -> float:
        raise NotImplementedError

    # flat-array variant used by the samplers' inner loops, where patterns
    # live as growing coordinate buffers rather than PointPattern objects
    def log_papangelou_coords(self, coords: np.ndarray, xi) -> float:
        raise NotImplementedError

    def phi(self, xi) -> float:
        raise NotImplementedError

    def log_phi(self, xi) -> float:
        return math.log(self.phi(xi))

    def sample_phi_proposal(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def default_rho0(self) -> float:
        """Initial proposal intensity used by the adaptive engine and the
        birth-death chain's initial state: one third of the envelope's
        mean intensity."""
        return self.phi_integral / (3.0 * self.window.area)


class StraussModel(Model):
    """Homogeneous Strauss process on a window, envelope phi = beta."""

    def __init__(self, params: StraussParams, window: Window):
        if not isinstance(params, StraussParams):
            params = StraussParams(*params)
        self.params = params
        self.window = window
        self.phi_integral = params.beta * window.area
        self.interaction_range = params.r
        self._log_beta = math.log(params.beta)
        self._log_gamma = math.log(params.gamma)

    def log_h(self, x: PointPattern) -> float:
        return strauss_log_h(self.params, x)

    def log_papangelou(self, x: PointPattern, xi) -> float:
        return self.log_papangelou_coords(x.coords, xi)

    def log_papangelou_coords(self, coords: np.ndarray, xi) -> float:
        if self._log_gamma == 0.0:
            return self._log_beta
        q = np.ascontiguousarray(xi, dtype=float)
        m = kernels.neighbor_count(coords, q, self.params.r)
        return self._log_beta + m * self._log_gamma

    def phi(self, xi) -> float:
        return self.params.beta

    def log_phi(self, xi) -> float:
        return self._log_beta

    def sample_phi_proposal(self, rng: np.random.Generator) -> np.ndarray:
        return uniform_point(self.window, rng)

    def __repr__(self):
        p = self.params
        return f"StraussModel(beta={p.beta}, gamma={p.gamma}, r={p.r})"


class InhomStraussModel(StraussModel):
    """Strauss interaction with intensity taper exp(-alpha x2^2); the
    constant envelope beta still dominates because the taper is <= 1."""

    def __init__(self, params: InhomStraussParams, window: Window):
        if not isinstance(params, InhomStraussParams):
            raise TypeError("InhomStraussModel requires InhomStraussParams")
        if window.dim < 2:
            raise ValueError("the taper acts on coordinate 1; need dim >= 2")
        super().__init__(params, window)

    def log_h(self, x: PointPattern) -> float:
        return inhom_strauss_log_h(self.params, x)

    def log_papangelou_coords(self, coords: np.ndarray, xi) -> float:
        out = StraussModel.log_papangelou_coords(self, coords, xi)
        if self.params.alpha != 0.0:
            out -= self.params.alpha * float(xi[1]) ** 2
        return out

    def __repr__(self):
        p = self.params
        return (
            f"InhomStraussModel(beta={p.beta}, gamma={p.gamma}, r={p.r}, "
            f"alpha={p.alpha})"
        )


class Statistic:
    """Real-valued statistic K(x) whose expectation is being estimated."""

    def evaluate(self, x: PointPattern) -> float:
        raise NotImplementedError

    def __call__(self, x: PointPattern) -> float:
        return self.evaluate(x)


class PointCount(Statistic):
    def evaluate(self, x: PointPattern) -> float:
        return float(x.n)

    def __repr__(self):
        return "PointCount()"


class BoundaryCount(Statistic):
    """Number of points with |coordinate 1| >= band."""

    def __init__(self, band: float):
        if not band > 0:
            raise ValueError("band must be positive")
        self.band = float(band)

    def evaluate(self, x: PointPattern) -> float:
        if x.n == 0:
            return 0.0
        return float(np.count_nonzero(np.abs(x.coords[:, 1]) >= self.band))

    def __repr__(self):
        return f"BoundaryCount(band={self.band})"


class PapangelouOrigin(Statistic):
    """Conditional intensity at the origin; its mean is the process
    intensity at the origin by the standard conditional-intensity identity."""

    def __init__(self, model: Model):
        self.model = model
        self.origin = np.zeros(model.window.dim)
        if not model.window.contains(self.origin):
            raise ValueError("origin lies outside the model window")

    def evaluate(self, x: PointPattern) -> float:
        return math.exp(self.model.log_papangelou_coords(x.coords, self.origin))

    def __repr__(self):
        return "PapangelouOrigin()"


def k_papangelou_origin(model: Model) -> PapangelouOrigin:
    return PapangelouOrigin(model)


def k_boundary_count(band: float) -> BoundaryCount:
    return BoundaryCount(band)


# -- config-dict constructors (shared by the CLI and the harness) -----------

_MODEL_KINDS = ("strauss", "inhom_strauss")
_STAT_KINDS = ("papangelou_origin", "boundary_count", "point_count")


def _require(spec: dict, field: str, kind: str) -> float:
    if field not in spec:
        raise ValueError(f"model kind {kind!r} requires field {field!r}")
    value = spec[field]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValueError(f"model field {field!r} must be a number")
    return float(value)


def model_from_spec(spec: dict, window: Window) -> Model:
    if not isinstance(spec, dict):
        raise ValueError("model spec must be an object")
    kind = spec.get("kind")
    if kind not in _MODEL_KINDS:
        raise ValueError(f"model kind must be one of {_MODEL_KINDS}, got {kind!r}")
    allowed = {"kind", "beta", "gamma", "r"} | ({"alpha"} if kind == "inhom_strauss" else set())
    unknown = set(spec) - allowed
    if unknown:
        raise ValueError(f"unknown model field(s): {sorted(unknown)}")
    beta = _require(spec, "beta", kind)
    gamma = _require(spec, "gamma", kind)
    r = _require(spec, "r", kind)
    if kind == "strauss":
        return StraussModel(StraussParams(beta, gamma, r), window)
    alpha = _require(spec, "alpha", kind) if "alpha" in spec else 1.0
    return InhomStraussModel(InhomStraussParams(beta, gamma, r, alpha), window)


def statistic_from_spec(spec: dict, model: Model) -> Statistic:
    if not isinstance(spec, dict):
        raise ValueError("statistic spec must be an object")
    kind = spec.get("kind")
    if kind not in _STAT_KINDS:
        raise ValueError(f"statistic kind must be one of {_STAT_KINDS}, got {kind!r}")
    if kind == "point_count":
        if set(spec) - {"kind"}:
            raise ValueError("point_count takes no parameters")
        return PointCount()
    if kind == "papangelou_origin":
        if set(spec) - {"kind"}:
            raise ValueError("papangelou_origin takes no parameters")
        return k_papangelou_origin(model)
    if set(spec) - {"kind", "band"}:
        raise ValueError("boundary_count takes only 'band'")
    if "band" not in spec:
        raise ValueError("boundary_count requires field 'band'")
    band = float(spec["band"])
    w = model.window
    half = max(abs(float(w.lower[1])), abs(float(w.upper[1])))
    if band > half:
        raise ValueError(f"band {band} exceeds window half-height {half}")
    return k_boundary_count(band)
