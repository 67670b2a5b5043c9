"""Windows, point patterns, and exact distance-based counts.

A window is a closed axis-aligned box in R^d; a pattern is a finite
multiset of points inside one.  All range comparisons are inclusive (<=)
with no epsilon, so a pair at distance exactly r counts as close.
"""

from __future__ import annotations

import numpy as np

from . import kernels

__all__ = [
    "Window",
    "PointPattern",
    "area",
    "distance",
    "close_pair_count",
    "neighbor_count",
    "uniform_point",
]

# patterns below this size skip grid construction; crossing point measured
# in benchmarks/bench_kernels.py
GRID_MIN_POINTS = 32


class Window:
    """Closed box prod_k [lower_k, upper_k] with strictly positive side lengths."""

    __slots__ = ("lower", "upper", "_area")

    def __init__(self, lower, upper):
        lo = np.atleast_1d(np.asarray(lower, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(upper, dtype=float)).copy()
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("window bounds must be equal-length vectors")
        if lo.size == 0:
            raise ValueError("window must have at least one dimension")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ValueError("window bounds must be finite")
        if not np.all(lo < hi):
            raise ValueError("window requires lower < upper in every coordinate")
        lo.flags.writeable = False
        hi.flags.writeable = False
        self.lower = lo
        self.upper = hi
        self._area = float(np.prod(hi - lo))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def area(self) -> float:
        return self._area

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))

    def contains_all(self, coords: np.ndarray) -> bool:
        if len(coords) == 0:
            return True
        return bool(np.all(coords >= self.lower) and np.all(coords <= self.upper))

    @classmethod
    def square(cls, lo: float, hi: float, dim: int = 2) -> "Window":
        return cls([lo] * dim, [hi] * dim)

    def __eq__(self, other):
        return (
            isinstance(other, Window)
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    def __repr__(self):
        return f"Window({self.lower.tolist()}, {self.upper.tolist()})"


class PointPattern:
    """Finite point multiset in a window; coordinates are an (n, d) array.

    Instances are treated as immutable: mutation helpers return new
    patterns and the coordinate array is marked read-only.
    """

    __slots__ = ("coords", "window")

    def __init__(self, coords, window: Window, validate: bool = True):
        arr = np.ascontiguousarray(coords, dtype=float)
        if arr.size == 0:
            arr = arr.reshape(0, window.dim)
        if arr.ndim != 2 or arr.shape[1] != window.dim:
            raise ValueError(
                f"coords must have shape (n, {window.dim}), got {arr.shape}"
            )
        if validate and not window.contains_all(arr):
            raise ValueError("pattern contains points outside its window")
        arr.flags.writeable = False
        self.coords = arr
        self.window = window

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def __len__(self) -> int:
        return self.coords.shape[0]

    @classmethod
    def empty(cls, window: Window) -> "PointPattern":
        return cls(np.empty((0, window.dim)), window, validate=False)

    def with_point(self, point) -> "PointPattern":
        p = np.asarray(point, dtype=float).reshape(1, -1)
        return PointPattern(np.concatenate([self.coords, p]), self.window)

    def without_index(self, i: int) -> "PointPattern":
        n = self.n
        if not -n <= i < n:
            raise IndexError(f"index {i} out of range for pattern of size {n}")
        return PointPattern(
            np.delete(self.coords, i % n, axis=0), self.window, validate=False
        )

    def __repr__(self):
        return f"PointPattern(n={self.n}, window={self.window!r})"


def area(w: Window) -> float:
    return w.area


def distance(p, q) -> float:
    a = np.asarray(p, dtype=float)
    b = np.asarray(q, dtype=float)
    if a.shape != b.shape:
        raise ValueError("points must have the same dimension")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def close_pair_count(x: PointPattern, r: float) -> int:
    """Number of unordered pairs at distance <= r (duplicates count at 0)."""
    if r <= 0:
        raise ValueError("interaction range r must be positive")
    coords = x.coords
    if len(coords) < GRID_MIN_POINTS:
        return kernels.pair_count_naive(coords, r)
    return kernels.pair_count_grid(coords, r, x.window.lower, x.window.upper)


def neighbor_count(x: PointPattern, xi, r: float) -> int:
    """Number of points of x within distance <= r of location xi."""
    if r <= 0:
        raise ValueError("interaction range r must be positive")
    q = np.ascontiguousarray(xi, dtype=float)
    if q.shape != (x.window.dim,):
        raise ValueError(f"location must be a {x.window.dim}-vector")
    return kernels.neighbor_count(x.coords, q, r)


def uniform_point(w: Window, rng: np.random.Generator) -> np.ndarray:
    """One point uniform on the window."""
    return rng.uniform(w.lower, w.upper)
