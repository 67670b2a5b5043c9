"""Distance-kernel correctness: the compiled and numpy backends must agree
with each other and with the quadratic reference on randomized inputs."""

import numpy as np
import pytest

from ptproc.kernels import BACKEND, get_backend

py = get_backend("python")
try:
    cy = get_backend("cython")
    HAVE_CY = True
except ImportError:
    cy = None
    HAVE_CY = False

needs_cython = pytest.mark.skipif(not HAVE_CY, reason="compiled backend not built")


def random_case(rng):
    n = int(rng.integers(0, 250))
    d = int(rng.integers(1, 4))
    lower = rng.uniform(-2.0, 0.0, d)
    upper = lower + rng.uniform(0.05, 3.0, d)
    pts = rng.uniform(lower, upper, (n, d))
    r = float(rng.uniform(0.01, 1.2))
    return pts, r, lower, upper


def test_grid_matches_naive_randomized():
    rng = np.random.default_rng(1234)
    for _ in range(250):
        pts, r, lower, upper = random_case(rng)
        assert py.pair_count_grid(pts, r, lower, upper) == py.pair_count_naive(pts, r)


@needs_cython
def test_backends_agree_randomized():
    rng = np.random.default_rng(4321)
    for _ in range(250):
        pts, r, lower, upper = random_case(rng)
        naive = py.pair_count_naive(pts, r)
        assert cy.pair_count_naive(pts, r) == naive
        assert cy.pair_count_grid(pts, r, lower, upper) == naive
        q = rng.uniform(lower, upper)
        assert cy.neighbor_count(pts, q, r) == py.neighbor_count(pts, q, r)


def test_boundary_distance_is_inclusive():
    pts = np.array([[0.0, 0.0], [0.3, 0.0]])
    assert py.pair_count_naive(pts, 0.3) == 1  # exactly r apart counts
    assert py.pair_count_naive(pts, 0.2999999) == 0
    q = np.array([0.0, 0.3])
    assert py.neighbor_count(pts, q, 0.3) == 1
    if HAVE_CY:
        assert cy.pair_count_naive(pts, 0.3) == 1
        assert cy.neighbor_count(pts, q, 0.3) == 1


def test_degenerate_sizes():
    empty = np.empty((0, 2))
    one = np.array([[0.5, 0.5]])
    for backend in filter(None, (py, cy)):
        assert backend.pair_count_naive(empty, 0.1) == 0
        assert backend.pair_count_naive(one, 0.1) == 0
        assert backend.pair_count_grid(empty, 0.1, np.zeros(2), np.ones(2)) == 0
        assert backend.pair_count_grid(one, 0.1, np.zeros(2), np.ones(2)) == 0
        assert backend.neighbor_count(empty, np.zeros(2), 0.1) == 0


@needs_cython
def test_read_only_arrays_accepted():
    pts = np.random.default_rng(0).uniform(0, 1, (40, 2))
    pts.setflags(write=False)
    lower = np.zeros(2)
    upper = np.ones(2)
    lower.setflags(write=False)
    upper.setflags(write=False)
    assert cy.pair_count_naive(pts, 0.2) == py.pair_count_naive(pts, 0.2)
    assert cy.pair_count_grid(pts, 0.2, lower, upper) == py.pair_count_grid(
        pts, 0.2, lower, upper
    )


def test_grid_handles_coarse_and_fine_radii():
    rng = np.random.default_rng(77)
    pts = rng.uniform(0, 1, (300, 2))
    lower, upper = np.zeros(2), np.ones(2)
    for r in (1e-4, 0.01, 0.33, 0.9999, 1.5, 10.0):
        assert py.pair_count_grid(pts, r, lower, upper) == py.pair_count_naive(pts, r)


def test_selected_backend_exposed():
    assert BACKEND in ("cython", "python")
    with pytest.raises(ValueError):
        get_backend("fortran")
