"""Compare the compiled and pure-Python kernel backends.

Times the two distance primitives on growing point sets, then runs a short
importance-sampling estimate under each backend to show the end-to-end
effect and to confirm both backends produce identical numbers.

Run:  python3 benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from ptproc import AisConfig, StraussModel, StraussParams, PointCount, Window, ais_run
from ptproc.kernels import get_backend
from ptproc.rng import SeedTree


def _time(fn, *args, repeat: int = 5) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_primitives() -> None:
    py = get_backend("python")
    try:
        cy = get_backend("cython")
    except ImportError:
        print("compiled backend unavailable; primitive comparison skipped")
        return
    rng = np.random.default_rng(0)
    lower, upper = np.zeros(2), np.ones(2)
    print(f"{'n':>7} {'pairs/py':>10} {'pairs/cy':>10} {'speedup':>8} "
          f"{'nbr/py':>10} {'nbr/cy':>10} {'speedup':>8}")
    for n in (100, 1000, 10_000, 100_000):
        pts = rng.uniform(0.0, 1.0, (n, 2))
        q = np.array([0.5, 0.5])
        r = 0.05
        assert py.pair_count_grid(pts, r, lower, upper) == cy.pair_count_grid(
            pts, r, lower, upper
        )
        assert py.neighbor_count(pts, q, r) == cy.neighbor_count(pts, q, r)
        tp = _time(py.pair_count_grid, pts, r, lower, upper)
        tc = _time(cy.pair_count_grid, pts, r, lower, upper)
        np_t = _time(py.neighbor_count, pts, q, r)
        nc_t = _time(cy.neighbor_count, pts, q, r)
        print(f"{n:>7} {tp*1e3:>9.2f}m {tc*1e3:>9.2f}m {tp/tc:>7.1f}x "
              f"{np_t*1e6:>9.1f}u {nc_t*1e6:>9.1f}u {np_t/nc_t:>7.1f}x")


def _swap_backend(name: str):
    """Point the selector module's functions at a named backend; returns the
    previous bindings so the caller can restore them."""
    import ptproc.kernels as sel

    backend = get_backend(name)
    saved = (sel.neighbor_count, sel.pair_count_naive, sel.pair_count_grid)
    sel.neighbor_count = backend.neighbor_count
    sel.pair_count_naive = backend.pair_count_naive
    sel.pair_count_grid = backend.pair_count_grid
    return saved


def _restore_backend(saved) -> None:
    import ptproc.kernels as sel

    sel.neighbor_count, sel.pair_count_naive, sel.pair_count_grid = saved


def bench_engine() -> None:
    window = Window.square(-0.5, 0.5)
    model = StraussModel(StraussParams(beta=100.0, gamma=0.5, r=0.05), window)
    cfg = AisConfig(n1=500, n_t=100, max_steps=40)
    results = {}
    for name in ("python", "cython"):
        try:
            saved = _swap_backend(name)
        except ImportError:
            print(f"{name} backend unavailable; engine comparison skipped")
            return
        try:
            t0 = time.perf_counter()
            rep = ais_run(model, PointCount(), cfg, SeedTree(123))
            dt = time.perf_counter() - t0
        finally:
            _restore_backend(saved)
        results[name] = (rep.mu_hat, rep.se, dt)
        print(f"ais/{name:<7} mu={rep.mu_hat:.6f} se={rep.se:.4f} wall={dt:.2f}s")
    mu_py, _, t_py = results["python"]
    mu_cy, _, t_cy = results["cython"]
    assert mu_py == mu_cy, "backends must give identical estimates"
    print(f"identical estimates; engine speedup {t_py / t_cy:.2f}x")


if __name__ == "__main__":
    print("primitive kernels")
    bench_primitives()
    print()
    print("end-to-end engine run")
    bench_engine()
