"""Kernel backend selection.

The compiled extension is preferred; the numpy reference implementation is
the fallback.  PTPROC_KERNELS=python|cython forces a backend (forcing
cython raises if the extension is missing).
"""

from __future__ import annotations

import os

_forced = os.environ.get("PTPROC_KERNELS")
if _forced not in (None, "", "cython", "python"):
    raise RuntimeError(f"PTPROC_KERNELS must be 'cython' or 'python', got {_forced!r}")

if _forced == "python":
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        from . import _kernels_py as _impl  # type: ignore[no-redef]

        BACKEND = "python"

neighbor_count = _impl.neighbor_count
pair_count_naive = _impl.pair_count_naive
pair_count_grid = _impl.pair_count_grid


def get_backend(name: str):
    """Return the raw kernel module for a named backend (used by benchmarks
    and cross-checking tests)."""
    if name == "python":
        from . import _kernels_py

        return _kernels_py
    if name == "cython":
        from . import _kernels_cy

        return _kernels_cy
    raise ValueError(f"unknown kernel backend {name!r}")
