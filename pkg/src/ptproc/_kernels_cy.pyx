# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled distance kernels.

Hot loops of every engine reduce to two primitives on flat coordinate
arrays: counting points within distance r of a query location, and counting
unordered close pairs.  Both are exact (<= comparisons on squared
distances, no epsilon).
"""

import numpy as np

from libc.math cimport sqrt


def neighbor_count(const double[:, ::1] pts, const double[::1] q, double r):
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t d = pts.shape[1]
    cdef Py_ssize_t i, k
    cdef double r2 = r * r
    cdef double s, diff
    cdef long count = 0
    for i in range(n):
        s = 0.0
        for k in range(d):
            diff = pts[i, k] - q[k]
            s += diff * diff
        if s <= r2:
            count += 1
    return count


def pair_count_naive(const double[:, ::1] pts, double r):
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t d = pts.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double r2 = r * r
    cdef double s, diff
    cdef long count = 0
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for k in range(d):
                diff = pts[i, k] - pts[j, k]
                s += diff * diff
            if s <= r2:
                count += 1
    return count


def pair_count_grid(pts, double r, lower, upper):
    """Cell-grid pair count; cells are at least r wide so only the 3**d
    neighborhood of a point's cell needs scanning.  Specialized for d = 2;
    other dimensions take the reference grid."""
    arr = np.ascontiguousarray(pts, dtype=np.float64)
    if arr.shape[1] == 2:
        return _pair_count_grid_2d(
            arr, r,
            float(lower[0]), float(lower[1]),
            float(upper[0]), float(upper[1]),
        )
    from . import _kernels_py
    return _kernels_py.pair_count_grid(arr, r, lower, upper)


def _pair_count_grid_2d(const double[:, ::1] pts, double r,
                        double lo0, double lo1, double hi0, double hi1):
    cdef Py_ssize_t n = pts.shape[0]
    if n < 2:
        return 0
    cdef double side0 = hi0 - lo0
    cdef double side1 = hi1 - lo1
    # resolution capped near sqrt(n) so bucket memory stays O(n); shrinking
    # the grid only widens cells, which keeps the adjacency argument valid
    cdef Py_ssize_t cap = <Py_ssize_t>sqrt(<double>n) + 1
    cdef double nx_d = side0 / r
    cdef double ny_d = side1 / r
    cdef Py_ssize_t nx = cap if nx_d > <double>cap else <Py_ssize_t>nx_d
    cdef Py_ssize_t ny = cap if ny_d > <double>cap else <Py_ssize_t>ny_d
    if nx < 1:
        nx = 1
    if ny < 1:
        ny = 1
    cdef double w0 = side0 / <double>nx
    cdef double w1 = side1 / <double>ny
    cdef Py_ssize_t ncell = nx * ny

    cell_np = np.empty(n, dtype=np.intp)
    start_np = np.zeros(ncell + 1, dtype=np.intp)
    order_np = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] cell = cell_np
    cdef Py_ssize_t[::1] start = start_np
    cdef Py_ssize_t[::1] order = order_np

    cdef Py_ssize_t i, ix, iy, c
    for i in range(n):
        ix = <Py_ssize_t>((pts[i, 0] - lo0) / w0)
        if ix < 0:
            ix = 0
        elif ix >= nx:
            ix = nx - 1
        iy = <Py_ssize_t>((pts[i, 1] - lo1) / w1)
        if iy < 0:
            iy = 0
        elif iy >= ny:
            iy = ny - 1
        c = ix * ny + iy
        cell[i] = c
        start[c + 1] += 1
    for c in range(ncell):
        start[c + 1] += start[c]
    fill_np = start_np[:-1].copy()
    cdef Py_ssize_t[::1] fill = fill_np
    for i in range(n):
        c = cell[i]
        order[fill[c]] = i
        fill[c] += 1

    cdef double r2 = r * r
    cdef double dx, dy, s
    cdef Py_ssize_t j, b, cx, cy, dcx, dcy
    cdef long count = 0
    for i in range(n):
        c = cell[i]
        cx = c // ny
        cy = c - cx * ny
        for dcx in range(-1, 2):
            if cx + dcx < 0 or cx + dcx >= nx:
                continue
            for dcy in range(-1, 2):
                if cy + dcy < 0 or cy + dcy >= ny:
                    continue
                c = (cx + dcx) * ny + (cy + dcy)
                for b in range(start[c], start[c + 1]):
                    j = order[b]
                    if j <= i:
                        continue
                    dx = pts[i, 0] - pts[j, 0]
                    dy = pts[i, 1] - pts[j, 1]
                    s = dx * dx + dy * dy
                    if s <= r2:
                        count += 1
    return count
