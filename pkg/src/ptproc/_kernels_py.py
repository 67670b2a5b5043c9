"""Reference kernels in plain numpy.

Same contract as the compiled module; selected automatically when the
extension is unavailable (or forced via PTPROC_KERNELS=python).
"""

from __future__ import annotations

import itertools
import math

import numpy as np

_CHUNK_ELEMENTS = 1 << 22


def neighbor_count(pts: np.ndarray, q: np.ndarray, r: float) -> int:
    if len(pts) == 0:
        return 0
    diff = pts - q
    return int(np.count_nonzero(np.einsum("ij,ij->i", diff, diff) <= r * r))


def _block_pairs(a: np.ndarray, r2: float, b: np.ndarray | None = None) -> int:
    """Close pairs within block a (b None) or between blocks a and b,
    chunked so the distance matrix stays bounded."""
    if b is None:
        m = len(a)
        if m < 2:
            return 0
        count = 0
        step = max(1, _CHUNK_ELEMENTS // m)
        for s in range(0, m, step):
            e = min(s + step, m)
            diff = a[s:e, None, :] - a[None, :, :]
            d2 = np.einsum("ijk,ijk->ij", diff, diff)
            close = d2 <= r2
            # keep j > i only
            cols = np.arange(m)[None, :]
            rows = np.arange(s, e)[:, None]
            count += int(np.count_nonzero(close & (cols > rows)))
        return count
    if len(a) == 0 or len(b) == 0:
        return 0
    count = 0
    step = max(1, _CHUNK_ELEMENTS // len(b))
    for s in range(0, len(a), step):
        diff = a[s : s + step, None, :] - b[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        count += int(np.count_nonzero(d2 <= r2))
    return count


def pair_count_naive(pts: np.ndarray, r: float) -> int:
    n = len(pts)
    if n < 2:
        return 0
    return _block_pairs(np.asarray(pts, dtype=float), r * r)


def pair_count_grid(pts: np.ndarray, r: float, lower, upper) -> int:
    """Cell-grid pair count, any dimension; cells at least r wide so only
    the 3**d neighborhood matters.  Points are bucket-sorted by flat cell
    id and pairs counted block-against-block with numpy broadcasting."""
    pts = np.asarray(pts, dtype=float)
    n = len(pts)
    if n < 2:
        return 0
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    d = pts.shape[1]
    side = upper - lower
    # resolution capped near sqrt(n) keeps bucket bookkeeping O(n); wider
    # cells only add candidates, never lose a pair
    cap = math.isqrt(n) + 1
    ncell = np.minimum(np.floor(side / r), cap).astype(np.int64)
    ncell = np.maximum(ncell, 1)
    width = side / ncell

    idx = np.floor((pts - lower) / width).astype(np.int64)
    np.clip(idx, 0, ncell - 1, out=idx)
    flat = np.zeros(n, dtype=np.int64)
    for k in range(d):
        flat = flat * ncell[k] + idx[:, k]

    order = np.argsort(flat, kind="stable")
    spts = pts[order]
    sflat = flat[order]
    cells, starts = np.unique(sflat, return_index=True)
    ends = np.append(starts[1:], n)
    slot_of = {int(c): i for i, c in enumerate(cells)}

    multi = np.empty((len(cells), d), dtype=np.int64)
    rem = cells.copy()
    for k in range(d - 1, -1, -1):
        multi[:, k] = rem % ncell[k]
        rem //= ncell[k]

    r2 = r * r
    count = 0
    for s, e in zip(starts, ends):
        count += _block_pairs(spts[s:e], r2)

    # each unordered cell pair visited once: first nonzero offset coordinate
    # must be positive
    half = [
        off
        for off in itertools.product((-1, 0, 1), repeat=d)
        if next((o for o in off if o != 0), 0) > 0
    ]
    for off in half:
        nb = multi + np.asarray(off, dtype=np.int64)
        ok = np.all((nb >= 0) & (nb < ncell), axis=1)
        nb_flat = np.zeros(len(cells), dtype=np.int64)
        for k in range(d):
            nb_flat = nb_flat * ncell[k] + nb[:, k]
        for slot in np.nonzero(ok)[0]:
            tgt = slot_of.get(int(nb_flat[slot]))
            if tgt is None:
                continue
            count += _block_pairs(
                spts[starts[slot] : ends[slot]],
                r2,
                spts[starts[tgt] : ends[tgt]],
            )
    return count
