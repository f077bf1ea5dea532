"""Pure NumPy implementations of the hot kernels.

These mirror the compiled routines in ``_core.pyx`` and are used when the
extension is not built or when ``MFRAC_BACKEND=python`` is set.  Maxima are
bitwise identical between the two backends; sums agree to rounding.
"""

from __future__ import annotations

import numpy as np


def range_max(values, lo, hi):
    """Row-wise maxima of ``values[:, lo[x]:hi[x] + 1]`` for every ``x``.

    ``lo`` and ``hi`` must be nondecreasing.  Empty ranges give ``-inf``.
    Uses a sparse table, so the cost is ``O(R C log C)``.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    rows, cols = values.shape
    out = np.full((rows, lo.size), -np.inf)
    length = hi - lo + 1
    ok = length > 0
    if not ok.any():
        return out
    table = [values]
    width = 1
    while 2 * width <= length[ok].max():
        prev = table[-1]
        table.append(np.maximum(prev[:, :-width], prev[:, width:]))
        width *= 2
    order = np.zeros(lo.size, dtype=np.int64)
    order[ok] = np.floor(np.log2(length[ok])).astype(np.int64)
    # guard float log2 rounding at exact powers of two
    order[ok] -= (1 << order[ok]) > length[ok]
    order[ok] += (1 << (order[ok] + 1)) <= length[ok]
    for k in np.unique(order[ok]):
        sel = np.flatnonzero(ok & (order == k))
        t = table[k]
        a = t[:, lo[sel]]
        b = t[:, hi[sel] - (1 << k) + 1]
        out[:, sel] = np.maximum(a, b)
    return out


def shifted_indices(x_coords, dim, size):
    """Flat indices of ``x + d`` (mod ``size`` per axis) for every offset ``d``."""
    grids = np.indices((size,) * dim).reshape(dim, -1)
    flat = np.zeros(grids.shape[1], dtype=np.int64)
    for a in range(dim):
        flat = flat * size + (grids[a] + x_coords[a]) % size
    return flat


def mfi_contract(funcs, table, eval_coords, size, dim):
    """Brute-force kernel sum ``sum_d prod_i F_i[x + d_i] W[d_1, ..., d_m]``.

    ``funcs`` has shape ``(m, P)`` with ``P = size**dim``; ``table`` has
    ``P**m`` entries in C order; ``eval_coords`` is ``(X, dim)``.
    """
    funcs = np.ascontiguousarray(funcs, dtype=np.float64)
    m, npts = funcs.shape
    table = np.ascontiguousarray(table, dtype=np.float64).reshape((npts,) * m)
    out = np.empty(len(eval_coords))
    for j, x in enumerate(eval_coords):
        idx = shifted_indices(x, dim, size)
        acc = table
        for i in range(m - 1, -1, -1):
            acc = (acc * funcs[i, idx]).sum(axis=-1)
        out[j] = float(acc)
    return out
