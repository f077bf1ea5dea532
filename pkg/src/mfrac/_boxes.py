"""Box reductions over families of grid cubes.

A family of cubes is processed one :class:`CubeGroup` at a time: all cubes in
a group share a side length and their lower corners form a lattice
``offset + stride * j``.  Window sums are built by doubling
(``W_2w[p] = W_w[p] + W_w[p + w]``), so a dyadic block is always summed in
the same binary-tree order no matter which routine asks for it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend

_OPS = {"sum": np.add, "min": np.minimum, "max": np.maximum}


@dataclass(frozen=True)
class CubeGroup:
    """Cubes ``[offset + stride*j, offset + stride*j + side)`` per axis, ``0 <= j < count``."""

    side: int
    offset: tuple
    stride: int
    count: int
    wrap: bool
    level: int | None = None
    shift_rank: int = 0

    def starts(self, axis, size):
        s = self.offset[axis] + self.stride * np.arange(self.count, dtype=np.int64)
        return s % size if self.wrap else s


def _pyramid(a, pad, width_cap, fn):
    """Doubling levels ``P_k[p] = op(a[p : p + 2^k])`` of the last axis."""
    if pad:
        a = np.concatenate([a, a[..., :pad]], axis=-1)
    pyramid = [a]
    width = 1
    while 2 * width <= width_cap:
        prev = pyramid[-1]
        pyramid.append(fn(prev[..., :-width], prev[..., width:]))
        width *= 2
    return pyramid


def _combine(pyramid, side, out_len, fn):
    acc = None
    pos = 0
    for k in range(len(pyramid) - 1, -1, -1):
        if (side >> k) & 1:
            piece = pyramid[k][..., pos : pos + out_len]
            acc = piece if acc is None else fn(acc, piece)
            pos += 1 << k
    return acc


def window_reduce(a, axis, side, wrap, op="sum"):
    """Reduce every length-``side`` window along ``axis``.

    Returns one value per start position: ``size`` of them with periodic
    wrap, ``size - side + 1`` without.
    """
    fn = _OPS[op]
    a = np.moveaxis(np.asarray(a, dtype=np.float64), axis, -1)
    size = a.shape[-1]
    if side < 1 or side > size:
        raise ValueError(f"window {side} does not fit an axis of length {size}")
    pad = side - 1 if wrap else 0
    out_len = size if wrap else size - side + 1
    pyramid = _pyramid(a, pad, side, fn)
    return np.moveaxis(_combine(pyramid, side, out_len, fn), -1, axis)


class WindowCache:
    """Window reductions of one array along one axis, sharing the doubling levels.

    Each window is built from the same pyramid entries as :func:`window_reduce`,
    so results agree bit for bit.
    """

    def __init__(self, a, axis, op="sum"):
        self.fn = _OPS[op]
        self.axis = axis
        self.a = np.moveaxis(np.asarray(a, dtype=np.float64), axis, -1)
        self.size = self.a.shape[-1]
        self._levels = {}

    def window(self, side, wrap):
        if wrap not in self._levels:
            pad = self.size - 1 if wrap else 0
            self._levels[wrap] = _pyramid(self.a, pad, self.size, self.fn)
        out_len = self.size if wrap else self.size - side + 1
        return np.moveaxis(_combine(self._levels[wrap], side, out_len, self.fn), -1, self.axis)


def group_reduce(a, axes, group, size, op="sum", cache=None):
    """Reduce ``a`` over every cube of ``group``; the cube axes become ``count`` long.

    ``cache`` may hold a :class:`WindowCache` of ``a`` along ``axes[0]``.
    """
    out = a
    for i, ax in enumerate(axes):
        if i == 0 and cache is not None:
            win = cache.window(group.side, group.wrap)
        else:
            win = window_reduce(out, ax, group.side, group.wrap, op)
        out = np.take(win, group.starts(i, size), axis=ax)
    return out


def cover_max(vals, axes, group, size):
    """Spread per-cube values back to cells: each cell gets the max over cubes containing it."""
    out = vals
    for i, ax in enumerate(axes):
        off = group.offset[i]
        x = np.arange(size, dtype=np.int64)
        if group.wrap:
            if group.stride != group.side:
                raise ValueError("wrapped groups must tile the torus")
            j = ((x - off) % size) // group.side
            out = np.take(out, j, axis=ax)
            continue
        rel = x - off
        hi = np.minimum(np.floor_divide(rel, group.stride), group.count - 1)
        lo = np.maximum(-np.floor_divide(-(rel - group.side + 1), group.stride), 0)
        moved = np.moveaxis(out, ax, -1)
        shape = moved.shape
        flat = np.ascontiguousarray(moved).reshape(-1, shape[-1])
        res = _backend.range_max(flat, lo, hi).reshape(shape[:-1] + (size,))
        out = np.moveaxis(res, -1, ax)
    return out


def block_reduce(a, cells, op="sum"):
    """Reduce a single (possibly wrapped) block given per-axis cell index arrays.

    Produces the same floating-point value the group routines give for that cube.
    """
    block = np.asarray(a, dtype=np.float64)[np.ix_(*cells)]
    for ax in range(block.ndim):
        block = window_reduce(block, ax, block.shape[ax], False, op)
    return float(block.reshape(-1)[0])
