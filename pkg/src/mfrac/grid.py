"""Piecewise-constant functions on dyadic partitions of the unit torus.

A :class:`GridFunction` at level ``L`` in dimension ``n`` stores one value per
cell of side ``2**-L``.  Every quantity here (integrals, averages, norms,
translations, cube enumeration) is exact for such data up to floating-point
rounding; nothing is interpolated.

Dimensions 1 and 2 are the ambient spaces.  Product spaces for the strong
operators (``k`` factors of dimension ``n``) are stored as grid functions of
dimension ``k*n`` whose first ``n`` axes belong to the first factor.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path

import numpy as np

from ._boxes import CubeGroup, block_reduce
from .errors import (
    AlignmentError,
    EmptyFamilyError,
    ParameterError,
    ShapeError,
    UnsupportedFamilyError,
)

MAX_LEVEL = 14
MAX_DIMENSION = 4


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x).limit_denominator(1 << 30)


# ---------------------------------------------------------------- cubes


@dataclass(frozen=True)
class DyadicCube:
    """``2**-level * ([0, 1)^n + index) + shift`` on the torus."""

    level: int
    index: tuple
    shift: tuple = ()

    def __post_init__(self):
        if self.level < 0:
            raise ParameterError(f"level must be nonnegative, got {self.level}")
        index = tuple(int(j) for j in self.index)
        if not index:
            raise ParameterError("index must have at least one coordinate")
        bound = 1 << self.level
        if any(j < 0 or j >= bound for j in index):
            raise ParameterError(f"index {index} outside [0, {bound}) at level {self.level}")
        shift = tuple(_as_fraction(s) % 1 for s in self.shift) or (Fraction(0),) * len(index)
        if len(shift) != len(index):
            raise ParameterError("shift and index lengths differ")
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "shift", shift)

    @property
    def dimension(self):
        return len(self.index)

    @property
    def side(self):
        return 2.0 ** -self.level

    @property
    def volume(self):
        return 2.0 ** (-self.dimension * self.level)

    def children(self):
        """The ``2**n`` subcubes one level down, in lexicographic order."""
        out = []
        for bits in product((0, 1), repeat=self.dimension):
            idx = tuple(2 * j + b for j, b in zip(self.index, bits))
            out.append(DyadicCube(self.level + 1, idx, self.shift))
        return out

    def parent(self):
        if self.level == 0:
            raise ParameterError("the unit cube has no parent")
        return DyadicCube(self.level - 1, tuple(j // 2 for j in self.index), self.shift)

    def to_grid(self, level):
        """The same cube as a :class:`GridCube` on the level-``level`` grid."""
        if level < self.level:
            raise AlignmentError(f"cube at level {self.level} is finer than grid level {level}")
        size = 1 << level
        side = 1 << (level - self.level)
        start = []
        for j, s in zip(self.index, self.shift):
            off = s * size
            if off.denominator != 1:
                raise AlignmentError(f"shift {s} is not a multiple of 2^-{level}")
            start.append(j * side + int(off))
        return GridCube(level, tuple(start), side)


@dataclass(frozen=True)
class GridCube:
    """A cube made of level-``level`` cells: ``side`` cells per axis from ``start``, wrapped."""

    level: int
    start: tuple
    side: int

    def __post_init__(self):
        size = 1 << self.level
        if not 1 <= self.side <= size:
            raise ParameterError(f"side {self.side} must be in [1, {size}]")
        start = tuple(int(s) % size for s in self.start)
        if self.side == size:
            start = (0,) * len(start)
        object.__setattr__(self, "start", start)

    @property
    def dimension(self):
        return len(self.start)

    @property
    def side_length(self):
        return self.side / (1 << self.level)

    @property
    def volume(self):
        return self.side_length ** self.dimension

    def axis_cells(self, level=None):
        """Per-axis cell indices of the cube on a grid at ``level`` (default: its own)."""
        level = self.level if level is None else level
        if level < self.level:
            raise AlignmentError(f"cube on level {self.level} does not fit grid level {level}")
        scale = 1 << (level - self.level)
        size = 1 << level
        return [
            (s * scale + np.arange(self.side * scale, dtype=np.int64)) % size
            for s in self.start
        ]

    def contains(self, cell):
        size = 1 << self.level
        return all((c - s) % size < self.side for c, s in zip(cell, self.start))

    def to_dict(self):
        return {"level": self.level, "start": list(self.start), "side": self.side,
                "volume": self.volume}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["level"]), tuple(d["start"]), int(d["side"]))


def _as_grid_cube(Q, level):
    if isinstance(Q, DyadicCube):
        return Q.to_grid(level)
    if isinstance(Q, GridCube):
        return Q
    raise TypeError(f"expected DyadicCube or GridCube, got {type(Q).__name__}")


# ---------------------------------------------------------------- families


def default_shifts(level):
    """Shifts ``0, ~1/3, ~2/3`` rounded to the level-``level`` grid."""
    size = 1 << level
    return (Fraction(0), Fraction(round(size / 3), size), Fraction(round(2 * size / 3), size))


@dataclass(frozen=True)
class CubeFamily:
    """A finite family of grid cubes over which suprema are taken.

    ``kind`` is ``"dyadic"``, ``"grid_aligned"`` (``n = 1`` only: every
    interval with grid endpoints, no wrap) or ``"shifted_dyadic"`` (the union
    of the dyadic grids translated by each entry of ``shifts``).
    ``max_side`` truncates the family to cubes of at most that many cells
    per side.
    """

    kind: str
    level: int
    dimension: int = 1
    shifts: tuple = ()
    max_side: int | None = None

    def __post_init__(self):
        if self.kind not in ("dyadic", "grid_aligned", "shifted_dyadic"):
            raise ParameterError(f"unknown family kind {self.kind!r}")
        if not 0 <= self.level <= MAX_LEVEL:
            raise ParameterError(f"level must be in [0, {MAX_LEVEL}]")
        if self.dimension not in (1, 2):
            raise UnsupportedFamilyError("cube families exist for n = 1, 2 only")
        if self.kind == "grid_aligned" and self.dimension != 1:
            raise UnsupportedFamilyError("GridAligned families are implemented for n = 1 only")
        shifts = []
        for s in self.shifts:
            vec = tuple(s) if isinstance(s, (tuple, list)) else (s,) * self.dimension
            if len(vec) != self.dimension:
                raise ParameterError("shift vector has the wrong length")
            vec = tuple(_as_fraction(v) % 1 for v in vec)
            for v in vec:
                if (v * (1 << self.level)).denominator != 1:
                    raise AlignmentError(f"shift {v} is not on the level-{self.level} grid")
            shifts.append(vec)
        if self.kind == "shifted_dyadic" and not shifts:
            shifts = [tuple(s for _ in range(self.dimension)) for s in default_shifts(self.level)]
        object.__setattr__(self, "shifts", tuple(shifts))
        if self.max_side is not None and self.max_side < 1:
            raise EmptyFamilyError("truncation leaves no cubes")

    @classmethod
    def dyadic(cls, level, dimension=1):
        return cls("dyadic", level, dimension)

    @classmethod
    def grid_aligned(cls, level):
        return cls("grid_aligned", level, 1)

    @classmethod
    def shifted_dyadic(cls, level, dimension=1, shifts=()):
        return cls("shifted_dyadic", level, dimension, tuple(shifts))

    @classmethod
    def default(cls, dimension, level):
        """GridAligned for ``n = 1``; dyadic plus one-third shifts for ``n = 2``."""
        if dimension == 1:
            return cls.grid_aligned(level)
        return cls.shifted_dyadic(level, dimension)

    @property
    def size(self):
        return 1 << self.level

    def truncated(self, max_side):
        return CubeFamily(self.kind, self.level, self.dimension, self.shifts, max_side)

    def at_level(self, level):
        """The same kind of family on another grid level (shifts re-rounded if default)."""
        shifts = self.shifts
        if self.kind == "shifted_dyadic" and shifts == CubeFamily.shifted_dyadic(
                self.level, self.dimension).shifts:
            shifts = ()
        max_side = None if self.max_side is None else self.max_side << max(0, level - self.level)
        return CubeFamily(self.kind, level, self.dimension, shifts, max_side)

    @property
    def label(self):
        base = {"dyadic": "Dyadic", "grid_aligned": "GridAligned",
                "shifted_dyadic": "ShiftedDyadic"}[self.kind]
        extra = ""
        if self.kind == "shifted_dyadic":
            extra = ",[" + ";".join(",".join(str(v) for v in s) for s in self.shifts) + "]"
        trunc = "" if self.max_side is None else f",max_side={self.max_side}"
        return f"{base}({self.level}{extra}{trunc}; n={self.dimension})"

    def __str__(self):
        return self.label

    def groups(self):
        """The family as a list of :class:`CubeGroup`, in enumeration order."""
        size = self.size
        n = self.dimension
        out = []
        if self.kind == "grid_aligned":
            for side in range(size, 0, -1):
                out.append(CubeGroup(side, (0,), 1, size - side + 1, False))
        else:
            shifts = self.shifts if self.kind == "shifted_dyadic" else ((Fraction(0),) * n,)
            for lev in range(self.level + 1):
                side = 1 << (self.level - lev)
                seen = set()
                for rank, vec in enumerate(shifts):
                    # every shift of the whole torus is the same cube
                    off = tuple(int(v * size) % side for v in vec) if lev else (0,) * n
                    if off in seen:
                        continue
                    seen.add(off)
                    out.append(CubeGroup(side, off, side, 1 << lev, True, lev, rank))
        if self.max_side is not None:
            out = [g for g in out if g.side <= self.max_side]
            if not out:
                raise EmptyFamilyError("truncation leaves no cubes")
        return out

    def enumerate(self):
        """Every cube exactly once, in deterministic order."""
        size = self.size
        for g in self.groups():
            for j in product(range(g.count), repeat=self.dimension):
                start = tuple(g.offset[a] + g.stride * j[a] for a in range(self.dimension))
                yield GridCube(self.level, start, g.side)

    def __len__(self):
        return sum(g.count ** self.dimension for g in self.groups())

    def to_dict(self):
        d = {"kind": self.kind, "level": self.level, "dimension": self.dimension}
        if self.kind == "shifted_dyadic":
            d["shifts"] = [[str(v) for v in s] for s in self.shifts]
        if self.max_side is not None:
            d["max_side"] = self.max_side
        return d

    @classmethod
    def from_dict(cls, d, level=None, dimension=None):
        level = d.get("level", level) if level is None else level
        dimension = d.get("dimension", dimension or 1) if dimension is None else dimension
        kind = d.get("kind", "default")
        if kind == "default":
            fam = cls.default(dimension, level)
        else:
            fam = cls(kind, level, dimension, tuple(
                tuple(s) if isinstance(s, list) else s for s in d.get("shifts", ())))
        if d.get("max_side") is not None:
            fam = fam.truncated(int(d["max_side"]))
        return fam


def enumerate_cubes(family):
    """List the cubes of ``family`` in its deterministic order."""
    return list(family.enumerate())


# ---------------------------------------------------------------- grid functions


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Cell values of a step function on the torus ``[0, 1)^dimension``.

    ``values`` may be given flat (lexicographic cell order) or already shaped
    as ``(2**level,) * dimension``; it is stored shaped and read-only.
    """

    dimension: int
    level: int
    values: np.ndarray = field(repr=False)
    nonneg: bool = False

    def __post_init__(self):
        if not 1 <= self.dimension <= MAX_DIMENSION:
            raise ParameterError(f"dimension must be in [1, {MAX_DIMENSION}]")
        if not 0 <= self.level <= MAX_LEVEL:
            raise ParameterError(f"level must be in [0, {MAX_LEVEL}]")
        size = 1 << self.level
        arr = np.array(self.values, dtype=np.float64)
        if arr.size != size ** self.dimension:
            raise ShapeError(
                f"expected {size ** self.dimension} values for n={self.dimension}, "
                f"L={self.level}; got {arr.size}")
        arr = arr.reshape((size,) * self.dimension)
        if not np.all(np.isfinite(arr)):
            raise ParameterError("grid function values must be finite")
        if self.nonneg and np.any(arr < 0):
            raise ParameterError("values must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    # construction -------------------------------------------------------

    @classmethod
    def from_array(cls, arr, nonneg=None):
        arr = np.asarray(arr, dtype=np.float64)
        dim = arr.ndim
        size = arr.shape[0]
        if any(s != size for s in arr.shape) or size & (size - 1):
            raise ShapeError(f"array shape {arr.shape} is not a dyadic grid")
        level = size.bit_length() - 1
        if nonneg is None:
            nonneg = bool(np.all(arr >= 0))
        return cls(dim, level, arr, nonneg)

    @classmethod
    def constant(cls, dimension, level, value=1.0):
        size = 1 << level
        return cls(dimension, level, np.full((size,) * dimension, float(value)), value >= 0)

    @classmethod
    def indicator(cls, dimension, level, lower, upper):
        """Indicator of the box ``prod [lower_i, upper_i)``; corners must lie on the grid."""
        size = 1 << level
        lower = np.broadcast_to(np.asarray(lower, dtype=float), (dimension,))
        upper = np.broadcast_to(np.asarray(upper, dtype=float), (dimension,))
        arr = np.zeros((size,) * dimension)
        sl = []
        for a, b in zip(lower, upper):
            ia, ib = a * size, b * size
            if ia != round(ia) or ib != round(ib):
                raise AlignmentError(f"box edge {a}, {b} is not on the level-{level} grid")
            sl.append(slice(int(round(ia)), int(round(ib))))
        arr[tuple(sl)] = 1.0
        return cls(dimension, level, arr, True)

    @classmethod
    def cube_indicator(cls, cube, dimension=None):
        size = 1 << cube.level
        arr = np.zeros((size,) * cube.dimension)
        arr[np.ix_(*cube.axis_cells())] = 1.0
        return cls(cube.dimension, cube.level, arr, True)

    @classmethod
    def tensor(cls, *factors):
        """``f_1 (x) f_2 (x) ...`` on the product torus (all factors on one level)."""
        levels = {f.level for f in factors}
        if len(levels) != 1:
            raise ShapeError("tensor factors must share a grid level")
        arr = factors[0].values
        for f in factors[1:]:
            arr = np.multiply.outer(arr, f.values)
        return cls(sum(f.dimension for f in factors), factors[0].level, arr,
                   all(f.nonneg for f in factors))

    # views ----------------------------------------------------------------

    @property
    def size(self):
        return 1 << self.level

    @property
    def cell_volume(self):
        return 2.0 ** (-self.dimension * self.level)

    @property
    def flat(self):
        return self.values.reshape(-1)

    def cell_centers(self):
        """Centers of the cells along one axis."""
        return (np.arange(self.size) + 0.5) / self.size

    def with_values(self, arr, nonneg=None):
        if nonneg is None:
            nonneg = bool(np.all(np.asarray(arr) >= 0))
        return GridFunction(self.dimension, self.level, arr, nonneg)

    def refine(self, level):
        """The same step function sampled on a finer grid."""
        if level < self.level:
            raise ParameterError("refine only goes to finer levels")
        rep = 1 << (level - self.level)
        arr = self.values
        for ax in range(self.dimension):
            arr = np.repeat(arr, rep, axis=ax)
        return GridFunction(self.dimension, level, arr, self.nonneg)

    def is_positive(self):
        return bool(np.all(self.values > 0))

    def same_grid(self, other):
        return self.dimension == other.dimension and self.level == other.level

    def equals(self, other):
        return self.same_grid(other) and np.array_equal(self.values, other.values)

    # serialization --------------------------------------------------------

    def to_dict(self):
        return {"dimension": self.dimension, "level": self.level,
                "values": [float(v) for v in self.flat], "nonneg": bool(self.nonneg)}

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"dimension", "level", "values", "nonneg"}
        if unknown:
            raise ParameterError(f"unknown keys in grid function: {sorted(unknown)}")
        return cls(int(d["dimension"]), int(d["level"]), np.asarray(d["values"], float),
                   bool(d.get("nonneg", False)))

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# dimension={self.dimension}\n# level={self.level}\n")
        for v in self.flat:
            buf.write(repr(float(v)) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        lines = text.splitlines()
        header = {}
        for line in lines[:2]:
            if not line.startswith("#") or "=" not in line:
                raise ParameterError("CSV grid data needs '# dimension=n' and '# level=L' headers")
            key, val = line[1:].strip().split("=", 1)
            header[key.strip()] = int(val)
        if set(header) != {"dimension", "level"}:
            raise ParameterError("CSV header must give dimension and level")
        rows = [r for r in csv.reader(lines[2:]) if r and r[0].strip()]
        vals = np.array([float(r[0]) for r in rows])
        return cls(header["dimension"], header["level"], vals, bool(np.all(vals >= 0)))

    def save(self, path):
        path = Path(path)
        text = self.to_csv() if path.suffix.lower() == ".csv" else self.to_json() + "\n"
        path.write_text(text, encoding="utf-8")

    @classmethod
    def load(cls, path):
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() == ".csv":
            return cls.from_csv(text)
        return cls.from_json(text)


# ---------------------------------------------------------------- exact calculus


def integrate(f, Q):
    """Exact integral of the step function ``f`` over the cube ``Q``."""
    cube = _as_grid_cube(Q, f.level)
    if cube.dimension != f.dimension:
        raise ShapeError("cube and function dimensions differ")
    if cube.level > f.level:
        raise AlignmentError(
            f"cube on the level-{cube.level} grid is not a union of level-{f.level} cells")
    return block_reduce(f.values, cube.axis_cells(f.level)) * f.cell_volume


def average(f, Q):
    cube = _as_grid_cube(Q, f.level)
    return integrate(f, cube) / cube.volume


def lp_norm(f, r, rho=None):
    """``(sum |f|^r rho vol)^(1/r)``; ``rho`` defaults to 1."""
    if not r > 0:
        raise ParameterError(f"exponent must be positive, got {r}")
    vals = np.abs(f.values) ** r
    if rho is not None:
        if not rho.same_grid(f):
            raise ShapeError("weight lives on a different grid")
        vals = vals * rho.values
    total = block_reduce(vals, [np.arange(s) for s in vals.shape]) * f.cell_volume
    return total ** (1.0 / r)


def weak_lq_norm(g, q):
    """``sup_t t |{|g| > t}|^(1/q)``, exact for step functions."""
    if not q > 0:
        raise ParameterError(f"exponent must be positive, got {q}")
    vals = np.sort(np.abs(g.flat))[::-1]
    if vals.size == 0 or vals[0] == 0:
        return 0.0
    # distribution just below each attained value: measure of {|g| >= v}
    counts = np.arange(1, vals.size + 1)
    last = np.r_[vals[1:] != vals[:-1], True]
    v = vals[last]
    meas = counts[last] * g.cell_volume
    keep = v > 0
    return float(np.max(v[keep] * meas[keep] ** (1.0 / q)))


def translate(f, t):
    """``x -> f(x - t)`` on the torus; ``t`` must be a multiple of the cell size."""
    t = np.broadcast_to(np.asarray(t, dtype=object), (f.dimension,))
    shift = []
    for ti in t:
        c = _as_fraction(ti) * f.size
        if c.denominator != 1:
            raise AlignmentError(f"translation {ti} is not a multiple of 2^-{f.level}")
        shift.append(int(c))
    arr = np.roll(f.values, shift, axis=tuple(range(f.dimension)))
    return GridFunction(f.dimension, f.level, arr, f.nonneg)


def translate_cells(arr, shift, axes=None):
    """Cyclic shift of a raw array by whole cells (used on batched data)."""
    axes = tuple(range(-len(shift), 0)) if axes is None else axes
    return np.roll(arr, tuple(int(s) for s in shift), axis=axes)


def product_cube_cells(cubes, level):
    """Per-axis cell indices of a product of cubes, one per factor."""
    cells = []
    for c in cubes:
        cells.extend(c.axis_cells(level))
    return cells


def log2_int(n):
    k = int(math.log2(n))
    if 1 << k != n:
        raise ParameterError(f"{n} is not a power of two")
    return k
