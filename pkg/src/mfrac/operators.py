"""Multilinear fractional maximal and integral operators on grid functions.

Maximal operators are evaluated exactly: for cell-constant inputs the
supremum over a cube family is cell-constant, so each output cell is the
maximum over the finitely many family cubes containing it.  Integrals are
brute-force midpoint tensor sums with a separately computed self-cell term.

Every function accepts plain :class:`~mfrac.grid.GridFunction` inputs; the
``*_batch`` helpers work on stacked raw arrays with leading batch axes and
are what the verification harness uses.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from ._boxes import WindowCache, cover_max, group_reduce
from .errors import CostCapExceeded, ParameterError, ShapeError, UnsupportedFamilyError
from .exponents import ExponentConfig
from .grid import CubeFamily, GridFunction, translate_cells

DEFAULT_COST_CAP = 10**9
DEFAULT_DEPTH = 4

KINDS = ("MFM", "MFM_DYADIC", "MFM_TRUNCATED", "MFI", "STRONG_MFM", "STRONG_MFM_DYADIC",
         "STRONG_MFM_TRUNCATED", "STRONG_MFI", "FS_MAJORANT")


# ---------------------------------------------------------------- helpers


def _check_inputs(fs, dim):
    fs = list(fs)
    if not fs:
        raise ShapeError("need at least one input function")
    ref = fs[0]
    for f in fs[1:]:
        if not f.same_grid(ref):
            raise ShapeError("all inputs must live on the same grid")
    if ref.dimension != dim:
        raise ShapeError(f"inputs have dimension {ref.dimension}, operator expects {dim}")
    return fs


def _factor_families(families, cfg, level):
    if families is None:
        return [CubeFamily.default(cfg.n, level)] * cfg.k
    if isinstance(families, CubeFamily):
        families = [families] * cfg.k
    families = list(families)
    if len(families) != cfg.k:
        raise ParameterError(f"need {cfg.k} per-factor families")
    for fam in families:
        if fam.level != level or fam.dimension != cfg.n:
            raise ShapeError(f"family {fam} does not match the level-{level}, n={cfg.n} grid")
    return families


def product_sup(arrays, exps, families):
    """Supremum over products of cubes of ``prod_s |Q_s|^{exps[s]} prod_i int f_i``.

    ``arrays`` are ``m`` arrays whose trailing ``k*n`` axes are the grid
    (``k = len(families)``); leading axes are batch axes.  Returns the
    per-cell supremum over all product cubes containing the cell.
    """
    k = len(families)
    n = families[0].dimension
    size = families[0].size
    dim = k * n
    arrays = [np.asarray(a, dtype=np.float64) for a in arrays]
    lead = arrays[0].ndim - dim
    axes = [tuple(range(lead + s * n, lead + (s + 1) * n)) for s in range(k)]
    cell = 2.0 ** (-dim * families[0].level)
    group_lists = [fam.groups() for fam in families]

    # the max over later factors commutes with spreading along earlier ones,
    # so each factor's cover runs once per group of that factor
    def walk(s, partials, coef):
        if s == k:
            vals = partials[0]
            for extra in partials[1:]:
                vals = vals * extra
            return vals * coef
        caches = [WindowCache(a, axes[s][0]) for a in partials]
        acc = None
        for g in group_lists[s]:
            vol = (g.side / size) ** n
            sub = [group_reduce(a, axes[s], g, size, cache=c) for a, c in zip(partials, caches)]
            vals = cover_max(walk(s + 1, sub, coef * vol ** exps[s]), axes[s], g, size)
            acc = vals if acc is None else np.maximum(acc, vals)
        return acc

    return walk(0, arrays, cell ** len(arrays))


def _truncation(level, k_max):
    if k_max is None or k_max >= 0:
        return None
    cells = level + k_max
    if cells < 0:
        from .errors import EmptyFamilyError
        raise EmptyFamilyError(f"side 2^{k_max} is below the cell size 2^-{level}")
    return 1 << cells


# ---------------------------------------------------------------- maximal operators


def mfm_batch(arrays, cfg, family):
    """Batched multilinear fractional maximal operator over ``family``."""
    a = cfg.alpha[0]
    return product_sup([np.abs(x) for x in arrays], [a / cfg.n - cfg.m], [family])


def mfm(fs, cfg, family=None):
    """``sup_{Q contains x} prod_i |Q|^{alpha/(nm) - 1} int_Q |f_i|`` over ``family``."""
    if cfg.k != 1:
        raise ParameterError("mfm takes a single-factor exponent configuration")
    fs = _check_inputs(fs, cfg.n)
    if len(fs) != cfg.m:
        raise ShapeError(f"expected {cfg.m} inputs, got {len(fs)}")
    family = _factor_families(family, cfg, fs[0].level)[0]
    out = mfm_batch([f.values for f in fs], cfg, family)
    return GridFunction(cfg.n, fs[0].level, out, True)


def mfm_dyadic(fs, cfg):
    return mfm(fs, cfg, CubeFamily.dyadic(fs[0].level, cfg.n))


def mfm_truncated(fs, cfg, k_max, family=None):
    """``mfm`` restricted to cubes of side at most ``2**k_max`` (``k_max`` in grid levels)."""
    level = fs[0].level
    fam = _factor_families(family, cfg, level)[0]
    cap = _truncation(level, k_max)
    if cap is not None:
        fam = fam.truncated(cap)
    return mfm(fs, cfg, fam)


def strong_batch(arrays, cfg, families, orders=None):
    orders = cfg.alpha if orders is None else orders
    exps = [a / cfg.n - cfg.m for a in orders]
    return product_sup([np.abs(x) for x in arrays], exps, families)


def _check_strong(cfg):
    if cfg.k not in (1, 2):
        raise UnsupportedFamilyError(f"strong operators are implemented for k <= 2, got k={cfg.k}")
    if cfg.n not in (1, 2):
        raise UnsupportedFamilyError("strong operators need n in {1, 2}")


def strong_mfm(fs, cfg, families=None):
    """Strong fractional maximal operator: supremum over products of cubes ``Q_1 x Q_2``."""
    _check_strong(cfg)
    fs = _check_inputs(fs, cfg.k * cfg.n)
    if len(fs) != cfg.m:
        raise ShapeError(f"expected {cfg.m} inputs, got {len(fs)}")
    fams = _factor_families(families, cfg, fs[0].level)
    out = strong_batch([f.values for f in fs], cfg, fams)
    return GridFunction(cfg.k * cfg.n, fs[0].level, out, True)


def strong_mfm_dyadic(fs, cfg):
    return strong_mfm(fs, cfg, CubeFamily.dyadic(fs[0].level, cfg.n))


def strong_mfm_truncated(fs, cfg, k_max, families=None):
    level = fs[0].level
    fams = _factor_families(families, cfg, level)
    cap = _truncation(level, k_max)
    if cap is not None:
        fams = [f.truncated(cap) for f in fams]
    return strong_mfm(fs, cfg, fams)


def fs_exponents(cfg):
    """Powers of ``|Q_s|`` in the Fefferman-Stein majorant: ``q (alpha_s/n - 1/p)``."""
    return [cfg.q * (a / cfg.n - 1.0 / cfg.p) for a in cfg.alpha]


def fs_majorant(v, cfg, families=None):
    """``sup prod_s |Q_s|^{q(alpha_s/n - 1/p)} int_{Q_1 x ... x Q_k} v``."""
    _check_strong(cfg)
    (v,) = _check_inputs([v], cfg.k * cfg.n)
    fams = _factor_families(families, cfg, v.level)
    out = product_sup([v.values], fs_exponents(cfg), fams)
    return GridFunction(v.dimension, v.level, out, v.nonneg)


def shift_conjugated_dyadic(fs, cfg, t):
    """``tau_{-t} o M^(d) o tau_t``: translate inputs by ``t``, dyadic operator, translate back.

    ``t`` is given in cells, one entry per grid axis (``k*n`` entries for
    the strong operator, i.e. the pair ``(t, delta)``).
    """
    fs = list(fs)
    level = fs[0].level
    shift = tuple(int(s) for s in np.broadcast_to(t, (fs[0].dimension,)))
    moved = [translate_cells(f.values, shift) for f in fs]
    fams = [CubeFamily.dyadic(level, cfg.n)] * cfg.k
    out = strong_batch(moved, cfg, fams)
    back = translate_cells(out, tuple(-s for s in shift))
    return GridFunction(fs[0].dimension, level, back, True)


def shift_average_batch(arrays, cfg, q, shifts=None):
    """Mean over grid shifts ``t`` of ``[tau_{-t} M^(d) tau_t f]^q``, batched.

    ``shifts`` defaults to every grid vector; each is a tuple of cells.
    """
    dim = cfg.k * cfg.n
    level = int(math.log2(arrays[0].shape[-1]))
    size = 1 << level
    if shifts is None:
        shifts = [tuple(s) for s in np.ndindex(*(size,) * dim)]
    fams = [CubeFamily.dyadic(level, cfg.n)] * cfg.k
    axes = tuple(range(-dim, 0))
    acc = np.zeros(arrays[0].shape)
    for s in shifts:
        moved = [np.roll(a, s, axis=axes) for a in arrays]
        val = strong_batch(moved, cfg, fams)
        acc += np.roll(val, tuple(-x for x in s), axis=axes) ** q
    return acc / len(shifts)


# ---------------------------------------------------------------- integral operators


def _self_integral_unit(n, m, alpha, depth):
    """``int_{[-1/2, 1/2]^{nm}} (sum_i |y_i|)^{alpha - mn} dy`` by self-similar refinement.

    Splitting each unit cube into ``3^n`` thirds leaves the all-central tuple
    equal to ``3^-alpha`` times the whole integral; the rest is smooth and
    summed by the midpoint rule on ``2**depth`` points per third.
    """
    per = 3 * (1 << depth)
    while per ** (n * m) > 2 * 10**7 and depth > 0:
        depth -= 1
        per = 3 * (1 << depth)
    c = (np.arange(per) + 0.5) / per - 0.5
    grids = np.meshgrid(*([c] * n), indexing="ij")
    norms = np.sqrt(sum(g ** 2 for g in grids)).reshape(-1)
    central = np.all([np.abs(g) < 1.0 / 6 for g in grids], axis=0).reshape(-1)
    h = (1.0 / per) ** n
    power = alpha - m * n
    total = np.zeros(())
    # enumerate the central/non-central pattern of each y_i
    for pattern in np.ndindex(*(2,) * m):
        if all(pattern):
            continue
        parts = [norms[central] if bit else norms[~central] for bit in pattern]
        s = parts[0]
        for extra in parts[1:]:
            s = np.add.outer(s, extra)
        total = total + np.sum(s ** power)
    rest = float(total) * h ** m
    return rest / (1.0 - 3.0 ** (-alpha))


@functools.lru_cache(maxsize=64)
def self_integral(n, m, alpha, depth=DEFAULT_DEPTH):
    if not alpha > 0:
        raise ParameterError("the self-cell integral diverges for alpha <= 0")
    return _self_integral_unit(n, m, alpha, depth)


@functools.lru_cache(maxsize=32)
def _factor_table(n, m, level, alpha, distance, depth):
    size = 1 << level
    h = 1.0 / size
    ext = size if distance == "torus" else 2 * size
    c = np.arange(ext)
    if distance == "torus":
        d1 = np.minimum(c, size - c).astype(float)
    else:
        d1 = np.abs(np.where(c < size, c, c - ext)).astype(float)
    axes = np.meshgrid(*([d1] * n), indexing="ij")
    norm = np.sqrt(sum(a ** 2 for a in axes)).reshape(-1) * h
    total = norm
    for _ in range(m - 1):
        total = np.add.outer(total, norm)
    with np.errstate(divide="ignore"):
        table = h ** (n * m) * total ** (alpha - m * n)
    table[(0,) * m] = h ** alpha * self_integral(n, m, alpha, depth)
    table.setflags(write=False)
    return table


def kernel_table(cfg, level, distance="torus", depth=DEFAULT_DEPTH):
    """Weights ``W[d_1, ..., d_m]`` of the discrete kernel sum on the (padded) domain."""
    if distance not in ("torus", "euclidean"):
        raise ParameterError(f"unknown distance mode {distance!r}")
    n, m, k = cfg.n, cfg.m, cfg.k
    ext = (1 << level) * (1 if distance == "torus" else 2)
    dim = k * n
    full = None
    for s in range(k):
        t = _factor_table(n, m, level, float(cfg.alpha[s]), distance, depth)
        shape = [1] * (m * dim)
        for i in range(m):
            for a in range(n):
                shape[i * dim + s * n + a] = ext
        t = t.reshape(shape)
        full = t if full is None else full * t
    return np.broadcast_to(full, (ext,) * (m * dim)).reshape(-1)


def kernel_terms(cfg, level, distance="torus"):
    """Number of kernel terms a full evaluation touches."""
    dim = cfg.k * cfg.n
    size = 1 << level
    ext = size if distance == "torus" else 2 * size
    return size ** dim * (ext ** dim) ** cfg.m


def _check_mfi(cfg, level, distance, cost_cap):
    for a in cfg.alpha:
        if not 0 < a < cfg.m * cfg.n:
            raise ParameterError(f"integral operator needs 0 < alpha < mn, got {a}")
    terms = kernel_terms(cfg, level, distance)
    if cost_cap is not None and terms > cost_cap:
        raise CostCapExceeded(terms, cost_cap)


def mfi_batch(arrays, cfg, level, distance="torus", depth=DEFAULT_DEPTH,
              cost_cap=DEFAULT_COST_CAP):
    """Batched kernel sums; ``arrays`` are ``m`` arrays of shape ``batch + grid``."""
    _check_mfi(cfg, level, distance, cost_cap)
    dim = cfg.k * cfg.n
    size = 1 << level
    table = kernel_table(cfg, level, distance, depth)
    arrays = [np.asarray(a, dtype=np.float64) for a in arrays]
    batch_shape = arrays[0].shape[:-dim]
    grid_shape = (size,) * dim
    flat = [a.reshape((-1,) + grid_shape) for a in arrays]
    if distance == "euclidean":
        pad = [(0, 0)] + [(0, size)] * dim
        flat = [np.pad(a, pad) for a in flat]
        ext = 2 * size
    else:
        ext = size
    coords = np.indices(grid_shape).reshape(dim, -1).T.astype(np.int64)
    out = np.empty((flat[0].shape[0], size ** dim))
    for b in range(flat[0].shape[0]):
        funcs = np.stack([np.abs(a[b]).reshape(-1) for a in flat])
        out[b] = _backend.mfi_contract(funcs, table, coords, ext, dim)
    return out.reshape(batch_shape + grid_shape)


def mfi(fs, cfg, depth=DEFAULT_DEPTH, distance="torus", cost_cap=DEFAULT_COST_CAP):
    """``int prod f_i(y_i) / (sum |x - y_i|)^{mn - alpha} dy`` at every cell center."""
    if cfg.k != 1:
        raise ParameterError("mfi takes a single-factor exponent configuration")
    fs = _check_inputs(fs, cfg.n)
    if len(fs) != cfg.m:
        raise ShapeError(f"expected {cfg.m} inputs, got {len(fs)}")
    out = mfi_batch([f.values for f in fs], cfg, fs[0].level, distance, depth, cost_cap)
    return GridFunction(cfg.n, fs[0].level, out, True)


def strong_mfi(fs, cfg, depth=DEFAULT_DEPTH, distance="torus", cost_cap=DEFAULT_COST_CAP):
    """Potential with product kernel ``prod_s (sum_i |x^(s) - y_i^(s)|)^{alpha_s - mn}``."""
    _check_strong(cfg)
    fs = _check_inputs(fs, cfg.k * cfg.n)
    if len(fs) != cfg.m:
        raise ShapeError(f"expected {cfg.m} inputs, got {len(fs)}")
    out = mfi_batch([f.values for f in fs], cfg, fs[0].level, distance, depth, cost_cap)
    return GridFunction(fs[0].dimension, fs[0].level, out, True)


# ---------------------------------------------------------------- dispatch


@dataclass(frozen=True)
class OperatorSpec:
    """Which operator to apply, with its exponents and cube families."""

    kind: str
    exponents: ExponentConfig
    families: tuple = field(default=())
    k_max: int | None = None
    depth: int = DEFAULT_DEPTH
    distance: str = "torus"
    cost_cap: int | None = DEFAULT_COST_CAP

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown operator kind {self.kind!r}")
        cfg = self.exponents
        if self.kind in ("MFI", "STRONG_MFI"):
            for a in cfg.alpha:
                if not 0 < a < cfg.m * cfg.n:
                    raise ParameterError("integral operators need 0 < alpha < mn")
        if self.kind.startswith("STRONG") or self.kind == "FS_MAJORANT":
            _check_strong(cfg)
        elif cfg.k != 1:
            raise ParameterError(f"{self.kind} takes k = 1")
        if isinstance(self.families, CubeFamily):
            object.__setattr__(self, "families", (self.families,) * cfg.k)
        else:
            object.__setattr__(self, "families", tuple(self.families))

    @property
    def is_integral(self):
        return self.kind in ("MFI", "STRONG_MFI")

    def resolved_families(self, level):
        cfg = self.exponents
        if self.kind in ("MFM_DYADIC", "STRONG_MFM_DYADIC"):
            return [CubeFamily.dyadic(level, cfg.n)] * cfg.k
        fams = _factor_families(self.families or None, cfg, level)
        if self.kind in ("MFM_TRUNCATED", "STRONG_MFM_TRUNCATED"):
            cap = _truncation(level, self.k_max)
            if cap is not None:
                fams = [f.truncated(cap) for f in fams]
        return fams

    def apply_batch(self, arrays, level):
        """Evaluate on stacked arrays (``m`` of them, shape ``batch + grid``)."""
        cfg = self.exponents
        if self.is_integral:
            return mfi_batch(arrays, cfg, level, self.distance, self.depth, self.cost_cap)
        fams = self.resolved_families(level)
        if self.kind == "FS_MAJORANT":
            return product_sup([arrays[0]], fs_exponents(cfg), fams)
        return strong_batch(arrays, cfg, fams)

    def check_cost(self, level):
        if self.is_integral:
            _check_mfi(self.exponents, level, self.distance, self.cost_cap)

    def __call__(self, fs):
        fs = list(fs)
        level = fs[0].level
        out = self.apply_batch([f.values for f in fs], level)
        return GridFunction(fs[0].dimension, level, out, True)

    def to_dict(self):
        d = {"kind": self.kind, "exponents": self.exponents.to_dict(),
             "families": [f.to_dict() for f in self.families]}
        if self.k_max is not None:
            d["k_max"] = self.k_max
        if self.is_integral:
            d.update(depth=self.depth, distance=self.distance)
        return d
