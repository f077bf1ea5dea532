"""Weight-class constants as finite suprema over cube families.

Every condition is of the form ``sup_Q F(Q)`` where ``F`` is built from
integrals (or minima) of fixed functions over ``Q``.  On a grid with strictly
positive weights all of them are finite; the interesting output is the value
and the cube that attains it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._boxes import CubeGroup, WindowCache, group_reduce, window_reduce
from .errors import ParameterError, ShapeError
from .exponents import ExponentConfig, conjugate
from .grid import CubeFamily, GridCube, GridFunction

AINF_THRESHOLD = 1e3


@dataclass(frozen=True)
class ConditionReport:
    """Value of a condition constant, the cube(s) realizing it and the family used."""

    constant: float
    argmax: tuple
    family: str
    exponents: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        const = self.constant if math.isfinite(self.constant) else "inf"
        d = {"constant": const, "argmax": {"cubes": [c.to_dict() for c in self.argmax]},
             "family": self.family, "exponents": self.exponents}
        if self.extra:
            d["extra"] = self.extra
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True, eq=False)
class WeightSystem:
    """Weights of a two-weight problem; all strictly positive grid functions.

    ``factors`` optionally holds, for each ``w_i``, its one-variable factors
    ``(w_i^(1), ..., w_i^(k))`` when ``w_i`` is of product type.
    """

    u: GridFunction | None = None
    w: tuple = ()
    v: GridFunction | None = None
    rho: GridFunction | None = None
    factors: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(self.w))
        for name, g in self.items():
            if not g.is_positive():
                raise ParameterError(f"weight {name} must be strictly positive")
        if self.factors:
            if len(self.factors) != len(self.w):
                raise ShapeError("need one factor tuple per w_i")
            for i, (wi, fac) in enumerate(zip(self.w, self.factors)):
                rebuilt = GridFunction.tensor(*fac).values
                if not np.allclose(rebuilt, wi.values, rtol=1e-12, atol=0):
                    raise ParameterError(f"w_{i + 1} does not match its product factors")

    def items(self):
        out = []
        if self.u is not None:
            out.append(("u", self.u))
        out.extend((f"w_{i + 1}", wi) for i, wi in enumerate(self.w))
        if self.v is not None:
            out.append(("v", self.v))
        if self.rho is not None:
            out.append(("rho", self.rho))
        return out

    @classmethod
    def product_type(cls, u, factor_lists, v=None):
        ws = tuple(GridFunction.tensor(*fac) for fac in factor_lists)
        return cls(u=u, w=ws, v=v, factors=tuple(tuple(f) for f in factor_lists))


# ---------------------------------------------------------------- engine


def _families(families, level, n, k):
    if families is None:
        return [CubeFamily.default(n, level)] * k
    if isinstance(families, CubeFamily):
        return [families] * k
    families = list(families)
    if len(families) != k:
        raise ParameterError(f"need {k} per-factor families")
    return families


def _label(families):
    labels = [f.label for f in families]
    return labels[0] if len(set(labels)) == 1 and len(labels) == 1 else " x ".join(labels)


def _group_cubes(groups, index, level, n):
    cubes = []
    for s, g in enumerate(groups):
        j = index[s * n:(s + 1) * n]
        start = tuple(g.offset[a] + g.stride * j[a] for a in range(n))
        cubes.append(GridCube(level, start, g.side))
    return tuple(cubes)


def _walk_products(terms, expr, families, visit):
    k = len(families)
    n = families[0].dimension
    size = families[0].size
    dim = k * n
    cell = 2.0 ** (-dim * families[0].level)
    names = list(terms)
    arrays = {name: np.asarray(terms[name][0], dtype=np.float64) for name in names}
    ops = {name: terms[name][1] for name in names}
    for a in arrays.values():
        if a.shape != (size,) * dim:
            raise ShapeError(f"term array shape {a.shape} does not match the family grid")
    axes = [tuple(range(s * n, (s + 1) * n)) for s in range(k)]

    def walk(s, partials, vols, chosen):
        if s == k:
            red = {nm: partials[nm] * cell if ops[nm] == "sum" else partials[nm] for nm in names}
            vals = np.asarray(expr(vols, red), dtype=np.float64)
            vals = np.broadcast_to(vals, tuple(g.count for g in chosen for _ in range(n)))
            visit(vals, chosen)
            return
        caches = {nm: WindowCache(partials[nm], axes[s][0], ops[nm]) for nm in names}
        for g in families[s].groups():
            sub = {nm: group_reduce(partials[nm], axes[s], g, size, ops[nm], caches[nm])
                   for nm in names}
            walk(s + 1, sub, vols + [(g.side / size) ** n], chosen + [g])

    walk(0, arrays, [], [])


def sup_over_products(terms, expr, families):
    """``max`` of ``expr(vols, reduced)`` over every product of family cubes.

    ``terms`` maps a name to ``(array, op)`` with ``op`` in ``{"sum", "min"}``;
    sums become integrals (cell volume applied).  ``vols`` is the list of
    per-factor cube volumes.  Returns ``(value, cubes)`` for the first maximum
    in enumeration order.
    """
    n, level = families[0].dimension, families[0].level
    best = [-math.inf, None]

    def visit(vals, chosen):
        idx = int(np.argmax(vals))
        val = float(vals.reshape(-1)[idx])
        if val > best[0] or best[1] is None:
            best[0] = val
            best[1] = _group_cubes(chosen, np.unravel_index(idx, vals.shape), level, n)

    _walk_products(terms, expr, families, visit)
    return best[0], best[1]


def rank_products(terms, expr, families, top=None):
    """Products of cubes sorted by ``expr`` (largest first, ties in enumeration order).

    ``top=None`` returns every product.
    """
    n, level = families[0].dimension, families[0].level
    found = []

    def visit(vals, chosen):
        flat = vals.reshape(-1)
        order = np.argsort(-flat, kind="stable")
        if top is not None:
            order = order[:top]
        rank = len(found)
        for pos in order:
            idx = np.unravel_index(int(pos), vals.shape)
            found.append((-float(flat[pos]), rank, int(pos),
                          _group_cubes(chosen, idx, level, n)))

    _walk_products(terms, expr, families, visit)
    found.sort(key=lambda t: t[:3])
    if top is not None:
        found = found[:top]
    return [(-t[0], t[3]) for t in found]


def condition_terms(u, ws, cfg):
    """Terms and expression of the two-weight condition, for ranking cubes."""
    q = cfg.q
    terms = {"u": (u.values ** q, "sum")}
    terms.update(_dual_terms(ws, cfg.p_list))
    exps = [a / cfg.n - cfg.m for a in cfg.alpha]

    def expr(vols, red):
        scale = 1.0
        for vol, ex in zip(vols, exps):
            scale *= vol ** ex
        return scale * red["u"] ** (1.0 / q) * _dual_factor(red, 1.0, cfg.p_list, averaged=False)

    return terms, expr


def _check_weights(ws, dim=None):
    ws = list(ws)
    ref = ws[0]
    for w in ws:
        if not w.same_grid(ref):
            raise ShapeError("weights must share a grid")
        if not w.is_positive():
            raise ParameterError("weights must be strictly positive")
    if dim is not None and ref.dimension != dim:
        raise ShapeError(f"weights have dimension {ref.dimension}, expected {dim}")
    return ws


def _dual_terms(ws, p_list, scale=1.0, power=None):
    """Terms for ``(avg w_i^{-p_i' s})^{1/(p_i' s)}``; ``power`` overrides ``-p_i'``."""
    terms = {}
    for i, (w, pi) in enumerate(zip(ws, p_list)):
        pc = conjugate(pi)
        if math.isinf(pc):
            terms[f"min{i}"] = (w.values, "min")
        else:
            e = (-pc if power is None else power[i]) * scale
            terms[f"d{i}"] = (w.values ** e, "sum")
    return terms


def _dual_factor(red, vol, p_list, scale=1.0, averaged=True):
    out = 1.0
    for i, pi in enumerate(p_list):
        pc = conjugate(pi)
        if math.isinf(pc):
            out = out / red[f"min{i}"]
        else:
            val = red[f"d{i}"] / vol if averaged else red[f"d{i}"]
            out = out * val ** (1.0 / (pc * scale))
    return out


def _exp_dict(**kw):
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in kw.items()}


# ---------------------------------------------------------------- Muckenhoupt-type classes


def ap_vector_constant(ws, p_list, family=None):
    """``sup (avg prod w_i^{p/p_i})^{1/p} prod (avg w_i^{1 - p_i'})^{1/p_i'}``.

    For ``p_i = 1`` the ``i``-th factor is ``(min_Q w_i)^{-1}``.
    """
    ws = _check_weights(ws)
    p_list = tuple(float(x) for x in p_list)
    if len(p_list) != len(ws) or any(not x >= 1 for x in p_list):
        raise ParameterError("need one p_i >= 1 per weight")
    p = 1.0 / sum(1.0 / x for x in p_list)
    fams = _families(family, ws[0].level, ws[0].dimension, 1)
    prod = np.ones_like(ws[0].values)
    for w, pi in zip(ws, p_list):
        prod = prod * w.values ** (p / pi)
    terms = {"prod": (prod, "sum")}
    power = [1.0 - conjugate(pi) for pi in p_list]
    terms.update(_dual_terms(ws, p_list, power=power))

    def expr(vols, red):
        vol = vols[0]
        val = (red["prod"] / vol) ** (1.0 / p)
        for i, pi in enumerate(p_list):
            pc = conjugate(pi)
            if math.isinf(pc):
                val = val / red[f"min{i}"]
            else:
                val = val * (red[f"d{i}"] / vol) ** (1.0 / pc)
        return val

    value, cubes = sup_over_products(terms, expr, fams)
    return ConditionReport(value, cubes, _label(fams), _exp_dict(p=p_list, p_total=p))


def ap_constant(w, p, family=None):
    """One-weight case of :func:`ap_vector_constant`: ``sup (avg w)^{1/p} (avg w^{1-p'})^{1/p'}``.

    This is the ``1/p``-th power of the classical ``[w]_{A_p}``.
    """
    return ap_vector_constant([w], [p], family)


def apq_vector_constant(ws, p_list, q, family=None, strict=True):
    """``sup (avg (prod w_i)^q)^{1/q} prod (avg w_i^{-p_i'})^{1/p_i'}``."""
    ws = _check_weights(ws)
    p_list = tuple(float(x) for x in p_list)
    if any(not x >= 1 for x in p_list):
        raise ParameterError("p_i must be >= 1")
    p = 1.0 / sum(1.0 / x for x in p_list)
    if not q > 0 or (strict and not p < q):
        raise ParameterError(f"need p < q < inf, got p={p}, q={q}")
    fams = _families(family, ws[0].level, ws[0].dimension, 1)
    return _one_weight(ws, p_list, q, fams)


def _one_weight(ws, p_list, q, fams):
    p = 1.0 / sum(1.0 / x for x in p_list)
    prod = np.ones_like(ws[0].values)
    for w in ws:
        prod = prod * w.values
    terms = {"uq": (prod ** q, "sum")}
    terms.update(_dual_terms(ws, p_list))

    def expr(vols, red):
        vol = float(np.prod(vols))
        return (red["uq"] / vol) ** (1.0 / q) * _dual_factor(red, vol, p_list)

    value, cubes = sup_over_products(terms, expr, fams)
    return ConditionReport(value, cubes, _label(fams), _exp_dict(p=p_list, q=q, p_total=p))


def ainf_surrogate(w, family=None, threshold=AINF_THRESHOLD):
    """``sup (avg w) exp(avg log(1/w))``; membership means the value is below ``threshold``."""
    (w,) = _check_weights([w])
    fams = _families(family, w.level, w.dimension, 1) if (
        family is None or isinstance(family, CubeFamily)) else list(family)
    terms = {"w": (w.values, "sum"), "log": (np.log(w.values), "sum")}

    def expr(vols, red):
        vol = float(np.prod(vols))
        return (red["w"] / vol) * np.exp(-red["log"] / vol)

    value, cubes = sup_over_products(terms, expr, fams)
    return ConditionReport(value, cubes, _label(fams), {},
                           {"threshold": threshold, "member": bool(value < threshold)})


def ainf_per_slice(w, n, family=None, threshold=AINF_THRESHOLD):
    """Largest A_inf surrogate of ``w`` along each factor with the other factor frozen.

    Reads "A_inf in each variable separately, uniformly in the other" for a
    weight on the product of two ``n``-dimensional tori.
    """
    if w.dimension != 2 * n:
        raise ShapeError("per-slice check expects a weight on a two-factor product")
    worst = -math.inf
    where = None
    size = w.size
    for axis_block in (0, 1):
        for idx in np.ndindex(*(size,) * n):
            if axis_block == 0:
                sl = w.values[(Ellipsis,) + idx] if n else w.values
            else:
                sl = w.values[idx]
            g = GridFunction(n, w.level, sl, True)
            rep = ainf_surrogate(g, family, threshold)
            if rep.constant > worst:
                worst = rep.constant
                where = (axis_block, idx, rep.argmax)
    block, idx, cubes = where
    return ConditionReport(worst, cubes, "per-slice " + (
        family.label if isinstance(family, CubeFamily) else f"default(n={n})"), {},
        {"threshold": threshold, "member": bool(worst < threshold),
         "frozen_factor": 1 - block, "frozen_cell": list(idx)})


# ---------------------------------------------------------------- reverse doubling


def rd_constant(rho, dyadic=True):
    """Best ``d`` with ``d * rho(child) <= rho(parent)`` over 2^n-subdivisions.

    ``dyadic=True`` uses dyadic parents only; otherwise every grid cube of
    even side (non-wrapping intervals for ``n = 1``, all periodic squares
    for ``n = 2``) is split into its ``2^n`` equal parts.
    """
    (rho,) = _check_weights([rho])
    n, level, size = rho.dimension, rho.level, rho.size
    if level < 1:
        raise ParameterError("reverse doubling needs at least one subdivision (L >= 1)")
    if n not in (1, 2):
        raise ShapeError("reverse doubling is implemented for n = 1, 2")
    axes = tuple(range(n))
    worst = -math.inf
    arg = None
    if dyadic:
        for lev in range(level):
            side = size >> lev
            half = side // 2
            parent = group_reduce(rho.values, axes, CubeGroup(side, (0,) * n, side, 1 << lev, True),
                                  size)
            child = group_reduce(rho.values, axes,
                                 CubeGroup(half, (0,) * n, half, 1 << (lev + 1), True), size)
            up = parent
            for ax in axes:
                up = np.repeat(up, 2, axis=ax)
            ratio = child / up
            idx = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
            val = float(ratio[idx])
            if val > worst:
                worst = val
                c = GridCube(level, tuple(j * half for j in idx), half)
                pstart = tuple((j // 2) * side for j in idx)
                arg = (GridCube(level, pstart, side), c)
    else:
        for half in range(1, size // 2 + 1):
            side = 2 * half
            wrap = n == 2
            whole = rho.values
            for ax in axes:
                whole = window_reduce(whole, ax, side, wrap)
            best_child = None
            for bits in np.ndindex(*(2,) * n):
                ch = rho.values
                for ax in axes:
                    w = window_reduce(ch, ax, half, wrap)
                    off = bits[ax] * half
                    if wrap:
                        w = np.roll(w, -off, axis=ax)
                    else:
                        w = np.take(w, np.arange(off, off + size - side + 1), axis=ax)
                    ch = w
                cand = ch / whole
                best_child = cand if best_child is None else np.maximum(best_child, cand)
            idx = np.unravel_index(int(np.argmax(best_child)), best_child.shape)
            val = float(best_child[idx])
            if val > worst:
                worst = val
                parent = GridCube(level, tuple(idx), side)
                # locate the heaviest child of that parent
                kids = []
                for bits in np.ndindex(*(2,) * n):
                    start = tuple(i + b * half for i, b in zip(idx, bits))
                    cells = [(s + np.arange(half)) % size for s in start]
                    kids.append((float(rho.values[np.ix_(*cells)].sum()), GridCube(level, start, half)))
                arg = (parent, max(kids, key=lambda t: t[0])[1])
    d = 1.0 / worst
    kind = "dyadic" if dyadic else "general"
    return ConditionReport(d, arg, f"{kind} subdivisions (L={level}, n={n})", {},
                           {"max_child_ratio": worst, "mode": kind})


# ---------------------------------------------------------------- two-weight conditions


def _check_two_weight(u, ws, cfg, strict):
    ws = _check_weights([u] + list(ws))
    u, ws = ws[0], ws[1:]
    if len(ws) != cfg.m:
        raise ShapeError(f"expected {cfg.m} weights w_i, got {len(ws)}")
    if u.dimension != cfg.k * cfg.n:
        raise ShapeError("weights do not live on the k*n-dimensional product")
    if strict:
        if any(not x > 1 for x in cfg.p_list):
            raise ParameterError("need 1 < p_i")
        if not cfg.p < cfg.q:
            raise ParameterError(f"need p < q, got p={cfg.p}, q={cfg.q}")
    return u, ws


def power_bump_constant(u, ws, cfg, r, variant=1, family=None, printed=True):
    """Power-bumped two-weight constant.

    Variant 1: ``|Q|^e (avg u^{qr})^{1/(qr)} prod (avg w_i^{-p_i' r})^{1/(p_i' r)}``.
    Variant 2 uses ``(avg u^q)^{1/(qr)}`` for the left factor as printed;
    ``printed=False`` switches it to ``(avg u^q)^{1/q}``.
    """
    if not r > 1:
        raise ParameterError("the bump exponent r must exceed 1")
    if variant not in (1, 2):
        raise ParameterError("variant is 1 or 2")
    u, ws = _check_two_weight(u, ws, cfg, strict=False)
    q, e = cfg.q, cfg.e
    fams = _families(family, u.level, cfg.n, 1)
    left_pow = q * r if variant == 1 else q
    terms = {"u": (u.values ** left_pow, "sum")}
    terms.update(_dual_terms(ws, cfg.p_list, scale=r))
    left_root = q * r if (variant == 1 or printed) else q

    def expr(vols, red):
        vol = vols[0]
        return vol ** e * (red["u"] / vol) ** (1.0 / left_root) * _dual_factor(
            red, vol, cfg.p_list, scale=r)

    value, cubes = sup_over_products(terms, expr, fams)
    return ConditionReport(value, cubes, _label(fams),
                           dict(cfg.to_dict(), r=r, variant=variant, printed=printed))


def twc_constant(u, ws, cfg, family=None, strict=True):
    """``sup |Q|^{alpha/n + 1/q - 1/p} (avg u^q)^{1/q} prod (avg w_i^{-p_i'})^{1/p_i'}``."""
    u, ws = _check_two_weight(u, ws, cfg, strict)
    fams = _families(family, u.level, cfg.n, 1)
    return _product_two_weight(u, ws, cfg, fams)


def _product_two_weight(u, ws, cfg, fams):
    terms, expr = condition_terms(u, ws, cfg)
    value, cubes = sup_over_products(terms, expr, fams)
    return ConditionReport(value, cubes, _label(fams), cfg.to_dict())


def strong_twc_constant(u, ws, cfg, families=None, strict=True):
    """``sup prod_s |Q_s|^{alpha_s/n - m} (int u^q)^{1/q} prod (int w_i^{-p_i'})^{1/p_i'}``.

    Integrals run over ``Q_1 x ... x Q_k``.
    """
    if isinstance(ws, WeightSystem):
        u, ws = ws.u, ws.w
    u, ws = _check_two_weight(u, ws, cfg, strict)
    fams = _families(families, u.level, cfg.n, cfg.k)
    return _product_two_weight(u, ws, cfg, fams)


def trace_constant(u, cfg, families=None):
    """``sup (int_{Q_1 x ... x Q_k} u^q) prod_s |Q_s|^{q (alpha_s/n - 1/p)}``."""
    (u,) = _check_weights([u], cfg.k * cfg.n)
    fams = _families(families, u.level, cfg.n, cfg.k)
    q = cfg.q
    exps = [q * (a / cfg.n - 1.0 / cfg.p) for a in cfg.alpha]

    def expr(vols, red):
        scale = 1.0
        for vol, ex in zip(vols, exps):
            scale *= vol ** ex
        return scale * red["u"]

    value, cubes = sup_over_products({"u": (u.values ** q, "sum")}, expr, fams)
    return ConditionReport(value, cubes, _label(fams), cfg.to_dict())


def strong_one_weight_constant(ws, cfg, families=None):
    """Product-cube ``A_{p,q}`` constant with averages over ``Q_1 x ... x Q_k``."""
    ws = _check_weights(ws, cfg.k * cfg.n)
    if not cfg.sobolev_balanced():
        raise ParameterError("need 1/q = 1/p - alpha/n")
    fams = _families(families, ws[0].level, cfg.n, cfg.k)
    rep = _one_weight(ws, cfg.p_list, cfg.q, fams)
    return ConditionReport(rep.constant, rep.argmax, rep.family, cfg.to_dict())


# ---------------------------------------------------------------- inclusions


def inclusion_check_lemma22(ws, p_list, q=None, alpha=None, family=None):
    """Constants behind the two inclusions relating vector and scalar classes.

    (i) each ``w_i`` in ``A_{p_i}`` against ``w`` in ``A_p``-vector;
    (ii) when ``1/q = 1/p - alpha/n``: ``w`` in ``A_{p,q}`` against
    ``(prod w_i)^q`` in ``A_{mq}`` and ``w_i^{-p_i'}`` in ``A_{m p_i'}``.
    The verdict asserts finiteness of every constant; the Hoelder product
    bound is measured and reported, not asserted.
    """
    ws = _check_weights(ws)
    p_list = tuple(float(x) for x in p_list)
    m = len(ws)
    p = 1.0 / sum(1.0 / x for x in p_list)
    rec = {"part_i": {}, "part_ii": None}
    scalar = [ap_constant(w, pi, family).constant for w, pi in zip(ws, p_list)]
    vector = ap_vector_constant(ws, p_list, family).constant
    bound = float(np.prod(scalar))
    rec["part_i"] = {"ap_constants": scalar, "ap_vector_constant": vector,
                     "product_of_scalar_constants": bound,
                     "measured_ratio": vector / bound, "holder_bound_holds": vector <= bound * (1 + 1e-12)}
    finite = all(math.isfinite(c) for c in scalar + [vector])
    if q is not None and alpha is not None:
        n = ws[0].dimension
        balanced = abs(1.0 / q - (1.0 / p - alpha / n)) <= 1e-12
        part = {"balanced": balanced}
        if balanced:
            apq = apq_vector_constant(ws, p_list, q, family).constant
            prod = np.ones_like(ws[0].values)
            for w in ws:
                prod = prod * w.values
            uq = GridFunction(n, ws[0].level, prod ** q, True)
            amq = ap_constant(uq, m * q, family).constant
            duals = []
            for w, pi in zip(ws, p_list):
                pc = conjugate(pi)
                sig = GridFunction(n, w.level, w.values ** (-pc), True)
                duals.append(ap_constant(sig, m * pc, family).constant)
            part.update(apq_constant=apq, product_weight_amq=amq, dual_weights_ampi=duals)
            finite = finite and all(math.isfinite(c) for c in [apq, amq] + duals)
        rec["part_ii"] = part
    rec["verdict"] = "pass" if finite else "fail"
    return rec
