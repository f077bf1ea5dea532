"""Theorem-level verification harness.

Each suite estimates the best constant of a weighted inequality

    ||u * Op(f)||_q <= C * prod_i ||W_i f_i||_{p_i}

over a family of test functions, computes the matching condition constant
from :mod:`mfrac.weights`, and ties the two together with the extremal
functions ``f_i = W_i^{-p_i'} chi_Q``.  On a grid every constant is finite, so
theorems are checked as quantitative comparability (a positive, stable
``kappa`` with ``kappa * condition <= N``) and as monotone blowup along
parametrized families.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import generators
from .errors import CostCapExceeded, ParameterError, ShapeError
from .exponents import ExponentConfig, conjugate
from .grid import CubeFamily, GridFunction
from .operators import OperatorSpec, fs_majorant, mfi_batch, shift_average_batch, strong_batch
from .weights import (
    AINF_THRESHOLD,
    ainf_per_slice,
    ainf_surrogate,
    ap_vector_constant,
    apq_vector_constant,
    condition_terms,
    power_bump_constant,
    rank_products,
    rd_constant,
    strong_one_weight_constant,
    strong_twc_constant,
    trace_constant,
    twc_constant,
)

DENOM_FLOOR = 1e-300
DEFAULT_RANDOM_TRIALS = 256
DEFAULT_TOP_EXTREMAL = 16
DEFAULT_MIXED = 64
BUMP_EXPONENTS = (1.01, 1.1, 1.5, 2.0)
BASELINE_TOLERANCE = 0.10
CHUNK = 512

THEOREMS = ("A", "B", "3.3", "C", "D", "E", "F", "3.1", "3.2", "3.4", "3.5", "3.6", "3.7", "3.8")

# grid reading of "finite condition": every constant here is finite, so
# suites test comparability and blowup instead of finiteness
REINTERPRETATION = ("grid constants are always finite; the suite checks comparability "
                    "(kappa * condition <= estimated norm) and records the sufficiency ratio")


# ---------------------------------------------------------------- results


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


@dataclass(frozen=True)
class SuiteResult:
    """Outcome of one suite run.

    ``runtime_ms`` is kept on the object but written as ``null`` in JSON so
    that reruns are byte-identical; callers log the real runtime separately.
    """

    theorem: str
    scenario: str
    condition: float | None
    estimated_norm: float | None
    kappa: float | None
    verdict: str
    witness: dict = field(default_factory=dict)
    seed: int = 0
    level: int = 0
    runtime_ms: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def ratios(self):
        if not self.condition or not self.estimated_norm:
            return None
        return {"norm_over_condition": self.estimated_norm / self.condition,
                "condition_over_norm": self.condition / self.estimated_norm}

    def to_dict(self):
        return _clean({
            "theorem": self.theorem,
            "scenario": self.scenario,
            "constants": {"condition": self.condition, "estimated_norm": self.estimated_norm,
                          "kappa": self.kappa},
            "ratios": self.ratios,
            "verdict": self.verdict,
            "witness": self.witness,
            "seed": self.seed,
            "level": self.level,
            "runtime_ms": None,
            "details": self.details,
        })

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------- test functions


@dataclass(frozen=True)
class TrialContext:
    """What generators need to know about the inequality under test."""

    n: int
    k: int
    level: int
    m: int
    p_list: tuple
    W: tuple  # right-hand weights as arrays (None for unweighted)
    ranked: tuple = ()  # products of cubes, best condition value first
    families: tuple = ()  # per-factor families the extremal cubes come from

    @property
    def dimension(self):
        return self.n * self.k

    @property
    def size(self):
        return 1 << self.level


def _product_indicator(cubes, level, k):
    arr = np.ones(())
    for c in cubes:
        vec = np.zeros((1 << level,) * c.dimension)
        vec[np.ix_(*c.axis_cells(level))] = 1.0
        arr = np.multiply.outer(arr, vec)
    return arr


def extremal_slots(ctx, cubes):
    """``f_i = W_i^{-p_i'} chi_Q`` for one product of cubes.

    For ``p_i = 1`` the dual power degenerates; the indicator of the cells of
    ``Q`` where ``W_i`` attains its minimum plays its role.
    """
    chi = _product_indicator(cubes, ctx.level, ctx.k)
    out = []
    for W, pi in zip(ctx.W, ctx.p_list):
        if W is None:
            out.append(chi.copy())
            continue
        pc = conjugate(pi)
        if math.isinf(pc):
            low = np.min(np.where(chi > 0, W, np.inf))
            out.append(((W == low) & (chi > 0)).astype(float))
        else:
            out.append(W ** (-pc) * chi)
    return out


@dataclass(frozen=True)
class CubeIndicators:
    """Indicators of every cube (product of cubes when ``k > 1``), one per trial."""

    family: CubeFamily | None = None
    limit: int | None = None

    def generate(self, ctx, rng):
        fam = self.family or CubeFamily.dyadic(ctx.level, ctx.n)
        cubes = list(fam.enumerate())
        products = [()]
        for _ in range(ctx.k):
            products = [p + (c,) for p in products for c in cubes]
        if self.limit is not None:
            products = products[: self.limit]
        for prod in products:
            chi = _product_indicator(prod, ctx.level, ctx.k)
            yield ({"generator": "cube_indicator", "cubes": [c.to_dict() for c in prod]},
                   [chi] * ctx.m)


@dataclass(frozen=True)
class ExtremalDual:
    """``W_i^{-p_i'} chi_Q`` at the ``top`` best cubes of the condition and ``random`` others."""

    top: int = DEFAULT_TOP_EXTREMAL
    random: int = 16

    def generate(self, ctx, rng):
        chosen = list(ctx.ranked[: self.top])
        rest = list(ctx.ranked[self.top:])
        if rest and self.random:
            pick = rng.choice(len(rest), size=min(self.random, len(rest)), replace=False)
            chosen += [rest[i] for i in sorted(pick)]
        for cubes in chosen:
            yield ({"generator": "extremal_dual", "cubes": [c.to_dict() for c in cubes]},
                   extremal_slots(ctx, cubes))


@dataclass(frozen=True)
class RandomLogUniformSteps:
    """Random step functions with log-uniform values, some restricted to a random dyadic box."""

    count: int = DEFAULT_RANDOM_TRIALS
    dynamic_range: float = 1e3

    def one(self, ctx, rng):
        dim, level = ctx.dimension, ctx.level
        block = int(rng.integers(0, level + 1))
        half = math.log(self.dynamic_range) / 2.0
        coarse = np.exp(rng.uniform(-half, half, size=(1 << block,) * dim))
        arr = coarse
        rep = 1 << (level - block)
        for ax in range(dim):
            arr = np.repeat(arr, rep, axis=ax)
        if rng.random() < 0.5:
            lev = int(rng.integers(0, level + 1))
            side = 1 << (level - lev)
            mask = np.zeros_like(arr)
            start = rng.integers(0, 1 << lev, size=dim) * side
            mask[tuple(slice(s, s + side) for s in start)] = 1.0
            arr = arr * mask
        return arr

    def generate(self, ctx, rng):
        for j in range(self.count):
            yield ({"generator": "random_steps", "index": j},
                   [self.one(ctx, rng) for _ in range(ctx.m)])


@dataclass(frozen=True)
class TestFunctionFamily:
    """Seeded collection of trial tuples ``(f_1, ..., f_m)``.

    ``mixed`` extra tuples pick each slot independently from the pool of
    functions produced by all generators.
    """

    generators: tuple = (CubeIndicators(), ExtremalDual(), RandomLogUniformSteps())
    seed: int = 0
    mixed: int = DEFAULT_MIXED

    __test__ = False  # not a pytest class

    def trials(self, ctx):
        labels, slots = [], [[] for _ in range(ctx.m)]
        pool = []
        for gi, gen in enumerate(self.generators):
            rng = np.random.default_rng([self.seed, gi])
            for label, fs in gen.generate(ctx, rng):
                labels.append(label)
                for i, f in enumerate(fs):
                    slots[i].append(f)
                    pool.append(f)
        if self.mixed and ctx.m > 1 and pool:
            rng = np.random.default_rng([self.seed, len(self.generators)])
            for j in range(self.mixed):
                pick = [int(x) for x in rng.integers(0, len(pool), size=ctx.m)]
                labels.append({"generator": "mixed", "index": j, "pool": pick})
                for i in range(ctx.m):
                    slots[i].append(pool[pick[i]])
        return labels, [np.stack(s) for s in slots]


# ---------------------------------------------------------------- norm estimation


def _weak_rows(a, q, cell):
    """Row-wise ``sup_t t |{|g| > t}|^{1/q}`` for step data (rows are trials)."""
    vals = -np.sort(-np.abs(a), axis=1)
    meas = np.arange(1, vals.shape[1] + 1) * cell
    return np.max(vals * meas ** (1.0 / q), axis=1)


@dataclass(frozen=True)
class Inequality:
    """``||u Op(f)||_q (or weak) <= C prod ||W_i f_i||_{p_i}``; ``None`` weights mean 1."""

    op: OperatorSpec
    u: np.ndarray | None
    W: tuple
    level: int
    weak: bool = False

    @property
    def cfg(self):
        return self.op.exponents

    def ratios(self, slots):
        """Trial ratios (``nan`` where the denominator is below the floor)."""
        cfg = self.cfg
        dim = cfg.k * cfg.n
        cell = 2.0 ** (-dim * self.level)
        total = slots[0].shape[0]
        out = np.empty(total)
        for lo in range(0, total, CHUNK):
            part = [s[lo:lo + CHUNK] for s in slots]
            den = np.ones(part[0].shape[0])
            for f, W, pi in zip(part, self.W, cfg.p_list):
                g = np.abs(f) if W is None else np.abs(f) * W
                den *= (np.sum((g ** pi).reshape(len(g), -1), axis=1) * cell) ** (1.0 / pi)
            val = self.op.apply_batch(part, self.level)
            if self.u is not None:
                val = val * self.u
            flat = np.abs(val).reshape(len(val), -1)
            if self.weak:
                num = _weak_rows(flat, cfg.q, cell)
            else:
                num = (np.sum(flat ** cfg.q, axis=1) * cell) ** (1.0 / cfg.q)
            with np.errstate(divide="ignore", invalid="ignore"):
                out[lo:lo + len(den)] = np.where(den > DENOM_FLOOR, num / den, np.nan)
        return out


def _best(ratios):
    ok = ~np.isnan(ratios)
    if not ok.any():
        return math.nan, -1
    idx = int(np.nanargmax(ratios))
    return float(ratios[idx]), idx


def op_norm_estimate(op, u, W, cfg, fam, level, ranked=(), weak=False):
    """Largest trial ratio over ``fam``; returns a :class:`SuiteResult`."""
    ineq = Inequality(op, _arr(u), tuple(_arr(w) for w in W), level, weak)
    ctx = TrialContext(cfg.n, cfg.k, level, cfg.m, cfg.p_list, ineq.W, tuple(ranked))
    labels, slots = fam.trials(ctx)
    ratios = ineq.ratios(slots)
    best, idx = _best(ratios)
    skipped = int(np.isnan(ratios).sum())
    witness = dict(labels[idx], ratio=best, trial=idx) if idx >= 0 else {}
    return SuiteResult("weak-norm" if weak else "norm", "", None, best, None,
                       "pass" if math.isfinite(best) else "fail", witness, fam.seed, level,
                       details={"trials": len(labels), "skipped": skipped})


def weak_norm_estimate(op, u, W, cfg, fam, level, ranked=()):
    return op_norm_estimate(op, u, W, cfg, fam, level, ranked, weak=True)


def _arr(g):
    if g is None:
        return None
    return g.values if isinstance(g, GridFunction) else np.asarray(g, dtype=float)


def necessity_lower_bound(op, u, W, cfg, level, families=None, condition=None, top=None,
                          weak=False):
    """Trial ratios of ``f_i = W_i^{-p_i'} chi_Q`` over every (product) cube of the family.

    Returns the maximum ratio, the cube realizing it and ``kappa = max / condition``.
    """
    u_g, W_g = _as_grid(u, cfg, level), [_as_grid(w, cfg, level) for w in W]
    fams = _suite_families(families, cfg, level)
    terms, expr = condition_terms(u_g, W_g, cfg)
    ranked = [c for _, c in rank_products(terms, expr, fams, top)]
    ineq = Inequality(op, _arr(u), tuple(_arr(w) for w in W), level, weak)
    ctx = TrialContext(cfg.n, cfg.k, level, cfg.m, cfg.p_list, ineq.W)
    slots = [[] for _ in range(cfg.m)]
    for cubes in ranked:
        for i, f in enumerate(extremal_slots(ctx, cubes)):
            slots[i].append(f)
    ratios = ineq.ratios([np.stack(s) for s in slots])
    best, idx = _best(ratios)
    rec = {"max_ratio": best, "cubes": [c.to_dict() for c in ranked[idx]], "count": len(ranked)}
    if condition is not None:
        rec["kappa"] = best / condition if condition > 0 else math.nan
    return rec, ranked


def _as_grid(w, cfg, level):
    """Weights as GridFunctions; ``None`` becomes the constant 1."""
    if w is None:
        return GridFunction.constant(cfg.k * cfg.n, level)
    return w if isinstance(w, GridFunction) else GridFunction.from_array(w)


def _suite_families(families, cfg, level):
    if families is None:
        return [CubeFamily.default(cfg.n, level)] * cfg.k
    if isinstance(families, CubeFamily):
        return [families] * cfg.k
    return list(families)


def _or_one(g, dim, level):
    return GridFunction.constant(dim, level) if g is None else g


# ---------------------------------------------------------------- scenarios


@dataclass(frozen=True)
class Scenario:
    """A named weight configuration for one theorem, loaded from JSON."""

    name: str
    theorem: str
    level: int
    exponents: dict
    weights: dict = field(default_factory=dict)
    family: dict = field(default_factory=lambda: {"kind": "default"})
    operator: str | None = None
    trials: int = DEFAULT_RANDOM_TRIALS
    options: dict = field(default_factory=dict)
    base_dir: str | None = None

    KEYS = ("name", "theorem", "level", "exponents", "weights", "family", "operator", "trials",
            "options")

    @classmethod
    def from_dict(cls, d, base_dir=None):
        unknown = set(d) - set(cls.KEYS)
        if unknown:
            raise ParameterError(f"unknown scenario keys: {sorted(unknown)}")
        fam = d.get("family", {"kind": "default"})
        if isinstance(fam, str):
            fam = {"kind": fam}
        return cls(d["name"], str(d["theorem"]), int(d["level"]), dict(d["exponents"]),
                   dict(d.get("weights", {})), fam, d.get("operator"),
                   int(d.get("trials", DEFAULT_RANDOM_TRIALS)), dict(d.get("options", {})),
                   None if base_dir is None else str(base_dir))

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), path.parent)

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.KEYS}
        return {k: v for k, v in d.items() if v is not None}

    def config(self):
        return ExponentConfig.from_dict(self.exponents)

    def families(self, cfg, level=None):
        level = self.level if level is None else level
        return [CubeFamily.from_dict(self.family, level, cfg.n)] * cfg.k

    def weight(self, name, dimension, level=None):
        spec = self.weights.get(name)
        level = self.level if level is None else level
        if spec is None:
            return None
        return generators.generate(spec, dimension, level, self.base_dir)

    def rhs_weights(self, cfg, level=None):
        specs = self.weights.get("w")
        if specs is None:
            return [None] * cfg.m
        if len(specs) != cfg.m:
            raise ShapeError(f"scenario lists {len(specs)} weights w_i, exponents need {cfg.m}")
        level = self.level if level is None else level
        return [generators.generate(s, cfg.k * cfg.n, level, self.base_dir) for s in specs]

    def at_level(self, level):
        return Scenario(self.name, self.theorem, level, self.exponents, self.weights,
                        self.family, self.operator, self.trials, self.options, self.base_dir)


def shipped_scenarios():
    """The scenario files bundled with the package, sorted by name."""
    root = resources.files("mfrac") / "scenarios"
    out = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            out.append(Scenario.from_dict(json.loads(entry.read_text())))
    return out


def load_baselines():
    """Measured constants persisted with the package (name -> value)."""
    root = resources.files("mfrac") / "baselines"
    out = {}
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            out.update(json.loads(entry.read_text()))
    return out


def within_baseline(value, baseline, tol=BASELINE_TOLERANCE):
    """Regression check: ``value`` within ``tol`` of ``baseline`` (relative)."""
    return abs(value - baseline) <= tol * abs(baseline)


# ---------------------------------------------------------------- suites


def _hyp_result(theorem, scenario, seed, level, problems, details=None):
    d = {"hypotheses_failed": problems}
    d.update(details or {})
    return SuiteResult(theorem, scenario, None, None, None, "hypotheses-unmet", {}, seed, level,
                       details=d)


def _rd_hypothesis(ws, cfg, factors=None):
    """Reverse doubling of ``w_i^{-p_i'}`` (general subdivisions); returns details and failures."""
    rec, bad = {}, []
    targets = []
    if factors:
        for i, fac in enumerate(factors):
            for s, g in enumerate(fac):
                targets.append((f"w_{i + 1}^({s + 1})", g, cfg.p_list[i]))
    else:
        targets = [(f"w_{i + 1}", w, pi) for i, (w, pi) in enumerate(zip(ws, cfg.p_list))]
    for name, w, pi in targets:
        pc = conjugate(pi)
        if math.isinf(pc):
            continue
        sigma = GridFunction(w.dimension, w.level, w.values ** (-pc), True)
        if w.dimension > 2:
            continue
        d = rd_constant(sigma, dyadic=False).constant
        rec[name] = d
        if not d > 1.0:
            bad.append(f"{name}^(-p') is not reverse doubling (d = {d})")
    return {"reverse_doubling_d": rec}, bad


def _finish(theorem, sc, seed, level, cond, cond_detail, ineq_parts, fam, extra=None,
            kappa_floor=0.0, started=None):
    op, u, W, cfg, weak = ineq_parts
    nec_fams = None if op.is_integral else op.resolved_families(level)
    nec, ranked = necessity_lower_bound(op, u, W, cfg, level, nec_fams, cond, weak=weak)
    est = op_norm_estimate(op, u, W, cfg, fam, level, ranked, weak)
    norm = est.estimated_norm
    witness = est.witness
    if not (norm >= nec["max_ratio"]):
        norm = nec["max_ratio"]
        witness = {"generator": "necessity", "cubes": nec["cubes"], "ratio": norm}
    kappa = nec.get("kappa")
    details = {"condition": cond_detail, "necessity": nec, "trials": est.details,
               "operator": op.to_dict(), "reading": REINTERPRETATION}
    details.update(extra or {})
    ok = (cond is None or (math.isfinite(cond) and cond > 0)) and math.isfinite(norm) and norm > 0
    if kappa is not None:
        ok = ok and kappa > kappa_floor
    runtime = None if started is None else (time.perf_counter() - started) * 1e3
    return SuiteResult(theorem, sc.name, cond, norm, kappa, "pass" if ok else "fail", witness,
                       seed, level, runtime, details)


def _family(sc, seed, trials=None):
    count = sc.trials if trials is None else trials
    gens = (CubeIndicators(), ExtremalDual(), RandomLogUniformSteps(count))
    return TestFunctionFamily(gens, seed)


def _op(kind, cfg, sc, level):
    fams = sc.families(cfg, level) if kind not in ("MFI", "STRONG_MFI") else ()
    return OperatorSpec(kind, cfg, fams, depth=int(sc.options.get("depth", 4)))


def _default_kind(theorem, sc, k):
    if sc.operator:
        return sc.operator
    return {"C": "MFI", "F": "MFI", "3.2": "MFI", "3.6": "STRONG_MFI"}.get(
        theorem, "STRONG_MFM" if k > 1 else "MFM")


def suite(theorem, scenario, cfg=None, seed=0, level=None, trials=None):
    """Run the named theorem suite on a scenario; see :data:`THEOREMS`."""
    started = time.perf_counter()
    theorem = str(theorem)
    if theorem not in THEOREMS:
        raise ParameterError(f"unknown theorem id {theorem!r}")
    sc = scenario if level is None else scenario.at_level(level)
    level = sc.level
    cfg = sc.config() if cfg is None else cfg
    if theorem == "A":
        cfg = cfg.replace(alpha=0.0, q=cfg.p)
    bad = cfg.violations(theorem)
    if bad:
        return _hyp_result(theorem, sc.name, seed, level, bad)
    dim = cfg.k * cfg.n
    fam = _family(sc, seed, trials)
    fams = sc.families(cfg)
    kind = _default_kind(theorem, sc, cfg.k)
    try:
        op = _op(kind, cfg, sc, level)
        op.check_cost(level)
    except CostCapExceeded as exc:
        return SuiteResult(theorem, sc.name, None, None, None, "cost-cap", {}, seed, level,
                           details={"error": str(exc)})
    u = sc.weight("u", dim)
    ws = sc.rhs_weights(cfg)
    extra = {}

    if theorem == "A":
        pl = cfg.p_list
        ws = [_or_one(w, dim, level) for w in ws]
        rep = ap_vector_constant(ws, pl, fams[0])
        prod = np.ones((1 << level,) * dim)
        for w, pi in zip(ws, pl):
            prod = prod * w.values ** (1.0 / pi)
        lhs = GridFunction(dim, level, prod, True)
        rhs = [GridFunction(dim, level, w.values ** (1.0 / pi), True) for w, pi in zip(ws, pl)]
        return _finish(theorem, sc, seed, level, rep.constant, rep.to_dict(),
                       (op, lhs, rhs, cfg, False), fam, started=started)

    if theorem in ("B", "3.3", "3.7"):
        ws = [_or_one(w, dim, level) for w in ws]
        prod = np.prod(np.stack([w.values for w in ws]), axis=0)
        lhs = GridFunction(dim, level, prod, True)
        if theorem == "3.7":
            rep = strong_one_weight_constant(ws, cfg, fams)
        else:
            rep = apq_vector_constant(ws, cfg.p_list, cfg.q, fams[0])
        return _finish(theorem, sc, seed, level, rep.constant, rep.to_dict(),
                       (op, lhs, ws, cfg, False), fam, started=started)

    if theorem in ("F", "3.5"):
        u = _or_one(u, dim, level)
        rep = trace_constant(u, cfg, fams)
        cond = rep.constant ** (1.0 / cfg.q)
        if theorem == "F":
            weak_op = _op("MFM", cfg, sc, level)
            weak = weak_norm_estimate(weak_op, u, [None] * cfg.m, cfg, fam, level)
            extra["weak_maximal_estimate"] = weak.estimated_norm
            extra["triangle"] = {"i_strong_integral": "finite", "ii_weak_maximal":
                                 "finite" if math.isfinite(weak.estimated_norm) else "infinite",
                                 "iii_trace": "finite" if math.isfinite(cond) else "infinite"}
        return _finish(theorem, sc, seed, level, cond, dict(rep.to_dict(), root=1.0 / cfg.q),
                       (op, u, [None] * cfg.m, cfg, False), fam, extra, started=started)

    if theorem == "3.8":
        v = _or_one(sc.weight("v", dim), dim, level)
        mv = fs_majorant(v, cfg, fams)
        lhs = GridFunction(dim, level, v.values ** (1.0 / cfg.q), True)
        rhs = [GridFunction(dim, level, mv.values ** (cfg.p / (pi * cfg.q * cfg.m)), True)
               for pi in cfg.p_list]
        extra["majorant_range"] = [float(mv.values.min()), float(mv.values.max())]
        res = _finish(theorem, sc, seed, level, None, None, (op, lhs, rhs, cfg, False), fam,
                      extra, started=started)
        base = sc.options.get("baseline")
        if base is not None and res.verdict == "pass":
            if res.estimated_norm > float(base) * (1 + BASELINE_TOLERANCE):
                res = _replace(res, verdict="fail")
        return res

    # two-weight suites
    u = _or_one(u, dim, level)
    ws = [_or_one(w, dim, level) for w in ws]
    factors = None
    if cfg.k > 1:
        specs = sc.weights.get("w") or []
        factors = []
        for i, spec in enumerate(specs):
            fs = generators.factor_specs(spec, cfg.k)
            if fs is None:
                factors = None
                break
            factors.append([generators.generate(f, cfg.n, level, sc.base_dir) for f in fs])
    hyp = {}
    problems = []
    if theorem in ("3.1", "3.2"):
        hyp, problems = _rd_hypothesis(ws, cfg)
    if theorem == "3.4":
        if factors is None and sc.weights.get("w"):
            problems.append("w_i are not of product type")
        hyp, more = _rd_hypothesis(ws, cfg, factors)
        problems += more
    if theorem == "3.2":
        uq = GridFunction(dim, level, u.values ** cfg.q, True)
        a = ainf_surrogate(uq, fams[0])
        hyp["u^q_ainf"] = a.constant
        if not a.extra["member"]:
            problems.append(f"u^q fails the A_inf surrogate ({a.constant} >= {AINF_THRESHOLD})")
    if theorem == "3.6":
        uq = GridFunction(dim, level, u.values ** cfg.q, True)
        a = ainf_per_slice(uq, cfg.n, fams[0])
        hyp["u^q_ainf_per_slice"] = a.constant
        if not a.extra["member"]:
            problems.append("u^q fails the per-slice A_inf surrogate")
    if problems:
        return _hyp_result(theorem, sc.name, seed, level, problems, hyp)
    extra["hypotheses"] = hyp

    if theorem in ("C", "E"):
        variant = 1 if (theorem == "C" and cfg.q > 1) else 2
        rs = sc.options.get("r", list(BUMP_EXPONENTS))
        bumps = {}
        for r in rs:
            bumps[str(r)] = power_bump_constant(u, ws, cfg, float(r), variant, fams[0]).constant
        best_r = min(bumps, key=lambda key: (bumps[key], float(key)))
        twc = twc_constant(u, ws, cfg, fams[0], strict=False)
        extra.update(power_bump=bumps, variant=variant, best_r=float(best_r),
                     twc_constant=twc.constant)
        cond = bumps[best_r]
        res = _finish(theorem, sc, seed, level, cond, {"kind": "power_bump", "r": float(best_r)},
                      (op, u, ws, cfg, False), fam, extra, started=started)
        return res

    if theorem in ("3.4", "3.6"):
        rep = strong_twc_constant(u, ws, cfg, fams)
    else:
        rep = twc_constant(u, ws, cfg, fams[0], strict=theorem != "D")
    return _finish(theorem, sc, seed, level, rep.constant, rep.to_dict(),
                   (op, u, ws, cfg, theorem == "D"), fam, extra, started=started)


def _replace(res, **kw):
    d = {f: getattr(res, f) for f in res.__dataclass_fields__}
    d.update(kw)
    return SuiteResult(**d)


# ---------------------------------------------------------------- blowup


def blowup_check(cfg, levels, seed=0, family=None):
    """Trivial weights with ``e < 0``: condition and estimated norm along ``levels``.

    Test functions are indicators of cells and dyadic cubes, so the
    smallest-cell indicator is among the witnesses at every level.
    """
    if not cfg.e < 0:
        raise ParameterError("blowup needs e = alpha/n + 1/q - 1/p < 0")
    rows = []
    for level in levels:
        fams = [CubeFamily.default(cfg.n, level) if family is None else family.at_level(level)]
        one = GridFunction.constant(cfg.n, level)
        rep = twc_constant(one, [one] * cfg.m, cfg, fams[0])
        op = OperatorSpec("MFM", cfg, fams)
        fam = TestFunctionFamily((CubeIndicators(),), seed, mixed=0)
        est = op_norm_estimate(op, None, [None] * cfg.m, cfg, fam, level)
        rows.append({"level": level, "condition": rep.constant,
                     "closed_form": 2.0 ** (-cfg.n * level * cfg.e),
                     "estimated_norm": est.estimated_norm,
                     "kappa": est.estimated_norm / rep.constant, "witness": est.witness})
    cond = [r["condition"] for r in rows]
    norm = [r["estimated_norm"] for r in rows]
    inc = all(b > a for a, b in zip(cond, cond[1:])) and all(b > a for a, b in zip(norm, norm[1:]))
    return {"rows": rows, "strictly_increasing": inc}


# ---------------------------------------------------------------- auxiliary checks


def _dyadic_levels(arr, level, dim):
    """Per-level block sums of ``arr`` (trailing ``dim`` axes); finest level first."""
    out = {level: arr}
    cur = arr
    lead = arr.ndim - dim
    for lev in range(level - 1, -1, -1):
        shape = cur.shape[:lead]
        for s in cur.shape[lead:]:
            shape += (s // 2, 2)
        cur = cur.reshape(shape).sum(axis=tuple(range(lead + 1, lead + 2 * dim, 2)))
        out[lev] = cur
    return out


def carleson_coefficients(rule, rho, r, q, level, n):
    """``c_Q`` per dyadic level for a named rule.

    ``("power", s)``: ``|Q|^s``; ``"threshold"``: the (ii)-threshold
    ``|Q|^q (int_Q rho^{1-r'})^{-q/r'}``; ``"zero"``; or a callable ``level -> array``.
    """
    if callable(rule):
        return {lev: np.asarray(rule(lev), dtype=float) for lev in range(level + 1)}
    rc = conjugate(r)
    sig = _dyadic_levels(rho.values ** (1.0 - rc), level, n)
    cell = 2.0 ** (-n * level)
    out = {}
    for lev in range(level + 1):
        vol = 2.0 ** (-n * lev)
        if rule == "zero":
            out[lev] = np.zeros((1 << lev,) * n)
        elif rule == "threshold":
            out[lev] = vol ** q * (sig[lev] * cell) ** (-q / rc)
        elif isinstance(rule, (tuple, list)) and rule[0] == "power":
            out[lev] = np.full((1 << lev,) * n, vol ** float(rule[1]))
        else:
            raise ParameterError(f"unknown coefficient rule {rule!r}")
    return out


def carleson_check(rho, r, q, coefficients, trials=None, seed=0, count=0):
    """Testing constant ``C_1`` against the embedding constant over trial functions.

    ``trials`` is a list of nonnegative GridFunctions; ``count`` extra seeded
    random steps are appended.
    """
    if not 1 < r < q:
        raise ParameterError("need 1 < r < q < inf")
    n, level = rho.dimension, rho.level
    rc = conjugate(r)
    sigma = GridFunction(n, level, rho.values ** (1.0 - rc), True)
    d = rd_constant(sigma, dyadic=True).constant
    if not d > 1.0:
        return SuiteResult("G", "carleson", None, None, None, "hypotheses-unmet", {}, seed, level,
                           details={"rd_d": d})
    c = carleson_coefficients(coefficients, rho, r, q, level, n)
    cell = 2.0 ** (-n * level)
    sig = _dyadic_levels(sigma.values, level, n)
    c1 = 0.0
    for lev in range(level + 1):
        vol = 2.0 ** (-n * lev)
        val = c[lev] * vol ** (-q) * (sig[lev] * cell) ** (q / rc)
        c1 = max(c1, float(val.max()))
    gs = [g.values for g in (trials or [])]
    rng = np.random.default_rng(seed)
    gen = RandomLogUniformSteps(count)
    ctx = TrialContext(n, 1, level, 1, (r,), (None,))
    for _ in range(count):
        gs.append(gen.one(ctx, rng))
    if not gs:
        gs = [np.ones((1 << level,) * n)]
    G = np.stack(gs)
    sums = _dyadic_levels(G, level, n)
    lhs = np.zeros(len(G))
    for lev in range(level + 1):
        vol = 2.0 ** (-n * lev)
        avg = sums[lev] * cell / vol
        lhs += np.sum((c[lev] * avg ** q).reshape(len(G), -1), axis=1)
    rhs = (np.sum((G ** r * rho.values).reshape(len(G), -1), axis=1) * cell) ** (q / r)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > DENOM_FLOOR, lhs / rhs, np.nan)
    if np.all(lhs == 0):
        ratio = np.zeros(len(G))
    best, idx = _best(ratio)
    ok = math.isfinite(c1) and math.isfinite(best)
    return SuiteResult("G", "carleson", c1, best, None, "pass" if ok else "fail",
                       {"trial": idx, "ratio": best}, seed, level,
                       details={"rd_d": d, "trials": len(G),
                                "ratio_to_testing": best / c1 if c1 > 0 else None})


def ainfty_domination_check(trials, v, cfg, family=None, depth=4):
    """``max int |I f|^q v / int (M f)^q v`` over trial tuples (``m`` arrays, batch first)."""
    a = ainf_surrogate(v, family)
    level = v.level
    if not a.extra["member"]:
        return SuiteResult("4.2", "ainfty", None, None, None, "hypotheses-unmet", {}, 0, level,
                           details={"ainf": a.constant})
    fams = [family or CubeFamily.default(cfg.n, level)] * cfg.k
    slots = [np.asarray(t, dtype=float) for t in trials]
    I = mfi_batch(slots, cfg, level, depth=depth)
    M = strong_batch(slots, cfg, fams)
    axes = tuple(range(1, I.ndim))
    lhs = np.sum(np.abs(I) ** cfg.q * v.values, axis=axes)
    rhs = np.sum(M ** cfg.q * v.values, axis=axes)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > DENOM_FLOOR, lhs / rhs, np.nan)
    best, idx = _best(ratio)
    skipped = int(np.isnan(ratio).sum())
    ok = math.isfinite(best)
    return SuiteResult("4.2", "ainfty", a.constant, best, None, "pass" if ok else "fail",
                       {"trial": idx, "ratio": best}, 0, level,
                       details={"skipped": skipped, "ratios": [_num(x) for x in ratio]})


def holder_sequence_check(seqs, p_list):
    """``sum_k prod_j a_k^(j) <= prod_j (sum_k (a_k^(j))^{p_j/p})^{p/p_j}``."""
    a = np.asarray(seqs, dtype=float)
    if a.ndim != 2 or a.shape[0] != len(p_list):
        raise ShapeError("need one sequence per exponent")
    if np.any(a < 0):
        raise ParameterError("sequences must be nonnegative")
    p = 1.0 / sum(1.0 / x for x in p_list)
    lhs = float(np.sum(np.prod(a, axis=0)))
    rhs = 1.0
    for row, pj in zip(a, p_list):
        rhs *= float(np.sum(row ** (pj / p))) ** (p / pj)
    return {"lhs": lhs, "rhs": rhs, "verdict": "pass" if lhs <= rhs * (1 + 1e-12) else "fail"}


def domination_constant(fs, cfg, family=None, depth=4):
    """``min over cells of I(f) / M(f)`` (strong variants when ``cfg.k > 1``)."""
    level = fs[0].level
    fams = [family or CubeFamily.default(cfg.n, level)] * cfg.k
    arrays = [f.values for f in fs]
    I = mfi_batch(arrays, cfg, level, depth=depth)
    M = strong_batch(arrays, cfg, fams)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(M > 0, I / M, np.inf)
    return float(ratio.min())


def shift_average_constant(fs, cfg, k_max=-1, family=None):
    """Smallest ``C`` with ``(M^k f)^q <= C * mean_t [tau_{-t} M^(d) tau_t f]^q`` at every cell."""
    level = fs[0].level
    fam = family or CubeFamily.default(cfg.n, level)
    op = OperatorSpec("STRONG_MFM_TRUNCATED" if cfg.k > 1 else "MFM_TRUNCATED", cfg,
                      [fam] * cfg.k, k_max=k_max)
    arrays = [f.values for f in fs]
    left = op.apply_batch(arrays, level) ** cfg.q
    right = shift_average_batch(arrays, cfg, cfg.q)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(right > 0, left / right, np.where(left > 0, np.inf, 0.0))
    return float(ratio.max())


def fefferman_stein_ratio(v, fs, cfg, families=None):
    """``||M^(S) f||_{L^q_v} / prod_i ||(Mv)^{p/(p_i q m)} f_i||_{p_i}`` for one tuple ``fs``."""
    level = v.level
    dim = cfg.k * cfg.n
    fams = families or [CubeFamily.default(cfg.n, level)] * cfg.k
    mv = fs_majorant(v, cfg, fams).values
    left = strong_batch([f.values for f in fs], cfg, fams)
    cell = 2.0 ** (-dim * level)
    num = float(np.sum(left ** cfg.q * v.values) * cell) ** (1.0 / cfg.q)
    den = 1.0
    for f, pi in zip(fs, cfg.p_list):
        wf = mv ** (cfg.p / (pi * cfg.q * cfg.m)) * f.values
        den *= float(np.sum(np.abs(wf) ** pi) * cell) ** (1.0 / pi)
    return num / max(den, DENOM_FLOOR)
