"""Seeded measurement protocols shared by the baseline recorder and the test suite.

Each protocol is a pure function of its seed range, so rerunning it gives
the same numbers on every machine and thread count.  Persisted values live
in ``mfrac/baselines/*.json`` and are compared with a relative tolerance
of :data:`mfrac.verify.BASELINE_TOLERANCE`.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import generators
from .exponents import ExponentConfig
from .grid import CubeFamily, GridFunction
from .verify import (
    carleson_check,
    domination_constant,
    fefferman_stein_ratio,
    shift_average_constant,
    shipped_scenarios,
    suite,
)

DOMINATION_ALPHAS = (0.25, 0.5, 1.0)
NECESSITY_SCENARIOS = (
    "t31_trivial", "t31_log_uniform", "t31_power",
    "t35k1_trivial", "t35k1_power", "t35k1_log_uniform",
    "t35k2_trivial", "t35k2_power", "t35k2_log_uniform",
    "t34_trivial", "t34_product_log_uniform", "t34_product_power",
)
NECESSITY_SEED = 7
FS_CONFIG = ExponentConfig(1, 2, (3, 3), 3, (0.5, 0.5), k=2)
SHIFT_LEVELS = (7, 8)


def _random_step(rng, shape, level):
    return GridFunction.from_array(np.exp(rng.uniform(-2.0, 2.0, size=shape)), True).refine(level)


def domination_inputs(index, strong=False):
    """Config and input pair of domination scenario ``index`` (0..49)."""
    a = DOMINATION_ALPHAS[index % 3]
    if strong:
        cfg = ExponentConfig(1, 2, (3, 3), 3, (a, a), k=2)
        rng = np.random.default_rng(100 + index)
        return cfg, [_random_step(rng, (4, 4), 3) for _ in range(2)]
    cfg = ExponentConfig(1, 2, (3, 3), 3, a)
    rng = np.random.default_rng(index)
    return cfg, [_random_step(rng, (8,), 5) for _ in range(2)]


def domination_pair(index, strong=False, family="default"):
    """Domination constant at the base level and one level finer.

    ``family="dyadic"`` takes the maximal side over dyadic cubes (or dyadic
    rectangles when ``strong``); ``"default"`` uses the default family.
    """
    cfg, fs = domination_inputs(index, strong)
    out = []
    for g in (fs, [f.refine(f.level + 1) for f in fs]):
        fam = CubeFamily.dyadic(g[0].level, 1) if family == "dyadic" else None
        out.append(domination_constant(g, cfg, fam))
    return tuple(out)


def shift_inputs(index):
    a = DOMINATION_ALPHAS[index % 3]
    cfg = ExponentConfig(1, 2, (3, 3), 3, a)
    rng = np.random.default_rng(200 + index)
    return cfg, [_random_step(rng, (8,), 3) for _ in range(2)]


def shift_pair(index, levels=SHIFT_LEVELS):
    """Shift-averaging constant of scenario ``index`` at two consecutive levels."""
    cfg, fs = shift_inputs(index)
    return tuple(shift_average_constant([f.refine(L) for f in fs], cfg) for L in levels)


def fs_inputs(index):
    v = generators.generate({"kind": "log_uniform", "seed": 300 + index, "range": 10.0,
                             "block_level": 3}, 2, 3)
    rng = np.random.default_rng(400 + index)
    return v, [_random_step(rng, (8, 8), 3) for _ in range(2)]


def fs_ratios(count=20):
    """Fefferman-Stein ratios of the seeded ``(v, f)`` scenarios at ``k = 2, n = 1, L = 3``."""
    out = []
    for i in range(count):
        v, fs = fs_inputs(i)
        out.append(fefferman_stein_ratio(v, fs, FS_CONFIG))
    return out


def carleson_random(count=100, level=8):
    """``(C_1, C_hat)`` per seeded random ``(rho, g)`` pair with threshold coefficients."""
    out = []
    for i in range(count):
        rho = generators.generate({"kind": "log_uniform", "seed": 500 + i, "range": 10.0,
                                   "block_level": 4}, 1, level)
        res = carleson_check(rho, 2.0, 3.0, "threshold", seed=600 + i, count=1)
        out.append((res.condition, res.estimated_norm, res.verdict))
    return out


def necessity_kappas(names=NECESSITY_SCENARIOS, seed=NECESSITY_SEED):
    """Necessity ratio ``max trial / condition`` of the named shipped scenarios."""
    shipped = {s.name: s for s in shipped_scenarios()}
    out = {}
    for name in names:
        sc = shipped[name]
        res = suite(sc.theorem, sc, seed=seed)
        out[name] = res.details["necessity"]["kappa"]
    return out


def record(path):
    """Measure every persisted constant and write them to ``path`` as JSON."""
    data = {
        "necessity_kappa": necessity_kappas(),
        "fefferman_stein_C": max(fs_ratios()),
        "carleson_threshold_C": max(c for _, c, _ in carleson_random()),
    }
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return data
