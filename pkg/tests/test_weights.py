from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mfrac.errors import ParameterError, ShapeError
from mfrac.exponents import ExponentConfig, conjugate
from mfrac.grid import CubeFamily, GridFunction
from mfrac.weights import (
    ConditionReport,
    WeightSystem,
    ainf_per_slice,
    ainf_surrogate,
    ap_constant,
    ap_vector_constant,
    apq_vector_constant,
    condition_terms,
    inclusion_check_lemma22,
    power_bump_constant,
    rank_products,
    rd_constant,
    strong_one_weight_constant,
    strong_twc_constant,
    sup_over_products,
    trace_constant,
    twc_constant,
)

positive = st.floats(0.05, 20.0, allow_nan=False)


def weights(level=3, dimension=1):
    size = (1 << level) ** dimension
    shape = (1 << level,) * dimension
    return st.lists(positive, min_size=size, max_size=size).map(
        lambda v: GridFunction(dimension, level, np.reshape(v, shape), True))


def cube_mean(g, Q, power=1.0):
    return float(np.mean(g.values[np.ix_(*Q.axis_cells())] ** power))


def brute_twc(u, ws, cfg, family):
    best = 0.0
    for Q in family.enumerate():
        val = Q.volume ** cfg.e * cube_mean(u, Q, cfg.q) ** (1 / cfg.q)
        for w, pi in zip(ws, cfg.p_list):
            pc = conjugate(pi)
            val *= cube_mean(w, Q, -pc) ** (1 / pc)
        best = max(best, val)
    return best


# ---------------------------------------------------------------- trivial constants


ONE = GridFunction.constant(1, 4)
BALANCED = ExponentConfig(1, 2, (3, 3), 3, 1 / 3)  # 1/q = 1/p - alpha/n


@pytest.mark.parametrize("value", [1.0, 7.5])
def test_constant_weights_give_one(value):
    c = GridFunction.constant(1, 4, value)
    ws = [c, c]
    assert ap_vector_constant(ws, (3, 3)).constant == pytest.approx(1, abs=1e-12)
    assert ap_constant(c, 2).constant == pytest.approx(1, abs=1e-12)
    assert apq_vector_constant(ws, (3, 3), 3).constant == pytest.approx(value ** 2 / value ** 2,
                                                                       abs=1e-12)
    assert ainf_surrogate(c).constant == pytest.approx(1, abs=1e-12)


def test_two_weight_constants_at_zero_gap_are_one():
    assert BALANCED.e == pytest.approx(0, abs=1e-15)
    assert twc_constant(ONE, [ONE, ONE], BALANCED).constant == pytest.approx(1, abs=1e-12)
    for r in (1.1, 2.0):
        for variant in (1, 2):
            rep = power_bump_constant(ONE, [ONE, ONE], BALANCED, r, variant)
            assert rep.constant == pytest.approx(1, abs=1e-12)


def test_trace_constant_of_one():
    # q (alpha/n - 1/p) = -1 makes every cube give exactly 1
    cfg = ExponentConfig(1, 2, (4, 4), 2, 0.0)
    assert cfg.q * (0 - 1 / cfg.p) == -1
    assert trace_constant(ONE, cfg).constant == pytest.approx(1, abs=1e-12)


def test_strong_constants_of_one():
    cfg = ExponentConfig(1, 2, (3, 3), 3, (1 / 3, 1 / 3), k=2)
    one = GridFunction.constant(2, 3)
    assert strong_twc_constant(one, [one, one], cfg).constant == pytest.approx(1, abs=1e-12)
    assert strong_one_weight_constant([one, one], cfg).constant == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("dimension", [1, 2])
@pytest.mark.parametrize("dyadic", [True, False])
def test_reverse_doubling_of_constant_is_two_to_the_n(dimension, dyadic):
    rep = rd_constant(GridFunction.constant(dimension, 3, 4.0), dyadic=dyadic)
    assert rep.constant == pytest.approx(2 ** dimension, abs=1e-12)


# ---------------------------------------------------------------- oracles and properties


@given(weights(), weights(), weights())
def test_twc_matches_enumeration(u, w1, w2):
    cfg = ExponentConfig(1, 2, (3, 3), 4, 0.5)
    fam = CubeFamily.grid_aligned(3)
    got = twc_constant(u, [w1, w2], cfg, fam).constant
    assert got == pytest.approx(brute_twc(u, [w1, w2], cfg, fam), rel=1e-10)


@given(weights())
def test_ap_constant_at_least_one_and_scale_invariant(w):
    a = ap_constant(w, 2.0).constant
    assert a >= 1 - 1e-12
    scaled = w.with_values(5.0 * w.values)
    assert ap_constant(scaled, 2.0).constant == pytest.approx(a, rel=1e-12)


@given(weights(), weights())
def test_vector_constant_below_product_of_scalar(w1, w2):
    rec = inclusion_check_lemma22([w1, w2], (3, 3))
    assert rec["part_i"]["holder_bound_holds"]
    assert rec["verdict"] == "pass"


def test_inclusion_part_ii_runs_when_balanced(rng):
    ws = [GridFunction.from_array(np.exp(rng.normal(size=16))) for _ in range(2)]
    rec = inclusion_check_lemma22(ws, (3, 3), q=3, alpha=1 / 3)
    assert rec["part_ii"]["balanced"]
    assert len(rec["part_ii"]["dual_weights_ampi"]) == 2
    rec = inclusion_check_lemma22(ws, (3, 3), q=4, alpha=1 / 3)
    assert rec["part_ii"] == {"balanced": False}


@given(weights(), weights(), weights())
def test_power_bump_grows_with_r(u, w1, w2):
    cfg = ExponentConfig(1, 2, (3, 3), 4, 0.5)
    vals = [power_bump_constant(u, [w1, w2], cfg, r).constant for r in (1.01, 1.5, 2.0)]
    assert vals[0] <= vals[1] * (1 + 1e-12) and vals[1] <= vals[2] * (1 + 1e-12)
    plain = twc_constant(u, [w1, w2], cfg, strict=False).constant
    assert plain <= vals[0] * (1 + 1e-12)


def test_enlarging_family_never_decreases(rng):
    u, w1, w2 = (GridFunction.from_array(np.exp(rng.normal(size=16))) for _ in range(3))
    cfg = ExponentConfig(1, 2, (3, 3), 4, 0.5)
    dy = twc_constant(u, [w1, w2], cfg, CubeFamily.dyadic(4)).constant
    ga = twc_constant(u, [w1, w2], cfg, CubeFamily.grid_aligned(4)).constant
    assert dy <= ga * (1 + 1e-12)


def test_rank_products_is_sorted_and_starts_with_sup(rng):
    u, w1, w2 = (GridFunction.from_array(np.exp(rng.normal(size=16))) for _ in range(3))
    cfg = ExponentConfig(1, 2, (3, 3), 4, 0.5)
    terms, expr = condition_terms(u, [w1, w2], cfg)
    fams = [CubeFamily.grid_aligned(4)]
    ranked = rank_products(terms, expr, fams, top=10)
    vals = [v for v, _ in ranked]
    assert vals == sorted(vals, reverse=True)
    best, cubes = sup_over_products(terms, expr, fams)
    assert vals[0] == best and ranked[0][1] == cubes


def test_rd_of_point_mass_like_weight():
    vals = np.full(16, 1e-3)
    vals[5] = 1.0
    rep = rd_constant(GridFunction.from_array(vals))
    assert 1.0 < rep.constant < 1.01
    assert rep.extra["mode"] == "dyadic"
    assert rep.argmax[1].contains((5,))


def test_rd_general_mode_is_not_larger(rng):
    w = GridFunction.from_array(np.exp(rng.normal(size=32)))
    assert rd_constant(w, dyadic=False).constant <= rd_constant(w).constant * (1 + 1e-12)


def test_ainf_surrogate_detects_wild_weight():
    vals = np.ones(64)
    vals[0] = 1e12
    rep = ainf_surrogate(GridFunction.from_array(vals))
    assert rep.constant > 1e3 and not rep.extra["member"]


def test_ainf_per_slice_on_tensor(rng):
    a = GridFunction.from_array(np.exp(rng.normal(size=8)))
    b = GridFunction.constant(1, 3)
    rep = ainf_per_slice(GridFunction.tensor(a, b), 1)
    assert rep.constant == pytest.approx(ainf_surrogate(a).constant, rel=1e-12)


def test_strong_twc_of_tensor_factorises(rng):
    cfg = ExponentConfig(1, 1, (2,), 3, (0.5, 0.25), k=2)
    one = ExponentConfig(1, 1, (2,), 3, 0.5)
    two = ExponentConfig(1, 1, (2,), 3, 0.25)
    u1, u2, w1, w2 = (GridFunction.from_array(np.exp(rng.normal(size=8))) for _ in range(4))
    both = strong_twc_constant(GridFunction.tensor(u1, u2), [GridFunction.tensor(w1, w2)],
                               cfg, strict=False).constant
    # with the |Q_s|^{alpha_s/n - m} integral form the sup splits per factor
    f1 = strong_twc_constant(u1, [w1], one, strict=False).constant
    f2 = strong_twc_constant(u2, [w2], two, strict=False).constant
    assert both == pytest.approx(f1 * f2, rel=1e-12)


def test_condition_report_json():
    rep = twc_constant(ONE, [ONE, ONE], BALANCED)
    d = json.loads(rep.to_json())
    assert d["constant"] == pytest.approx(1.0)
    assert d["argmax"]["cubes"][0]["level"] == 4
    inf = ConditionReport(math.inf, (), "x")
    assert inf.to_dict()["constant"] == "inf"


def test_weight_errors():
    with pytest.raises(ParameterError):
        WeightSystem(u=GridFunction.constant(1, 2, 0.0))
    with pytest.raises(ParameterError):
        twc_constant(ONE, [ONE, ONE], ExponentConfig(1, 2, (3, 3), 1, 0.5))
    with pytest.raises(ShapeError):
        twc_constant(ONE, [ONE], BALANCED)
    with pytest.raises(ParameterError):
        power_bump_constant(ONE, [ONE, ONE], BALANCED, 1.0)
    with pytest.raises(ParameterError):
        rd_constant(GridFunction.constant(1, 0))
    with pytest.raises(ParameterError):
        strong_one_weight_constant([GridFunction.constant(2, 2)] * 2,
                                   ExponentConfig(1, 2, (3, 3), 5, (0.5, 0.5), k=2))


def test_weight_system_product_type(rng):
    a, b = (GridFunction.from_array(np.exp(rng.normal(size=4))) for _ in range(2))
    ws = WeightSystem.product_type(GridFunction.constant(2, 2), [(a, b)])
    assert ws.w[0].equals(GridFunction.tensor(a, b))
    with pytest.raises(ParameterError):
        WeightSystem(w=(GridFunction.constant(2, 2),), factors=((a, b),))
