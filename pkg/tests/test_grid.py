from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mfrac.errors import AlignmentError, EmptyFamilyError, ParameterError, ShapeError
from mfrac.errors import UnsupportedFamilyError
from mfrac.grid import (
    CubeFamily,
    DyadicCube,
    GridCube,
    GridFunction,
    average,
    default_shifts,
    enumerate_cubes,
    integrate,
    lp_norm,
    translate,
    weak_lq_norm,
)

levels = st.integers(min_value=0, max_value=5)


@st.composite
def grid_functions(draw, dimension=1, max_level=5):
    level = draw(st.integers(0, max_level))
    size = (1 << level) ** dimension
    vals = draw(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=size, max_size=size))
    return GridFunction(dimension, level, np.array(vals))


# ---------------------------------------------------------------- cubes


def test_dyadic_cube_children_partition_parent():
    Q = DyadicCube(2, (1, 3))
    kids = Q.children()
    assert len(kids) == 4
    assert all(k.parent() == Q for k in kids)
    assert sum(k.volume for k in kids) == pytest.approx(Q.volume, abs=0)


def test_dyadic_cube_rejects_bad_index():
    with pytest.raises(ParameterError):
        DyadicCube(2, (4,))
    with pytest.raises(ParameterError):
        DyadicCube(0, (0,)).parent()


def test_shifted_cube_needs_aligned_grid():
    Q = DyadicCube(1, (0,), (Fraction(1, 3),))
    with pytest.raises(AlignmentError):
        Q.to_grid(4)
    assert DyadicCube(1, (1,), (Fraction(1, 4),)).to_grid(3) == GridCube(3, (6,), 4)


def test_grid_cube_wraps_and_normalises_full_cube():
    Q = GridCube(3, (7,), 2)
    assert Q.contains((0,)) and Q.contains((7,)) and not Q.contains((1,))
    assert GridCube(2, (3, 1), 4).start == (0, 0)
    with pytest.raises(ParameterError):
        GridCube(2, (0,), 5)


# ---------------------------------------------------------------- grid functions


def test_constructor_validates():
    with pytest.raises(ShapeError):
        GridFunction(1, 2, np.ones(5))
    with pytest.raises(ParameterError):
        GridFunction(1, 2, [1.0, np.nan, 0.0, 1.0])
    with pytest.raises(ParameterError):
        GridFunction(1, 1, [1.0, -1.0], nonneg=True)
    with pytest.raises(ShapeError):
        GridFunction.from_array(np.ones(6))


def test_values_are_read_only():
    f = GridFunction.constant(1, 3, 2.0)
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_indicator_and_tensor():
    f = GridFunction.indicator(1, 3, 0.25, 0.5)
    assert f.flat.tolist() == [0, 0, 1, 1, 0, 0, 0, 0]
    g = GridFunction.tensor(f, GridFunction.constant(1, 3, 2.0))
    assert g.dimension == 2 and g.values.sum() == 32.0
    with pytest.raises(AlignmentError):
        GridFunction.indicator(1, 2, 0.1, 0.5)


@given(grid_functions(dimension=1), st.integers(0, 3))
def test_refine_preserves_integrals(f, extra):
    g = f.refine(f.level + extra)
    Q = DyadicCube(0, (0,))
    assert integrate(g, Q) == pytest.approx(integrate(f, Q), rel=1e-12, abs=1e-9)


@given(grid_functions(dimension=2, max_level=3))
def test_child_sums_equal_parent(f):
    for Q in CubeFamily.dyadic(f.level, 2).enumerate():
        if Q.side == 1:
            continue
        parent = integrate(f, Q)
        half = Q.side // 2
        kids = [GridCube(f.level, (Q.start[0] + a, Q.start[1] + b), half)
                for a in (0, half) for b in (0, half)]
        assert sum(integrate(f, k) for k in kids) == pytest.approx(parent, rel=1e-12, abs=1e-9)


def test_average_of_constant():
    f = GridFunction.constant(2, 3, 5.0)
    assert average(f, GridCube(3, (2, 6), 3)) == pytest.approx(5.0, rel=1e-15)


@given(grid_functions(dimension=1), st.floats(0.5, 4.0))
def test_lp_norm_matches_cell_sum(f, r):
    expect = (np.sum(np.abs(f.flat) ** r) / f.size) ** (1 / r)
    assert lp_norm(f, r) == pytest.approx(expect, rel=1e-12, abs=1e-300)


def test_lp_norm_with_weight_and_errors():
    f = GridFunction.from_array([1.0, 2.0])
    rho = GridFunction.from_array([4.0, 1.0])
    assert lp_norm(f, 2, rho) == pytest.approx(np.sqrt((4 + 4) / 2))
    with pytest.raises(ParameterError):
        lp_norm(f, 0)
    with pytest.raises(ShapeError):
        lp_norm(f, 2, GridFunction.constant(1, 2))


def test_weak_norm_of_indicator_and_bound():
    f = GridFunction.indicator(1, 4, 0.0, 0.25)
    assert weak_lq_norm(f, 2) == pytest.approx(0.5)
    g = GridFunction.from_array(np.arange(1.0, 9.0))
    assert weak_lq_norm(g, 2) <= lp_norm(g, 2) + 1e-12
    assert weak_lq_norm(GridFunction.constant(1, 2, 0.0), 2) == 0.0


@given(grid_functions(dimension=1, max_level=4), st.integers(0, 15))
def test_translate_roundtrip(f, k):
    t = Fraction(k % f.size, f.size)
    back = translate(translate(f, t), -t)
    assert back.equals(f)


def test_translate_rejects_off_grid():
    with pytest.raises(AlignmentError):
        translate(GridFunction.constant(1, 2), 0.1)


@pytest.mark.parametrize("suffix", [".json", ".csv"])
def test_save_load_roundtrip(tmp_path, suffix):
    f = GridFunction.from_array(np.random.default_rng(1).random((4, 4)))
    path = tmp_path / f"f{suffix}"
    f.save(path)
    assert GridFunction.load(path).equals(f)


def test_from_dict_rejects_unknown_keys():
    d = GridFunction.constant(1, 1).to_dict()
    d["extra"] = 1
    with pytest.raises(ParameterError):
        GridFunction.from_dict(d)


# ---------------------------------------------------------------- families


def test_family_sizes():
    L = 4
    assert len(CubeFamily.dyadic(L, 1)) == 2 ** (L + 1) - 1
    assert len(CubeFamily.grid_aligned(L)) == 16 * 17 // 2
    assert len(CubeFamily.dyadic(2, 2)) == 1 + 4 + 16


def test_enumeration_each_cube_once_and_stable():
    fam = CubeFamily.shifted_dyadic(4, 2)
    first = enumerate_cubes(fam)
    assert first == enumerate_cubes(fam)
    assert len(set(first)) == len(first) == len(fam)


def test_default_shifts_round_to_grid():
    assert default_shifts(3) == (Fraction(0), Fraction(3, 8), Fraction(5, 8))


def test_family_errors():
    with pytest.raises(UnsupportedFamilyError):
        CubeFamily("grid_aligned", 3, 2)
    with pytest.raises(ParameterError):
        CubeFamily("hexagonal", 3)
    with pytest.raises(EmptyFamilyError):
        CubeFamily.dyadic(3).truncated(0)


def test_truncation_keeps_small_cubes():
    fam = CubeFamily.dyadic(4).truncated(4)
    assert max(Q.side for Q in fam.enumerate()) == 4


def test_family_dict_roundtrip():
    fam = CubeFamily.shifted_dyadic(3, 2).truncated(2)
    again = CubeFamily.from_dict(fam.to_dict())
    assert enumerate_cubes(again) == enumerate_cubes(fam)
