from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mfrac.errors import ParameterError
from mfrac.exponents import ExponentConfig, conjugate


@given(st.floats(1.0001, 1e6))
def test_conjugate_is_an_involution(r):
    assert conjugate(conjugate(r)) == pytest.approx(r, rel=1e-9)


def test_conjugate_endpoints():
    assert math.isinf(conjugate(1.0))


def test_harmonic_p_and_gap():
    cfg = ExponentConfig(1, 2, (3, 6), 4, 0.5)
    assert cfg.p == pytest.approx(2.0)
    assert cfg.e == pytest.approx(0.5 + 0.25 - 0.5)
    assert not cfg.sobolev_balanced()
    assert ExponentConfig(1, 2, (3, 3), 3, 1 / 3).sobolev_balanced()


def test_per_factor_orders():
    cfg = ExponentConfig(1, 2, (3, 3), 3, (0.25, 0.5), k=2)
    assert cfg.alphas == (0.25, 0.5)
    with pytest.raises(ParameterError):
        cfg.a
    assert ExponentConfig(1, 2, (3, 3), 3, 0.5, k=2).alpha == (0.5, 0.5)


@pytest.mark.parametrize("kwargs", [
    dict(n=1, m=2, p_list=(3,), q=3),
    dict(n=1, m=1, p_list=(0.5,), q=3),
    dict(n=1, m=1, p_list=(2,), q=0),
    dict(n=1, m=1, p_list=(2,), q=2, alpha=1.0),
    dict(n=1, m=1, p_list=(2,), q=2, alpha=(0.1, 0.2)),
])
def test_invalid_configs(kwargs):
    with pytest.raises(ParameterError):
        ExponentConfig(**kwargs)


def test_violations_per_theorem():
    ok = ExponentConfig(1, 2, (3, 3), 4, 0.5)
    assert ok.violations("3.1") == []
    assert "p < q" in ExponentConfig(1, 2, (3, 3), 1.2, 0.5).violations("3.1")
    assert "k >= 2" in ok.violations("3.4")
    assert ok.violations("3.3") == ["1/q = 1/p - alpha/n"]
    with pytest.raises(ParameterError):
        ok.violations("Z")


def test_dict_roundtrip_and_replace():
    cfg = ExponentConfig(1, 2, (3, 3), 4, (0.5, 0.25), k=2)
    again = ExponentConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert cfg.replace(q=5).q == 5.0
