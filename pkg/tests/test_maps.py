import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermospec.maps import (EscapeError, bcf_digits, bcf_eval, builtin_farey, builtin_gauss, builtin_linear,
                             builtin_renyi, check_m3, check_renyi_condition, decay_profile, digit_value,
                             distortion_dn, indicator, load_custom, log_derivative, map_from_name,
                             parse_observable)
from thermospec.symbolic import InputError

RENYI = builtin_renyi()
GAUSS = builtin_gauss()
FAREY = builtin_farey()
LIN2 = builtin_linear(2)
GOLDEN = (math.sqrt(5) - 1) / 2


def test_renyi_first_branch_and_neutral_point():
    assert RENYI.branch(1).domain == (F(0), F(1, 2))
    assert RENYI.neutral == {1: 0.0}
    assert RENYI.branch(1).deriv(0.0) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("fmap", [RENYI, GAUSS], ids=["renyi", "gauss"])
def test_first_level_diameters(fmap):
    for i in range(1, 101):
        c = fmap.cylinder((i,))
        assert c.exact_hi - c.exact_lo == F(1, i * (i + 1))


def test_farey_neutral_fixed_point():
    assert FAREY.neutral[1] == 0.0
    assert FAREY.branch(1).deriv(0.0) == pytest.approx(1.0)


def test_dyadic_cylinders():
    c = LIN2.cylinder((0, 1))
    assert (c.exact_lo, c.exact_hi) == (F(1, 4), F(1, 2))
    c = LIN2.cylinder((1, 0, 1))
    assert (c.exact_lo, c.exact_hi) == (F(5, 8), F(3, 4))


@pytest.mark.parametrize("n", range(1, 9))
def test_renyi_neutral_cylinders(n):
    c = RENYI.cylinder((1,) * n)
    assert (c.exact_lo, c.exact_hi) == (F(0), F(1, n + 1))


def test_codes():
    assert RENYI.code(0.0, 5)[0] == (1,) * 5
    assert RENYI.code(0.5, 3)[0] == (2, 1, 1)
    assert LIN2.code(F(5, 8), 3)[0] == (1, 0, 1)


def test_bcf_digits():
    assert bcf_digits(0.0, 6) == (2,) * 6
    assert bcf_digits(GOLDEN, 6) == (3,) * 6
    assert bcf_digits(0.5, 5) == (3, 2, 2, 2, 2)


def test_bcf_eval():
    e = bcf_eval((2,) * 5)
    assert (e.exact_lo, e.exact_hi) == (F(0), F(1, 6))
    e = bcf_eval((3,))
    assert (e.exact_lo, e.exact_hi) == (F(1, 2), F(2, 3))


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 1.0, exclude_max=True), st.integers(1, 12))
def test_bcf_roundtrip(x, n):
    e = bcf_eval(bcf_digits(x, n), n)
    assert e.lo <= x <= e.hi


def test_renyi_condition_constants():
    assert check_renyi_condition(RENYI, range(1, 10)) == pytest.approx(2.0)
    assert check_renyi_condition(LIN2, (0, 1)) == 0.0
    assert check_renyi_condition(GAUSS, range(1, 10)) == pytest.approx(2.0)


def test_m3():
    assert check_m3(RENYI, range(1, 21)).s == pytest.approx(4.0)
    assert check_m3(LIN2, (0, 1)).s == pytest.approx(4.0)
    assert not check_m3(FAREY, (1, 2)).ok


def test_decay_profiles():
    d = decay_profile(RENYI, range(1, 6), 8)
    assert list(d.exact) == [F(1, n + 1) for n in range(1, 9)]
    assert d.argmax[-1] == (1,) * 8
    d = decay_profile(LIN2, (0, 1), 6)
    assert list(d.exact) == [F(1, 2 ** n) for n in range(1, 7)]
    v = decay_profile(GAUSS, (1, 2), 8).values
    assert all(a > b for a, b in zip(v, v[1:]))


def test_distortion():
    assert distortion_dn(LIN2, log_derivative(), (0, 1), 3).value == 0.0
    r = distortion_dn(RENYI, log_derivative(), range(1, 6), 1)
    assert r.value <= 2.0 + 1e-12
    assert distortion_dn(RENYI, indicator((1,)), range(1, 6), 1).value == 0.0


def test_observables():
    assert digit_value().value((4,)) == 5
    assert parse_observable("indicator:1,2").value((2,)) == 1.0
    assert parse_observable("table:1.2=0.5;*=2").value((1, 2)) == 0.5
    with pytest.raises(InputError):
        parse_observable("nonsense:?")


def test_map_registry():
    assert map_from_name("linear:3").spec == "linear:3"
    with pytest.raises(InputError):
        map_from_name("nosuchmap")


def test_custom_map_matches_builtin():
    # two affine halves: the doubling map written out by hand
    d = {"name": "doubling", "branches": [{"symbol": 0, "mobius": [1, 0, 0, 2], "domain": [0, "1/2"]},
                                          {"symbol": 1, "mobius": [1, 1, 0, 2], "domain": ["1/2", 1]}]}
    m = load_custom(d)
    c = m.cylinder((1, 0, 1))
    assert (c.exact_lo, c.exact_hi) == (F(5, 8), F(3, 4))


def test_custom_map_missing_field():
    with pytest.raises(InputError):
        load_custom({"branches": [{"symbol": 0, "mobius": [1, 0, 0, 2]}]})


def test_custom_map_overlap_rejected():
    bad = {"name": "bad", "branches": [{"symbol": 0, "mobius": [1, 0, 0, 2], "domain": [0, "1/2"]},
                                       {"symbol": 1, "mobius": [1, 0, 0, 2], "domain": [0, "1/2"]}]}
    with pytest.raises((InputError, ValueError)):
        load_custom(bad)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 1.0, exclude_max=True), st.integers(1, 40),
       st.sampled_from(["renyi", "gauss", "linear:2", "linear:3"]))
def test_coding_containment(x, n, spec):
    fmap = map_from_name(spec)
    try:
        word, _ = fmap.code(x, n)
    except EscapeError:
        return
    c = fmap.cylinder(word)
    assert c.lo <= x <= c.hi
