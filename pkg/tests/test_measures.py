import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermospec.maps import digit_value, indicator, map_from_name
from thermospec.measures import (bernoulli_cert, cert_from_json, dimension, entropy, free_energy, integrate,
                                 lyapunov, markov_cert, mix, periodic_cert, refine_chi)
from thermospec.symbolic import InputError

LIN2 = map_from_name("linear:2")
RENYI = map_from_name("renyi")
LOG2 = math.log(2)


def H(a):
    return -(a * math.log(a) + (1 - a) * math.log(1 - a))


def test_uniform_entropy():
    assert entropy(bernoulli_cert(LIN2, {0: 0.5, 1: 0.5})) == pytest.approx(LOG2, abs=1e-15)


def test_bernoulli_quarter():
    b = bernoulli_cert(LIN2, {0: 0.25, 1: 0.75})
    assert entropy(b) == pytest.approx(0.5623351446188083, abs=1e-14)
    assert lyapunov(b).contains(LOG2)
    assert dimension(b).contains(H(0.25) / LOG2)


def test_periodic_golden_exponent():
    # fixed point of branch 2: x = (sqrt5 - 1)/2, log f'(x) = 2 log(1/(1 - x))
    x = (math.sqrt(5) - 1) / 2
    chi = lyapunov(periodic_cert(RENYI, (2,)))
    assert chi.contains(2 * math.log(1 / (1 - x)))
    assert chi.mid == pytest.approx(1.9248473002384139, abs=1e-12)


def test_neutral_dirac():
    d = periodic_cert(RENYI, (1,))
    assert entropy(d) == 0.0
    assert lyapunov(d).mid == 0.0
    assert dimension(d).hi == 0.0 and dimension(d).zero_convention
    assert integrate(d, digit_value()).mid == 2.0


@pytest.mark.parametrize("p", [1, 2, 5, 9])
def test_digit_on_fixed_points(p):
    assert integrate(periodic_cert(RENYI, (p,)), digit_value()).mid == p + 1


@pytest.mark.parametrize("a", [0.1, 0.3, 0.5, 0.8])
def test_indicator_integral(a):
    b = bernoulli_cert(LIN2, {0: 1 - a, 1: a})
    assert integrate(b, indicator((1,))).mid == pytest.approx(a, abs=1e-15)


def test_mixture_with_neutral_dirac():
    mu = bernoulli_cert(RENYI, {2: 0.5, 3: 0.5})
    nu = mix([(0.3, mu), (0.7, periodic_cert(RENYI, (1,)))])
    assert nu.h == pytest.approx(0.3 * mu.h, abs=1e-15)
    assert nu.chi.mid == pytest.approx(0.3 * mu.chi.mid, rel=1e-14)
    assert dimension(nu).mid == pytest.approx(dimension(mu).mid, abs=1e-12)


def test_mixture_trivial_and_affine():
    mu = bernoulli_cert(LIN2, {0: 0.25, 1: 0.75})
    assert dimension(mix([(1.0, mu)])).mid == pytest.approx(dimension(mu).mid, abs=1e-15)
    u = bernoulli_cert(LIN2, {0: 0.5, 1: 0.5})
    m = mix([(0.5, mu), (0.5, u)])
    assert m.chi.contains(LOG2)
    assert m.h == pytest.approx(0.5 * (mu.h + u.h), abs=1e-15)


def test_free_energy():
    u = bernoulli_cert(LIN2, {0: 0.5, 1: 0.5})
    assert free_energy(u, LIN2, 0.0).mid == pytest.approx(u.h)
    assert free_energy(u, LIN2, 1.0).contains(0.0)


def test_kernel_validation():
    with pytest.raises(InputError):
        markov_cert(LIN2, (0, 1), 1, [(0,), (1,)], [0, 0, 1], [0, 1, 0], [0.5, 0.6, 1.0])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=4))
def test_json_roundtrip(ws):
    probs = {i + 1: w / sum(ws) for i, w in enumerate(ws)}
    c = bernoulli_cert(RENYI, probs)
    back = cert_from_json(c.to_json())
    assert back.h == c.h
    assert (back.chi.lo, back.chi.hi) == (c.chi.lo, c.chi.hi)
    assert np.array_equal(back.q, c.q)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=5))
def test_refined_chi_is_nested_and_tighter(ws):
    probs = {i + 1: w / sum(ws) for i, w in enumerate(ws)}
    c = bernoulli_cert(RENYI, probs)
    r = refine_chi(c, RENYI, budget=5000)
    slack = 1e-12
    assert r.chi.lo >= c.chi.lo - slack and r.chi.hi <= c.chi.hi + slack
    assert r.chi.hi - r.chi.lo <= c.chi.hi - c.chi.lo + slack
    assert r.h == c.h


def test_refined_chi_converges_to_dirac_value():
    # a near-Dirac Bernoulli measure on digit 3 has chi close to the fixed-point exponent
    c = bernoulli_cert(RENYI, {2: 1 - 1e-9, 3: 1e-9})
    r = refine_chi(c, RENYI)
    assert r.chi.hi - r.chi.lo < 1e-5
    assert abs(r.chi.mid - 1.9248473002384139) < 1e-5


def test_refinement_leaves_affine_maps_alone():
    b = bernoulli_cert(LIN2, {0: 0.25, 1: 0.75})
    r = refine_chi(b, LIN2)
    assert r.chi.contains(LOG2) and r.chi.hi - r.chi.lo < 1e-14
