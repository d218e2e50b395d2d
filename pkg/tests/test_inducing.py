import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermospec.inducing import (SchemeValidationError, build_jump_transform, estimate_distortion_constant,
                                 first_return_scheme, lift_observable, parabolic_bowen_root, project_measure,
                                 renyi_jump_scheme)
from thermospec.maps import digit_value, map_from_name
from thermospec.measures import bernoulli_cert, dimension, integrate, lyapunov, periodic_cert

RENYI = map_from_name("renyi")
LIN2 = map_from_name("linear:2")

# bounded-digit dimension for digits {2, 3}; high-depth collocation value
T3 = 0.79885836697


def _renyi_inv(i, y):
    return 1.0 - 1.0 / (y + i)


def test_jump_scheme_checks_and_expansion():
    s = renyi_jump_scheme(RENYI, range(2, 31), 30)
    assert len(s.patterns) == 31 * 29
    assert all(c.passed for c in s.transcript)
    assert s.pattern(1).word == (2,)
    # every induced branch expands: inf |f~'| > 1
    lows = [s.induced.log_deriv_bracket((k,)).lo for k in range(1, len(s.patterns) + 1)]
    assert min(lows) > 0


def test_first_return_fully_branched():
    fr = first_return_scheme(RENYI, [2], 10)
    assert fr.induced.fully_branched
    assert {p.word[0] for p in fr.patterns} == {2}


def test_trivial_scheme_is_identity():
    desc = {"base": "linear:2", "patterns": [{"prefix_symbol": 0, "repeat_range": [0, 0], "suffix_set": [0, 1]}]}
    s = build_jump_transform(LIN2, desc)
    assert s.taus == (1, 1)
    mu = bernoulli_cert(s.induced, {1: 0.25, 2: 0.75})
    pm = project_measure(s, mu)
    assert pm.h == pytest.approx(mu.h) and pm.chi.contains(math.log(2))


def test_neutral_suffix_rejected():
    with pytest.raises(SchemeValidationError):
        renyi_jump_scheme(RENYI, [1, 2], 5)


def test_distortion_constants():
    s = renyi_jump_scheme(RENYI, [2, 3], 10)
    b = estimate_distortion_constant(s)
    assert math.isfinite(b.C) and b.sampled_max <= b.C * (1 + 1e-6)
    desc = {"base": "linear:2", "patterns": [{"prefix_symbol": 0, "repeat_range": [0, 0], "suffix_set": [0, 1]}]}
    assert estimate_distortion_constant(build_jump_transform(LIN2, desc)).C == 0.0


def test_projected_period_two_orbit():
    s = renyi_jump_scheme(RENYI, [2, 3], 5)
    k = next(i for i, p in enumerate(s.patterns, start=1) if p.word == (1, 2))
    pm = project_measure(s, periodic_cert(s.induced, (k,)))
    # oracle: fixed point of g1 o g2 by iteration, exponent averaged over the orbit
    x = 0.3
    for _ in range(200):
        x = _renyi_inv(1, _renyi_inv(2, x))
    fx = x / (1 - x)                       # branch 1 forward map
    chi = -(math.log(1 - x) + math.log(1 - fx))
    assert lyapunov(pm).contains(chi)
    assert dimension(pm).mid == 0.0


def test_projection_keeps_dimension():
    s = renyi_jump_scheme(RENYI, [2, 3], 6)
    mu = bernoulli_cert(s.induced, {i: 1.0 / len(s.patterns) for i in range(1, len(s.patterns) + 1)})
    pm = project_measure(s, mu)
    assert dimension(pm).mid == pytest.approx(dimension(mu).mid, rel=1e-12)
    # Kac: the integral of the digit equals the induced sum over the return time
    d = integrate(pm, digit_value()).mid
    lifted = integrate(mu, lift_observable(s, digit_value())).mid
    assert d == pytest.approx(lifted / pm.mean_tau, rel=1e-12)


def test_bounded_digit_roots():
    assert parabolic_bowen_root(RENYI, (1,), depth=4).t.mid == 0.0
    r = [parabolic_bowen_root(RENYI, tuple(range(1, n)), depth=6).t.mid for n in (3, 4, 5)]
    assert r[0] < r[1] < r[2]
    assert abs(r[0] - T3) < 1e-8


def test_bounded_digit_depth_cauchy():
    a = parabolic_bowen_root(RENYI, (1, 2), depth=4).t.mid
    b = parabolic_bowen_root(RENYI, (1, 2), depth=5).t.mid
    assert abs(a - b) < 1e-3


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=4, max_size=4))
def test_abramov_scaling(ws):
    s = renyi_jump_scheme(RENYI, [2, 3], 1)
    probs = {i + 1: w / sum(ws) for i, w in enumerate(ws)}
    mu = bernoulli_cert(s.induced, probs)
    pm = project_measure(s, mu)
    mean_tau = sum(probs[i] * s.taus[i - 1] for i in probs)
    assert pm.mean_tau == pytest.approx(mean_tau, rel=1e-12)
    assert pm.h == pytest.approx(mu.h / mean_tau, rel=1e-12)
