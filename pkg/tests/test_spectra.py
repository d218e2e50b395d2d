import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermospec.maps import digit_value, indicator, map_from_name
from thermospec.measures import dimension, integrate
from thermospec.spectra import (FrequencyVector, Schedule, SpectrumQuery, besicovitch_eggleston,
                                birkhoff_spectrum, bounded_digit_dimension, check_feasibility,
                                flat_spectrum_witnesses, lyapunov_spectrum, sample_birkhoff)
from thermospec.symbolic import InputError

RENYI = map_from_name("renyi")
LIN2 = map_from_name("linear:2")
SMALL = Schedule(eps=(1e-1, 1e-2, 1e-3), alphabets=((1, 5), (1, 8)), depths=(1, 1))
GOLDEN_CHI = 1.9248473002384139     # exponent of the Dirac at the digit-3 fixed point


def H2(a):
    return -(a * math.log(a) + (1 - a) * math.log(1 - a)) / math.log(2)


def test_schedule_validation():
    with pytest.raises(InputError):
        Schedule(eps=(1e-2, 1e-1))
    with pytest.raises(InputError):
        Schedule(alphabets=((1, 10), (1, 5)))
    with pytest.raises(InputError):
        Schedule.from_dict({"eps": [0.1], "bogus": 1})
    s = Schedule.from_dict(SMALL.to_dict())
    assert s == SMALL


def test_frequency_vector_validation():
    with pytest.raises(InputError):
        FrequencyVector((0.7, 0.6))
    assert FrequencyVector((0.1, 0.2), 0.3).total == pytest.approx(0.6)


def test_feasibility_neutral_dirac():
    f = check_feasibility(SpectrumQuery(RENYI, [digit_value()], [2.0], SMALL))
    assert f.feasible and f.witness.cert.word == (1,)


def test_infeasible_below_two():
    f = check_feasibility(SpectrumQuery(RENYI, [digit_value()], [1.5], SMALL))
    assert not f.feasible
    r = birkhoff_spectrum(SpectrumQuery(RENYI, [digit_value()], [1.5], SMALL))
    assert r.feasibility.startswith("infeasible") and not r.beta_floor_applied


def test_feasibility_linear_indicator():
    f = check_feasibility(SpectrumQuery(LIN2, [indicator((1,))], [0.3]))
    assert f.feasible and abs(integrate(f.witness.cert, indicator((1,))).mid - 0.3) < 1e-3


@pytest.mark.parametrize("a", [0.25, 0.5])
def test_linear_indicator_spectrum(a):
    r = birkhoff_spectrum(SpectrumQuery(LIN2, [indicator((1,))], [a]))
    assert abs(r.lower_bound - H2(a)) < 1e-4
    assert r.best.cert.h == pytest.approx(H2(a) * math.log(2), abs=1e-4)


def test_renyi_bounded_indicator_floor():
    r = birkhoff_spectrum(SpectrumQuery(RENYI, [indicator((1,))], [1.0], SMALL))
    assert r.lower_bound >= 0.5
    best = r.best.dim.lo if r.best else 0.0
    assert r.lower_bound == max(best, 0.5)


def test_lower_bounds_monotone():
    r = birkhoff_spectrum(SpectrumQuery(RENYI, [digit_value()], [3.0], SMALL))
    assert all(a <= b for a, b in zip(r.lower_bounds, r.lower_bounds[1:]))
    assert r.best.residual < 1e-3


def test_linear_lyapunov():
    a, b = lyapunov_spectrum(LIN2, [math.log(2), 1.0])
    assert a.lower_bound == pytest.approx(1.0, abs=1e-9)
    assert b.feasibility.startswith("infeasible")


def test_renyi_lyapunov_zero_increases():
    r = lyapunov_spectrum(RENYI, [0.0], SMALL)[0]
    assert r.best.cert.chi.hi <= 1e-3
    assert r.lower_bounds[0] < r.lower_bounds[-1] < 1.0


def test_renyi_lyapunov_golden_dirac_improved():
    r = lyapunov_spectrum(RENYI, [GOLDEN_CHI])[0]
    dirac = [w for w in r.witnesses if w.backend == "periodic" and w.residual < 1e-9]
    assert dirac and dirac[0].dim.mid == 0.0
    assert r.lower_bound > 0.9 and r.best.residual < 1e-3


def test_be_closed_forms():
    assert besicovitch_eggleston(LIN2, FrequencyVector((0.5, 0.5))).lower_bound == pytest.approx(1.0, abs=1e-9)
    r = besicovitch_eggleston(LIN2, FrequencyVector((0.25, 0.75)))
    assert abs(r.lower_bound - H2(0.25)) < 1e-4


@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(0.0, 0.3), min_size=1, max_size=3), st.floats(0.0, 0.05))
def test_renyi_tail_case_exact_half(head, tail):
    fv = FrequencyVector(tuple(head), tail)
    r = besicovitch_eggleston(RENYI, fv)
    assert r.exact and r.lower_bound == 0.5


def test_bounded_digits():
    assert bounded_digit_dimension(RENYI, 2).t.mid == 0.0
    t = [bounded_digit_dimension(RENYI, n, depth=5).t.mid for n in (3, 4, 5, 6)]
    assert 0 < t[0] < 1 and all(a < b for a, b in zip(t, t[1:]))


@pytest.mark.parametrize("alpha", [2.5, 5.0])
def test_flat_witnesses(alpha):
    fr = flat_spectrum_witnesses(RENYI, alpha, j_max=3)
    for w in fr.witnesses:
        assert abs(w.integral.mid - (alpha + 1.0 / w.j)) <= 1e-8
        assert abs(w.dim_nu.mid - w.dim_mu.mid) <= 1e-9


def test_sample_linear_fair_bits():
    tab = sample_birkhoff(LIN2, [indicator((1,))], 10_000, 20, rng_seed=0)
    sigma = 0.5 / math.sqrt(10_000)
    assert np.all(np.abs(tab.final[0] - 0.5) < 4 * sigma)


def test_sample_reproducible():
    a = sample_birkhoff(RENYI, [digit_value()], 2000, 4, rng_seed=3)
    b = sample_birkhoff(RENYI, [digit_value()], 2000, 4, rng_seed=3)
    assert np.array_equal(a.median, b.median)


def test_lyapunov_zero_mixture_keeps_dimension():
    r = lyapunov_spectrum(RENYI, [0.0], SMALL)[0]
    xi = {row["witness_id"]: row["xi_dim"] for row in r.table}
    for w in r.witnesses:
        assert w.cert.chi.hi <= 1e-3
        assert abs(w.dim.mid - xi[w.id]) <= 1e-8
