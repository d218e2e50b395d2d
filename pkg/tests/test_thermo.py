import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermospec.maps import indicator, log_derivative, map_from_name, table_observable
from thermospec.thermo import (EmptySubsystemError, ParabolicError, PotentialSpec, beta_infinity, bowen_root,
                               build_subsystem, equilibrium, identity_defect, pressure)

LIN2 = map_from_name("linear:2")


def test_subsystem_sizes():
    s = build_subsystem(LIN2, (0, 1), 1)
    assert (len(s.states), s.n_edges) == (2, 4)
    assert len(build_subsystem(map_from_name("renyi"), range(1, 6), 2).states) == 25
    assert len(build_subsystem(map_from_name("gauss"), (1, 2), 3).states) == 8


def test_zero_potential_pressure():
    p = pressure(build_subsystem(LIN2, (0, 1), 1), PotentialSpec())
    assert p.lo <= math.log(2) <= p.hi


@pytest.mark.parametrize("b,beta", [(2, 0.5), (3, 1.0), (5, 0.3)])
def test_linear_geometric_pressure(b, beta):
    fmap = map_from_name(f"linear:{b}")
    p = pressure(build_subsystem(fmap, tuple(range(b)), 1), PotentialSpec(beta=beta))
    assert p.mid == pytest.approx((1 - beta) * math.log(b), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_rank_one_pressure(c1, c2):
    obs = table_observable({(0,): c1, (1,): c2})
    p = pressure(build_subsystem(LIN2, (0, 1), 1), PotentialSpec(terms=((1.0, obs),)))
    assert p.mid == pytest.approx(math.log(math.exp(c1) + math.exp(c2)), abs=1e-10)


def test_uniform_equilibrium():
    eq = equilibrium(build_subsystem(LIN2, (0, 1), 1), PotentialSpec())
    assert np.allclose(eq.p, [0.5, 0.5], atol=1e-13)


@pytest.mark.parametrize("a", [0.1, 0.37, 0.8])
def test_bernoulli_equilibrium(a):
    obs = table_observable({(0,): math.log(a), (1,): math.log(1 - a)})
    eq = equilibrium(build_subsystem(LIN2, (0, 1), 1), PotentialSpec(terms=((1.0, obs),)))
    assert np.allclose(eq.q, [a, 1 - a, a, 1 - a], atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(1, 2), st.floats(0.2, 1.5), st.floats(-1, 1), st.floats(-1, 1))
def test_variational_identity(m, depth, beta, q1, q2):
    fmap = map_from_name("renyi")
    sub = build_subsystem(fmap, tuple(range(2, m + 2)), depth)
    pot = PotentialSpec(terms=((q1, indicator((2,))), (q2, indicator((3,)))), beta=beta)
    eq = equilibrium(sub, pot)
    assert identity_defect(eq, sub, pot) <= 1e-9


def test_cantor_root():
    t = bowen_root(build_subsystem(map_from_name("linear:3"), (0, 2), 1)).t
    assert abs(t.mid - math.log(2) / math.log(3)) < 1e-10


def test_full_linear_root():
    assert bowen_root(build_subsystem(LIN2, (0, 1), 1)).t.mid == pytest.approx(1.0, abs=1e-10)


def test_gauss_bounded_type_trend():
    roots = [bowen_root(build_subsystem(map_from_name("gauss"), (1, 2), d)).t.mid for d in (4, 6, 8)]
    assert abs(roots[-1] - 0.5313) < 2e-3
    assert abs(roots[-1] - roots[-2]) < abs(roots[-2] - roots[0])


def test_neutral_subsystem_refused():
    with pytest.raises(ParabolicError):
        bowen_root(build_subsystem(map_from_name("renyi"), (1, 2), 1))


def test_empty_subsystem():
    with pytest.raises((EmptySubsystemError, ValueError)):
        build_subsystem(LIN2, (), 1)


def test_beta_infinity():
    assert beta_infinity(map_from_name("renyi")).value == pytest.approx(0.5, abs=1e-6)
    assert beta_infinity(map_from_name("gauss")).value == pytest.approx(0.5, abs=1e-6)
    assert beta_infinity(LIN2).value == -math.inf


def test_equilibrium_free_energy_at_root():
    fmap = map_from_name("renyi")
    sub = build_subsystem(fmap, (2, 3, 4), 2)
    t = bowen_root(sub).t.mid
    eq = equilibrium(sub, PotentialSpec(beta=t))
    assert abs(eq.h - t * eq.chi.mid) < 1e-8
