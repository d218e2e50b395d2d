import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermospec.fuchsian import (GeometryError, Mobius, angular_distance, arc_decay, block_decompose,
                                 build_bowen_series, build_cusp_induced_map, conjugate, cusp_frequency_spectrum,
                                 cusp_patterns, cusp_schedule, cusp_winding_spectrum, default_bowen_series,
                                 default_generators, generator_set, isometric_circle, patterns_up_to, rotation,
                                 winding_observables)
from thermospec.symbolic import InputError

BS = default_bowen_series()
GENS = default_generators()


def reduced_words(draw_syms, inverse):
    out = []
    for s in draw_syms:
        if out and inverse[out[-1]] == s:
            continue
        out.append(s)
    return tuple(out)


def test_isometric_circle_formula():
    c, r = isometric_circle(Mobius((1, 0, 2, 1), "H"))
    assert abs(c - (-0.5)) < 1e-15 and abs(r - 0.5) < 1e-15


def test_affine_has_no_isometric_circle():
    with pytest.raises(GeometryError):
        isometric_circle(Mobius((1, 2, 0, 1), "H"))


@pytest.mark.parametrize("m", [(1, 0, 2, 1), (2, 1, 3, 2), (1, 0, 4, 1), (3, 2, 4, 3)])
def test_derivative_is_one_on_isometric_circle(m):
    c, r = isometric_circle(Mobius(m, "H"))
    a, b, cc, d = m
    for t in np.linspace(0, 2 * np.pi, 32, endpoint=False):
        z = c + r * cmath.exp(1j * t)
        assert abs(1.0 / abs(cc * z + d) ** 2 - 1.0) < 1e-10


def test_default_arcs():
    table = {lab: (lo, hi) for lab, lo, hi in BS.arc_table()}
    assert table["a"][0] == pytest.approx(0.0, abs=1e-12)
    assert table["a"][1] == pytest.approx(math.pi / 2, abs=1e-12)
    assert table["A"] == pytest.approx((-math.pi / 2, 0.0), abs=1e-12)
    # b: half-width arccos(1/|C|) around pi with |C| = 5/3 in the disk model
    assert table["b"][0] == pytest.approx(math.pi - math.acos(3 / 5), abs=1e-12)
    assert len(table) == 4


def test_parabolic_pairs_touch_at_cusps():
    assert sorted(round(x, 12) for x in BS.gens.cusp_points.values()) == [0.0, round(math.pi, 12)] or \
        len(BS.gens.cusp_points) == 2


def test_contact_of_distinct_pairs_rejected():
    with pytest.raises(GeometryError):
        build_bowen_series(generator_set([(1, 2, 0, 1), (1, 0, 2, 1)], "H"))


def test_elliptic_generator_rejected():
    with pytest.raises((GeometryError, InputError)):
        generator_set([(0, -1, 1, 0), (1, 0, 4, 1)], "H")


def test_expansion_on_arcs():
    fmap = BS.fmap
    for s in GENS.symbols:
        lo, hi = fmap.branch(s).domain
        xs = np.linspace(lo, hi, 1000)
        d = np.array([fmap.branch(s).deriv(x) for x in xs])
        assert d.min() >= 1 - 1e-9
        # |f'| = 1 exactly where the isometric circle meets the boundary, i.e. the arc endpoints
        assert d[0] == pytest.approx(1.0, abs=1e-9) and d[-1] == pytest.approx(1.0, abs=1e-9)
        assert d[1:-1].min() > 1.0


def test_neutral_points_fixed():
    fmap = BS.fmap
    for s, x in fmap.neutral.items():
        br = fmap.branch(s)
        assert angular_distance(br.forward(x), x) < 1e-12
        assert br.deriv(x) == pytest.approx(1.0, abs=1e-12)


def test_blocks_example():
    b = block_decompose(GENS, (1, 1, 4))
    assert b.blocks == ((1, 2), (4, 1))
    assert b.a(1, 1) == 1 and b.a(2, 2) == 0


@pytest.mark.parametrize("n", [1, 2, 7])
def test_single_run_block(n):
    b = block_decompose(GENS, (3,) * n)
    assert len(b.blocks) == 1 and b.a(1, 2) == n - 1


def test_non_reduced_rejected():
    with pytest.raises(InputError):
        block_decompose(GENS, (1, 2))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from((1, 2, 3, 4)), min_size=1, max_size=30))
def test_block_roundtrip(raw):
    w = reduced_words(raw, GENS.inverse)
    assert block_decompose(GENS, w).concatenate() == w


def test_pattern_count():
    for n in (1, 3, 5, 8):
        assert len(cusp_patterns(GENS, n)) == patterns_up_to(GENS, n) == 8 * n


def test_winding_values_on_patterns():
    scheme = build_cusp_induced_map(BS, 6)
    obs = winding_observables(BS, scheme)
    for i, p in enumerate(scheme.patterns, start=1):
        j = GENS.cusps[p.word[0]]
        assert obs[j - 1].value((i,)) == p.tau - 1


def test_arc_decay_slope():
    assert abs(arc_decay(BS, 200)["slope"] + 2.0) < 0.1


def test_rotation_shifts_arcs():
    psi = 0.37
    R = rotation(psi)
    mats = [conjugate(Mobius(m, "H").to_disk(), R).m for m in ((1, 2, 0, 1), (1, 0, 4, 1))]
    rot = build_bowen_series(generator_set(mats, "D"), "rotated")
    for (l0, lo0, hi0), (l1, lo1, hi1) in zip(BS.arc_table(), rot.arc_table()):
        assert l0 == l1
        assert angular_distance(lo0 + psi, lo1) < 1e-9 and angular_distance(hi0 + psi, hi1) < 1e-9


def test_cusp_frequency_below_one_is_half():
    r = cusp_frequency_spectrum(BS, {(1, 1): 0.3, (1, 2): 0.4})
    assert r.exact and r.lower_bound == 0.5 and r.beta_floor_applied


def test_cusp_winding_zero_feasible():
    sched = cusp_schedule(BS, levels=(2, 4), eps=(1e-1, 1e-2))
    r = cusp_winding_spectrum(BS, (0.0, 0.0), sched, n_max=8)
    assert r.best is not None and r.best.residual < 1e-2
    assert all(a <= b for a, b in zip(r.lower_bounds, r.lower_bounds[1:]))
