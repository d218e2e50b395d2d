import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermospec.symbolic import (Alphabet, InputError, IrreducibilityCertificate, _shortest_bridge,
                                 check_finite_irreducibility, enumerate_words, full_shift, inverse_pair_rule,
                                 is_admissible, matrix_rule)

INV4 = {1: 2, 2: 1, 3: 4, 4: 3}


def test_empty_word_is_admissible():
    assert is_admissible((), full_shift())


def test_full_shift_admits_everything():
    assert is_admissible((3, 1, 7), full_shift())


def test_inverse_pair_forbidden():
    rule = inverse_pair_rule((1, 2, 3, 4), INV4)
    assert not is_admissible((1, 2), rule)
    assert is_admissible((1, 3, 1), rule)


def test_unknown_symbol_rejected():
    rule = inverse_pair_rule((1, 2, 3, 4), INV4)
    with pytest.raises(InputError):
        is_admissible((1, 9), rule)


def test_enumerate_full_shift_order():
    words = list(enumerate_words(full_shift(), (1, 2), 2))
    assert words == [(1, 1), (1, 2), (2, 1), (2, 2)]


@pytest.mark.parametrize("m,n", [(2, 3), (3, 3), (4, 2)])
def test_enumerate_counts(m, n):
    assert sum(1 for _ in enumerate_words(full_shift(), range(1, m + 1), n)) == m ** n


def test_inverse_pair_count():
    rule = inverse_pair_rule((1, 2, 3, 4), INV4)
    assert sum(1 for _ in enumerate_words(rule, (1, 2, 3, 4), 2)) == 12


def test_enumerate_first_last():
    words = list(enumerate_words(full_shift(), (1, 2, 3), 3, first=2, last=1))
    assert len(words) == 3 and all(w[0] == 2 and w[-1] == 1 for w in words)


def test_full_shift_bridges_empty():
    cert = check_finite_irreducibility(full_shift(), (1, 2, 3), 3)
    assert cert.bridges == ((),)


def test_two_state_chain_bridges():
    rule = matrix_rule((1, 2), [[0, 1], [1, 1]])
    cert = check_finite_irreducibility(rule, (1, 2), 3)
    assert set(cert.bridges) <= {(), (2,)}
    assert cert.table[(1, 1)] == (2,)
    assert cert.validate(rule)


def test_disconnected_fails_with_pair():
    rule = matrix_rule((1, 2), [[1, 0], [0, 1]])
    res = check_finite_irreducibility(rule, (1, 2), 4)
    assert not res
    assert res.pair == (1, 2)


def test_certificate_json_roundtrip():
    rule = inverse_pair_rule((1, 2, 3, 4), INV4)
    cert = check_finite_irreducibility(rule, (1, 2, 3, 4), 2)
    back = IrreducibilityCertificate.from_json(cert.to_json())
    assert back.bridges == cert.bridges and back.validate(rule)


def test_alphabet_infinite_membership():
    a = Alphabet(None, 1)
    assert 10 ** 6 in a and 0 not in a and "x" not in a
    with pytest.raises(TypeError):
        len(a)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.booleans(), min_size=n * n, max_size=n * n))), st.integers(1, 4))
def test_bridge_search_matches_reference(data, max_len):
    # the vectorized search must agree with the plain BFS for every pair
    n, flat = data
    T = np.array(flat, dtype=bool).reshape(n, n)
    syms = tuple(range(1, n + 1))
    rule = matrix_rule(syms, T)
    res = check_finite_irreducibility(rule, syms, max_len)
    ref = {(a, b): _shortest_bridge(rule, syms, a, b, max_len) for a, b in itertools.product(syms, syms)}
    if any(v is None for v in ref.values()):
        assert not res
        first_bad = next(k for k in itertools.product(syms, syms) if ref[k] is None)
        assert res.pair == first_bad
    else:
        assert res.table == ref
        assert res.validate(rule)
