"""Words over countable alphabets, transition rules and finite irreducibility."""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

Word = tuple  # tuple[int, ...]; () is the empty word


class InputError(ValueError):
    """Malformed input to a symbolic operation."""


@dataclass(frozen=True)
class Alphabet:
    """Either a finite list of symbol ids or all integers >= ``start``."""

    symbols: Optional[tuple] = None
    start: int = 1
    labels: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.symbols is not None:
            if not self.symbols:
                raise InputError("finite alphabet must be nonempty")
            if len(set(self.symbols)) != len(self.symbols):
                raise InputError("duplicate symbol ids")
            object.__setattr__(self, "_set", frozenset(self.symbols))

    @property
    def finite(self) -> bool:
        return self.symbols is not None

    def __contains__(self, a) -> bool:
        if not isinstance(a, int):
            return False
        if self.symbols is not None:
            return a in self._set
        return a >= self.start

    def __len__(self) -> int:
        if self.symbols is None:
            raise TypeError("infinite alphabet has no length")
        return len(self.symbols)

    def head(self, n: int) -> tuple:
        """First ``n`` symbols (all of them for a finite alphabet with fewer)."""
        if self.symbols is not None:
            return tuple(self.symbols[:n])
        return tuple(range(self.start, self.start + n))

    def label(self, a: int) -> str:
        return self.labels.get(a, str(a))


@dataclass(frozen=True)
class TransitionRule:
    """Predicate T_ab together with a successor enumerator.

    ``successors(a)`` yields the admissible followers of ``a`` in increasing
    order; for infinite alphabets it may be an infinite generator.
    """

    predicate: Callable[[int, int], bool]
    successors_fn: Optional[Callable[[int], Iterable[int]]] = None
    alphabet: Optional[Alphabet] = None
    name: str = "custom"

    def __call__(self, a: int, b: int) -> bool:
        return bool(self.predicate(a, b))

    def successors(self, a: int, within: Optional[Sequence[int]] = None) -> Iterator[int]:
        if within is not None:
            return (b for b in sorted(within) if self.predicate(a, b))
        if self.successors_fn is not None:
            return iter(self.successors_fn(a))
        if self.alphabet is not None and self.alphabet.finite:
            return (b for b in sorted(self.alphabet.symbols) if self.predicate(a, b))
        raise InputError("cannot enumerate successors over an infinite alphabet without a subalphabet")


def full_shift(alphabet: Optional[Alphabet] = None) -> TransitionRule:
    def succ(a):
        if alphabet is not None and alphabet.finite:
            return iter(sorted(alphabet.symbols))
        return itertools.count(alphabet.start if alphabet else 1)

    return TransitionRule(lambda a, b: True, succ, alphabet, name="full")


def matrix_rule(symbols: Sequence[int], T) -> TransitionRule:
    """Rule from a 0/1 matrix indexed in the order of ``symbols``."""
    index = {s: i for i, s in enumerate(symbols)}
    alph = Alphabet(tuple(symbols))

    def pred(a, b):
        return bool(T[index[a]][index[b]])

    return TransitionRule(pred, None, alph, name="matrix")


def inverse_pair_rule(symbols: Sequence[int], inverse: dict) -> TransitionRule:
    """Reduced-word rule: forbids a followed by inverse[a]."""
    alph = Alphabet(tuple(symbols))
    return TransitionRule(lambda a, b: inverse.get(a) != b, None, alph, name="reduced")


def _check_symbols(word: Sequence[int], alphabet: Optional[Alphabet]):
    if alphabet is None:
        return
    for s in word:
        if s not in alphabet:
            raise InputError(f"unknown symbol id {s!r}")


def is_admissible(word: Sequence[int], rule: TransitionRule, alphabet: Optional[Alphabet] = None) -> bool:
    # consecutive pairs j = 0..n-2; words of length <= 1 are admissible
    _check_symbols(word, alphabet if alphabet is not None else rule.alphabet)
    return all(rule(word[j], word[j + 1]) for j in range(len(word) - 1))


def concat(*words: Sequence[int]) -> Word:
    out: list = []
    for w in words:
        out.extend(w)
    return tuple(out)


def enumerate_words(rule: TransitionRule, subalphabet: Sequence[int], n: int,
                    first: Optional[int] = None, last: Optional[int] = None) -> Iterator[Word]:
    """Admissible length-``n`` words over ``subalphabet`` in lexicographic order."""
    syms = sorted(set(subalphabet))
    if not syms:
        raise InputError("empty subalphabet")
    if n < 1:
        raise InputError("n must be >= 1")
    starts = [first] if first is not None else syms
    if first is not None and first not in syms:
        return

    def rec(prefix):
        if len(prefix) == n:
            if last is None or prefix[-1] == last:
                yield tuple(prefix)
            return
        for b in syms:
            if rule(prefix[-1], b):
                prefix.append(b)
                yield from rec(prefix)
                prefix.pop()

    for a in starts:
        yield from rec([a])


def word_to_str(word: Sequence[int]) -> str:
    return ",".join(str(s) for s in word)


def word_from_str(s: str) -> Word:
    s = s.strip()
    if not s:
        return ()
    try:
        return tuple(int(t) for t in s.split(","))
    except ValueError as exc:
        raise InputError(f"bad word {s!r}") from exc


@dataclass(frozen=True)
class IrreducibilityCertificate:
    bridges: tuple          # tuple of words; () stands for the empty bridge
    max_len: int
    subalphabet: tuple
    table: dict = field(default_factory=dict, compare=False, hash=False)  # (a, b) -> bridge

    def validate(self, rule: TransitionRule) -> bool:
        """Brute-force recheck: every boundary pair has a working bridge in the set."""
        syms = self.subalphabet
        for a in syms:
            for b in syms:
                if not any(is_admissible((a,) + lam + (b,), rule) for lam in self.bridges):
                    return False
        return True

    def to_json(self) -> str:
        return json.dumps({"bridges": [list(b) for b in self.bridges], "max_len": self.max_len,
                           "subalphabet": list(self.subalphabet)})

    @classmethod
    def from_json(cls, text: str) -> "IrreducibilityCertificate":
        d = json.loads(text)
        return cls(tuple(tuple(b) for b in d["bridges"]), d["max_len"], tuple(d["subalphabet"]))


@dataclass(frozen=True)
class IrreducibilityFailure:
    pair: tuple
    max_len: int
    reason: str = "no bridge within budget"

    def __bool__(self):
        return False


def _shortest_bridge(rule, syms, a, b, max_len):
    """Lexicographically first among shortest lambda with a·lambda·b admissible."""
    if rule(a, b):
        return ()
    # BFS over paths starting after a; queue holds partial bridges in lex order
    queue = deque([(s,) for s in syms if rule(a, s)])
    while queue:
        lam = queue.popleft()
        if len(lam) > max_len:
            return None
        if rule(lam[-1], b):
            return lam
        if len(lam) < max_len:
            for s in syms:
                if rule(lam[-1], s):
                    queue.append(lam + (s,))
    return None


def _bridges_from(A, syms, a, max_len):
    """Shortest, then lexicographically first, bridge from index ``a`` to every index b.

    One BFS per source over the boolean adjacency matrix: expanding nodes in
    the lexicographic order of their paths discovers every node along its
    lex-first shortest path, so the first discovering row wins.
    """
    n = len(syms)
    found = {int(b): () for b in np.flatnonzero(A[a])}
    remaining = ~A[a].copy()
    level = np.flatnonzero(A[a])
    paths = [(syms[v],) for v in level]
    visited = np.zeros(n, dtype=bool)
    visited[level] = True
    depth = 1
    while level.size and depth <= max_len and remaining.any():
        hit = A[level][:, remaining]
        cols = np.flatnonzero(remaining)
        has = hit.any(axis=0)
        first = hit.argmax(axis=0)
        for b, i in zip(cols[has], first[has]):
            found[int(b)] = paths[i]
        remaining[cols[has]] = False
        if depth >= max_len or not remaining.any():
            break
        fresh = A[level] & ~visited
        has = fresh.any(axis=0)
        new = np.flatnonzero(has)
        parent = fresh[:, new].argmax(axis=0)
        order = np.lexsort((new, parent))
        new, parent = new[order], parent[order]
        visited[new] = True
        paths = [paths[i] + (syms[v],) for v, i in zip(new, parent)]
        level, depth = new, depth + 1
    return found


def check_finite_irreducibility(rule: TransitionRule, subalphabet: Sequence[int], max_bridge_len: int):
    """Greedy shortest-bridge search; returns a certificate or a failure report.

    Only boundary symbols matter: omega·lambda·eta is admissible iff the last
    symbol of omega, lambda, and the first symbol of eta chain correctly.
    """
    syms = sorted(set(subalphabet))
    if not syms:
        raise InputError("empty subalphabet")
    if max_bridge_len < 0:
        raise InputError("max_bridge_len must be >= 0")
    A = np.array([[bool(rule(a, b)) for b in syms] for a in syms], dtype=bool)
    table = {}
    for ia, a in enumerate(syms):
        found = _bridges_from(A, syms, ia, max_bridge_len)
        for ib, b in enumerate(syms):
            if ib not in found:
                return IrreducibilityFailure((a, b), max_bridge_len)
            table[(a, b)] = found[ib]
    bridges = tuple(sorted(set(table.values()), key=lambda w: (len(w), w)))
    return IrreducibilityCertificate(bridges, max_bridge_len, tuple(syms), table)
