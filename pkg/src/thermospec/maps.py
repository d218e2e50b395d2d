"""Concrete Markov interval maps, cylinder geometry, coding and condition checks.

Every built-in branch is a real Möbius map, so a branch is stored through its
inverse matrix ``G = (a, b, c, d)`` acting as ``y -> (a y + b)/(c y + d)``.
Cylinders are images of partition elements under products of inverse
matrices; with integer entries the products are exact and only the final
division is rounded (outward).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .interval import Bracket, down, up
from .symbolic import (Alphabet, InputError, TransitionRule, Word, full_shift,
                       is_admissible, matrix_rule)


class EscapeError(ValueError):
    """Orbit left the domain of the map."""

    def __init__(self, msg, escape_time):
        super().__init__(msg)
        self.escape_time = escape_time


# ---------------------------------------------------------------------------
# Möbius helpers

def mat_mul(m, n):
    a, b, c, d = m
    e, f, g, h = n
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


IDENTITY = (1, 0, 0, 1)


def mat_pow(m, k):
    out = IDENTITY
    base = m
    while k:
        if k & 1:
            out = mat_mul(out, base)
        base = mat_mul(base, base)
        k >>= 1
    return out


def mob(m, y):
    a, b, c, d = m
    return (a * y + b) / (c * y + d)


def mob_exact(m, y: Fraction) -> Fraction:
    a, b, c, d = m
    return Fraction(a * y.numerator + b * y.denominator, c * y.numerator + d * y.denominator)


def det(m):
    a, b, c, d = m
    return a * d - b * c


def _is_int_matrix(m) -> bool:
    return all(isinstance(v, int) for v in m)


def forward_log_deriv(G, x):
    """log|f'(x)| for the branch whose inverse is G: f' = det G / (a - c x)^2."""
    a, b, c, d = G
    return math.log(abs(det(G))) - 2.0 * math.log(abs(a - c * x))


# ---------------------------------------------------------------------------
# Branches

@dataclass(frozen=True)
class MobiusBranch:
    symbol: int
    inv: tuple                    # inverse branch matrix (a, b, c, d)
    domain: tuple                 # (lo, hi); Fractions when exact
    image: tuple                  # f(domain), the set the inverse acts on
    closed: tuple = (True, False)

    @property
    def exact(self) -> bool:
        return _is_int_matrix(self.inv)

    def inverse(self, y):
        if isinstance(y, Fraction) and self.exact:
            return mob_exact(self.inv, y)
        return mob(self.inv, y)

    def forward(self, x):
        a, b, c, d = self.inv
        fwd = (d, -b, -c, a)
        if isinstance(x, Fraction) and self.exact:
            return mob_exact(fwd, x)
        return mob(fwd, x)

    def deriv(self, x) -> float:
        a, b, c, d = self.inv
        return abs(det(self.inv)) / float(a - c * x) ** 2

    def log_deriv_range(self, lo, hi) -> tuple:
        # |a - c x| is monotone on the domain, so extremes sit at endpoints
        u, v = forward_log_deriv(self.inv, float(lo)), forward_log_deriv(self.inv, float(hi))
        return min(u, v), max(u, v)

    def renyi_ratio_sup(self) -> float:
        """sup over the domain of |f''|/|f'|^2 = 2|c||a - c x|/|det|."""
        a, b, c, d = self.inv
        dt = abs(det(self.inv))
        return max(2 * abs(c) * abs(a - c * float(x)) / dt for x in self.domain)

    def to_json(self) -> dict:
        return {"symbol": self.symbol, "mobius": list(self.inv),
                "domain": [str(self.domain[0]), str(self.domain[1])]}


@dataclass(frozen=True)
class PolyBranch:
    """Branch given by a monotone polynomial inverse y -> p(y) on ``image``."""

    symbol: int
    coeffs: tuple                 # increasing powers
    domain: tuple
    image: tuple
    closed: tuple = (True, False)
    exact: bool = False
    grid: int = 257

    def _p(self):
        return np.polynomial.Polynomial(self.coeffs)

    def inverse(self, y):
        return float(self._p()(float(y)))

    def forward(self, x):
        p = self._p()
        y0, y1 = map(float, self.image)
        x = float(x)
        return brentq(lambda y: p(y) - x, y0, y1, xtol=1e-15)

    def deriv(self, x) -> float:
        return 1.0 / abs(float(self._p().deriv()(self.forward(x))))

    def log_deriv_range(self, lo, hi):
        y0, y1 = sorted((self.forward(lo), self.forward(hi)))
        ys = np.linspace(y0, y1, self.grid)
        vals = -np.log(np.abs(self._p().deriv()(ys)))
        slack = 1e-9 * (1 + np.max(np.abs(vals)))
        return float(vals.min() - slack), float(vals.max() + slack)

    def renyi_ratio_sup(self) -> float:
        p = self._p()
        ys = np.linspace(float(self.image[0]), float(self.image[1]), self.grid)
        return float(np.max(np.abs(p.deriv(2)(ys)) / np.abs(p.deriv()(ys))))

    def to_json(self) -> dict:
        return {"symbol": self.symbol, "poly": list(self.coeffs),
                "domain": [float(self.domain[0]), float(self.domain[1])],
                "image": [float(self.image[0]), float(self.image[1])]}


# ---------------------------------------------------------------------------
# Enclosures and observables

@dataclass(frozen=True)
class CylinderEnclosure:
    word: Word
    lo: float
    hi: float
    exact_lo: Optional[Fraction] = None
    exact_hi: Optional[Fraction] = None

    @property
    def diameter(self) -> float:
        if self.exact_lo is not None:
            return float(self.exact_hi - self.exact_lo)
        return self.hi - self.lo

    @property
    def exact_diameter(self) -> Optional[Fraction]:
        if self.exact_lo is None:
            return None
        return self.exact_hi - self.exact_lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x) -> bool:
        if self.exact_lo is not None and isinstance(x, (Fraction, int)):
            return self.exact_lo <= x <= self.exact_hi
        if self.exact_lo is not None and isinstance(x, float):
            return self.exact_lo <= Fraction(x) <= self.exact_hi
        return self.lo <= x <= self.hi

    def __contains__(self, x) -> bool:
        return self.contains(x)


@dataclass(frozen=True)
class Observable:
    """Depth-r locally constant function or the log-derivative log|f'|.

    A locally constant observable reads the first ``depth`` symbols of a
    word: from ``table`` when present, otherwise from ``tail`` (callable on
    the word prefix, or a constant).
    """

    name: str
    kind: str = "local"           # "local" | "logderiv"
    depth: int = 1
    table: dict = field(default_factory=dict, hash=False, compare=False)
    tail: object = None
    bounded: bool = True
    spec: str = ""                # parseable description, for serialization

    def value(self, word: Sequence[int]) -> float:
        if self.kind != "local":
            raise TypeError("log-derivative has no symbolic value; use the map")
        if len(word) < self.depth:
            raise InputError(f"observable {self.name} needs {self.depth} symbols")
        key = tuple(word[: self.depth])
        if key in self.table:
            return float(self.table[key])
        if self.tail is None:
            raise InputError(f"observable {self.name} undefined on {key} and has no tail rule")
        if callable(self.tail):
            return float(self.tail(key))
        return float(self.tail)


def indicator(symbols, name: Optional[str] = None) -> Observable:
    syms = (symbols,) if isinstance(symbols, int) else tuple(symbols)
    label = name or "ind_" + "_".join(map(str, syms))
    return Observable(label, "local", 1, {(s,): 1.0 for s in syms}, 0.0, True,
                      spec="indicator:" + ",".join(map(str, syms)))


def symbol_value(offset: int = 0, name: Optional[str] = None) -> Observable:
    """Unbounded observable word -> first symbol + offset (BCF digit b1 uses offset 1)."""
    return Observable(name or f"symbol+{offset}", "local", 1, {}, lambda w: w[0] + offset, False,
                      spec=f"symbol:{offset}")


def digit_value() -> Observable:
    """First BCF digit b1 on the Rényi map: symbol i carries digit i + 1."""
    return Observable("b1", "local", 1, {}, lambda w: w[0] + 1, False, spec="digit")


def table_observable(values: dict, default: float = 0.0, name: str = "table") -> Observable:
    tab = {}
    for k, v in values.items():
        tab[(k,) if isinstance(k, int) else tuple(k)] = float(v)
    depth = max(len(k) for k in tab) if tab else 1
    spec = "table:" + ";".join(f"{'.'.join(map(str, k))}={v!r}" for k, v in sorted(tab.items())) + f";*={default!r}"
    return Observable(name, "local", depth, tab, float(default), True, spec=spec)


def log_derivative() -> Observable:
    return Observable("logderiv", "logderiv", 1, {}, None, False, spec="logderiv")


def parse_observable(text: str) -> Observable:
    """Inverse of ``Observable.spec``: indicator:1,2 | digit | symbol:k | logderiv | table:..."""
    text = text.strip()
    if text == "logderiv":
        return log_derivative()
    if text == "digit":
        return digit_value()
    kind, _, rest = text.partition(":")
    if kind == "indicator":
        return indicator(tuple(int(t) for t in rest.split(",")))
    if kind == "symbol":
        return symbol_value(int(rest or 0))
    if kind == "table":
        vals, default = {}, 0.0
        for item in rest.split(";"):
            k, _, v = item.partition("=")
            if k == "*":
                default = float(v)
            else:
                vals[tuple(int(t) for t in k.split("."))] = float(v)
        return table_observable(vals, default)
    raise InputError(f"unknown observable spec {text!r}")


# ---------------------------------------------------------------------------
# Markov maps

class MarkovMap:
    """Markov map of [0, 1] with branches given through their inverses.

    ``branch_fn`` is called lazily so integer-indexed infinite alphabets are
    never materialized; ``locate`` maps a point to the symbol of the partition
    element containing it.
    """

    ambient = "interval"

    def __init__(self, name: str, alphabet: Alphabet, rule: TransitionRule,
                 branch_fn: Callable[[int], object], neutral: Optional[dict] = None,
                 locate: Optional[Callable] = None, fully_branched: bool = False,
                 closed_form: bool = False, tail_exponent: Optional[float] = None,
                 renyi_override: Optional[float] = None, spec: Optional[str] = None,
                 strict_m1: bool = False):
        self.name = name
        self.alphabet = alphabet
        self.rule = rule
        self._branch_fn = lru_cache(maxsize=None)(branch_fn)
        self.neutral = dict(neutral or {})
        self._locate = locate
        self.fully_branched = fully_branched
        self.closed_form = closed_form
        self.tail_exponent = tail_exponent
        self.renyi_override = renyi_override
        self.spec = spec or name
        self.warnings: list[str] = []
        self._validate(strict_m1)

    def __repr__(self):
        return f"MarkovMap({self.spec!r})"

    # -- structure ---------------------------------------------------------
    def branch(self, a: int):
        if a not in self.alphabet:
            raise InputError(f"unknown symbol id {a!r} for map {self.name}")
        return self._branch_fn(a)

    def _validate(self, strict_m1):
        syms = self.alphabet.head(16)
        doms = sorted((float(self.branch(a).domain[0]), float(self.branch(a).domain[1]), a) for a in syms)
        for (l0, h0, a0), (l1, h1, a1) in zip(doms, doms[1:]):
            if l1 < h0 - 1e-12:
                raise InputError(f"branch domains {a0} and {a1} overlap (M0)")
        for a, x in self.neutral.items():
            br = self.branch(a)
            lo, hi = (float(v) for v in br.domain)
            if not (lo - 1e-12 <= x <= hi + 1e-12):
                raise InputError(f"neutral point {x} not in domain of {a}")
            if abs(br.deriv(x) - 1.0) > 1e-9:
                raise InputError(f"|f'| != 1 at declared neutral point of {a}")
        for a in syms:
            br = self.branch(a)
            if isinstance(br, MobiusBranch):
                aa, bb, cc, dd = br.inv
                for x in br.domain:
                    if abs(float(aa - cc * x)) < 1e-300:
                        msg = f"branch {a} has unbounded derivative at {x} (M1)"
                        if strict_m1:
                            raise InputError(msg)
                        self.warnings.append(msg)

    def is_admissible(self, word) -> bool:
        return is_admissible(word, self.rule, self.alphabet)

    def locate(self, x) -> int:
        if self._locate is not None:
            return self._locate(x)
        if not self.alphabet.finite:
            raise InputError("no locator for infinite alphabet")
        for a in self.alphabet.symbols:
            lo, hi = self.branch(a).domain
            if lo <= x <= hi:
                return a
        raise EscapeError(f"{x} outside every partition element", 0)

    @property
    def exact(self) -> bool:
        return self.closed_form

    # -- cylinders ---------------------------------------------------------
    def cylinder(self, word: Sequence[int]) -> CylinderEnclosure:
        word = tuple(word)
        if not word:
            raise InputError("empty word has no cylinder")
        if not self.is_admissible(word):
            raise InputError(f"inadmissible word {word}")
        last = self.branch(word[-1])
        if self.exact:
            M = IDENTITY
            for s in word[:-1]:
                M = mat_mul(M, self.branch(s).inv)
            y0, y1 = (Fraction(v) for v in last.domain)
            p, q = mob_exact(M, y0), mob_exact(M, y1)
            lo, hi = min(p, q), max(p, q)
            return CylinderEnclosure(word, _fdown(lo), _fup(hi), lo, hi)
        lo, hi = float(last.domain[0]), float(last.domain[1])
        for s in reversed(word[:-1]):
            br = self.branch(s)
            p, q = br.inverse(lo), br.inverse(hi)
            lo, hi = down(min(p, q)), up(max(p, q))
        return CylinderEnclosure(word, lo, hi)

    def iter_cylinders(self, subalphabet: Sequence[int], n: int) -> Iterator[tuple]:
        """Yield ``(word, lo, hi)`` for all admissible length-n words, lexicographic.

        Depth-first with running inverse-matrix products, so each leaf costs one
        Möbius evaluation.
        """
        syms = sorted(set(subalphabet))
        for s in syms:
            self.branch(s)
        if n < 1:
            raise InputError("n must be >= 1")
        rule = self.rule
        exact = self.exact
        dom = {s: (Fraction(self.branch(s).domain[0]), Fraction(self.branch(s).domain[1])) if exact
               else (float(self.branch(s).domain[0]), float(self.branch(s).domain[1])) for s in syms}
        inv = {s: self.branch(s).inv for s in syms} if all(isinstance(self.branch(s), MobiusBranch) for s in syms) else None
        if inv is None:
            for w in _words(rule, syms, n):
                c = self.cylinder(w)
                yield w, c.lo, c.hi
            return

        def leaf(M, b):
            y0, y1 = dom[b]
            if exact:
                a_, b_, c_, d_ = M
                n0, d0 = a_ * y0.numerator + b_ * y0.denominator, c_ * y0.numerator + d_ * y0.denominator
                n1, d1 = a_ * y1.numerator + b_ * y1.denominator, c_ * y1.numerator + d_ * y1.denominator
                p, q = n0 / d0, n1 / d1          # int/int true division is correctly rounded
                lo, hi = (p, q) if p <= q else (q, p)
                return down(lo), up(hi)
            p, q = mob(M, y0), mob(M, y1)
            lo, hi = (p, q) if p <= q else (q, p)
            slack = 4e-16 * len(word_stack)
            return lo - slack * (1 + abs(lo)), hi + slack * (1 + abs(hi))

        word_stack: list = []

        def rec(M):
            if len(word_stack) == n - 1:
                last = word_stack[-1] if word_stack else None
                for b in syms:
                    if last is None or rule(last, b):
                        lo, hi = leaf(M, b)
                        yield tuple(word_stack) + (b,), lo, hi
                return
            last = word_stack[-1] if word_stack else None
            for s in syms:
                if last is None or rule(last, s):
                    word_stack.append(s)
                    yield from rec(mat_mul(M, inv[s]))
                    word_stack.pop()

        yield from rec(IDENTITY)

    def log_deriv_bracket(self, word: Sequence[int], lo: Optional[float] = None,
                          hi: Optional[float] = None) -> Bracket:
        """Bracket of log|f'| over the cylinder of ``word`` (branch of word[0])."""
        if lo is None:
            c = self.cylinder(word)
            lo, hi = c.lo, c.hi
        br = self.branch(word[0])
        dlo, dhi = (float(v) for v in br.domain)
        lo, hi = max(lo, dlo), min(hi, dhi)
        a, b = br.log_deriv_range(lo, hi)
        m = math.log(br.deriv(0.5 * (lo + hi)))
        return Bracket(a - 2e-16 * (1 + abs(a)), min(max(m, a), b), b + 2e-16 * (1 + abs(b)))

    def log_deriv_arrays(self, firsts, lo, hi):
        """Vectorized log|f'| brackets for edges with leading symbols ``firsts``
        over cylinders [lo, hi]; returns (inf, mid, sup) arrays."""
        firsts = np.asarray(firsts)
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        out_lo, out_mid, out_hi = np.empty(len(lo)), np.empty(len(lo)), np.empty(len(lo))
        for s in np.unique(firsts).tolist():
            sel = firsts == s
            br = self.branch(int(s))
            dlo, dhi = float(br.domain[0]), float(br.domain[1])
            a_, b_ = np.maximum(lo[sel], dlo), np.minimum(hi[sel], dhi)
            if isinstance(br, MobiusBranch):
                A, B, C, D = (float(v) for v in br.inv)
                ld = math.log(abs(A * D - B * C))
                u = ld - 2.0 * np.log(np.abs(A - C * a_))
                v = ld - 2.0 * np.log(np.abs(A - C * b_))
                m = ld - 2.0 * np.log(np.abs(A - C * 0.5 * (a_ + b_)))
                lo_s, hi_s = np.minimum(u, v), np.maximum(u, v)
            else:
                pairs = [br.log_deriv_range(x, y) for x, y in zip(a_, b_)]
                lo_s = np.array([t[0] for t in pairs])
                hi_s = np.array([t[1] for t in pairs])
                m = np.log([br.deriv(0.5 * (x + y)) for x, y in zip(a_, b_)])
            out_lo[sel] = lo_s - 2e-16 * (1 + np.abs(lo_s))
            out_hi[sel] = hi_s + 2e-16 * (1 + np.abs(hi_s))
            out_mid[sel] = np.clip(m, lo_s, hi_s)
        return out_lo, out_mid, out_hi

    # -- composition helpers (used by inducing) ----------------------------
    def word_matrix(self, word: Sequence[int]):
        return self.composed_inverse(word)

    def apply_matrix(self, M, lo, hi) -> tuple:
        """Image of [lo, hi] under the inverse-branch product M."""
        if _is_int_matrix(M) and isinstance(lo, Fraction) and isinstance(hi, Fraction):
            p, q = mob_exact(M, lo), mob_exact(M, hi)
        else:
            p, q = mob(M, float(lo)), mob(M, float(hi))
        return (p, q) if p <= q else (q, p)

    def exact_interval(self, word: Sequence[int]) -> tuple:
        c = self.cylinder(word)
        return (c.exact_lo, c.exact_hi) if c.exact_lo is not None else (c.lo, c.hi)

    def hull(self, symbols) -> tuple:
        doms = [self.branch(a).domain for a in symbols]
        return min(d[0] for d in doms), max(d[1] for d in doms)

    def make_branch(self, symbol, inv, domain, image):
        return MobiusBranch(symbol, inv, domain, image)

    def derived(self, name, alphabet, rule, branch_fn, **kw) -> "MarkovMap":
        return MarkovMap(name, alphabet, rule, branch_fn, closed_form=self.closed_form, **kw)

    def same_point(self, x, y, tol: float = 1e-12) -> bool:
        return abs(float(x) - float(y)) < tol

    def contains_point(self, interval, x, strict=False) -> bool:
        lo, hi = (float(v) for v in interval)
        return lo < x < hi if strict else lo <= x <= hi

    # -- orbits ------------------------------------------------------------
    def code(self, x, n: int) -> tuple:
        """Length-n coding of x and the trail of iterates.

        Exact rational iteration for integer Möbius maps (floats are converted
        to the rational they represent), plain floats otherwise.
        """
        if self.exact and not isinstance(x, Fraction):
            x = Fraction(x)
        word, trail = [], []
        for j in range(n):
            try:
                a = self.locate(x)
            except EscapeError as exc:
                raise EscapeError(str(exc), j) from None
            trail.append(x)
            word.append(a)
            if j < n - 1:
                x = self.branch(a).forward(x)
        return tuple(word), trail

    def composed_inverse(self, word: Sequence[int]):
        M = IDENTITY
        for s in word:
            M = mat_mul(M, self.branch(s).inv)
        return M

    def periodic_point(self, word: Sequence[int]) -> float:
        """Fixed point of f^|w| inside the closed cylinder of w w."""
        word = tuple(word)
        if not self.is_admissible(word + word[:1]):
            raise InputError(f"{word} does not close up into a periodic orbit")
        M = tuple(float(v) for v in self.composed_inverse(word))
        a, b, c, d = M
        cyl = self.cylinder(word)
        if abs(c) < 1e-300:
            cands = [b / (1.0 - a / d) / d] if abs(d - a) > 0 else [cyl.midpoint]
        else:
            disc = max((d - a) ** 2 + 4 * b * c, 0.0)
            r = math.sqrt(disc)
            cands = [(a - d + r) / (2 * c), (a - d - r) / (2 * c)]
        best = min(cands, key=lambda z: max(cyl.lo - z, z - cyl.hi, 0.0))
        x = best
        for _ in range(8):
            nx = mob(M, x)
            if not math.isfinite(nx):
                break
            x = nx
        return x

    def cycle_log_deriv(self, word: Sequence[int], x: Optional[float] = None) -> float:
        """log|(f^n)'| at the periodic point of ``word``: -log|M'(x)|."""
        M = tuple(float(v) for v in self.composed_inverse(word))
        if x is None:
            x = self.periodic_point(word)
        a, b, c, d = M
        return 2.0 * math.log(abs(c * x + d)) - math.log(abs(a * d - b * c))

    def orbit(self, word: Sequence[int]) -> list:
        x = self.periodic_point(word)
        pts = []
        for s in word:
            pts.append(x)
            x = self.branch(s).forward(x)
        return pts

    def to_json(self) -> dict:
        return {"name": self.name, "spec": self.spec}


def _words(rule, syms, n):
    from .symbolic import enumerate_words
    return enumerate_words(rule, syms, n)


def _fdown(q: Fraction) -> float:
    x = q.numerator / q.denominator
    return down(x) if Fraction(x) > q else x


def _fup(q: Fraction) -> float:
    x = q.numerator / q.denominator
    return up(x) if Fraction(x) < q else x


# ---------------------------------------------------------------------------
# Built-ins

def _infinite(start=1):
    return Alphabet(None, start)


def builtin_renyi() -> MarkovMap:
    def br(i):
        return MobiusBranch(i, (1, i - 1, 1, i), (Fraction(i - 1, i), Fraction(i, i + 1)),
                            (Fraction(0), Fraction(1)))

    def locate(x):
        if not 0 <= x < 1:
            raise EscapeError(f"{x} outside [0,1)", 0)
        return int(math.floor(1 / (1 - x))) if isinstance(x, Fraction) else int(1.0 / (1.0 - x))

    alph = _infinite(1)
    return MarkovMap("renyi", alph, full_shift(alph), br, {1: 0.0}, locate, fully_branched=True,
                     closed_form=True, tail_exponent=2.0, renyi_override=2.0, spec="renyi")


def builtin_gauss() -> MarkovMap:
    def br(i):
        return MobiusBranch(i, (0, 1, 1, i), (Fraction(1, i + 1), Fraction(1, i)),
                            (Fraction(0), Fraction(1)), (False, True))

    def locate(x):
        if not 0 < x <= 1:
            raise EscapeError(f"{x} outside (0,1]", 0)
        return int(math.floor(1 / x)) if isinstance(x, Fraction) else int(1.0 / x)

    alph = _infinite(1)
    return MarkovMap("gauss", alph, full_shift(alph), br, {1: 1.0}, locate, fully_branched=True,
                     closed_form=True, tail_exponent=2.0, renyi_override=2.0, spec="gauss")


def builtin_farey() -> MarkovMap:
    branches = {
        1: MobiusBranch(1, (1, 0, 1, 1), (Fraction(0), Fraction(1, 2)), (Fraction(0), Fraction(1))),
        2: MobiusBranch(2, (0, 1, 1, 1), (Fraction(1, 2), Fraction(1)), (Fraction(0), Fraction(1)), (True, True)),
    }

    def locate(x):
        if not 0 <= x <= 1:
            raise EscapeError(f"{x} outside [0,1]", 0)
        return 1 if x < Fraction(1, 2) else 2

    alph = Alphabet((1, 2))
    return MarkovMap("farey", alph, full_shift(alph), branches.__getitem__, {1: 0.0, 2: 1.0}, locate,
                     fully_branched=True, closed_form=True, spec="farey")


def builtin_linear(b: int) -> MarkovMap:
    if b < 2:
        raise InputError("linear map needs b >= 2")

    def br(j):
        return MobiusBranch(j, (1, j, 0, b), (Fraction(j, b), Fraction(j + 1, b)), (Fraction(0), Fraction(1)))

    def locate(x):
        if not 0 <= x < 1:
            raise EscapeError(f"{x} outside [0,1)", 0)
        return int(math.floor(x * b))

    alph = Alphabet(tuple(range(b)))
    return MarkovMap(f"linear:{b}", alph, full_shift(alph), br, {}, locate, fully_branched=True,
                     closed_form=True, renyi_override=0.0, spec=f"linear:{b}")


def load_custom(path_or_dict) -> MarkovMap:
    """Custom map from JSON: inverse branches as Möbius matrices or polynomials.

    {"name": ..., "branches": [{"symbol": 1, "mobius": [a,b,c,d], "domain": [lo, hi]},
                               {"symbol": 2, "poly": [c0, c1, ...], "domain": [..], "image": [..]}],
     "rule": "full" | {"matrix": [[...]]}, "neutral": {"1": 0.0}, "strict_m1": false}
    """
    if isinstance(path_or_dict, dict):
        d = path_or_dict
        src = "inline"
    else:
        with open(path_or_dict) as fh:
            d = json.load(fh)
        src = str(path_or_dict)
    try:
        return _custom_from_dict(d, src)
    except (KeyError, TypeError) as e:
        raise InputError(f"malformed custom map description: missing or bad field {e}") from None


def _custom_from_dict(d: dict, src: str) -> MarkovMap:
    branches = {}
    for item in d["branches"]:
        s = int(item["symbol"])
        dom = tuple(_num(v) for v in item["domain"])
        if "mobius" in item:
            G = tuple(int(v) if float(v).is_integer() else float(v) for v in item["mobius"])
            a, b, c, dd = G
            fwd = (dd, -b, -c, a)
            ends = [mob_exact(fwd, Fraction(v)) if _is_int_matrix(G) and isinstance(v, Fraction) else mob(fwd, float(v)) for v in dom]
            img = tuple(item.get("image", (min(ends), max(ends))))
            branches[s] = MobiusBranch(s, G, dom, tuple(_num(v) for v in img))
        elif "poly" in item:
            branches[s] = PolyBranch(s, tuple(float(v) for v in item["poly"]), dom,
                                     tuple(float(v) for v in item["image"]))
        else:
            raise InputError(f"branch {s}: need 'mobius' or 'poly'")
    syms = tuple(sorted(branches))
    alph = Alphabet(syms)
    rule_spec = d.get("rule", "full")
    if rule_spec == "full":
        rule = full_shift(alph)
    else:
        rule = matrix_rule(syms, rule_spec["matrix"])
    neutral = {int(k): float(v) for k, v in d.get("neutral", {}).items()}
    exact = all(isinstance(b, MobiusBranch) and b.exact and all(isinstance(v, Fraction) for v in b.domain)
                for b in branches.values())
    full = rule_spec == "full"
    return MarkovMap(d.get("name", "custom"), alph, rule, branches.__getitem__, neutral, None,
                     fully_branched=full, closed_form=exact, spec=f"custom:{src}",
                     strict_m1=bool(d.get("strict_m1", False)))


def _num(v):
    if isinstance(v, str) and "/" in v:
        return Fraction(v)
    if isinstance(v, int) or (isinstance(v, str) and v.lstrip("-").isdigit()):
        return Fraction(int(v))
    f = float(v)
    return Fraction(f) if f in (0.0, 1.0) else f


_REGISTRY: dict = {}


def register_map(prefix: str, factory: Callable[[str], MarkovMap]) -> None:
    """Resolve specs ``prefix`` or ``prefix:...`` through ``factory(spec)``."""
    _REGISTRY[prefix] = factory


def map_from_name(spec: str) -> MarkovMap:
    spec = spec.strip()
    head = spec.split(":", 1)[0]
    if head in _REGISTRY:
        return _REGISTRY[head](spec)
    if spec == "renyi":
        return builtin_renyi()
    if spec == "gauss":
        return builtin_gauss()
    if spec == "farey":
        return builtin_farey()
    if spec.startswith("linear:"):
        return builtin_linear(int(spec.split(":", 1)[1]))
    if spec.startswith("custom:"):
        return load_custom(spec.split(":", 1)[1])
    raise InputError(f"unknown map {spec!r}")


# ---------------------------------------------------------------------------
# Backward continued fractions

def bcf_digits(x, n: int) -> tuple:
    word, _ = builtin_renyi().code(x, n)
    return tuple(s + 1 for s in word)


def bcf_eval(digits: Sequence[int], n: Optional[int] = None) -> CylinderEnclosure:
    digits = tuple(digits if n is None else digits[:n])
    if any(d < 2 for d in digits):
        raise InputError("BCF digits must be >= 2")
    return builtin_renyi().cylinder(tuple(d - 1 for d in digits))


# ---------------------------------------------------------------------------
# Condition checkers

def check_renyi_condition(fmap: MarkovMap, subalphabet: Sequence[int]) -> Optional[float]:
    """K = sup |f''|/|f'|^2 over the subalphabet branches, or None if unavailable."""
    vals = []
    for a in subalphabet:
        br = fmap.branch(a)
        fn = getattr(br, "renyi_ratio_sup", None)
        if fn is None:
            return None
        vals.append(fn())
    K = max(vals)
    return K


@dataclass(frozen=True)
class M3Result:
    ok: bool
    s: float
    pair: tuple
    tail_assumed: bool = False


def two_cylinder_min_deriv(fmap: MarkovMap, a1: int, a2: int) -> float:
    """inf of |(f^2)'| over the closed 2-cylinder (a1, a2)."""
    cyl = fmap.cylinder((a1, a2))
    b1, b2 = fmap.branch(a1), fmap.branch(a2)
    vals = []
    for x in (cyl.exact_lo, cyl.exact_hi) if cyl.exact_lo is not None else (cyl.lo, cyl.hi):
        fx = b1.forward(x)
        vals.append(b1.deriv(float(x)) * b2.deriv(float(fx)))
    if isinstance(b1, PolyBranch) or isinstance(b2, PolyBranch):
        xs = np.linspace(cyl.lo, cyl.hi, 65)
        vals.extend(b1.deriv(x) * b2.deriv(b1.forward(x)) for x in xs)
    return min(vals)


def check_m3(fmap: MarkovMap, subalphabet: Sequence[int], tail_monotone: bool = False) -> M3Result:
    syms = sorted(set(subalphabet))
    best, pair = math.inf, None
    for a1 in syms:
        for a2 in syms:
            if not fmap.rule(a1, a2):
                continue
            if a2 in fmap.neutral and a1 == a2:
                continue
            v = two_cylinder_min_deriv(fmap, a1, a2)
            if v < best - 1e-15:
                best, pair = v, (a1, a2)
    return M3Result(best > 1.0 + 1e-12, best, pair, tail_monotone)


@dataclass(frozen=True)
class DecayProfile:
    values: tuple          # g(1), ..., g(n_max) as floats
    exact: tuple           # Fractions when available, else ()
    argmax: tuple          # maximizing word per n
    partial: bool = False


def decay_profile(fmap: MarkovMap, subalphabet: Sequence[int], n_max: int,
                  budget: int = 2_000_000) -> DecayProfile:
    """g(n) = max diameter over admissible length-n words, branch-and-bound."""
    syms = sorted(set(subalphabet))
    exact = fmap.exact
    vals, exs, args = [], [], []
    visited = 0
    partial = False
    for n in range(1, n_max + 1):
        best, arg = None, None
        stack = [(s,) for s in reversed(syms)]
        while stack:
            w = stack.pop()
            visited += 1
            if visited > budget:
                partial = True
                break
            c = fmap.cylinder(w)
            dm = c.exact_diameter if exact else c.diameter
            if best is not None and dm <= best:
                continue          # extensions only shrink
            if len(w) == n:
                best, arg = dm, w
                continue
            for s in reversed(syms):
                if fmap.rule(w[-1], s):
                    stack.append(w + (s,))
        if best is None:
            break
        vals.append(float(best))
        exs.append(best if exact else None)
        args.append(arg)
        if partial:
            break
    return DecayProfile(tuple(vals), tuple(exs) if exact else (), tuple(args), partial)


@dataclass(frozen=True)
class DistortionReport:
    n: int
    value: float            # exact sup over enumerated words of the subalphabet
    bound: float            # a priori bound (Rényi-condition recipe for log|f'|)
    partial: bool = False


def distortion_dn(fmap: MarkovMap, obs: Observable, subalphabet: Sequence[int], n: int,
                  budget: int = 500_000) -> DistortionReport:
    syms = sorted(set(subalphabet))
    count = 0
    if obs.kind == "local":
        extra = obs.depth - 1
        # group by leading n symbols
        groups: dict = {}
        for w in _words(fmap.rule, syms, n + extra):
            count += 1
            if count > budget:
                return DistortionReport(n, max((h - l for l, h in groups.values()), default=0.0), math.inf, True)
            s = math.fsum(obs.value(w[j:]) for j in range(n))
            lo, hi = groups.get(w[:n], (math.inf, -math.inf))
            groups[w[:n]] = (min(lo, s), max(hi, s))
        worst = max((hi - lo for lo, hi in groups.values()), default=0.0)
        return DistortionReport(n, worst, worst if extra == 0 else math.inf)
    worst = 0.0
    for w, lo, hi in fmap.iter_cylinders(syms, n):
        count += 1
        if count > budget:
            return DistortionReport(n, worst, math.inf, True)
        M = fmap.composed_inverse(w)
        # f^n on the cylinder is the Möbius inverse of M; log|(f^n)'| monotone
        u = [forward_log_deriv(M, x) for x in (lo, hi)]
        worst = max(worst, abs(u[0] - u[1]))
    K = check_renyi_condition(fmap, syms)
    if K is None:
        return DistortionReport(n, worst, math.inf)
    g = decay_profile(fmap, syms, max(n - 1, 1)).values if n > 1 else ()
    bound = K * (math.fsum(g[: n - 1]) + 1.0)
    return DistortionReport(n, worst, bound)
