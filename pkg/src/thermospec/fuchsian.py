"""Bowen-Series maps of free Fuchsian groups with parabolic generators.

Points of the boundary circle are angles.  Group elements act in the disk
model; every generator g contributes the arc Δ_g of the circle inside its
isometric circle, on which the Bowen-Series map is g itself.  Winding around
a cusp shows up as long runs of one parabolic generator, which the induced
map collapses into single symbols (blocks).
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .inducing import InducingScheme, Pattern, build_jump_transform
from .maps import (CylinderEnclosure, EscapeError, MarkovMap, Observable, mat_mul, register_map,
                   table_observable)
from .symbolic import Alphabet, InputError, inverse_pair_rule

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-9


class GeometryError(ValueError):
    """Generators are not in the position the Bowen-Series construction needs."""


def wrap(theta: float, lo: float) -> float:
    """Representative of ``theta`` in [lo, lo + 2π)."""
    return lo + (theta - lo) % TWO_PI


def angular_distance(x: float, y: float) -> float:
    d = (x - y) % TWO_PI
    return min(d, TWO_PI - d)


# ---------------------------------------------------------------------------
# Möbius transformations

_K = (1.0 + 0j, -1j, 1.0 + 0j, 1j)                 # Cayley map H -> D
_K_INV = (0.5 + 0j, 0.5 + 0j, 0.5j, -0.5j)


def _act(m, z):
    a, b, c, d = m
    return (a * z + b) / (c * z + d)


def _inv(m):
    a, b, c, d = m
    return (d, -b, -c, a)


@dataclass(frozen=True)
class Mobius:
    m: tuple
    model: str = "D"

    def __post_init__(self):
        m = tuple(complex(v) for v in self.m)
        object.__setattr__(self, "m", m)
        if self.model not in ("H", "D"):
            raise InputError("model must be 'H' or 'D'")
        if abs(self.det - 1.0) > 1e-12:
            raise InputError(f"determinant {self.det} is not 1")

    @property
    def det(self) -> complex:
        a, b, c, d = self.m
        return a * d - b * c

    @property
    def trace(self) -> float:
        return (self.m[0] + self.m[3]).real

    @property
    def kind(self) -> str:
        t = abs(self.trace)
        if abs(t - 2.0) <= 1e-9:
            return "parabolic"
        return "hyperbolic" if t > 2.0 else "elliptic"

    def inverse(self) -> "Mobius":
        return Mobius(_inv(self.m), self.model)

    def __call__(self, z):
        return _act(self.m, z)

    def deriv_abs(self, z) -> float:
        a, b, c, d = self.m
        return 1.0 / abs(c * z + d) ** 2

    def to_disk(self) -> "Mobius":
        if self.model == "D":
            return self
        return Mobius(mat_mul(mat_mul(_K, self.m), _K_INV), "D")

    def fixed_points(self) -> list:
        a, b, c, d = self.m
        if abs(c) < 1e-15:
            return [math.inf]
        if self.kind == "parabolic":
            return [(a - d) / (2 * c)]
        disc = cmath.sqrt((a - d) ** 2 + 4 * b * c)
        return [(a - d + disc) / (2 * c), (a - d - disc) / (2 * c)]

    def to_json(self) -> dict:
        return {"model": self.model, "matrix": [[v.real, v.imag] for v in self.m]}


def isometric_circle(g: Mobius) -> tuple:
    """(center, radius) of {z : |g'(z)| = 1} in the model's own coordinates."""
    a, b, c, d = g.m
    if abs(c) < 1e-15:
        raise GeometryError("lower-left entry is 0: the map is affine and has no isometric circle")
    return -d / c, 1.0 / abs(c)


def rotation(psi: float) -> Mobius:
    """Disk automorphism z -> e^{i psi} z."""
    return Mobius((cmath.exp(0.5j * psi), 0, 0, cmath.exp(-0.5j * psi)), "D")


def conjugate(g: Mobius, h: Mobius) -> Mobius:
    """h g h^{-1}."""
    return Mobius(mat_mul(mat_mul(h.m, g.m), _inv(h.m)), "D")


# ---------------------------------------------------------------------------
# Generators

@dataclass
class GeneratorSet:
    gens: dict                     # symbol -> Mobius (disk model)
    inverse: dict                  # symbol -> symbol of the inverse
    labels: dict
    parabolic: tuple               # symbols of parabolic generators (closed under inverse)
    hyperbolic: tuple
    cusps: dict                    # parabolic symbol -> cusp index j (1-based)
    cusp_points: dict              # j -> angle of the fixed point p_j

    @property
    def symbols(self) -> tuple:
        return tuple(sorted(self.gens))

    @property
    def n_cusps(self) -> int:
        return len(self.cusp_points)

    def symbol(self, s) -> int:
        if isinstance(s, int):
            if s not in self.gens:
                raise InputError(f"unknown generator {s}")
            return s
        for k, v in self.labels.items():
            if v == s:
                return k
        raise InputError(f"unknown generator label {s!r}")

    def to_json(self) -> dict:
        return {"generators": {self.labels[s]: self.gens[s].to_json() for s in self.symbols}}


def _label(i: int) -> tuple:
    base = "abcdefghijklmnopqrstuvwxyz"[i] if i < 26 else f"g{i}"
    return base, base.upper() if i < 26 else base + "^-1"


def generator_set(matrices: Sequence, model: str = "H") -> GeneratorSet:
    """Symmetric closure of the given generators, classified and validated."""
    gens, inverse, labels = {}, {}, {}
    for i, m in enumerate(matrices):
        g = Mobius(tuple(m), model).to_disk()
        if g.kind == "elliptic":
            raise GeometryError(f"generator {i} is elliptic; only free groups are supported")
        s, t = 2 * i + 1, 2 * i + 2
        gens[s], gens[t] = g, g.inverse()
        inverse[s], inverse[t] = t, s
        labels[s], labels[t] = _label(i)
    if len(gens) < 4:
        raise GeometryError("need at least two generators (a non-elementary group)")
    para = tuple(s for s in sorted(gens) if gens[s].kind == "parabolic")
    hyp = tuple(s for s in sorted(gens) if gens[s].kind == "hyperbolic")
    cusps, points = {}, {}
    for s in para:
        if s in cusps:
            continue
        z = gens[s].fixed_points()[0]
        ang = cmath.phase(z)
        j = next((k for k, p in points.items() if angular_distance(p, ang) < 1e-7), None)
        if j is None:
            j = len(points) + 1
            points[j] = ang
        cusps[s] = cusps[inverse[s]] = j
    return GeneratorSet(gens, inverse, labels, para, hyp, cusps, points)


def default_generators() -> GeneratorSet:
    """Free group on two parabolics z -> z + 2 and z -> z / (4z + 1) (upper half-plane)."""
    return generator_set([(1, 2, 0, 1), (1, 0, 4, 1)], "H")


def load_generators(path_or_dict) -> GeneratorSet:
    """JSON {model: "H"|"D", matrices: [[a, b, c, d], ...]}; entries may be [re, im] pairs."""
    if isinstance(path_or_dict, dict):
        d = path_or_dict
    else:
        with open(path_or_dict) as fh:
            d = json.load(fh)
    mats = []
    for m in d["matrices"]:
        if len(m) != 4:
            raise InputError("each matrix needs four entries a, b, c, d")
        mats.append(tuple(complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v) for v in m))
    return generator_set(mats, d.get("model", "H"))


# ---------------------------------------------------------------------------
# Circle branches and the circle Markov map

def _angle_act(m, theta: float) -> float:
    return cmath.phase(_act(m, cmath.exp(1j * theta)))


@dataclass(frozen=True)
class ArcBranch:
    """Branch on the arc ``domain`` with inverse ``inv`` mapping ``image`` back onto it."""

    symbol: int
    inv: tuple
    domain: tuple
    image: tuple
    closed: tuple = (True, True)

    @property
    def fwd(self):
        return _inv(self.inv)

    def inverse(self, theta: float) -> float:
        return wrap(_angle_act(self.inv, theta), self.domain[0] - ANGLE_TOL)

    def forward(self, theta: float) -> float:
        return wrap(_angle_act(self.fwd, theta), self.image[0] - ANGLE_TOL)

    def deriv(self, theta) -> float:
        a, b, c, d = self.fwd
        return abs(a * d - b * c) / abs(c * cmath.exp(1j * float(theta)) + d) ** 2

    def log_deriv_range(self, lo: float, hi: float) -> tuple:
        """Exact range of log|f'| on [lo, hi]: |cz + d|^2 = A + B cos(theta + phi)."""
        a, b, c, d = self.fwd
        ld = math.log(abs(a * d - b * c))
        cd = c * d.conjugate()
        A, B, phi = abs(c) ** 2 + abs(d) ** 2, 2 * abs(cd), cmath.phase(cd)
        pts = [lo, hi]
        for crit in (-phi, math.pi - phi):
            t = wrap(crit, lo)
            if t <= hi:
                pts.append(t)
        vals = [ld - math.log(max(A + B * math.cos(t + phi), 1e-300)) for t in pts]
        return min(vals), max(vals)


class CircleMap(MarkovMap):
    """Markov map of the circle; intervals are arcs (lo, hi) of angles with lo < hi."""

    ambient = "circle"

    def __init__(self, name, alphabet, rule, branch_fn, neutral=None, spec=None, fully_branched=False,
                 locate=None):
        super().__init__(name, alphabet, rule, branch_fn, neutral=neutral, locate=locate,
                         fully_branched=fully_branched, closed_form=False, spec=spec)

    def _validate(self, strict_m1):
        syms = self.alphabet.head(4096)
        for i, a in enumerate(syms):
            for b in syms[i + 1:]:
                ov = arc_overlap(self.branch(a).domain, self.branch(b).domain)
                if ov > ANGLE_TOL:
                    raise GeometryError(f"arcs of {a} and {b} overlap by {ov:.3g}")
        for a, x in self.neutral.items():
            br = self.branch(a)
            if not self.contains_point(br.domain, x):
                raise InputError(f"neutral point {x} not on the arc of {a}")
            if abs(br.deriv(x) - 1.0) > 1e-9:
                raise InputError(f"|f'| != 1 at declared neutral point of {a}")

    def locate(self, x) -> int:
        for a in self.alphabet.symbols:
            if self.contains_point(self.branch(a).domain, x):
                return a
        raise EscapeError(f"angle {x} lies in no arc", 0)

    def same_point(self, x, y, tol: float = 1e-12) -> bool:
        return angular_distance(float(x), float(y)) < tol

    def contains_point(self, interval, x, strict=False) -> bool:
        lo, hi = (float(v) for v in interval)
        if strict:
            t = wrap(float(x), lo)
            return lo < t < hi
        t = wrap(float(x), lo - 1e-12)
        return t <= hi + 1e-12

    def apply_matrix(self, M, lo, hi) -> tuple:
        p, q = _angle_act(M, float(lo)), _angle_act(M, float(hi))
        length = (q - p) % TWO_PI
        if length < 1e-15 and hi - lo > math.pi:
            length = TWO_PI
        return p, p + length

    def cylinder(self, word: Sequence[int]) -> CylinderEnclosure:
        word = tuple(word)
        if not word:
            raise InputError("empty word has no cylinder")
        if not self.is_admissible(word):
            raise InputError(f"inadmissible word {word}")
        lo, hi = self.branch(word[-1]).domain
        for s in reversed(word[:-1]):
            lo, hi = self.apply_matrix(self.branch(s).inv, lo, hi)
        slack = 4e-16 * len(word) * (1 + abs(lo) + abs(hi))
        d0 = self.branch(word[0]).domain[0]
        start = wrap(lo, d0 - ANGLE_TOL)
        return CylinderEnclosure(word, start - slack, start + (hi - lo) + slack)

    def make_branch(self, symbol, inv, domain, image):
        return ArcBranch(symbol, tuple(inv), tuple(domain), tuple(image))

    def derived(self, name, alphabet, rule, branch_fn, **kw) -> "CircleMap":
        return CircleMap(name, alphabet, rule, branch_fn, neutral=kw.get("neutral"), spec=kw.get("spec"),
                         fully_branched=kw.get("fully_branched", False))

    def forward_deriv(self, M, x) -> float:
        a, b, c, d = M
        return abs(a * d - b * c) / abs(a - c * cmath.exp(1j * float(x))) ** 2

    def periodic_point(self, word: Sequence[int]) -> float:
        word = tuple(word)
        if not self.is_admissible(word + word[:1]):
            raise InputError(f"{word} does not close up into a periodic orbit")
        M = self.composed_inverse(word)
        cyl = self.cylinder(word + word[:1]) if len(word) >= 1 else self.cylinder(word)
        mid = 0.5 * (cyl.lo + cyl.hi)
        a, b, c, d = M
        if abs(c) < 1e-300:
            z = cmath.exp(1j * mid)
        else:
            disc = cmath.sqrt((d - a) ** 2 + 4 * b * c)
            cands = [(a - d + disc) / (2 * c), (a - d - disc) / (2 * c)]
            z = min(cands, key=lambda w: angular_distance(cmath.phase(w), mid))
        z = z / abs(z)
        for _ in range(30):             # M contracts towards its attracting point
            z = _act(M, z)
            z = z / abs(z)
        return wrap(cmath.phase(z), self.branch(word[0]).domain[0] - ANGLE_TOL)

    def cycle_log_deriv(self, word: Sequence[int], x: Optional[float] = None) -> float:
        M = self.composed_inverse(word)
        if x is None:
            x = self.periodic_point(word)
        a, b, c, d = M
        return 2.0 * math.log(abs(c * cmath.exp(1j * float(x)) + d)) - math.log(abs(a * d - b * c))

    def orbit(self, word: Sequence[int]) -> list:
        x = self.periodic_point(word)
        pts = []
        for s in word:
            pts.append(wrap(x, self.branch(s).domain[0] - ANGLE_TOL))
            x = self.branch(s).forward(x)
        return pts


def arc_overlap(u, v) -> float:
    """Length of the intersection of two arcs (angles, lo < hi, length < 2π)."""
    best = 0.0
    for shift in (-TWO_PI, 0.0, TWO_PI):
        lo = max(u[0], v[0] + shift)
        hi = min(u[1], v[1] + shift)
        best = max(best, hi - lo)
    return best


# ---------------------------------------------------------------------------
# Bowen-Series map

@dataclass
class BowenSeriesMap:
    gens: GeneratorSet
    arcs: dict                     # symbol -> (lo, hi)
    fmap: CircleMap
    transcript: list = field(default_factory=list)
    name: str = "default"

    def arc_table(self) -> list:
        return [(self.gens.labels[s], self.arcs[s][0], self.arcs[s][1]) for s in self.gens.symbols]

    def arc_csv(self) -> str:
        rows = ["symbol,theta_lo,theta_hi"] + [f"{s},{lo!r},{hi!r}" for s, lo, hi in self.arc_table()]
        return "\n".join(rows) + "\n"


def _arc_of(g: Mobius) -> tuple:
    center, radius = isometric_circle(g)
    r = abs(center)
    if r <= 1.0:
        raise GeometryError("isometric circle does not cut the boundary circle")
    mid = cmath.phase(center)
    half = math.acos(min(1.0, 1.0 / r))
    lo = wrap(mid - half, -math.pi)
    return lo, lo + 2 * half


def build_bowen_series(gens: GeneratorSet, name: str = "default") -> BowenSeriesMap:
    """Arcs from isometric circles, geometric validation, and the circle Markov facade."""
    syms = gens.symbols
    arcs = {s: _arc_of(gens.gens[s]) for s in syms}
    log = []
    for i, s in enumerate(syms):
        for t in syms[i + 1:]:
            u, v = arcs[s], arcs[t]
            gap = _arc_gap(u, v)
            if gens.inverse[s] == t and s in gens.parabolic:
                p = gens.cusp_points[gens.cusps[s]]
                touch = arc_overlap(u, v) <= ANGLE_TOL and gap <= ANGLE_TOL
                at_p = min(angular_distance(p, x) for x in (u[0], u[1])) <= ANGLE_TOL
                ok = touch and at_p
                log.append((f"{gens.labels[s]}~{gens.labels[t]}", "touch at cusp", ok))
                if not ok:
                    raise GeometryError(f"parabolic arcs {gens.labels[s]}, {gens.labels[t]} must touch at their fixed point")
            else:
                ok = arc_overlap(u, v) <= 0 and gap > ANGLE_TOL
                log.append((f"{gens.labels[s]}~{gens.labels[t]}", "disjoint", ok))
                if not ok:
                    raise GeometryError(f"arcs {gens.labels[s]} and {gens.labels[t]} intersect (gap {gap:.3g})")
    branches = {}
    for s in syms:
        u = arcs[gens.inverse[s]]
        image = (u[1], u[0] + TWO_PI)              # complement of the inverse's arc
        branches[s] = ArcBranch(s, gens.gens[s].inverse().m, arcs[s], image)
    neutral = {}
    for s in gens.parabolic:
        p = gens.cusp_points[gens.cusps[s]]
        neutral[s] = wrap(p, arcs[s][0] - ANGLE_TOL)
    alph = Alphabet(syms, 1, dict(gens.labels))
    rule = inverse_pair_rule(syms, gens.inverse)
    fmap = CircleMap(f"fuchsian:{name}", alph, rule, branches.__getitem__, neutral=neutral,
                     spec=f"fuchsian:{name}")
    return BowenSeriesMap(gens, arcs, fmap, log, name)


def _arc_gap(u, v) -> float:
    """Angular gap between two arcs (0 when they touch or overlap)."""
    best = math.inf
    for shift in (-TWO_PI, 0.0, TWO_PI):
        a0, a1 = u
        b0, b1 = v[0] + shift, v[1] + shift
        best = min(best, max(0.0, b0 - a1, a0 - b1))
    return best


def default_bowen_series() -> BowenSeriesMap:
    return build_bowen_series(default_generators(), "default")


def limit_points(bs: BowenSeriesMap, n: int, length: int = 40, seed: int = 0) -> np.ndarray:
    """Angles of g_1 ... g_L (0) for random reduced words: samples of the limit set."""
    rng = np.random.default_rng(seed)
    syms = bs.gens.symbols
    out = np.empty(n)
    for k in range(n):
        word, last = [], None
        while len(word) < length:
            s = int(rng.choice(syms))
            if last is not None and bs.gens.inverse[last] == s:
                continue
            word.append(s)
            last = s
        z = 0j
        for s in reversed(word):
            z = bs.gens.gens[s](z)
        out[k] = cmath.phase(z)
    return out


# ---------------------------------------------------------------------------
# Blocks

@dataclass(frozen=True)
class BlockSequence:
    word: tuple
    blocks: tuple                  # ((symbol, run length), ...)
    cusp: tuple                    # cusp index per block, None for hyperbolic blocks
    n_cusps: int

    def concatenate(self) -> tuple:
        out = []
        for s, n in self.blocks:
            out.extend([s] * n)
        return tuple(out)

    def a(self, i: int, j: int) -> int:
        """Winding count a_{i,j}: n - 1 if block i (1-based) is a run of length n at cusp j."""
        s, n = self.blocks[i - 1]
        return n - 1 if self.cusp[i - 1] == j else 0


def block_decompose(gens: GeneratorSet, word: Sequence) -> BlockSequence:
    w = tuple(gens.symbol(s) for s in word)
    for x, y in zip(w, w[1:]):
        if gens.inverse[x] == y:
            raise InputError("word is not reduced")
    blocks, cusp = [], []
    i = 0
    while i < len(w):
        s = w[i]
        n = 1
        if s in gens.parabolic:
            while i + n < len(w) and w[i + n] == s:
                n += 1
        blocks.append((s, n))
        cusp.append(gens.cusps.get(s))
        i += n
    return BlockSequence(w, tuple(blocks), tuple(cusp), gens.n_cusps)


# ---------------------------------------------------------------------------
# Cusp-induced map

def cusp_patterns(gens: GeneratorSet, n_max: int) -> list:
    """γ^n | g (γ parabolic, g ≠ γ^{±1}) and h | g (h hyperbolic, g ≠ h^{-1}), ordered by run length."""
    syms = gens.symbols
    out = []
    for n in range(1, n_max + 1):
        for s in gens.parabolic:
            for g in syms:
                if g != s and g != gens.inverse[s]:
                    out.append(Pattern((s,) * n, (g,)))
        if n == 1:
            for h in gens.hyperbolic:
                for g in syms:
                    if g != gens.inverse[h]:
                        out.append(Pattern((h,), (g,)))
    return out


def patterns_up_to(gens: GeneratorSet, n: int) -> int:
    k = len(gens.symbols)
    return len(gens.parabolic) * (k - 2) * n + len(gens.hyperbolic) * (k - 1)


_SCHEME_CACHE: dict = {}


def build_cusp_induced_map(bs: BowenSeriesMap, n_max: int = 64, validate: bool = True) -> InducingScheme:
    key = (bs.fmap.spec, id(bs), n_max, validate)
    if key not in _SCHEME_CACHE:
        _SCHEME_CACHE[key] = _build_cusp_scheme(bs, n_max, validate)
    return _SCHEME_CACHE[key]


def _build_cusp_scheme(bs: BowenSeriesMap, n_max: int, validate: bool) -> InducingScheme:
    pats = cusp_patterns(bs.gens, n_max)
    desc = {"base": bs.fmap.spec, "kind": "cusp-blocks", "n_max": n_max}
    scheme = build_jump_transform(bs.fmap, pats, desc, validate)
    scheme.induced.spec = f"cusp:{n_max}:{bs.fmap.spec}"
    scheme.induced.name = scheme.induced.spec
    return scheme


def winding_observables(bs: BowenSeriesMap, scheme: InducingScheme) -> tuple:
    """a_{1,j} on the induced alphabet: run length minus one at cusp j."""
    out = []
    for j in range(1, bs.gens.n_cusps + 1):
        vals = {}
        for i, p in enumerate(scheme.patterns, start=1):
            s = p.word[0]
            vals[i] = float(p.tau - 1) if bs.gens.cusps.get(s) == j else 0.0
        out.append(replace(table_observable(vals, 0.0, name=f"a1_{j}"), bounded=False))
    return tuple(out)


def frequency_indicator(bs: BowenSeriesMap, scheme: InducingScheme, i: int, j: int) -> Observable:
    """Indicator of A_{i,j}: the first block winds exactly i times at cusp j."""
    syms = [k for k, p in enumerate(scheme.patterns, start=1)
            if bs.gens.cusps.get(p.word[0]) == j and p.tau - 1 == i]
    if not syms:
        raise InputError(f"no pattern with winding {i} at cusp {j} below the cutoff")
    obs = table_observable({s: 1.0 for s in syms}, 0.0, name=f"A_{i}_{j}")
    return obs


def arc_decay(bs: BowenSeriesMap, n_max: int = 200, n_min: Optional[int] = None) -> dict:
    """Arc lengths of γ^n g cylinders and their log-log slope (≈ -2 for parabolic runs)."""
    gens = bs.gens
    s = gens.parabolic[0]
    g = next(t for t in gens.symbols if t != s and t != gens.inverse[s])
    ns = np.arange(1, n_max + 1)
    diam = np.array([bs.fmap.cylinder((s,) * int(n) + (g,)).diameter for n in ns])
    n_min = n_min or max(2, n_max // 10)
    sel = ns >= n_min
    slope = float(np.polyfit(np.log(ns[sel]), np.log(diam[sel]), 1)[0])
    return {"n": ns, "diameter": diam, "slope": slope, "generator": gens.labels[s], "lookahead": gens.labels[g]}


# ---------------------------------------------------------------------------
# Cusp spectra

def cusp_schedule(bs: BowenSeriesMap, levels: Sequence[int] = (4, 8, 16), eps=None):
    from .spectra import DEFAULT_EPS, Schedule
    return Schedule(eps=tuple(eps or DEFAULT_EPS), alphabets=tuple((1, patterns_up_to(bs.gens, n)) for n in levels),
                    depths=(1,), inducing=False)


def _cusp_orbit_words(bs: BowenSeriesMap, scheme: InducingScheme, n_top: int) -> list:
    """Induced words of the periodic orbits (γ^n g)^∞: blocks γ^n then g."""
    index = {(p.word, p.lookahead): i for i, p in enumerate(scheme.patterns, start=1)}
    gens = bs.gens
    words = []
    for s in gens.parabolic:
        for g in gens.symbols:
            if g in (s, gens.inverse[s]) or g not in gens.parabolic:
                continue
            for n in range(1, n_top + 1):
                a = index.get(((s,) * n, (g,)))
                b = index.get(((g,), (s,)))
                if a is not None and b is not None:
                    words.append((a, b))
    return words


def cusp_winding_spectrum(bs: BowenSeriesMap, alpha: Sequence[float], schedule=None, n_max: int = 64,
                          backend: str = "legendre"):
    from .spectra import SpectrumQuery, birkhoff_spectrum
    if any(a < 0 for a in alpha):
        raise InputError("winding targets are nonnegative")
    if len(alpha) != bs.gens.n_cusps:
        raise InputError(f"need one target per cusp ({bs.gens.n_cusps})")
    scheme = build_cusp_induced_map(bs, n_max)
    schedule = schedule or cusp_schedule(bs)
    obs = winding_observables(bs, scheme)
    q = SpectrumQuery(scheme.induced, obs, tuple(alpha), schedule, backend)
    top = max(hi for _, hi in schedule.alphabets)
    n_top = min(n_max, max(1, top // max(1, patterns_up_to(bs.gens, 1))))
    res = birkhoff_spectrum(q, extra_words=_cusp_orbit_words(bs, scheme, n_top))
    res.flags.append("unbounded observables: no beta-infinity floor")
    return res


def cusp_frequency_spectrum(bs: BowenSeriesMap, freq: dict, tail: float = 0.0, schedule=None,
                            n_max: int = 64, backend: str = "legendre"):
    """Frequencies alpha_{i,j} of blocks winding i times at cusp j."""
    from .spectra import SpectrumQuery, SpectrumResult, birkhoff_spectrum
    vals = {(int(i), int(j)): float(a) for (i, j), a in freq.items()}
    if any(a < 0 for a in vals.values()) or tail < 0:
        raise InputError("frequencies must be nonnegative")
    total = math.fsum(vals.values()) + tail
    if total > 1 + 1e-12:
        raise InputError(f"frequencies sum to {total} > 1")
    keys = sorted(vals)
    if total < 1 - 1e-12:
        return SpectrumResult(tuple(vals[k] for k in keys), (), lower_bound=0.5, exact=True, beta_floor=0.5,
                              beta_floor_applied=True, feasibility="nonempty",
                              provenance="closed form: frequencies summing below one force escape of mass "
                                         "into the cusps; dimension equals beta_inf = 1/2")
    scheme = build_cusp_induced_map(bs, n_max)
    obs = tuple(frequency_indicator(bs, scheme, i, j) for i, j in keys)
    schedule = schedule or cusp_schedule(bs)
    q = SpectrumQuery(scheme.induced, obs, tuple(vals[k] for k in keys), schedule, backend)
    res = birkhoff_spectrum(q, extra_words=_cusp_orbit_words(bs, scheme, 4))
    # parabolic cylinders shrink like n^-2, so beta_inf = 1/2 for bounded observables
    # indicators are bounded, so every feasible query carries the floor
    res.beta_floor = 0.5
    if res.best is not None:
        res.beta_floor_applied = True
        if 0.5 > res.lower_bound:
            res.lower_bound = 0.5
            res.provenance = "beta-infinity floor (conditional on feasibility)"
    res.flags.append("beta_inf = 1/2 from n^-2 decay of parabolic block arcs")
    return res


# ---------------------------------------------------------------------------
# Registry: fuchsian:default, fuchsian:<json>, cusp:<n_max>:<base spec>

_BS_CACHE: dict = {}


def bowen_series_from_spec(spec: str) -> BowenSeriesMap:
    if spec not in _BS_CACHE:
        rest = spec.split(":", 1)[1] if ":" in spec else "default"
        if rest == "default":
            bs = default_bowen_series()
        else:
            bs = build_bowen_series(load_generators(rest), rest)
            bs.fmap.spec = bs.fmap.name = spec
        _BS_CACHE[spec] = bs
    return _BS_CACHE[spec]


def _fuchsian_factory(spec: str) -> MarkovMap:
    return bowen_series_from_spec(spec).fmap


def _cusp_factory(spec: str) -> MarkovMap:
    _, n, base = spec.split(":", 2)
    return build_cusp_induced_map(bowen_series_from_spec(base), int(n)).induced


register_map("fuchsian", _fuchsian_factory)
register_map("cusp", _cusp_factory)
