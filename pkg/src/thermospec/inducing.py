"""Jump and first-return transforms for maps with a parabolic branch.

An inducing scheme is a set of base words (patterns) with a return time
tau each.  The induced branch on the cylinder of a pattern is f^tau, whose
inverse is the product of the base inverse matrices along the pattern, so
the induced system is again a Möbius Markov map and all of the thermo
machinery applies to it unchanged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.optimize import brentq
from scipy.special import zeta

from .interval import Bracket, down, up
from .maps import MarkovMap, MobiusBranch, Observable, mat_mul, mat_pow, mob
from .measures import (MarkovMeasureCert, PeriodicDiracCert, ProjectedCert,
                       periodic_cert)
from .symbolic import (Alphabet, InputError, TransitionRule,
                       check_finite_irreducibility, is_admissible)


class SchemeValidationError(ValueError):
    def __init__(self, condition, detail):
        super().__init__(f"inducing condition {condition} violated: {detail}")
        self.condition = condition
        self.detail = detail


@dataclass(frozen=True)
class Pattern:
    """Base word of length tau; the induced branch maps its domain onto ``image``.

    The image is the cylinder of ``lookahead`` when given, the hull of the
    ``target`` symbols when given, and f(Δ_last) otherwise.
    """

    word: tuple
    lookahead: tuple = ()
    target: Optional[tuple] = None

    @property
    def tau(self) -> int:
        return len(self.word)

    @property
    def label(self) -> str:
        s = ".".join(map(str, self.word))
        if self.lookahead:
            s += "|" + ".".join(map(str, self.lookahead))
        return s

    def allows(self, nxt: "Pattern") -> bool:
        full = nxt.word + nxt.lookahead
        if self.lookahead:
            return full[: len(self.lookahead)] == self.lookahead
        if self.target is not None:
            return nxt.word[0] in self.target
        return True


def patterns_from_description(desc: dict) -> list:
    """Expand {prefix_symbol, repeat_range, suffix_set, order, lookahead, target} items."""
    out = []
    for item in desc["patterns"]:
        p = int(item["prefix_symbol"])
        k0, k1 = (int(v) for v in item["repeat_range"])
        if "truncation" in desc:
            k1 = min(k1, int(desc["truncation"]))
        suffixes = [int(a) for a in item["suffix_set"]]
        order = item.get("order", "prefix-first")
        target = tuple(int(a) for a in item["target"]) if "target" in item else None
        for k in range(k0, k1 + 1):
            for a in suffixes:
                if order == "prefix-first":
                    out.append(Pattern((p,) * k + (a,), (), target))
                elif order == "suffix-first":
                    out.append(Pattern((a,) + (p,) * k, (), target))
                elif order == "power-lookahead":
                    if k < 1:
                        raise InputError("power-lookahead patterns need repeat >= 1")
                    out.append(Pattern((p,) * k, (a,), None))
                else:
                    raise InputError(f"unknown pattern order {order!r}")
    return out


@dataclass(frozen=True)
class CheckRecord:
    name: str
    passed: bool
    detail: str


@dataclass(eq=False)
class InducingScheme:
    base: MarkovMap
    patterns: tuple
    induced: MarkovMap
    transcript: list = field(default_factory=list)
    description: dict = field(default_factory=dict)

    @property
    def taus(self) -> tuple:
        return tuple(p.tau for p in self.patterns)

    def pattern(self, s: int) -> Pattern:
        return self.patterns[s - 1]

    def base_word(self, induced_word) -> tuple:
        out: list = []
        for s in induced_word:
            out.extend(self.patterns[s - 1].word)
        return tuple(out)

    def rerun_checks(self) -> list:
        return _run_checks(self, raise_on_fail=False)

    def to_json(self) -> dict:
        return {"base": self.base.spec, "patterns": [p.label for p in self.patterns],
                "taus": list(self.taus),
                "transcript": [[c.name, c.passed, c.detail] for c in self.transcript]}


def _pattern_image(base: MarkovMap, pat: Pattern):
    if pat.lookahead:
        return base.exact_interval(pat.lookahead)
    if pat.target is not None:
        return base.hull(pat.target)
    return base.branch(pat.word[-1]).image


def build_jump_transform(base: MarkovMap, patterns, description: Optional[dict] = None,
                         validate: bool = True) -> InducingScheme:
    """Assemble the induced Markov map on a finite pattern set and run the checks."""
    if isinstance(patterns, dict):
        description = patterns
        patterns = patterns_from_description(patterns)
    pats = tuple(patterns)
    if not pats:
        raise InputError("empty pattern set")
    for pat in pats:
        if not is_admissible(pat.word + pat.lookahead, base.rule, base.alphabet):
            raise SchemeValidationError("(i)", f"pattern {pat.label} is not admissible")
    branches = {}
    for i, pat in enumerate(pats, start=1):
        M = base.word_matrix(pat.word)
        img = _pattern_image(base, pat)
        dom = base.apply_matrix(M, img[0], img[1])
        branches[i] = base.make_branch(i, M, dom, img)
    syms = tuple(range(1, len(pats) + 1))
    labels = {i: p.label for i, p in enumerate(pats, start=1)}
    alph = Alphabet(syms, 1, labels)

    # patterns are admissible on their own and the base rule is one-step, so
    # only the junction pair and the lookahead have to be checked
    n = len(pats)
    allowed = np.zeros((n, n), dtype=bool)
    for i, pa in enumerate(pats):
        for j, pb in enumerate(pats):
            allowed[i, j] = pa.allows(pb) and base.rule(pa.word[-1], pb.word[0])

    def pred(a, b):
        return bool(allowed[a - 1, b - 1])

    rule = TransitionRule(pred, None, alph, name="induced")
    full = bool(allowed.all())
    try:
        induced = base.derived(f"induced({base.spec})", alph, rule, branches.__getitem__, neutral={},
                               fully_branched=full, spec=f"induced:{base.spec}")
    except InputError as e:
        raise SchemeValidationError("(i)", f"pattern cylinders are not disjoint: {e}") from None
    scheme = InducingScheme(base, pats, induced, [], description or {})
    if validate:
        scheme.transcript = _run_checks(scheme, raise_on_fail=True)
    return scheme


def _neutral_fixed_points(base: MarkovMap) -> list:
    pts = []
    for a, x in base.neutral.items():
        br = base.branch(a)
        try:
            fx = br.forward(x)
        except ZeroDivisionError:
            continue
        if base.same_point(fx, x):
            pts.append(x)
    return pts


def _run_checks(scheme: InducingScheme, raise_on_fail: bool) -> list:
    base, pats, ind = scheme.base, scheme.patterns, scheme.induced
    log = []

    def record(name, ok, detail):
        log.append(CheckRecord(name, bool(ok), detail))
        if raise_on_fail and not ok:
            raise SchemeValidationError(name, detail)

    # (i) disjoint interiors
    doms = sorted((float(ind.branch(i).domain[0]), float(ind.branch(i).domain[1]), i) for i in ind.alphabet.symbols)
    overlap = [(a[2], b[2]) for a, b in zip(doms, doms[1:]) if b[0] < a[1] - 1e-13 and not ind.ambient == "circle"]
    record("(i) disjoint cylinders", not overlap, f"overlaps: {overlap[:3]}" if overlap else f"{len(doms)} cylinders")
    # (ii) return orbits avoid neutral fixed points
    fixed = _neutral_fixed_points(base)
    bad = None
    for pat in pats:
        img = _pattern_image(base, pat)
        for j in range(pat.tau):
            M = base.word_matrix(pat.word[j:])
            seg = base.apply_matrix(M, img[0], img[1])
            if any(base.contains_point(seg, x) for x in fixed):
                bad = (pat.label, j)
                break
        if bad:
            break
    record("(ii) no neutral fixed point on return orbits", bad is None,
           f"pattern {bad[0]} at step {bad[1]}" if bad else f"{len(fixed)} neutral fixed point(s) avoided")
    # (iii) induced square uniformly expanding
    syms = ind.alphabet.symbols
    if ind.ambient == "interval":
        worst, arg = _min_square_deriv_all(ind, syms)
    else:
        worst, arg = math.inf, None
        for a in syms:
            for b in syms:
                if not ind.rule(a, b):
                    continue
                v = _min_square_deriv(ind, a, b)
                if v < worst:
                    worst, arg = v, (a, b)
    record("(iii) induced square expanding", worst > 1.0,
           f"inf |(f~^2)'| = {worst:.6g} at {arg}")
    # (iv) finite irreducibility of the truncated induced rule
    cert = check_finite_irreducibility(ind.rule, syms, min(len(syms), 4))
    record("(iv) finite irreducibility", bool(cert),
           f"bridges {[list(b) for b in cert.bridges]}" if cert else f"failed on {cert.pair}")
    return log


def _min_square_deriv(ind: MarkovMap, a: int, b: int) -> float:
    word = (a, b)
    M = ind.word_matrix(word)
    lo, hi = ind.exact_interval(word)
    return min(_branch_deriv(ind, M, x) for x in (lo, hi))


def _min_square_deriv_all(ind: MarkovMap, syms) -> tuple:
    """Vectorized (iii) for interval maps: for each a, all admissible b at once.

    |(f~^2)'| on [ab] is monotone (a Möbius derivative without a pole there),
    so its infimum is attained at an endpoint of the cylinder M_a(Δ_b).
    """
    M = np.array([[float(v) for v in ind.branch(s).inv] for s in syms])
    dom = np.array([[float(v) for v in ind.branch(s).domain] for s in syms])
    worst, arg = math.inf, None
    for i, a in enumerate(syms):
        ok = np.array([ind.rule(a, b) for b in syms])
        if not ok.any():
            continue
        A, B, C, D = M[i]
        Mb = M[ok]
        P = np.stack([A * Mb[:, 0] + B * Mb[:, 2], A * Mb[:, 1] + B * Mb[:, 3],
                      C * Mb[:, 0] + D * Mb[:, 2], C * Mb[:, 1] + D * Mb[:, 3]], axis=1)
        det = np.abs(P[:, 0] * P[:, 3] - P[:, 1] * P[:, 2])
        vals = []
        for y in (dom[ok, 0], dom[ok, 1]):
            x = (A * y + B) / (C * y + D)
            vals.append(det / (P[:, 0] - P[:, 2] * x) ** 2)
        v = np.minimum(vals[0], vals[1])
        k = int(np.argmin(v))
        if v[k] < worst:
            worst, arg = float(v[k]), (a, [b for b, o in zip(syms, ok) if o][k])
    return worst, arg


def _branch_deriv(fmap: MarkovMap, M, x) -> float:
    """|(F)'(x)| for the forward map F whose inverse is M, at base point x."""
    if fmap.ambient == "circle":
        return fmap.forward_deriv(M, x)
    a, b, c, d = (float(v) for v in M)
    return abs(a * d - b * c) / (a - c * float(x)) ** 2


# ---------------------------------------------------------------------------
# Distortion

@dataclass(frozen=True)
class InducedDistortionBound:
    C: float
    truncation: int
    sampled_max: float
    block_C: Optional[float] = None   # parabolic-block recipe, rescaled coordinates
    block_C0: Optional[float] = None


def _mobius_distortion(M, image) -> float:
    """sup |log F'(x) - log F'(y)| / |F x - F y| for F = M^-1: 2|c| / min |c u + d| over the image."""
    a, b, c, d = (float(v) for v in M)
    if c == 0:
        return 0.0
    lo, hi = (float(v) for v in image)
    if (c * lo + d) * (c * hi + d) <= 0:
        return math.inf
    return 2 * abs(c) / min(abs(c * lo + d), abs(c * hi + d))


def parabolic_block_constant(base: MarkovMap, nu: int):
    """C0 = sup|g''| and C = C0 e^{2 C0}/|g I_1| for the neutral branch rescaled to [0, 1].

    g(x) = f(L x)/L with L the length of the neutral partition element, so
    g(0) = 0 and g'(0) = 1.  Returns (C0, C) or None when the neutral point is
    not the left endpoint.
    """
    br = base.branch(nu)
    if not isinstance(br, MobiusBranch):
        return None
    x0 = base.neutral[nu]
    lo, hi = (float(v) for v in br.domain)
    if abs(x0 - lo) > 1e-15:
        return None
    L = hi - lo
    a, b, c, d = (float(v) for v in br.inv)
    F = (d, -b, -c, a)                         # forward matrix
    det = a * d - b * c

    def g(x):
        return (mob(F, lo + L * x) - lo) / L

    # g'' = L f''(lo + L x); f'' = 2 c det / (a - c x)^3 is monotone, so endpoints suffice
    def g2(x):
        xx = lo + L * x
        return abs(L * 2 * c * det / (a - c * xx) ** 3)

    C0 = max(g2(0.0), g2(1.0))
    gI1 = g(1.0) - 1.0                          # g maps I_1 = (g^-1(1), 1] onto (1, g(1)]
    return C0, C0 * math.exp(2 * C0) / gI1


def estimate_distortion_constant(scheme: InducingScheme, truncation: Optional[int] = None,
                                 samples: int = 10_000, seed: int = 0) -> InducedDistortionBound:
    ind = scheme.induced
    syms = ind.alphabet.symbols
    if truncation is not None:
        syms = tuple(s for s in syms if scheme.pattern(s).tau <= truncation + 1)
    C = 0.0
    for s in syms:
        br = ind.branch(s)
        C = max(C, _mobius_distortion(br.inv, br.image))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        s = syms[int(rng.integers(len(syms)))]
        br = ind.branch(s)
        lo, hi = (float(v) for v in br.domain)
        x, y = lo + (hi - lo) * rng.random(2)
        fx, fy = br.forward(x), br.forward(y)
        if fx == fy:
            continue
        ratio = abs(math.log(br.deriv(x)) - math.log(br.deriv(y))) / abs(fx - fy)
        worst = max(worst, ratio)
    block_est = None
    for nu in scheme.base.neutral:
        r = parabolic_block_constant(scheme.base, nu)
        if r is not None:
            block_est = r
            break
    return InducedDistortionBound(C, truncation if truncation is not None else -1, worst,
                                  None if block_est is None else block_est[1], None if block_est is None else block_est[0])


# ---------------------------------------------------------------------------
# Observables and Abramov-Kac projection

def lift_observable(scheme: InducingScheme, obs: Observable) -> Observable:
    """Induced observable S_tau(phi); log|f'| lifts to log|f~'|."""
    if obs.kind == "logderiv":
        return obs
    tmin = min(scheme.taus)
    depth = 1 + max(0, -(-(obs.depth - 1) // tmin))
    pats = scheme.patterns

    def val(word):
        base: list = []
        for s in word:
            base.extend(pats[s - 1].word)
        tau = pats[word[0] - 1].tau
        return math.fsum(obs.value(tuple(base[j:j + obs.depth])) for j in range(tau))

    return Observable(f"lift[{obs.name}]", "local", depth, {}, val, obs.bounded and max(scheme.taus) < math.inf,
                      spec=f"lift:{obs.spec}")


def return_time(scheme: InducingScheme) -> Observable:
    taus = scheme.taus
    return Observable("tau", "local", 1, {}, lambda w: taus[w[0] - 1], False, spec="tau")


def project_measure(scheme: InducingScheme, cert, observables: Sequence[Observable] = ()):
    """Abramov-Kac: h = h~/E[tau], chi = chi~/E[tau], integral phi = E[S_tau phi]/E[tau]."""
    if isinstance(cert, PeriodicDiracCert):
        word = scheme.base_word(cert.word)
        n = len(word)
        for k in range(1, n + 1):
            if n % k == 0 and word == word[:k] * (n // k):
                word = word[:k]
                break
        return periodic_cert(scheme.base, word)
    if not isinstance(cert, MarkovMeasureCert):
        raise InputError("projection expects a Markov or periodic certificate on the induced map")
    mass = cert.edge_mass
    tau_of = scheme.taus
    taus = np.array([tau_of[w[0] - 1] for w in cert.edge_words()], dtype=float)
    mean_tau = math.fsum((mass * taus).tolist())
    chi = cert.chi.scale(1.0 / mean_tau)
    out = ProjectedCert(scheme.base.spec, cert, tuple(p.word for p in scheme.patterns),
                        scheme.taus, mean_tau, cert.h / mean_tau, chi, {}, dict(scheme.description or {}))
    from .measures import integrate
    for obs in observables:
        integrate(out, obs)
    return out


# ---------------------------------------------------------------------------
# Standard schemes

def renyi_jump_scheme(base: MarkovMap, suffixes: Sequence[int], k_max: int, nu: int = 1,
                      validate: bool = True) -> InducingScheme:
    """Patterns nu^k a (k = 0..k_max, a in suffixes): the first-entry transform."""
    desc = {"base": base.spec, "patterns": [{"prefix_symbol": nu, "repeat_range": [0, k_max],
                                             "suffix_set": sorted(suffixes), "order": "prefix-first"}]}
    return build_jump_transform(base, desc, desc, validate)


def first_return_scheme(base: MarkovMap, suffixes: Sequence[int], k_max: int, nu: int = 1,
                        validate: bool = True) -> InducingScheme:
    """First return to the hull of Δ_a, a in ``suffixes``: patterns a nu^k."""
    desc = {"base": base.spec, "patterns": [{"prefix_symbol": nu, "repeat_range": [0, k_max],
                                             "suffix_set": sorted(suffixes), "order": "suffix-first",
                                             "target": sorted(suffixes)}]}
    return build_jump_transform(base, desc, desc, validate)


def load_scheme(base: MarkovMap, path_or_dict) -> InducingScheme:
    if isinstance(path_or_dict, dict):
        d = path_or_dict
    else:
        with open(path_or_dict) as fh:
            d = json.load(fh)
    return build_jump_transform(base, d, d)


# ---------------------------------------------------------------------------
# Bowen roots of parabolic subsystems

@dataclass(frozen=True)
class ParabolicRoot:
    t: Bracket
    truncated_lower: Optional[float]  # root of the finite truncated induced subsystem
    nodes: int
    direct_terms: int
    flags: tuple = ()

    def to_json(self) -> dict:
        return {"t": [self.t.lo, self.t.hi], "t_mid": self.t.mid, "truncated_lower": self.truncated_lower,
                "nodes": self.nodes, "direct_terms": self.direct_terms, "flags": list(self.flags)}


def _parabolic_parameters(base: MarkovMap, nu: int):
    br = base.branch(nu)
    p = base.neutral[nu]
    if abs(float(br.forward(p)) - p) > 1e-12:
        raise InputError(f"neutral index {nu} has no neutral fixed point")
    P = br.inv
    z0 = 0.5 * (float(br.domain[0]) + float(br.domain[1]))
    kappa = 1.0 / (mob(P, z0) - p) - 1.0 / (z0 - p)
    return p, kappa


class InducedCollocation:
    """Chebyshev collocation of the induced transfer operator for nu^k a branches.

    L_t phi(y) = sum_a |G_a'(y)|^t sum_k |(P^k)'(z)|^t phi(P^k z), z = G_a y,
    with P the parabolic inverse branch, P^k z = p + u/(1 + k kappa u).
    Terms k <= K are evaluated directly; the tail is summed exactly with
    Hurwitz zeta values after a Taylor expansion of the basis at p.
    """

    def __init__(self, base: MarkovMap, nu: int, suffixes: Sequence[int], nodes: int,
                 direct_terms: int = 64, taylor: int = 10, tail: bool = True):
        self.base, self.nu, self.N, self.K, self.R = base, nu, nodes, direct_terms, taylor
        self.tail = tail
        self.suffixes = tuple(sorted(suffixes))
        if not base.fully_branched:
            raise InputError("collocation scheme needs a fully branched base map")
        p, kappa = _parabolic_parameters(base, nu)
        self.p, self.kappa = p, kappa
        img = base.branch(nu).image
        a0, b0 = float(img[0]), float(img[1])
        self.interval = (a0, b0)
        N = nodes
        j = np.arange(N)
        xi = np.cos(np.pi * (2 * j + 1) / (2 * N))               # first-kind nodes
        y = a0 + (b0 - a0) * (xi + 1) / 2
        V = C.chebvander(xi, N - 1)
        Cinv = np.linalg.inv(V)                                  # coefficients of Lagrange basis

        def basis(x):
            return C.chebvander(2 * (np.asarray(x) - a0) / (b0 - a0) - 1, N - 1) @ Cinv

        # Taylor coefficients of each basis function at p, in powers of (x - p)
        xi_p = 2 * (p - a0) / (b0 - a0) - 1
        taylor_rows = []
        for r in range(taylor + 1):
            d = np.zeros(N)
            for m in range(N):
                e = np.zeros(N)
                e[m] = 1.0
                d[m] = C.chebval(xi_p, C.chebder(e, r)) if r <= m else 0.0
            taylor_rows.append((d @ Cinv) * (2 / (b0 - a0)) ** r / math.factorial(r))
        T = np.array(taylor_rows)                                # (R+1, N)

        self.blocks = []
        K = direct_terms
        ks = np.arange(K + 1, dtype=float)
        for a in self.suffixes:
            G = tuple(float(v) for v in base.branch(a).inv)
            ga, gb, gc, gd = G
            z = (ga * y + gb) / (gc * y + gd)
            logw_a = math.log(abs(ga * gd - gb * gc)) - 2 * np.log(np.abs(gc * y + gd))
            u = z - p
            s = kappa * u
            if np.any(s <= 0):
                raise InputError("orbit of the parabolic branch does not approach its fixed point")
            X = p + u[:, None] / (1 + ks[None, :] * s[:, None])  # (N, K+1)
            logw_k = -2 * np.log1p(ks[None, :] * s[:, None])
            B = basis(X.ravel()).reshape(N, K + 1, N)
            coef = T * (1.0 / kappa) ** np.arange(taylor + 1)[:, None]
            self.blocks.append((logw_a, logw_k, B, s, coef))

    def matrix(self, t: float) -> np.ndarray:
        N, K, R = self.N, self.K, self.R
        A = np.zeros((N, N))
        orders = np.arange(R + 1)
        for logw_a, logw_k, B, s, coef in self.blocks:
            wk = np.exp(t * logw_k)                              # (N, K+1)
            direct = np.einsum("jk,jki->ji", wk, B)
            # tail: s^{-2t} sum_r coef_r zeta(2t + r, K + 1 + 1/s)
            Z = zeta(2 * t + orders[None, :], (K + 1 + 1 / s)[:, None])   # (N, R+1)
            tail = (s ** (-2 * t))[:, None] * (Z @ coef)
            A += np.exp(t * logw_a)[:, None] * (direct + tail if self.tail else direct)
        return A

    def log_radius(self, t: float) -> float:
        ev = np.linalg.eigvals(self.matrix(t))
        return math.log(float(np.max(np.abs(ev))))

    def root(self, xtol: float = 1e-14) -> float:
        lo = 0.5 + 1e-9 if self.tail else 1e-6
        while self.log_radius(lo) <= 0:
            lo = 0.5 + (lo - 0.5) / 10
            if lo - 0.5 < 1e-15:
                return 0.5
        hi = 1.0
        while self.log_radius(hi) > 0:
            hi *= 1.5
            if hi > 16:
                raise InputError("no zero of the induced pressure below 16")
        return brentq(self.log_radius, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)


def collocation_nodes(depth: int) -> int:
    return 8 + 4 * depth


def parabolic_bowen_root(base: MarkovMap, subalphabet: Sequence[int], depth: int = 6,
                         budget: int = 64, lower: bool = False, lower_depth: int = 1) -> ParabolicRoot:
    """Bowen root of a subsystem whose alphabet contains the parabolic index.

    ``depth`` fixes the collocation order, ``budget`` the number of directly
    summed parabolic blocks (and the truncation for the optional finite
    lower bound).  The bracket half-width is the change against a coarser
    collocation plus a floor for the tail expansion.
    """
    syms = sorted(set(subalphabet))
    nus = [a for a in syms if a in base.neutral]
    if not nus:
        raise InputError("subalphabet has no neutral index; use thermo.bowen_root")
    if len(nus) > 1:
        raise InputError("only one neutral index per subalphabet is supported")
    nu = nus[0]
    others = [a for a in syms if a != nu]
    if not others:
        # only the neutral branch: the limit set is its fixed point
        return ParabolicRoot(Bracket.exact(0.0), 0.0, 0, 0, ("single-point",))
    N = collocation_nodes(depth)
    fine = InducedCollocation(base, nu, others, N, budget).root()
    coarse = InducedCollocation(base, nu, others, max(4, N - 4), budget).root()
    err = abs(fine - coarse) + 1e-12
    lo_cert = None
    flags = []
    if lower:
        from .thermo import bowen_root, build_subsystem
        scheme = renyi_jump_scheme(base, others, budget, nu, validate=False)
        sub = build_subsystem(scheme.induced, scheme.induced.alphabet.symbols, lower_depth, check_irreducible=False)
        lo_cert = bowen_root(sub).t.lo
        if lo_cert > fine + err:
            flags.append("inconsistent-lower-bound")
    lo = fine - err
    if lo_cert is not None:
        lo = max(lo, min(lo_cert, fine))
    return ParabolicRoot(Bracket(down(lo), fine, up(fine + err)), lo_cert, N, budget, tuple(flags))
