"""Finitely described invariant measures and their entropy, Lyapunov exponent,
integrals and dimension.

Three certificate kinds cover everything the solvers produce: stationary
Markov chains on depth-d word states, periodic orbit averages, and finite
convex combinations of those.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .interval import Bracket, down, up, weighted_sum
from .maps import MarkovMap, MobiusBranch, Observable, map_from_name
from .symbolic import InputError


@dataclass(frozen=True)
class DimensionValue:
    lo: float
    mid: float
    hi: float
    zero_convention: bool = False     # chi = 0, dimension set to 0
    indeterminate: bool = False       # chi bracket straddles 0 while h > 0

    def as_list(self):
        return [self.lo, self.hi]

    def contains(self, x, slack=0.0):
        return self.lo - slack <= x <= self.hi + slack


def dimension_from(h: float, chi: Bracket) -> DimensionValue:
    """h/chi bracket clipped to [0, 1], with dim = 0 when chi = 0."""
    if chi.hi <= 0.0 or h <= 0.0:
        zero = chi.hi <= 0.0
        if h > 0.0 and chi.hi <= 0.0:
            # positive entropy with zero exponent cannot occur on a genuine measure
            return DimensionValue(0.0, 0.0, 1.0, True, True)
        return DimensionValue(0.0, 0.0, 0.0, zero)
    lo = h / chi.hi
    mid = h / chi.mid if chi.mid > 0 else 1.0
    if chi.lo <= 0.0:
        return DimensionValue(min(down(lo), 1.0), min(mid, 1.0), 1.0, False, True)
    hi = h / chi.lo
    lo, hi = max(0.0, min(down(lo), 1.0)), min(up(hi), 1.0)
    return DimensionValue(lo, min(max(mid, lo), hi), hi)


def _bracket_json(b: Optional[Bracket]):
    return None if b is None else [b.lo, b.hi]


# ---------------------------------------------------------------------------
# Markov certificates

@dataclass(frozen=True, eq=False)
class MarkovMeasureCert:
    map_spec: str
    subalphabet: tuple
    depth: int
    states: tuple                   # depth-d words
    rows: np.ndarray                # transition i -> j with probability q
    cols: np.ndarray
    q: np.ndarray
    p: np.ndarray
    h: float
    chi: Optional[Bracket] = None
    integrals: dict = field(default_factory=dict)
    flags: tuple = ()

    kind = "markov"

    @property
    def edge_mass(self) -> np.ndarray:
        return self.p[self.rows] * self.q

    def edge_words(self):
        st = self.states
        return [st[i] + (st[j][-1],) for i, j in zip(self.rows.tolist(), self.cols.tolist())]

    def kernel(self) -> sp.csr_matrix:
        n = len(self.states)
        return sp.csr_matrix((self.q, (self.rows, self.cols)), shape=(n, n))

    def stationarity_residual(self) -> float:
        return float(np.max(np.abs(self.kernel().T @ self.p - self.p)))

    @property
    def dim(self) -> Optional[DimensionValue]:
        return None if self.chi is None else dimension_from(self.h, self.chi)

    def signature(self):
        return ("markov", self.map_spec, self.subalphabet, self.depth, self.states,
                tuple(np.round(self.q, 14)), tuple(self.rows.tolist()), tuple(self.cols.tolist()))

    def to_json(self) -> dict:
        d = self.dim
        return {
            "type": "markov", "map": self.map_spec, "subalphabet": list(self.subalphabet),
            "depth": self.depth, "states": [list(s) for s in self.states],
            "Q": [[int(i), int(j), float(v)] for i, j, v in zip(self.rows, self.cols, self.q)],
            "p": [float(v) for v in self.p], "h": self.h,
            "chi": _bracket_json(self.chi), "chi_mid": None if self.chi is None else self.chi.mid,
            "integrals": {k: [b.lo, b.mid, b.hi] for k, b in sorted(self.integrals.items())},
            "dim": None if d is None else d.as_list(), "flags": list(self.flags),
        }


def _edges_from(states, transitions):
    index = {s: i for i, s in enumerate(states)}
    rows, cols, vals = [], [], []
    for (s, t), v in transitions.items():
        rows.append(index[s])
        cols.append(index[t])
        vals.append(v)
    return np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(vals, dtype=float)


def stationary_vector(n, rows, cols, q, start=None, tol=1e-13, max_iter=100_000):
    """Stationary distribution of a stochastic kernel, refined by lazy power steps."""
    K = sp.csr_matrix((q, (rows, cols)), shape=(n, n)).T.tocsr()
    p = np.full(n, 1.0 / n) if start is None else np.asarray(start, dtype=float) / np.sum(start)
    for _ in range(max_iter):
        nxt = K @ p
        if np.max(np.abs(nxt - p)) <= tol:
            p = nxt
            break
        p = 0.5 * (p + nxt)   # lazy chain: same stationary law, aperiodic
        p /= p.sum()
    return p / p.sum()


def entropy_rate(p, rows, q) -> float:
    mask = q > 0
    return max(0.0, -math.fsum((p[rows[mask]] * q[mask] * np.log(q[mask])).tolist()))


def markov_cert(fmap: Optional[MarkovMap], subalphabet, depth: int, states, rows, cols, q,
                p=None, edge_logd=None, flags=(), map_spec=None) -> MarkovMeasureCert:
    """Assemble a certificate; computes p (if absent), h and the chi bracket."""
    states = tuple(tuple(s) for s in states)
    rows, cols, q = np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64), np.asarray(q, dtype=float)
    n = len(states)
    if np.any(q < 0):
        raise InputError("negative transition probability")
    sums = np.bincount(rows, weights=q, minlength=n)
    if np.max(np.abs(sums - 1.0)) > 1e-12:
        raise InputError("kernel rows do not sum to 1")
    if fmap is not None:
        for i, j in zip(rows.tolist(), cols.tolist()):
            if states[i][1:] != states[j][:-1]:
                raise InputError("kernel transition does not shift states")
            if not fmap.rule(states[i][-1], states[j][-1]):
                raise InputError("kernel supported on an inadmissible transition")
    if p is None:
        p = stationary_vector(n, rows, cols, q)
    else:
        p = np.asarray(p, dtype=float)
        p = p / p.sum()
        K = sp.csr_matrix((q, (rows, cols)), shape=(n, n)).T.tocsr()
        if np.max(np.abs(K @ p - p)) > 1e-12:
            p = stationary_vector(n, rows, cols, q, start=p)
    h = entropy_rate(p, rows, q)
    spec = map_spec or (fmap.spec if fmap is not None else "symbolic")
    cert = MarkovMeasureCert(spec, tuple(sorted(subalphabet)), depth, states, rows, cols, q, p, h,
                             None, {}, tuple(flags))
    chi = None
    if edge_logd is not None:
        lo, mid, hi = edge_logd
        w = cert.edge_mass
        chi = Bracket(down(math.fsum((w * lo).tolist())), math.fsum((w * mid).tolist()),
                      up(math.fsum((w * hi).tolist())))
    elif fmap is not None:
        chi = _chi_by_cylinders(cert, fmap)
    return MarkovMeasureCert(spec, cert.subalphabet, depth, states, rows, cols, q, p, h, chi, {}, tuple(flags))


def _chi_by_cylinders(cert, fmap) -> Bracket:
    w = cert.edge_mass
    brs = [fmap.log_deriv_bracket(word) for word in cert.edge_words()]
    return weighted_sum(w.tolist(), brs)


CHI_BUDGET = 400_000                 # cylinder evaluations spent on refining chi
CHI_TARGET = 1e-5                   # stop once the mass-weighted bracket width is below this
_CHI_BATCH = 32                     # leaves split per vectorized step


def refine_chi(cert: MarkovMeasureCert, fmap: MarkovMap, budget: int = CHI_BUDGET,
               target: float = CHI_TARGET) -> MarkovMeasureCert:
    """Same measure with a tighter chi bracket from deeper cylinders.

    A Markov measure fixes the mass of every cylinder, so the cylinders with
    the largest mass times bracket width are split into their one-step
    extensions until the total width drops below ``target`` or ``budget``
    cylinders have been bracketed. The result depends only on the kernel, the
    vector and the map, so an auditor rebuilding the certificate gets the same
    bracket.
    """
    syms = {s for st in cert.states for s in st}
    if fmap.ambient == "interval" and all(isinstance(fmap.branch(s), MobiusBranch) for s in syms):
        chi = _refine_mobius(cert, fmap, budget, target)
    else:
        # scalar path: one cylinder per call, so only a small share of the budget
        chi = _refine_generic(cert, fmap, budget // 100, target)
    return replace(cert, chi=chi, integrals={})


def _successors(cert):
    succ: dict = {}
    for i, j, v in zip(cert.rows.tolist(), cert.cols.tolist(), cert.q.tolist()):
        if v > 0:
            succ.setdefault(i, []).append((j, v))
    return succ


def _refine_generic(cert, fmap, budget, target) -> Bracket:
    succ = _successors(cert)
    heap, count, total = [], 0, 0.0
    for word, j, m in zip(cert.edge_words(), cert.cols.tolist(), cert.edge_mass.tolist()):
        if m <= 0:
            continue
        br = fmap.log_deriv_bracket(word)
        count += 1
        total += m * (br.hi - br.lo)
        heapq.heappush(heap, (-m * (br.hi - br.lo), count, word, j, m, br))
    while heap and total > target and count < budget and heap[0][0] < 0:
        negw, _, word, i, m, br = heapq.heappop(heap)
        total += negw
        for j, v in succ.get(i, ()):
            child = word + (cert.states[j][-1],)
            cb = fmap.log_deriv_bracket(child)
            count += 1
            total += m * v * (cb.hi - cb.lo)
            heapq.heappush(heap, (-m * v * (cb.hi - cb.lo), count, child, j, m * v, cb))
    return weighted_sum([t[4] for t in heap], [t[5] for t in heap])


def _mob_rows(M, y):
    return (M[:, 0] * y + M[:, 1]) / (M[:, 2] * y + M[:, 3])


def _refine_mobius(cert, fmap, budget, target) -> Bracket:
    succ = _successors(cert)
    states = cert.states
    inv = {s: np.array([float(v) for v in fmap.branch(s).inv]) for s in {s for st in states for s in st}}
    dom = {s: tuple(float(v) for v in fmap.branch(s).domain) for s in inv}
    kids = {}
    for i, lst in succ.items():
        js = np.array([j for j, _ in lst], dtype=np.int64)
        last = [states[j][-1] for j, _ in lst]
        kids[i] = (js, np.array([v for _, v in lst]), np.array([dom[c][0] for c in last]),
                   np.array([dom[c][1] for c in last]))

    cap = budget + len(cert.q) + 1
    first = np.empty(cap, dtype=np.int64)
    mats = np.empty((cap, 4))
    state = np.empty(cap, dtype=np.int64)
    mass, blo, bmid, bhi = np.empty(cap), np.empty(cap), np.empty(cap), np.empty(cap)
    alive = np.zeros(cap, dtype=bool)
    n = 0

    def add(f, M, js, m, lo, hi):
        nonlocal n
        lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
        slack = 1e-14 * (1.0 + np.abs(lo) + np.abs(hi))
        a, md, b = fmap.log_deriv_arrays(f, lo - slack, hi + slack)
        k = len(js)
        sl = slice(n, n + k)
        first[sl], mats[sl], state[sl], mass[sl] = f, M, js, m
        blo[sl], bmid[sl], bhi[sl] = a, md, b
        alive[sl] = m > 0
        n += k
        return [(-float(w), idx) for w, idx in zip(m * (b - a), range(sl.start, sl.stop)) if w > 0]

    # edges: prefix matrix of word[:-1] applied to the domain of the last symbol
    words = cert.edge_words()
    M0 = np.array([[float(v) for v in fmap.composed_inverse(w[:-1])] for w in words]).reshape(-1, 4)
    f0 = np.array([w[0] for w in words], dtype=np.int64)
    lo0 = np.array([dom[w[-1]][0] for w in words])
    hi0 = np.array([dom[w[-1]][1] for w in words])
    heap = add(f0, M0, cert.cols.astype(np.int64), cert.edge_mass, _mob_rows(M0, lo0), _mob_rows(M0, hi0))
    heapq.heapify(heap)
    total = float(np.sum((mass[:n] * (bhi[:n] - blo[:n]))[alive[:n]]))
    while heap and total > target:
        batch = []
        while heap and len(batch) < _CHI_BATCH:
            batch.append(heapq.heappop(heap))
        need = sum(len(kids.get(int(state[i]), ((),))[0]) for _, i in batch)
        if n + need > cap:
            for item in batch:
                heapq.heappush(heap, item)
            break
        parts = []
        for negw, i in batch:
            total += negw
            alive[i] = False
            if int(state[i]) not in kids:
                continue
            js, qv, dlo, dhi = kids[int(state[i])]
            last = states[int(state[i])][-1]
            a, b, c, d = mats[i]
            la, lb, lc, ld = inv[last]
            Mn = np.array([a * la + b * lc, a * lb + b * ld, c * la + d * lc, c * lb + d * ld])
            parts.append((np.full(len(js), first[i]), np.tile(Mn, (len(js), 1)), js, mass[i] * qv, dlo, dhi))
        if not parts:
            continue
        f = np.concatenate([p[0] for p in parts])
        M = np.concatenate([p[1] for p in parts])
        js = np.concatenate([p[2] for p in parts])
        m = np.concatenate([p[3] for p in parts])
        lo, hi = _mob_rows(M, np.concatenate([p[4] for p in parts])), _mob_rows(M, np.concatenate([p[5] for p in parts]))
        start = n
        for item in add(f, M, js, m, lo, hi):
            heapq.heappush(heap, item)
        total += float(np.sum(m * (bhi[start:n] - blo[start:n])))
    sel = alive[:n]
    m, lo, md, hi = mass[:n][sel], blo[:n][sel], bmid[:n][sel], bhi[:n][sel]
    slo, shi = math.fsum((m * lo).tolist()), math.fsum((m * hi).tolist())
    pad_lo = 4e-16 * math.fsum(np.abs(m * lo).tolist())
    pad_hi = 4e-16 * math.fsum(np.abs(m * hi).tolist())
    mid = math.fsum((m * md).tolist())
    lo_b, hi_b = down(slo - pad_lo), up(shi + pad_hi)
    return Bracket(lo_b, min(max(mid, lo_b), hi_b), hi_b)


def bernoulli_cert(fmap: Optional[MarkovMap], probs: dict) -> MarkovMeasureCert:
    """Depth-1 product measure with symbol weights ``probs``."""
    syms = sorted(probs)
    states = [(a,) for a in syms]
    trans = {}
    for a in syms:
        for b in syms:
            if probs[b] > 0 and (fmap is None or fmap.rule(a, b)):
                trans[((a,), (b,))] = float(probs[b])
    rows, cols, q = _edges_from(states, trans)
    p = np.array([probs[a] for a in syms], dtype=float)
    return markov_cert(fmap, syms, 1, states, rows, cols, q, p=p)


def markov_from_json(d: dict, fmap: Optional[MarkovMap] = None) -> MarkovMeasureCert:
    trip = d["Q"]
    rows = np.array([t[0] for t in trip], dtype=np.int64)
    cols = np.array([t[1] for t in trip], dtype=np.int64)
    q = np.array([t[2] for t in trip], dtype=float)
    chi = None
    if d.get("chi") is not None:
        chi = Bracket(d["chi"][0], d["chi_mid"], d["chi"][1])
    ints = {k: Bracket(*v) for k, v in d.get("integrals", {}).items()}
    return MarkovMeasureCert(d["map"], tuple(d["subalphabet"]), d["depth"],
                             tuple(tuple(s) for s in d["states"]), rows, cols, q,
                             np.array(d["p"], dtype=float), d["h"], chi, ints, tuple(d.get("flags", ())))


# ---------------------------------------------------------------------------
# Periodic orbits

@dataclass(frozen=True, eq=False)
class PeriodicDiracCert:
    map_spec: str
    word: tuple
    points: tuple
    chi: Bracket
    integrals: dict = field(default_factory=dict)

    kind = "periodic"
    h = 0.0

    @property
    def period(self) -> int:
        return len(self.word)

    @property
    def dim(self) -> DimensionValue:
        return dimension_from(0.0, self.chi)

    def signature(self):
        return ("periodic", self.map_spec, _canonical_rotation(self.word))

    def to_json(self) -> dict:
        return {"type": "periodic", "map": self.map_spec, "word": list(self.word),
                "points": list(self.points), "h": 0.0, "chi": _bracket_json(self.chi), "chi_mid": self.chi.mid,
                "integrals": {k: [b.lo, b.mid, b.hi] for k, b in sorted(self.integrals.items())},
                "dim": self.dim.as_list()}


def _canonical_rotation(word):
    return min(word[k:] + word[:k] for k in range(len(word)))


def _primitive(word) -> bool:
    n = len(word)
    return all(word != word[k:] + word[:k] for k in range(1, n) if n % k == 0)


def periodic_cert(fmap: MarkovMap, word: Sequence[int]) -> PeriodicDiracCert:
    word = tuple(word)
    if not word:
        raise InputError("empty periodic word")
    if not _primitive(word):
        raise InputError(f"periodic word {word} is not primitive")
    pts = fmap.orbit(word)
    # orbit must close: applying the forward branches returns to the start
    x = pts[0]
    for s in word:
        x = fmap.branch(s).forward(x)
    if abs(x - pts[0]) > 1e-9 and not (fmap.ambient == "circle" and abs(abs(x - pts[0]) - 2 * math.pi) < 1e-9):
        raise InputError(f"periodic orbit of {word} failed to close ({x} vs {pts[0]})")
    chi = fmap.cycle_log_deriv(word, pts[0]) / len(word)
    if abs(chi) < 1e-13:
        chi = 0.0
    slack = 1e-13 * (1 + abs(chi))
    br = Bracket.exact(0.0) if chi == 0.0 else Bracket(chi - slack, chi, chi + slack)
    return PeriodicDiracCert(fmap.spec, word, tuple(pts), br)


def periodic_from_json(d: dict) -> PeriodicDiracCert:
    ints = {k: Bracket(*v) for k, v in d.get("integrals", {}).items()}
    return PeriodicDiracCert(d["map"], tuple(d["word"]), tuple(d["points"]),
                             Bracket(d["chi"][0], d["chi_mid"], d["chi"][1]), ints)


# ---------------------------------------------------------------------------
# Mixtures

@dataclass(frozen=True, eq=False)
class MixtureCert:
    components: tuple               # ((weight, cert), ...)
    h: float
    chi: Bracket
    integrals: dict = field(default_factory=dict)

    kind = "mixture"

    @property
    def map_spec(self):
        return self.components[0][1].map_spec

    @property
    def dim(self) -> DimensionValue:
        return dimension_from(self.h, self.chi)

    def signature(self):
        return ("mixture", tuple((w, c.signature()) for w, c in self.components))

    def to_json(self) -> dict:
        return {"type": "mixture", "components": [[w, c.to_json()] for w, c in self.components],
                "h": self.h, "chi": _bracket_json(self.chi), "chi_mid": self.chi.mid,
                "integrals": {k: [b.lo, b.mid, b.hi] for k, b in sorted(self.integrals.items())},
                "dim": self.dim.as_list()}


def mix(components) -> MixtureCert:
    """Convex combination; h, chi and integrals combine affinely, dim is recomputed."""
    comps = []
    for w, c in components:
        if w < 0:
            raise InputError("negative mixture weight")
        if w == 0:
            continue
        if isinstance(c, MixtureCert):
            comps.extend((w * w2, c2) for w2, c2 in c.components)
        else:
            comps.append((float(w), c))
    total = math.fsum(w for w, _ in comps)
    if abs(total - 1.0) > 1e-12:
        raise InputError(f"mixture weights sum to {total}, not 1")
    seen = set()
    for _, c in comps:
        sig = c.signature()
        if sig in seen:
            raise InputError("mixture components must be distinct ergodic certificates")
        seen.add(sig)
    ws = [w for w, _ in comps]
    h = math.fsum(w * c.h for w, c in comps)
    if len(comps) == 1:
        chi = comps[0][1].chi
    else:
        chi = weighted_sum(ws, [c.chi for _, c in comps])
    return MixtureCert(tuple(comps), h, chi, {})


# ---------------------------------------------------------------------------
# Measures induced on a return-time scheme and spread back to the base map

@dataclass(frozen=True, eq=False)
class ProjectedCert:
    """Base-map measure obtained from an induced Markov certificate.

    ``patterns[i - 1]`` is the base word (length tau) of induced symbol i.
    Entropy, exponent and integrals are the induced ones divided by the
    mean return time.
    """

    map_spec: str
    induced: MarkovMeasureCert
    patterns: tuple
    taus: tuple
    mean_tau: float
    h: float
    chi: Bracket
    integrals: dict = field(default_factory=dict)
    scheme: dict = field(default_factory=dict)      # pattern description, enough to rebuild the induced map

    kind = "projected"

    @property
    def dim(self) -> DimensionValue:
        return dimension_from(self.h, self.chi)

    def signature(self):
        return ("projected", self.map_spec, self.patterns, self.induced.signature())

    def base_word(self, induced_word) -> tuple:
        out: list = []
        for s in induced_word:
            out.extend(self.patterns[s - 1])
        return tuple(out)

    def to_json(self) -> dict:
        return {"type": "projected", "map": self.map_spec, "induced": self.induced.to_json(),
                "patterns": [list(p) for p in self.patterns], "taus": list(self.taus),
                "mean_tau": self.mean_tau, "h": self.h, "chi": _bracket_json(self.chi), "chi_mid": self.chi.mid,
                "integrals": {k: [b.lo, b.mid, b.hi] for k, b in sorted(self.integrals.items())},
                "dim": self.dim.as_list(), "scheme": self.scheme}


def projected_from_json(d: dict) -> ProjectedCert:
    ints = {k: Bracket(*v) for k, v in d.get("integrals", {}).items()}
    return ProjectedCert(d["map"], markov_from_json(d["induced"]), tuple(tuple(p) for p in d["patterns"]),
                         tuple(d["taus"]), d["mean_tau"], d["h"], Bracket(d["chi"][0], d["chi_mid"], d["chi"][1]), ints,
                         d.get("scheme", {}))


def _projected_integral(cert: ProjectedCert, obs: Observable) -> Bracket:
    ind = cert.induced
    r = obs.depth
    total = []
    for word, m in zip(ind.edge_words(), ind.edge_mass.tolist()):
        base = cert.base_word(word)
        tau = cert.taus[word[0] - 1]
        if len(base) < tau - 1 + r:
            raise InputError(f"observable {obs.name} not resolved along return orbits; refine depth")
        total.append(m * math.fsum(obs.value(base[j:j + r]) for j in range(tau)))
    return Bracket.exact(math.fsum(total) / cert.mean_tau)


# ---------------------------------------------------------------------------
# Operations

def cert_from_json(d, fmap: Optional[MarkovMap] = None):
    if isinstance(d, str):
        d = json.loads(d)
    t = d["type"]
    if t == "markov":
        return markov_from_json(d)
    if t == "periodic":
        return periodic_from_json(d)
    if t == "projected":
        return projected_from_json(d)
    if t == "mixture":
        comps = tuple((w, cert_from_json(c)) for w, c in d["components"])
        ints = {k: Bracket(*v) for k, v in d.get("integrals", {}).items()}
        return MixtureCert(comps, d["h"], Bracket(d["chi"][0], d["chi_mid"], d["chi"][1]), ints)
    raise InputError(f"unknown certificate type {t!r}")


def entropy(cert) -> float:
    return cert.h


def lyapunov(cert, fmap: Optional[MarkovMap] = None) -> Bracket:
    if cert.chi is not None:
        return cert.chi
    if fmap is None:
        raise InputError("Lyapunov exponent needs the map")
    return _chi_by_cylinders(cert, fmap)


def _word_masses(cert: MarkovMeasureCert, r: int):
    """(word, mass) for all length-r words charged by a Markov certificate (r >= depth)."""
    d = cert.depth
    succ: dict = {}
    for i, j, v in zip(cert.rows.tolist(), cert.cols.tolist(), cert.q.tolist()):
        if v > 0:
            succ.setdefault(i, []).append((j, v))
    out = []

    def rec(i, word, mass):
        if len(word) == r:
            out.append((word, mass))
            return
        for j, v in succ.get(i, ()):
            rec(j, word + (cert.states[j][-1],), mass * v)

    for i, s in enumerate(cert.states):
        if cert.p[i] > 0:
            rec(i, s, float(cert.p[i]))
    return out


def integrate(cert, obs: Observable, fmap: Optional[MarkovMap] = None) -> Bracket:
    """Integral of ``obs``; exact for locally constant observables."""
    if obs.name in cert.integrals:
        return cert.integrals[obs.name]
    if obs.kind == "logderiv":
        res = lyapunov(cert, fmap)
    elif isinstance(cert, PeriodicDiracCert):
        n = len(cert.word)
        reps = cert.word * (obs.depth // n + 2)
        val = math.fsum(obs.value(reps[k:k + obs.depth]) for k in range(n)) / n
        res = Bracket.exact(val)
    elif isinstance(cert, ProjectedCert):
        res = _projected_integral(cert, obs)
    elif isinstance(cert, MixtureCert):
        parts = [integrate(c, obs, fmap) for _, c in cert.components]
        res = weighted_sum([w for w, _ in cert.components], parts) if len(parts) > 1 else parts[0]
    else:
        r = max(obs.depth, cert.depth + 1)
        if r == cert.depth + 1:
            words, mass = cert.edge_words(), cert.edge_mass.tolist()
        else:
            pairs = _word_masses(cert, r)
            words, mass = [w for w, _ in pairs], [m for _, m in pairs]
        val = math.fsum(m * obs.value(w) for w, m in zip(words, mass))
        res = Bracket.exact(val)
    cert.integrals[obs.name] = res
    return res


def dimension(cert, fmap: Optional[MarkovMap] = None) -> DimensionValue:
    return dimension_from(cert.h, lyapunov(cert, fmap))


def free_energy(cert, fmap: Optional[MarkovMap], beta: float) -> Bracket:
    chi = lyapunov(cert, fmap)
    if beta >= 0:
        return Bracket(down(cert.h - beta * chi.hi), cert.h - beta * chi.mid, up(cert.h - beta * chi.lo))
    return Bracket(down(cert.h - beta * chi.lo), cert.h - beta * chi.mid, up(cert.h - beta * chi.hi))


def cert_map(cert) -> MarkovMap:
    return map_from_name(cert.map_spec)
