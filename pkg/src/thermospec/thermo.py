"""Pressure on finite subsystems, equilibrium Markov measures, Bowen roots, beta_infinity.

A finite subsystem over a subalphabet A and memory depth d has the
admissible d-words as states and one edge per admissible (d+1)-word
``w``: from ``w[:-1]`` to ``w[1:]``.  Each edge carries the inf/mid/sup of
log|f'| over the cylinder of ``w`` and the values of locally constant
observables on ``w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .interval import Bracket, down, up
from .maps import MarkovMap, Observable
from .measures import MarkovMeasureCert, markov_cert
from .symbolic import InputError, check_finite_irreducibility


class EmptySubsystemError(InputError):
    pass


class ParabolicError(ValueError):
    """Subsystem contains a neutral cylinder; use the inducing module."""


class ConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Subsystems

@dataclass(eq=False)
class FiniteSubsystem:
    fmap: MarkovMap
    subalphabet: tuple
    depth: int
    states: list
    src: np.ndarray
    dst: np.ndarray
    edge_words: list
    logd: tuple                      # (inf, mid, sup) arrays over edges
    irreducibility: object = None
    flags: list = field(default_factory=list)
    _obs_cache: dict = field(default_factory=dict)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def observable_values(self, obs: Observable) -> np.ndarray:
        if obs.kind == "logderiv":
            return self.logd[1]
        if obs.depth > self.depth + 1:
            raise InputError(f"observable {obs.name} has depth {obs.depth} > subsystem resolution {self.depth + 1}")
        key = obs.name, obs.spec
        if key not in self._obs_cache:
            self._obs_cache[key] = np.array([obs.value(w) for w in self.edge_words], dtype=float)
        return self._obs_cache[key]

    def uniformly_expanding(self) -> bool:
        return bool(np.all(self.logd[0] > 0.0))

    def describe(self) -> dict:
        return {"map": self.fmap.spec, "subalphabet": list(self.subalphabet), "depth": self.depth,
                "states": self.n_states, "edges": self.n_edges, "flags": list(self.flags)}


def build_subsystem(fmap: MarkovMap, subalphabet: Sequence[int], depth: int,
                    check_irreducible: bool = True) -> FiniteSubsystem:
    syms = tuple(sorted(set(int(a) for a in subalphabet)))
    if not syms:
        raise InputError("empty subalphabet")
    if depth < 1:
        raise InputError("depth must be >= 1")
    words, los, his = [], [], []
    for w, lo, hi in fmap.iter_cylinders(syms, depth + 1):
        words.append(w)
        los.append(lo)
        his.append(hi)
    if not words:
        raise EmptySubsystemError("no admissible words")
    # prune dead states: keep only states that have a successor among live states
    live = {w[:-1] for w in words}
    while True:
        keep = [k for k, w in enumerate(words) if w[:-1] in live and w[1:] in live]
        nlive = {words[k][:-1] for k in keep}
        words, los, his = [words[k] for k in keep], [los[k] for k in keep], [his[k] for k in keep]
        if nlive == live:
            break
        live = nlive
    if not words:
        raise EmptySubsystemError("all states pruned")
    states = sorted(live)
    index = {s: i for i, s in enumerate(states)}
    src = np.array([index[w[:-1]] for w in words], dtype=np.int64)
    dst = np.array([index[w[1:]] for w in words], dtype=np.int64)
    logd = fmap.log_deriv_arrays([w[0] for w in words], los, his)
    cert = None
    flags = []
    if check_irreducible:
        cert = check_finite_irreducibility(fmap.rule, syms, len(syms))
        ncomp, labels = connected_components(
            sp.csr_matrix((np.ones(len(src)), (src, dst)), shape=(len(states),) * 2),
            directed=True, connection="strong")
        if ncomp > 1:
            flags.append("reducible")
    return FiniteSubsystem(fmap, syms, depth, states, src, dst, words, logd, cert, flags)


def restrict(sub: FiniteSubsystem, keep_states) -> FiniteSubsystem:
    keep = set(keep_states)
    sel = [k for k in range(sub.n_edges) if sub.src[k] in keep and sub.dst[k] in keep]
    old = sorted(keep)
    remap = {o: i for i, o in enumerate(old)}
    return FiniteSubsystem(sub.fmap, sub.subalphabet, sub.depth, [sub.states[o] for o in old],
                           np.array([remap[sub.src[k]] for k in sel], dtype=np.int64),
                           np.array([remap[sub.dst[k]] for k in sel], dtype=np.int64),
                           [sub.edge_words[k] for k in sel], tuple(a[sel] for a in sub.logd),
                           sub.irreducibility, sub.flags + ["restricted-to-dominant-component"])


# ---------------------------------------------------------------------------
# Potentials

@dataclass(frozen=True)
class PotentialSpec:
    """Phi = sum q_i phi_i - beta log|f'| + shift."""

    terms: tuple = ()               # ((coef, Observable), ...)
    beta: float = 0.0
    shift: float = 0.0

    def edge_values(self, sub: FiniteSubsystem):
        """(inf, mid, sup) of Phi on every edge."""
        const = np.full(sub.n_edges, float(self.shift))
        for c, obs in self.terms:
            if obs.kind == "logderiv":
                raise InputError("put log-derivative weight in beta, not in terms")
            const = const + c * sub.observable_values(obs)
        L0, L1, L2 = sub.logd
        b = self.beta
        if b >= 0:
            return const - b * L2, const - b * L1, const - b * L0
        return const - b * L0, const - b * L1, const - b * L2

    def with_beta(self, beta):
        return PotentialSpec(self.terms, beta, self.shift)


# ---------------------------------------------------------------------------
# Perron data

@dataclass(frozen=True)
class PerronData:
    lam: float
    log_lam: float                  # log lambda including the weight rescaling
    v: np.ndarray
    cw_lo: float                    # Collatz-Wielandt bounds for log lambda
    cw_hi: float
    residual: float
    iters: int


def _matrix(sub, phi):
    top = float(np.max(phi))
    w = np.exp(phi - top)
    n = sub.n_states
    return sp.csr_matrix((w, (sub.src, sub.dst)), shape=(n, n)), top


def perron(M: sp.csr_matrix, tol: float = 1e-12, max_iter: int = 100_000, start=None):
    """Power iteration from the all-ones vector with Collatz-Wielandt bounds.

    Periodic matrices make plain iteration oscillate; after a stall the
    iteration switches to M + sigma I, which has the same Perron vector.
    """
    n = M.shape[0]
    v = np.ones(n) if start is None else np.asarray(start, dtype=float).copy()
    v /= v.max()
    sigma = 0.0
    best_gap = math.inf
    stall = 0
    A = M
    for it in range(1, max_iter + 1):
        w = A @ v
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = w / v
        lo, hi = float(np.min(ratio)), float(np.max(ratio))
        mx = float(w.max())
        if mx <= 0 or not math.isfinite(mx):
            raise ConvergenceError("transfer matrix has no positive Perron root")
        v_new = w / mx
        gap = (hi - lo) / hi
        if gap <= tol:
            v = v_new
            lam = 0.5 * (lo + hi) - sigma
            Mv = M @ v
            res = float(np.max(np.abs(Mv - lam * v)) / np.max(v))
            return lam, v, lo - sigma, hi - sigma, res, it
        if gap < 0.999 * best_gap:
            best_gap, stall = gap, 0
        else:
            stall += 1
        if stall > 50 and sigma == 0.0:
            sigma = hi
            A = M + sigma * sp.identity(n, format="csr")
            best_gap, stall = math.inf, 0
        v = v_new
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations (gap {gap:.3e})")


def _perron_phi(sub, phi, tol=1e-12, start=None) -> PerronData:
    M, top = _matrix(sub, phi)
    lam, v, lo, hi, res, it = perron(M, tol, start=start)
    return PerronData(lam, math.log(lam) + top, v, math.log(max(lo, 1e-300)) + top,
                      math.log(hi) + top, res, it)


def _dominant(sub: FiniteSubsystem, phi) -> FiniteSubsystem:
    n = sub.n_states
    G = sp.csr_matrix((np.ones(sub.n_edges), (sub.src, sub.dst)), shape=(n, n))
    ncomp, labels = connected_components(G, directed=True, connection="strong")
    if ncomp == 1:
        return sub
    best, best_sub = -math.inf, None
    for c in range(ncomp):
        members = np.nonzero(labels == c)[0]
        cand = restrict(sub, members.tolist())
        if cand.n_edges == 0:
            continue
        P = _perron_phi(cand, phi[_edge_sel(sub, members)]).log_lam
        if P > best:
            best, best_sub = P, cand
    if best_sub is None:
        raise EmptySubsystemError("no strongly connected component carries an edge")
    return best_sub


def _edge_sel(sub, members):
    keep = set(int(m) for m in members)
    return [k for k in range(sub.n_edges) if int(sub.src[k]) in keep and int(sub.dst[k]) in keep]


@dataclass(frozen=True)
class PressureValue:
    lo: float
    hi: float
    mid: float
    lam: float                       # spectral radius of the (unscaled) mid matrix, may overflow to inf
    residual: float
    iters: int
    flags: tuple = ()

    @property
    def bracket(self) -> Bracket:
        return Bracket(self.lo, min(max(self.mid, self.lo), self.hi), self.hi)

    def to_json(self) -> dict:
        return {"P": [self.lo, self.hi], "P_mid": self.mid, "lambda": self.lam,
                "residual": self.residual, "iters": self.iters, "flags": list(self.flags)}


def _prepare(sub, potential):
    flags = ()
    if "reducible" in sub.flags:
        _, phi_mid, _ = potential.edge_values(sub)
        sub = _dominant(sub, phi_mid)
        flags = ("dominant-component",)
    return sub, flags


def pressure(sub: FiniteSubsystem, potential: PotentialSpec, tol: float = 1e-12) -> PressureValue:
    sub, flags = _prepare(sub, potential)
    phi_lo, phi_mid, phi_hi = potential.edge_values(sub)
    pm = _perron_phi(sub, phi_mid, tol)
    plo = _perron_phi(sub, phi_lo, tol)
    phi_ = _perron_phi(sub, phi_hi, tol)
    lam = math.exp(pm.log_lam) if pm.log_lam < 700 else math.inf
    return PressureValue(down(plo.cw_lo), up(phi_.cw_hi), pm.log_lam, lam, pm.residual, pm.iters, flags)


def pressure_mid(sub: FiniteSubsystem, potential: PotentialSpec, tol: float = 1e-12, start=None) -> PerronData:
    _, phi_mid, _ = potential.edge_values(sub)
    return _perron_phi(sub, phi_mid, tol, start)


# ---------------------------------------------------------------------------
# Equilibrium states

def equilibrium(sub: FiniteSubsystem, potential: PotentialSpec, tol: float = 1e-12,
                observables: Sequence[Observable] = ()) -> MarkovMeasureCert:
    """Parry-type Markov measure: Q_ij = M_ij v_j/(lambda v_i), p = u*v normalized."""
    sub, flags = _prepare(sub, potential)
    _, phi, _ = potential.edge_values(sub)
    M, top = _matrix(sub, phi)
    lam, v, _, _, _, _ = perron(M, tol)
    lamT, u, _, _, _, _ = perron(M.T.tocsr(), tol)
    w = np.exp(phi - top)
    q = w * v[sub.dst] / (lam * v[sub.src])
    # renormalize rows against rounding
    sums = np.bincount(sub.src, weights=q, minlength=sub.n_states)
    q = q / sums[sub.src]
    p = u * v
    p = p / p.sum()
    cert = markov_cert(None, sub.subalphabet, sub.depth, sub.states, sub.src, sub.dst, q, p=p,
                       edge_logd=sub.logd, flags=tuple(sub.flags) + flags, map_spec=sub.fmap.spec)
    mass = cert.edge_mass
    for obs in observables:
        vals = sub.observable_values(obs)
        cert.integrals[obs.name] = Bracket.exact(math.fsum((mass * vals).tolist()))
    return cert


def identity_defect(cert: MarkovMeasureCert, sub: FiniteSubsystem, potential: PotentialSpec) -> float:
    """h + integral(Phi_mid) - log lambda; zero for equilibrium certificates."""
    _, phi, _ = potential.edge_values(sub)
    P = pressure_mid(sub, potential).log_lam
    return cert.h + math.fsum((cert.edge_mass * phi).tolist()) - P


# ---------------------------------------------------------------------------
# Bowen roots

@dataclass(frozen=True)
class BowenRoot:
    t: Bracket
    chi: float                       # Lyapunov exponent of the equilibrium at the mid root
    evaluations: int
    subsystem: dict

    def to_json(self) -> dict:
        return {"t": [self.t.lo, self.t.hi], "t_mid": self.t.mid, "chi": self.chi,
                "evaluations": self.evaluations, "subsystem": self.subsystem}


def _root(fun, deriv, a, b, fa, fb, xtol=1e-13, max_iter=200):
    """Safeguarded Newton inside a sign-change bracket [a, b]."""
    if fa == 0:
        return a, 0
    if fb == 0:
        return b, 0
    x = 0.5 * (a + b)
    n = 0
    for n in range(1, max_iter + 1):
        fx = fun(x)
        if fx == 0:
            return x, n
        if (fx > 0) == (fa > 0):
            a, fa = x, fx
        else:
            b, fb = x, fx
        dx = deriv(x)
        nx = x - fx / dx if dx else 0.5 * (a + b)
        if not (min(a, b) < nx < max(a, b)):
            nx = 0.5 * (a + b)
        if abs(nx - x) <= xtol * (1 + abs(x)) or abs(b - a) <= xtol:
            return nx, n
        x = nx
    return x, n


def pressure_root(sub: FiniteSubsystem, terms=(), shift: float = 0.0, which: str = "mid",
                  tol: float = 1e-12, t_max: float = 64.0):
    """Root T of P(sum q_i phi_i + shift - T log|f'|) = 0 on a uniformly expanding subsystem.

    ``which`` selects the inf/mid/sup edge weights; the inf and sup roots
    bracket the mid root because pressure is monotone in the weights.
    """
    if not sub.uniformly_expanding():
        bad = int(np.argmin(sub.logd[0]))
        raise ParabolicError(f"edge {sub.edge_words[bad]} has inf log|f'| <= 0; induce first")
    pot = PotentialSpec(tuple(terms), 0.0, shift)
    pick = {"lo": 0, "mid": 1, "hi": 2}[which]
    state = {"v": None, "n": 0, "chi": None}

    def P(t):
        vals = pot.with_beta(t).edge_values(sub)[pick]
        M, top = _matrix(sub, vals)
        lam, v, _, _, _, _ = perron(M, tol, start=state["v"])
        state["v"] = v
        state["n"] += 1
        return math.log(lam) + top

    def dP(t):
        # derivative of pressure in t is minus the Lyapunov exponent of the equilibrium
        vals = pot.with_beta(t).edge_values(sub)[pick]
        M, top = _matrix(sub, vals)
        lam, v, _, _, _, _ = perron(M, tol, start=state["v"])
        lamT, u, _, _, _, _ = perron(M.T.tocsr(), tol)
        w = np.exp(vals - top)
        mass = u[sub.src] * w * v[sub.dst]
        mass /= mass.sum()
        L = sub.logd[{0: 2, 1: 1, 2: 0}[pick]]
        chi = float(mass @ L)
        state["chi"] = chi
        return -chi

    a, fa = 0.0, P(0.0)
    if fa <= 0:
        # P decreases in t, so the first zero is at or below 0
        b = -1.0
        fb = P(b)
        while fb < 0:
            b *= 2
            if b < -t_max:
                raise ConvergenceError("no pressure zero found")
            fb = P(b)
        a, fa, b, fb = b, fb, a, fa
    else:
        b = 1.0
        fb = P(b)
        while fb > 0:
            a, fa = b, fb
            b *= 2
            if b > t_max:
                raise ConvergenceError("no pressure zero found")
            fb = P(b)
    t, _ = _root(P, dP, a, b, fa, fb)
    return t, state


def bowen_root(sub: FiniteSubsystem, tol: float = 1e-12) -> BowenRoot:
    """Zero of beta -> P(-beta log|f'|) with an inf/sup bracket."""
    t_mid, st = pressure_root(sub, which="mid", tol=tol)
    t_lo, _ = pressure_root(sub, which="lo", tol=tol)
    t_hi, _ = pressure_root(sub, which="hi", tol=tol)
    lo, hi = min(t_lo, t_mid), max(t_hi, t_mid)
    cert = equilibrium(sub, PotentialSpec((), t_mid))
    return BowenRoot(Bracket(down(lo), t_mid, up(hi)), cert.chi.mid, st["n"], sub.describe())


# ---------------------------------------------------------------------------
# beta_infinity

@dataclass(frozen=True)
class BetaInfinity:
    value: float
    mode: str
    residual: Optional[float] = None
    heuristic: bool = False

    def to_json(self) -> dict:
        v = self.value
        return {"beta_inf": None if v == -math.inf else v, "no_constraint": v == -math.inf,
                "mode": self.mode, "residual": self.residual, "heuristic": self.heuristic}


def beta_infinity(fmap: MarkovMap, probe: Sequence[int] = (), mode: str = "closed-form") -> BetaInfinity:
    """Convergence exponent of sum_a (sup |f_a'|^-1)^beta.

    Finite alphabets give the -inf sentinel.  Closed form uses the declared
    tail exponent of inf|f_a'| ~ a^s (beta_inf = 1/s); ``fit`` regresses
    log diam against log a over ``probe``.
    """
    if fmap.alphabet.finite:
        return BetaInfinity(-math.inf, "finite-alphabet")
    if mode == "closed-form":
        if fmap.tail_exponent is None:
            raise InputError(f"no closed-form tail for {fmap.spec}; use mode 'fit'")
        return BetaInfinity(1.0 / fmap.tail_exponent, "closed-form")
    if mode != "fit":
        raise InputError(f"unknown beta_infinity mode {mode!r}")
    probe = list(probe) or list(range(fmap.alphabet.start + 10, fmap.alphabet.start + 1000))
    a = np.array(probe, dtype=float)
    diam = np.array([float(fmap.branch(int(k)).domain[1]) - float(fmap.branch(int(k)).domain[0]) for k in probe])
    slope, icpt = np.polyfit(np.log(a), np.log(np.abs(diam)), 1)
    resid = float(np.max(np.abs(np.log(np.abs(diam)) - (slope * np.log(a) + icpt))))
    return BetaInfinity(1.0 / -slope, "fit", resid, True)
