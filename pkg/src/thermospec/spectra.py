"""Birkhoff, Lyapunov and Besicovitch-Eggleston spectra as witness-backed lower bounds.

Every reported value is the dimension of an explicit invariant measure
(a certificate) whose observable integrals meet the target within the
scheduled tolerance, plus the exact special values that are known in closed
form (the one-half escape-of-mass case, bounded-digit roots, the alpha -> 0
Lyapunov path).
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .inducing import lift_observable, parabolic_bowen_root, project_measure, renyi_jump_scheme
from .interval import Bracket
from .maps import MarkovMap, Observable, digit_value, indicator, log_derivative
from .measures import (DimensionValue, MarkovMeasureCert, PeriodicDiracCert, dimension, integrate, mix,
                       periodic_cert, refine_chi)
from .solvers import SolverOutcome, direct_solve, legendre_solve
from .symbolic import InputError
from .thermo import (ConvergenceError, EmptySubsystemError, ParabolicError, beta_infinity,
                     build_subsystem)

DEFAULT_EPS = (1e-1, 1e-2, 1e-3)
INF = math.inf


# ---------------------------------------------------------------------------
# Query types

@dataclass(frozen=True)
class FrequencyVector:
    head: tuple
    tail: float = 0.0

    def __post_init__(self):
        head = tuple(float(a) for a in self.head)
        object.__setattr__(self, "head", head)
        if not head:
            raise InputError("frequency vector needs at least one explicit entry")
        if any(a < 0 for a in head) or self.tail < 0:
            raise InputError("frequencies must be nonnegative")
        if self.total > 1 + 1e-12:
            raise InputError(f"frequencies sum to {self.total} > 1")

    @property
    def total(self) -> float:
        return math.fsum(self.head) + float(self.tail)


@dataclass(frozen=True)
class Schedule:
    """Finite realization of the double limit (subsystem -> everything, eps -> 0)."""

    eps: tuple = DEFAULT_EPS
    alphabets: tuple = ((1, 5), (1, 10), (1, 20))
    depths: tuple = (2, 4, 6)
    inducing: bool = True
    budget: int = 10             # prefix-run cutoff of induced subsystems
    max_states: int = 4000       # depth is lowered until the state count fits

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "alphabets", tuple(tuple(int(x) for x in a) for a in self.alphabets))
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
        if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise InputError("eps schedule must be positive and strictly decreasing")
        if not self.alphabets or not self.depths or min(self.depths) < 1:
            raise InputError("schedule needs alphabets and depths >= 1")
        for (lo, hi), (lo2, hi2) in zip(self.alphabets, self.alphabets[1:]):
            if lo2 > lo or hi2 < hi:
                raise InputError("subsystem schedule must be increasing")

    @classmethod
    def from_dict(cls, d: dict) -> "Schedule":
        known = {"eps", "alphabets", "depths", "inducing", "budget", "max_states"}
        bad = set(d) - known
        if bad:
            raise InputError(f"unknown schedule keys {sorted(bad)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})

    def to_dict(self) -> dict:
        return {"eps": list(self.eps), "alphabets": [list(a) for a in self.alphabets],
                "depths": list(self.depths), "inducing": self.inducing, "budget": self.budget,
                "max_states": self.max_states}

    def entries(self, fmap: MarkovMap) -> list:
        """(subalphabet, depth) pairs; alphabets are clipped to the map's symbols."""
        out = []
        for i, (lo, hi) in enumerate(self.alphabets):
            syms = tuple(s for s in range(lo, hi + 1) if s in fmap.alphabet)
            if syms:
                out.append((syms, self.depths[min(i, len(self.depths) - 1)]))
        if not out:
            raise InputError(f"schedule selects no symbols of {fmap.spec}")
        return out


def default_schedule(fmap: MarkovMap) -> Schedule:
    if fmap.alphabet.finite:
        syms = fmap.alphabet.symbols
        return Schedule(alphabets=((min(syms), max(syms)),) * 2, depths=(1, 2))
    return Schedule()


@dataclass
class SpectrumQuery:
    fmap: MarkovMap
    observables: tuple
    alpha: tuple
    schedule: Schedule = None
    backend: str = "legendre"

    def __post_init__(self):
        self.observables = tuple(self.observables)
        self.alpha = tuple(float(a) for a in self.alpha)
        if not self.observables:
            raise InputError("need at least one observable")
        if len(self.alpha) != len(self.observables):
            raise InputError("one target per observable")
        if any(not math.isfinite(a) for a in self.alpha):
            raise InputError("infinite targets are only handled by the flat-spectrum and Lyapunov paths")
        if self.backend not in ("legendre", "direct", "both"):
            raise InputError(f"unknown backend {self.backend!r}")
        if self.schedule is None:
            self.schedule = default_schedule(self.fmap)

    @property
    def bounded(self) -> bool:
        return all(o.bounded and o.kind == "local" for o in self.observables)


def witness_id(cert) -> str:
    blob = json.dumps(cert.to_json(), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class Witness:
    cert: object
    subsystem: str
    backend: str
    residual: float               # bracket-verified max_i |int phi_i - alpha_i|
    dim: DimensionValue
    converged: bool = True
    integrals: tuple = ()
    run_eps: float = 0.0          # tolerance the solver was asked for (0 for exact constructions)

    def valid_at(self, eps: float) -> bool:
        return self.run_eps <= eps and self.residual < eps

    @property
    def id(self) -> str:
        return witness_id(self.cert)

    def row(self) -> dict:
        return {"subsystem": self.subsystem, "backend": self.backend, "residual": self.residual,
                "dim": [self.dim.lo, self.dim.mid, self.dim.hi], "converged": self.converged,
                "witness_id": self.id}


@dataclass
class SpectrumResult:
    alpha: tuple
    observables: tuple
    table: list = field(default_factory=list)        # per (eps, subsystem) rows
    witnesses: list = field(default_factory=list)
    lower_bound: float = 0.0
    lower_bounds: list = field(default_factory=list) # running bound along the subsystem schedule
    best: Optional[Witness] = None
    beta_floor: Optional[float] = None
    beta_floor_applied: bool = False
    feasibility: str = "unknown"
    exact: bool = False
    provenance: str = "witness lower bound"
    flags: list = field(default_factory=list)

    @property
    def bracket_width(self) -> float:
        if self.exact or self.best is None:
            return 0.0
        return self.best.dim.hi - self.best.dim.lo

    @property
    def dim_hi(self) -> float:
        return self.lower_bound if self.exact else math.nan

    def to_json(self) -> dict:
        return {"alpha": list(self.alpha), "observables": [o.spec for o in self.observables],
                "lower_bound": self.lower_bound, "lower_bounds": self.lower_bounds,
                "exact": self.exact, "provenance": self.provenance,
                "beta_floor": self.beta_floor, "beta_floor_applied": self.beta_floor_applied,
                "beta_floor_conditional_on_feasibility": self.beta_floor_applied,
                "feasibility": self.feasibility, "bracket_width": self.bracket_width,
                "witness_id": self.best.id if self.best else None,
                "table": self.table, "flags": list(self.flags)}


# ---------------------------------------------------------------------------
# Subsystem preparation (plain or induced past a parabolic fixed point)

def _parabolic_symbols(fmap: MarkovMap) -> list:
    out = []
    for a, x in fmap.neutral.items():
        try:
            fx = fmap.branch(a).forward(x)
        except (ZeroDivisionError, ValueError):
            continue
        if fmap.same_point(fx, x):
            out.append(a)
    return out


@dataclass
class Prepared:
    label: str
    sub: object
    scheme: object = None
    flags: list = field(default_factory=list)

    @property
    def tau(self) -> np.ndarray:
        if self.scheme is None:
            return np.ones(self.sub.n_edges)
        taus = self.scheme.taus
        return np.array([taus[w[0] - 1] for w in self.sub.edge_words], dtype=float)

    def values(self, obs: Observable) -> np.ndarray:
        if obs.kind == "logderiv":
            return self.sub.logd[1]
        return self.sub.observable_values(lift_observable(self.scheme, obs) if self.scheme else obs)

    def base_cert(self, cert):
        if isinstance(cert, MarkovMeasureCert):
            cert = refine_chi(cert, self.sub.fmap)
        return project_measure(self.scheme, cert) if self.scheme is not None else cert


def _fit_depth(n_symbols: int, depth: int, cap: int) -> int:
    while depth > 1 and n_symbols ** depth > cap:
        depth -= 1
    return depth


_PREP_CACHE: dict = {}


def prepare(fmap: MarkovMap, syms: tuple, depth: int, schedule: Schedule) -> Optional[Prepared]:
    key = (fmap.spec, syms, depth, schedule.inducing, schedule.budget, schedule.max_states)
    if key in _PREP_CACHE:
        return _PREP_CACHE[key]
    flags = []
    para = [a for a in _parabolic_symbols(fmap) if a in syms]
    scheme = None
    if para and schedule.inducing and len(para) == 1 and len(syms) > 1:
        nu = para[0]
        scheme = renyi_jump_scheme(fmap, [a for a in syms if a != nu], schedule.budget, nu=nu)
        target, use = scheme.induced, tuple(range(1, len(scheme.patterns) + 1))
        label = f"{{{syms[0]}..{syms[-1]}}}/induced(k<={schedule.budget})"
    else:
        if para:
            syms = tuple(a for a in syms if a not in para)
            flags.append("parabolic-symbols-dropped")
            if not syms:
                _PREP_CACHE[key] = None
                return None
        target, use = fmap, syms
        label = f"{{{syms[0]}..{syms[-1]}}}"
    # the induced alphabet already encodes long base words: one symbol of memory suffices
    d = 1 if scheme is not None else _fit_depth(len(use), depth, schedule.max_states)
    if d != depth:
        flags.append(f"depth-capped:{depth}->{d}")
    try:
        sub = build_subsystem(target, use, d)
    except EmptySubsystemError:
        _PREP_CACHE[key] = None
        return None
    prep = Prepared(f"{label}@d{d}", sub, scheme, flags)
    _PREP_CACHE[key] = prep
    return prep


def prepared_schedule(fmap: MarkovMap, schedule: Schedule) -> list:
    out = []
    for syms, depth in schedule.entries(fmap):
        p = prepare(fmap, syms, depth, schedule)
        if p is not None:
            out.append(p)
    return out


# ---------------------------------------------------------------------------
# Witness evaluation

def evaluate_witness(fmap: MarkovMap, cert, observables, alpha, subsystem: str = "",
                     backend: str = "", converged: bool = True) -> Witness:
    """Bracket-verified residual and dimension of a base-map certificate."""
    ints = tuple(integrate(cert, o, fmap) for o in observables)
    res = max(max(abs(b.lo - a), abs(b.hi - a), abs(b.mid - a)) for b, a in zip(ints, alpha))
    return Witness(cert, subsystem, backend, float(res), dimension(cert, fmap), converged, ints)


def _periodic_words(syms, budget=400, max_len=4):
    count = 0
    for n in range(1, max_len + 1):
        if count + len(syms) ** n > budget and n > 1:
            break
        for w in itertools.product(syms, repeat=n):
            if w == min(w[k:] + w[:k] for k in range(n)) and all(
                    w != w[k:] + w[:k] for k in range(1, n) if n % k == 0):
                count += 1
                yield w


def periodic_witnesses(query: SpectrumQuery, budget: int = 400, words: Sequence = ()) -> list:
    """Dirac measures on short periodic orbits, plus two-orbit mixtures for a single target."""
    fmap, obs, alpha = query.fmap, query.observables, query.alpha
    syms = query.schedule.entries(fmap)[-1][0]
    pool = []
    for w in itertools.chain(_periodic_words(syms, budget), words):
        try:
            c = periodic_cert(fmap, w)
        except (InputError, ZeroDivisionError, ValueError):
            continue
        pool.append(evaluate_witness(fmap, c, obs, alpha, "periodic", "periodic"))
    out = list(pool)
    if len(obs) == 1 and pool:
        a = alpha[0]
        below = [p for p in pool if p.integrals[0].mid <= a]
        above = [p for p in pool if p.integrals[0].mid > a]
        if below and above:
            # the straddling pair of largest dimension contribution (both are zero; pick closest)
            lo = max(below, key=lambda p: p.integrals[0].mid)
            hi = min(above, key=lambda p: p.integrals[0].mid)
            x0, x1 = lo.integrals[0].mid, hi.integrals[0].mid
            if x1 > x0 and abs(lo.integrals[0].mid - a) > 0:
                t = (a - x0) / (x1 - x0)
                m = mix([(1.0 - t, lo.cert), (t, hi.cert)])
                out.append(evaluate_witness(fmap, m, obs, alpha, "periodic", "periodic-mixture"))
    return out


def _solve_prepared(query: SpectrumQuery, prep: Prepared, eps: float, backend: str,
                    seed: int = 0, corrections: int = 2) -> Optional[Witness]:
    """Best witness from one subsystem.

    The solver sees edge-midpoint values of the observables; when the refined
    integrals of its measure miss the target, the target is shifted by the
    defect and the solve repeated (at most ``corrections`` times).
    """
    fmap = query.fmap
    tau = prep.tau
    alpha = np.asarray(query.alpha, dtype=float)
    target = alpha.copy()
    best = None
    if not any(o.kind == "logderiv" for o in query.observables):
        corrections = 0
        # every cycle ratio sum(psi)/sum(tau) lies between the extreme edge ratios
        ratio = np.array([prep.values(o) - a * tau for o, a in zip(query.observables, alpha)]) / tau
        if np.any(ratio.min(axis=1) > eps) or np.any(ratio.max(axis=1) < -eps):
            return None
    for _ in range(corrections + 1):
        psi = np.array([prep.values(o) - a * tau for o, a in zip(query.observables, target)])
        try:
            if backend == "legendre":
                out: SolverOutcome = legendre_solve(prep.sub, psi, tau, eps, seed=seed)
            else:
                out = direct_solve(prep.sub, psi, tau, eps, seed=seed)
        except (ConvergenceError, ParabolicError, ValueError, np.linalg.LinAlgError):
            break
        base = prep.base_cert(out.cert)
        w = evaluate_witness(fmap, base, query.observables, query.alpha, prep.label, backend, out.converged)
        # the Legendre minimizer does not depend on eps; direct runs are tied to theirs
        w.run_eps = eps if backend == "direct" else 0.0
        if best is None or w.residual < best.residual:
            best = w
        defect = np.array([b.mid for b in w.integrals]) - alpha
        if not out.converged or w.residual < 0.1 * eps or not np.all(np.isfinite(defect)):
            break
        target = target - defect
    return best


def _backends(b: str) -> tuple:
    return ("legendre", "direct") if b == "both" else (b,)


@dataclass
class Feasibility:
    feasible: bool
    eps: Optional[float]
    witness: Optional[Witness]
    method: str

    @property
    def status(self) -> str:
        if not self.feasible:
            return "infeasible up to schedule"
        return f"witness found at eps={self.eps:g} ({self.method})"


def _finest(eps_sched, residual):
    ok = [e for e in eps_sched if residual < e]
    return min(ok) if ok else None


def check_feasibility(query: SpectrumQuery) -> Feasibility:
    """Semi-decision: periodic orbits, then equilibrium sweeps, then direct search."""
    eps_sched = query.schedule.eps
    best = None

    def consider(w, method):
        nonlocal best
        if w is None:
            return False
        e = _finest(eps_sched, w.residual)
        if e is not None and (best is None or e < best.eps):
            best = Feasibility(True, e, w, method)
        return best is not None and best.eps == eps_sched[-1]

    for w in periodic_witnesses(query):
        if consider(w, "periodic"):
            return best
    preps = prepared_schedule(query.fmap, query.schedule)
    for method in ("legendre", "direct"):
        for prep in preps:
            if consider(_solve_prepared(query, prep, eps_sched[-1], method), method):
                return best
    return best or Feasibility(False, None, None, "exhausted")


# ---------------------------------------------------------------------------
# Birkhoff spectrum

def birkhoff_spectrum(query: SpectrumQuery, seed: int = 0, extra_words: Sequence = ()) -> SpectrumResult:
    fmap, sched = query.fmap, query.schedule
    result = SpectrumResult(query.alpha, query.observables)
    periodic = periodic_witnesses(query, words=extra_words)
    preps = prepared_schedule(fmap, sched)
    pools = []
    for prep in preps:
        pool = list(periodic)
        result.flags.extend(f"{prep.label}:{f}" for f in prep.flags)
        for b in _backends(query.backend):
            eps_list = sched.eps[-1:] if b == "legendre" else sched.eps
            for e in eps_list:
                w = _solve_prepared(query, prep, e, b, seed)
                if w is not None:
                    pool.append(w)
                    if not w.converged:
                        result.flags.append(f"non-converged:{prep.label}:{b}")
        pools.append((prep, pool))
        result.witnesses.extend(w for w in pool if w.subsystem != "periodic")
    result.witnesses[:0] = periodic
    # eps table: best witness valid at eps (monotone in eps by construction)
    for e in sched.eps:
        for prep, pool in pools:
            valid = [w for w in pool if w.valid_at(e)]
            best = max(valid, key=lambda w: w.dim.lo, default=None)
            result.table.append({"eps": e, "subsystem": prep.label,
                                 "dim_lo": best.dim.lo if best else None,
                                 "dim_hi": best.dim.hi if best else None,
                                 "residual": best.residual if best else None,
                                 "backend": best.backend if best else None,
                                 "witness_id": best.id if best else None})
    # lower bound at the finest eps reached by any witness
    everything = [w for _, pool in pools for w in pool] or list(periodic)
    reached = [e for e in sched.eps if any(w.valid_at(e) for w in everything)]
    if not reached:
        result.feasibility = "infeasible up to schedule"
        result.provenance = "no witness"
        result.lower_bound = math.nan
        return result
    e_star = min(reached)
    if e_star != sched.eps[-1]:
        result.flags.append(f"finest-eps-reached:{e_star:g}")
    result.feasibility = f"witness found at eps={e_star:g}"
    running = -math.inf
    for prep, pool in pools:
        valid = [w for w in pool if w.valid_at(e_star)]
        cand = max(valid, key=lambda w: w.dim.lo, default=None)
        if cand is not None and cand.dim.lo > running:
            running = cand.dim.lo
            result.best = cand
        result.lower_bounds.append(running)
    if not pools:
        valid = [w for w in periodic if w.valid_at(e_star)]
        result.best = max(valid, key=lambda w: w.dim.lo)
        running = result.best.dim.lo
        result.lower_bounds.append(running)
    result.lower_bound = running
    if query.bounded:
        floor = beta_infinity(fmap).value
        result.beta_floor = floor
        if floor > result.lower_bound:
            result.lower_bound = floor
            result.beta_floor_applied = True
            result.provenance = "beta-infinity floor (conditional on feasibility)"
    return result


# ---------------------------------------------------------------------------
# Lyapunov spectrum

def _root_equilibria(fmap: MarkovMap, schedule: Schedule) -> list:
    """(prepared subsystem, base certificate) at the Bowen root of every scheduled subsystem."""
    out = []
    for prep in prepared_schedule(fmap, schedule):
        tau = prep.tau
        try:
            res = legendre_solve(prep.sub, np.zeros((0, prep.sub.n_edges)), tau, 1.0)
        except (ConvergenceError, ParabolicError, ValueError):
            continue
        out.append((prep, prep.base_cert(res.cert), res.dim_mid))
    return out


def lyapunov_spectrum(fmap: MarkovMap, alphas: Sequence[float], schedule: Optional[Schedule] = None,
                      backend: str = "legendre") -> list:
    """Per-alpha results for the single observable log|f'| (unbounded: no floor)."""
    schedule = schedule or default_schedule(fmap)
    out = []
    for a in alphas:
        if a < 0:
            raise InputError("Lyapunov targets are nonnegative")
        if not math.isfinite(a):
            raise InputError("alpha = inf is not computed by the Lyapunov path")
        if a == 0 and _parabolic_symbols(fmap):
            out.append(lyapunov_zero(fmap, schedule))
            continue
        q = SpectrumQuery(fmap, (log_derivative(),), (a,), schedule, backend)
        r = birkhoff_spectrum(q)
        out.append(r)
    return out


def lyapunov_zero(fmap: MarkovMap, schedule: Schedule) -> SpectrumResult:
    """alpha = 0 through mixtures t xi + (1 - t) delta_p with a parabolic fixed point p.

    delta_p has h = chi = 0, so the mixture keeps dim(xi) while chi = t chi(xi)
    is pushed below every scheduled tolerance.
    """
    obs = (log_derivative(),)
    para = _parabolic_symbols(fmap)[0]
    dirac = periodic_cert(fmap, (para,))
    result = SpectrumResult((0.0,), obs, provenance="alpha -> 0 mixture path")
    running = -math.inf
    e_min = schedule.eps[-1]
    for prep, xi, root in _root_equilibria(fmap, schedule):
        chi_hi = xi.chi.hi
        t = min(1.0, 0.5 * e_min / chi_hi)
        m = mix([(t, xi), (1.0 - t, dirac)])
        w = evaluate_witness(fmap, m, obs, (0.0,), prep.label, "mixture")
        result.witnesses.append(w)
        for e in schedule.eps:
            result.table.append({"eps": e, "subsystem": prep.label, "dim_lo": w.dim.lo, "dim_hi": w.dim.hi,
                                 "residual": w.residual, "backend": "mixture", "witness_id": w.id,
                                 "root": root, "xi_dim": dimension(xi, fmap).mid})
        if w.dim.lo > running:
            running, result.best = w.dim.lo, w
        result.lower_bounds.append(running)
    if result.best is None:
        result.feasibility = "infeasible up to schedule"
        result.lower_bound = math.nan
        return result
    result.lower_bound = running
    result.feasibility = f"witness found at eps={e_min:g}"
    return result


# ---------------------------------------------------------------------------
# Besicovitch-Eggleston sets

def besicovitch_eggleston(fmap: MarkovMap, freq: FrequencyVector, schedule: Optional[Schedule] = None,
                          backend: str = "legendre") -> SpectrumResult:
    syms = fmap.alphabet.head(len(freq.head))
    if len(syms) < len(freq.head):
        raise InputError("frequency vector longer than the alphabet")
    obs = tuple(indicator(s) for s in syms)
    if fmap.name == "renyi" and freq.total < 1 - 1e-12:
        # missing frequency escapes to the neutral fixed point; the value is beta_inf
        return SpectrumResult(freq.head, obs, lower_bound=0.5, exact=True, feasibility="nonempty",
                              provenance="closed form: frequencies summing below one force escape of mass "
                                         "to the parabolic point; dimension equals beta_inf = 1/2",
                              beta_floor=0.5)
    return birkhoff_spectrum(SpectrumQuery(fmap, obs, freq.head, schedule, backend))


# ---------------------------------------------------------------------------
# Bounded continued-fraction digits

def bounded_digit_dimension(fmap: MarkovMap, n: int, depth: int = 6, lower: bool = False):
    """t_n = dim of points whose backward continued-fraction digits are all <= n."""
    if n < 2:
        raise InputError("n >= 2")
    if fmap.name != "renyi":
        raise InputError("bounded-digit dimensions are defined for the Rényi map")
    return parabolic_bowen_root(fmap, tuple(range(1, n)), depth=depth, lower=lower)


# ---------------------------------------------------------------------------
# Flat Birkhoff spectrum of the first digit

@dataclass
class FlatWitness:
    j: int
    p: int
    t: float
    m: int                        # subalphabet {1..m} of the equilibrium part
    nu: object
    mu: object
    integral: Bracket             # integral of b1 against nu
    dim_nu: DimensionValue
    dim_mu: DimensionValue

    def to_json(self) -> dict:
        return {"j": self.j, "p": self.p, "t": self.t, "m": self.m,
                "integral_b1": self.integral.as_list(), "dim_nu": self.dim_nu.as_list(),
                "dim_mu": self.dim_mu.as_list(), "witness_id": witness_id(self.nu)}


@dataclass
class FlatResult:
    alpha: float
    witnesses: list
    xi: list                      # (m, root dimension, integral of b1) per equilibrium

    @property
    def mu_dims(self) -> list:
        return [w.dim_mu.mid for w in self.witnesses]


def _mu(xi, dirac_p, p: int):
    s = p ** -0.5
    return mix([(1.0 - s, xi), (s, dirac_p)])


def flat_spectrum_witnesses(fmap: MarkovMap, alpha: float, j_max: int = 4,
                            ms: Sequence[int] = (3, 4, 6, 8), budget: int = 10) -> FlatResult:
    """Measures nu_j with int b1 dnu_j = alpha + 1/j whose dimensions grow along the schedule.

    mu_p dilutes a subsystem equilibrium xi with the Dirac mass at the fixed point
    of branch p (digit p + 1); nu_j then blends mu_p with the Dirac mass at the
    parabolic point (digit 2), which changes the mean but not the ratio h/chi.
    """
    if fmap.name != "renyi":
        raise InputError("flat-spectrum witnesses are built for the Rényi map")
    if alpha < 2:
        raise InputError("infeasible: the first digit is at least 2 everywhere")
    b1 = digit_value()
    xis = []
    for m in sorted(set(ms)):
        sched = Schedule(eps=(1.0,), alphabets=((1, m),), depths=(1,), budget=budget)
        for prep, cert, root in _root_equilibria(fmap, sched):
            xis.append((m, cert, root, integrate(cert, b1, fmap).mid))
    if not xis:
        raise ConvergenceError("no subsystem equilibrium available")
    delta1 = periodic_cert(fmap, (1,))
    out, p_prev = [], 9
    for j in range(1, j_max + 1):
        cands = xis[:min(j, len(xis))]
        level = alpha + 1.0 / j if math.isfinite(alpha) else math.inf

        def best_mu(p):
            dp = periodic_cert(fmap, (p,))
            opts = [(_mu(c, dp, p), m) for m, c, _, _ in cands]
            return max(opts, key=lambda o: o[0].dim.mid)

        p = max(p_prev, 4 * j * j)
        mu, m = best_mu(p)
        if math.isfinite(level):
            while integrate(mu, b1, fmap).mid <= level:
                p = int(math.ceil(p * 1.25))
                mu, m = best_mu(p)
            mean_mu = integrate(mu, b1, fmap).mid
            t = (level - 2.0) / (mean_mu - 2.0)
        else:
            t = 1.0 - 1.0 / p
        p_prev = p
        nu = mix([(t, mu), (1.0 - t, delta1)])
        out.append(FlatWitness(j, p, t, m, nu, mu, integrate(nu, b1, fmap), dimension(nu, fmap),
                               dimension(mu, fmap)))
    return FlatResult(alpha, out, [(m, root, ib) for m, _, root, ib in xis])


# ---------------------------------------------------------------------------
# Empirical Birkhoff averages

@dataclass
class SampleTable:
    n: int
    seeds: int
    checkpoints: np.ndarray                # step counts
    observables: tuple
    median: np.ndarray                     # (k, C) across seeds
    q1: np.ndarray
    q3: np.ndarray
    running_min: np.ndarray                # (k, seeds, C): min of the mean over burn_in <= m <= checkpoint
    running_max: np.ndarray
    final: np.ndarray                      # (k, seeds)
    burn_in: int

    def to_json(self) -> dict:
        return {"n": self.n, "seeds": self.seeds, "burn_in": self.burn_in,
                "checkpoints": self.checkpoints.tolist(),
                "observables": [o.spec for o in self.observables],
                "median": self.median.tolist(), "q1": self.q1.tolist(), "q3": self.q3.tolist(),
                "running_min_median": np.median(self.running_min, axis=1).tolist(),
                "running_max_median": np.median(self.running_max, axis=1).tolist()}


def _stepper(fmap: MarkovMap, rng):
    """Vectorized (symbols, next points) for Lebesgue-typical starts."""
    name = fmap.name
    if name == "renyi":
        def step(x):
            s = np.floor(1.0 / (1.0 - x))
            y = np.abs((s * x - (s - 1.0)) / (1.0 - x))
            return s, np.mod(y, 1.0)
        return step
    if name == "gauss":
        def step(x):
            s = np.floor(1.0 / x)
            y = 1.0 / x - s
            y[y <= 0] = rng.random(int(np.sum(y <= 0)))     # rational landing: restart
            return s, y
        return step
    if name.startswith("linear:"):
        b = int(name.split(":")[1])

        # Lebesgue-random points have i.i.d. uniform digits; floating-point
        # multiplication by b would exhaust the mantissa in ~53 steps
        def step(x):
            return rng.integers(0, b, size=x.shape).astype(float), x
        return step

    def step(x):
        s = np.empty_like(x)
        y = np.empty_like(x)
        for i, xi in enumerate(x.tolist()):
            a = fmap.locate(xi)
            s[i], y[i] = a, float(fmap.branch(a).forward(xi))
        return s, y
    return step


def _obs_vector(obs: Observable, fmap: MarkovMap):
    if obs.kind == "logderiv":
        if fmap.name == "renyi":
            return lambda s, x: -2.0 * np.log1p(-x)
        if fmap.name == "gauss":
            return lambda s, x: -2.0 * np.log(x)
        if fmap.name.startswith("linear:"):
            lb = math.log(int(fmap.name.split(":")[1]))
            return lambda s, x: np.full_like(x, lb)
        return lambda s, x: np.array([math.log(abs(fmap.branch(int(a)).deriv(xi)))
                                      for a, xi in zip(s.tolist(), x.tolist())])
    if obs.depth != 1:
        raise InputError("sampling supports depth-1 observables and log|f'|")
    if obs.spec == "digit":
        return lambda s, x: s + 1.0
    if obs.spec.startswith("symbol:"):
        off = float(obs.spec.split(":")[1] or 0)
        return lambda s, x: s + off
    if obs.spec.startswith("indicator:"):
        syms = np.array([int(t) for t in obs.spec.split(":")[1].split(",")], dtype=float)
        return lambda s, x: np.isin(s, syms).astype(float)
    cache = {}

    def generic(s, x):
        out = np.empty_like(s)
        for i, a in enumerate(s.tolist()):
            if a not in cache:
                cache[a] = obs.value((int(a),))
            out[i] = cache[a]
        return out
    return generic


def sample_birkhoff(fmap: MarkovMap, observables: Sequence[Observable], n: int, seeds: int,
                    rng_seed: int = 0, burn_in: int = 100, n_checkpoints: int = 25) -> SampleTable:
    """Running Birkhoff means from uniformly random starts, with compensated sums."""
    if n < 1 or seeds < 1:
        raise InputError("n and seeds must be positive")
    observables = tuple(observables)
    rng = np.random.default_rng(rng_seed)
    x = rng.random(seeds)
    step = _stepper(fmap, rng)
    evals = [_obs_vector(o, fmap) for o in observables]
    k = len(observables)
    cps = np.unique(np.geomspace(1, n, n_checkpoints).round().astype(np.int64))
    burn_in = min(burn_in, n)
    S = np.zeros((k, seeds))
    comp = np.zeros((k, seeds))
    rmin = np.full((k, seeds), np.inf)
    rmax = np.full((k, seeds), -np.inf)
    C = len(cps)
    med, q1, q3 = np.zeros((k, C)), np.zeros((k, C)), np.zeros((k, C))
    mins, maxs = np.zeros((k, seeds, C)), np.zeros((k, seeds, C))
    ci = 0
    for m in range(1, n + 1):
        s, y = step(x)
        for r, ev in enumerate(evals):
            v = ev(s, x)
            # Kahan summation
            yk = v - comp[r]
            t = S[r] + yk
            comp[r] = (t - S[r]) - yk
            S[r] = t
        x = y
        if m >= burn_in:
            mean = S / m
            np.minimum(rmin, mean, out=rmin)
            np.maximum(rmax, mean, out=rmax)
        if m == cps[ci]:
            mean = S / m
            med[:, ci] = np.median(mean, axis=1)
            q1[:, ci], q3[:, ci] = np.percentile(mean, [25, 75], axis=1)
            mins[:, :, ci], maxs[:, :, ci] = rmin, rmax
            ci += 1
    return SampleTable(n, seeds, cps, observables, med, q1, q3, mins, maxs, S / n, burn_in)
