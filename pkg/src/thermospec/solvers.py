"""Constrained dimension maximization on a finite subsystem.

Both backends look for a Markov measure mu on the subsystem with
|E_mu[psi_i] / E_mu[tau]| < eps for every constraint and dim(mu) = h/chi as
large as possible.  ``psi_i`` are per-edge values (phi_i - alpha_i on a plain
subsystem, S_tau phi_i - tau alpha_i on an induced one) and ``tau`` the
per-edge return time (all ones without inducing).

legendre: minimize T(q), the zero of T -> P(sum q_i psi_i - T log|f'|).
          At the minimizer the equilibrium state meets the constraints and
          its dimension equals T.
direct:   softmax-parametrized kernel rows, maximize h/chi with a quadratic
          penalty outside an eps dead zone; analytic gradient via the
          stationary-distribution adjoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import minimize

from .measures import markov_cert
from .thermo import ConvergenceError, FiniteSubsystem, _root, perron


@dataclass
class SolverOutcome:
    cert: object                     # MarkovMeasureCert on the subsystem
    residual: float                  # max_i |E psi_i| / E tau
    dim_mid: float
    converged: bool
    backend: str
    q: tuple = ()


def _kernel_cert(sub: FiniteSubsystem, q, p, flags=()):
    return markov_cert(None, sub.subalphabet, sub.depth, sub.states, sub.src, sub.dst, q, p=p,
                       edge_logd=sub.logd, flags=tuple(sub.flags) + tuple(flags), map_spec=sub.fmap.spec)


def _residual(mass, psi, tau):
    et = float(mass @ tau)
    if psi.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(psi @ mass))) / et


# ---------------------------------------------------------------------------
# Legendre backend

class _Legendre:
    def __init__(self, sub, psi, L, tol=1e-12):
        self.sub, self.psi, self.L, self.tol = sub, psi, L, tol
        self.v = None
        self.cache = {}

    def _perron(self, phi, start=None):
        top = float(np.max(phi))
        w = np.exp(phi - top)
        n = self.sub.n_states
        M = sp.csr_matrix((w, (self.sub.src, self.sub.dst)), shape=(n, n))
        lam, v, _, _, _, _ = perron(M, self.tol, start=start)
        return math.log(lam) + top, v, M, lam, w

    def evaluate(self, q):
        key = tuple(np.round(q, 15))
        if key in self.cache:
            return self.cache[key]
        c = q @ self.psi if len(q) else np.zeros(self.sub.n_edges)
        L = self.L
        st = {"v": self.v}

        def P(t):
            val, v, _, _, _ = self._perron(c - t * L, st["v"])
            st["v"] = v
            return val

        def eq(t):
            _, v, M, lam, w = self._perron(c - t * L, st["v"])
            _, u, _, _, _ = self._perron_T(M)
            mass = u[self.sub.src] * w * v[self.sub.dst]
            return mass / mass.sum(), v, u, lam, w

        def dP(t):
            mass = eq(t)[0]
            return -float(mass @ L)

        a, fa = 0.0, P(0.0)
        if fa > 0:
            b, fb = 1.0, P(1.0)
            while fb > 0:
                a, fa = b, fb
                b *= 2
                if b > 1e6:
                    raise ConvergenceError("pressure stays positive")
                fb = P(b)
        else:
            b, fb = a, fa
            a = -1.0
            fa = P(a)
            while fa < 0:
                b, fb = a, fa
                a *= 2
                if a < -1e6:
                    raise ConvergenceError("pressure stays negative")
                fa = P(a)
        t, _ = _root(P, dP, a, b, fa, fb)
        mass, v, u, lam, w = eq(t)
        self.v = v
        chi = float(mass @ L)
        grad = (self.psi @ mass) / chi if len(q) else np.zeros(0)
        out = (t, grad, mass, v, u, lam, w)
        self.cache[key] = out
        return out

    def _perron_T(self, M):
        lam, u, _, _, _, _ = perron(M.T.tocsr(), self.tol)
        return math.log(lam), u, None, lam, None


def legendre_solve(sub: FiniteSubsystem, psi: np.ndarray, tau: np.ndarray, eps: float,
                   box: float = 20.0, starts: int = 5, seed: int = 0) -> SolverOutcome:
    """Minimize T(q) over the box; the witness is the equilibrium at the minimizer."""
    if not sub.uniformly_expanding():
        raise ValueError("legendre backend needs a uniformly expanding subsystem")
    k = psi.shape[0]
    L = sub.logd[1]
    solver = _Legendre(sub, psi, L)
    rng = np.random.default_rng(seed)
    inits = [np.zeros(k)] + [rng.uniform(-1, 1, k) * min(box, 2.0) for _ in range(starts - 1)] if k else [np.zeros(0)]
    best = None
    for q0 in inits:
        if k == 0:
            q = q0
            converged = True
        else:
            def fun(q):
                t, g, *_ = solver.evaluate(q)
                return t, g
            try:
                res = minimize(fun, q0, jac=True, method="L-BFGS-B", bounds=[(-box, box)] * k,
                               options={"maxiter": 500, "ftol": 1e-15, "gtol": 1e-11})
            except ConvergenceError:
                continue
            q, converged = res.x, bool(res.success)
        t, g, mass, v, u, lam, w = solver.evaluate(q)
        r = _residual(mass, psi, tau)
        cand = (r > eps, -t if r <= eps else r, q, converged)
        if best is None or cand[:2] < best[:2]:
            best = cand
        if k == 0:
            break
    if best is None:
        raise ConvergenceError("legendre backend failed from every start")
    q = best[2]
    t, g, mass, v, u, lam, w = solver.evaluate(q)
    Q = w * v[sub.dst] / (lam * v[sub.src])
    Q = Q / np.bincount(sub.src, weights=Q, minlength=sub.n_states)[sub.src]
    p = u * v
    cert = _kernel_cert(sub, Q, p / p.sum(), ("legendre",))
    r = _residual(cert.edge_mass, psi, tau)
    return SolverOutcome(cert, r, cert.h / cert.chi.mid, best[3], "legendre", tuple(float(x) for x in q))


# ---------------------------------------------------------------------------
# Direct backend

class _KernelModel:
    def __init__(self, sub: FiniteSubsystem):
        order = np.argsort(sub.src, kind="stable")
        if np.any(order != np.arange(len(order))):
            raise ValueError("subsystem edges must be grouped by source state")
        self.sub = sub
        self.n, self.E = sub.n_states, sub.n_edges
        self.starts = np.searchsorted(sub.src, np.arange(self.n))
        self.I = sp.identity(self.n, format="csr")

    def kernel(self, theta):
        src = self.sub.src
        mx = np.maximum.reduceat(theta, self.starts)
        e = np.exp(theta - mx[src])
        return e / np.add.reduceat(e, self.starts)[src]

    def _bordered(self, rows, cols, vals, first_row):
        """Sparse I + (rows, cols, vals) with row 0 replaced by ``first_row``."""
        n = self.n
        keep = rows != 0
        diag = np.arange(1, n)
        r = np.concatenate([rows[keep], diag, np.zeros(n, dtype=np.int64)])
        c = np.concatenate([cols[keep], diag, np.arange(n)])
        v = np.concatenate([vals[keep], np.ones(n - 1), first_row])
        return sp.csc_matrix((v, (r, c)), shape=(n, n))

    def stationary(self, Q):
        A = self._bordered(self.sub.dst, self.sub.src, -Q, np.ones(self.n))
        b = np.zeros(self.n)
        b[0] = 1.0
        p = spla.spsolve(A, b)
        p = np.maximum(p, 0.0)
        return p / p.sum()

    def adjoint(self, Q, p, r, V):
        """y with (I - Q) y = r - V 1 and p . y = 0."""
        A = self._bordered(self.sub.src, self.sub.dst, -Q, p)
        b = r - V
        b[0] = 0.0
        return spla.spsolve(A, b)


def direct_solve(sub: FiniteSubsystem, psi: np.ndarray, tau: np.ndarray, eps: float,
                 starts: int = 3, seed: int = 0, dead: float = 0.01, w0: float = 100.0,
                 max_rounds: int = 30, theta_box: float = 10.0) -> SolverOutcome:
    model = _KernelModel(sub)
    src, L = sub.src, sub.logd[1]
    k = psi.shape[0]
    ed = dead * eps

    def objective(theta, w):
        Q = model.kernel(theta)
        p = model.stationary(Q)
        pe = p[src]
        logQ = np.log(np.maximum(Q, 1e-300))
        h = -float(pe @ (Q * logQ))
        chi = float(pe @ (Q * L))
        et = float(pe @ (Q * tau))
        F = psi @ (pe * Q) if k else np.zeros(0)
        g = F / et
        viol = np.maximum(np.abs(g) - ed, 0.0)
        J = h / chi - w * float(viol @ viol)
        # dJ/dV for V in (h, chi, E tau, F_i)
        dJ_dh = 1.0 / chi
        dJ_dchi = -h / chi ** 2
        dpen_dg = -2 * w * viol * np.sign(g)
        dJ_dF = dpen_dg / et
        dJ_det = -float(dpen_dg @ (F / et ** 2)) if k else 0.0
        # combined linear functional sum_i p_i sum_j Q_ij c_ij (entropy handled separately)
        c = dJ_dchi * L + dJ_det * tau + (dJ_dF @ psi if k else 0.0) - dJ_dh * logQ
        r = np.add.reduceat(Q * c, model.starts)
        V = float(p @ r)
        y = model.adjoint(Q, p, r, V)
        G = pe * (y[sub.dst] + c - dJ_dh)          # d/dQ_ij, entropy term -p_i (log Q + 1)
        rowdot = np.add.reduceat(Q * G, model.starts)
        grad = Q * (G - rowdot[src])
        return -J, -grad, (g, h / chi)

    rng = np.random.default_rng(seed)
    inits = [np.zeros(sub.n_edges)] + [rng.normal(0, 1, sub.n_edges) for _ in range(starts - 1)]
    inits = [np.clip(t, -theta_box, theta_box) for t in inits]
    best = None
    for th in inits:
        w = w0
        converged = False
        history = []
        for _ in range(max_rounds):
            res = minimize(lambda t: objective(t, w)[:2], th, jac=True, method="L-BFGS-B",
                           bounds=[(-theta_box, theta_box)] * len(th),
                           options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-10})
            th = res.x
            g, dim = objective(th, w)[2]
            converged = bool(np.all(np.abs(g) < eps))
            # keep tightening until the iterate sits inside (twice) the dead zone
            if np.all(np.abs(g) < min(eps, 2 * ed)):
                break
            # an infeasible target shows up as a violation that stops shrinking
            history.append(float(np.max(np.abs(g))))
            if len(history) > 3 and history[-1] > 0.99 * history[-4]:
                break
            w *= 2
        Q = model.kernel(th)
        p = model.stationary(Q)
        mass = p[src] * Q
        r = _residual(mass, psi, tau)
        dim = float(-(p[src] @ (Q * np.log(np.maximum(Q, 1e-300)))) / (p[src] @ (Q * L)))
        # prefer runs that settled in the dead zone, then larger dimension
        cand = (r >= eps, r >= min(eps, 2 * ed), -dim if r < eps else r, th, converged)
        if best is None or cand[:3] < best[:3]:
            best = cand
    Q = model.kernel(best[3])
    p = model.stationary(Q)
    cert = _kernel_cert(sub, Q, p, ("direct",))
    r = _residual(cert.edge_mass, psi, tau)
    return SolverOutcome(cert, r, cert.h / cert.chi.mid, best[4], "direct")
