"""Content-addressed result store and the audit path that re-derives stored claims.

Layout of a store directory::

    manifest.json        config, its hash, library version, timestamp, file hashes
    certs/<id>.json      witness certificates, named by the hash of their JSON
    results/<name>.json  claims: per witness the dimension bracket and residual
    tables/<name>.csv
    plots/<name>.svg

``verify`` never trusts a stored entropy or exponent: certificates are rebuilt
from their primitive data (kernel, stationary vector, periodic word, mixture
weights) on a freshly constructed map, and every claim is compared with the
recomputed values.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .interval import Bracket, down, up, weighted_sum
from .inducing import build_jump_transform, project_measure
from .maps import map_from_name, parse_observable
from .measures import (ProjectedCert, dimension_from, entropy_rate, integrate, markov_cert, markov_from_json, mix,
                       periodic_cert, refine_chi)
from .symbolic import InputError


def _clean(x):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(x, np.integer):
        return int(x)
    return x


def canonical_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def config_hash(config: dict) -> str:
    return sha256_text(json.dumps(_clean(config), sort_keys=True, separators=(",", ":")))


def timestamp() -> int:
    """SOURCE_DATE_EPOCH when set, else 0, so stores are byte-reproducible."""
    return int(os.environ.get("SOURCE_DATE_EPOCH", "0"))


class StoreError(RuntimeError):
    pass


@dataclass
class ResultStore:
    root: Path
    prefix: str = ""                                 # run id prepended to result, table and plot names
    files: dict = field(default_factory=dict)       # relative path -> text

    def __post_init__(self):
        self.root = Path(self.root)

    def _put(self, rel: str, text: str) -> str:
        self.files[rel] = text
        return rel

    def put_cert(self, cert) -> str:
        d = cert.to_json()
        wid = hashlib.sha256(json.dumps(d, sort_keys=True, separators=(",", ":")).encode()).hexdigest()[:16]
        self._put(f"certs/{wid}.json", canonical_json(d))
        return wid

    def _name(self, name: str) -> str:
        return f"{self.prefix}-{name}" if self.prefix else name

    def put_result(self, name: str, payload: dict) -> str:
        return self._put(f"results/{self._name(name)}.json", canonical_json(payload))

    def put_table(self, name: str, text: str) -> str:
        return self._put(f"tables/{self._name(name)}.csv", text)

    def put_plot(self, name: str, svg: str) -> str:
        return self._put(f"plots/{self._name(name)}.svg", svg)

    def commit(self, config: dict) -> Path:
        """Write every file and update the manifest; the single writer of the store.

        A store may hold several runs; each run is recorded with its config and
        hash, and the file table covers the union of all runs.
        """
        for rel, text in sorted(self.files.items()):
            path = self.root / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        mpath = self.root / "manifest.json"
        manifest = json.loads(mpath.read_text()) if mpath.exists() else {"runs": [], "files": {}}
        h = config_hash(config)
        run = {"config": _clean(config), "config_hash": h, "files": sorted(self.files)}
        manifest["runs"] = [r for r in manifest["runs"] if r["config_hash"] != h] + [run]
        manifest["runs"].sort(key=lambda r: r["config_hash"])
        files = dict(manifest["files"])
        files.update({rel: sha256_text(text) for rel, text in self.files.items()})
        manifest.update({"version": __version__, "created": timestamp(), "files": dict(sorted(files.items()))})
        self.root.mkdir(parents=True, exist_ok=True)
        mpath.write_text(canonical_json(manifest))
        return self.root


# ---------------------------------------------------------------------------
# Re-derivation of certificates

def _markov(d: dict, fmap=None):
    c = markov_from_json(d)
    if fmap is None:
        fmap = map_from_name(c.map_spec)
    cert = markov_cert(fmap, c.subalphabet, c.depth, c.states, c.rows, c.cols, c.q, p=c.p, flags=c.flags,
                       map_spec=c.map_spec)
    return refine_chi(cert, fmap)


def _projected(d: dict) -> ProjectedCert:
    """Abramov-Kac projection recomputed from primitive data.

    With a stored scheme description the induced map is rebuilt and the
    induced certificate re-derived on it; otherwise the exponent is bracketed
    on the base map along each return orbit.
    """
    base = map_from_name(d["map"])
    if d.get("scheme"):
        scheme = build_jump_transform(base, d["scheme"], validate=False)
        if [list(p.word) for p in scheme.patterns] != [list(p) for p in d["patterns"]]:
            raise StoreError("stored patterns do not match the scheme description")
        return project_measure(scheme, _markov(d["induced"], scheme.induced))
    ind = markov_from_json(d["induced"])
    patterns = tuple(tuple(p) for p in d["patterns"])
    taus = tuple(len(p) for p in patterns)
    if tuple(d["taus"]) != taus:
        raise StoreError("stored return times do not match the patterns")
    n = len(ind.states)
    sums = np.bincount(ind.rows, weights=ind.q, minlength=n)
    if np.any(ind.q < 0) or np.max(np.abs(sums - 1.0)) > 1e-12:
        raise StoreError("induced kernel is not stochastic")
    p = ind.p / ind.p.sum()
    K = ind.kernel().T.tocsr()
    if np.max(np.abs(K @ p - p)) > 1e-10:
        raise StoreError("stored vector is not stationary for the induced kernel")
    h_ind = entropy_rate(p, ind.rows, ind.q)
    mass = p[ind.rows] * ind.q
    brs = []
    for w in ind.edge_words():
        word = tuple(s for k in w for s in patterns[k - 1])
        if not base.is_admissible(word):
            raise StoreError(f"projected word {word} is inadmissible")
        cyl = base.cylinder(word)
        M = base.composed_inverse(patterns[w[0] - 1])
        br = base.make_branch(0, M, (cyl.lo, cyl.hi), (0.0, 1.0))
        a, b = br.log_deriv_range(cyl.lo, cyl.hi)
        m = math.log(br.deriv(0.5 * (cyl.lo + cyl.hi)))
        brs.append(Bracket(a - 2e-16 * (1 + abs(a)), min(max(m, a), b), b + 2e-16 * (1 + abs(b))))
    chi_ind = weighted_sum(mass.tolist(), brs)
    mean_tau = math.fsum((mass * np.array([taus[w[0] - 1] for w in ind.edge_words()])).tolist())
    induced = type(ind)(ind.map_spec, ind.subalphabet, ind.depth, ind.states, ind.rows, ind.cols, ind.q, p,
                        h_ind, chi_ind, {}, ind.flags)
    return ProjectedCert(d["map"], induced, patterns, taus, mean_tau, h_ind / mean_tau,
                         chi_ind.scale(1.0 / mean_tau), {})


def recompute(d: dict):
    """Certificate rebuilt from primitive data; stored h, chi, integrals are ignored."""
    t = d["type"]
    if t == "markov":
        return _markov(d)
    if t == "periodic":
        return periodic_cert(map_from_name(d["map"]), tuple(d["word"]))
    if t == "projected":
        return _projected(d)
    if t == "mixture":
        comps = [(float(w), recompute(c)) for w, c in d["components"]]
        return mix(comps)
    raise StoreError(f"unknown certificate type {t!r}")


def cert_dimension(cert):
    return dimension_from(cert.h, cert.chi)


# ---------------------------------------------------------------------------
# Audit

@dataclass
class VerifyReport:
    ok: bool
    checked: int
    messages: list

    def to_json(self) -> dict:
        return {"ok": self.ok, "checked": self.checked, "messages": self.messages}


def _num(x):
    if isinstance(x, str):
        return float(x)
    return x


def verify_store(root, tol: float = 1e-8) -> VerifyReport:
    root = Path(root)
    msgs, checked = [], 0
    mpath = root / "manifest.json"
    if not mpath.exists():
        return VerifyReport(False, 0, [f"{mpath} missing"])
    manifest = json.loads(mpath.read_text())
    for run in manifest.get("runs", []):
        if config_hash(run["config"]) != run["config_hash"]:
            msgs.append(f"run {run['config_hash'][:8]}: config hash mismatch")
    for rel, h in manifest["files"].items():
        path = root / rel
        if not path.exists():
            msgs.append(f"{rel} missing")
        elif sha256_text(path.read_text()) != h:
            msgs.append(f"{rel} content hash mismatch")
    for rel in sorted(manifest["files"]):
        if not rel.startswith("results/"):
            continue
        res = json.loads((root / rel).read_text())
        for claim in res.get("witnesses", []):
            checked += 1
            wid = claim["witness_id"]
            cpath = root / "certs" / f"{wid}.json"
            if not cpath.exists():
                msgs.append(f"{rel}: witness {wid} has no certificate file")
                continue
            d = json.loads(cpath.read_text())
            if hashlib.sha256(json.dumps(d, sort_keys=True, separators=(",", ":")).encode()).hexdigest()[:16] != wid:
                msgs.append(f"{rel}: certificate {wid} does not hash to its name")
                continue
            try:
                cert = recompute(d)
            except (InputError, StoreError, ValueError) as e:
                msgs.append(f"{rel}: witness {wid} failed to rebuild ({e})")
                continue
            dim = cert_dimension(cert)
            lo, hi = _num(claim["dim"][0]), _num(claim["dim"][1])
            # the audited claim is the lower end; the rebuilt bracket may be wider above
            if dim.lo < lo - tol or dim.hi < lo - tol or dim.lo > hi + tol:
                msgs.append(f"{rel}: witness {wid} dimension [{dim.lo}, {dim.hi}] differs from claim [{lo}, {hi}]")
            obs = [parse_observable(s) for s in claim.get("observables", [])]
            if obs:
                fmap = map_from_name(cert.map_spec) if hasattr(cert, "map_spec") else None
                ints = [integrate(cert, o, fmap) for o in obs]
                resid = max(max(abs(b.lo - a), abs(b.hi - a), abs(b.mid - a))
                            for b, a in zip(ints, map(_num, claim["alpha"])))
                if resid > _num(claim["residual"]) + tol:
                    msgs.append(f"{rel}: witness {wid} residual {resid:.3g} exceeds claim {claim['residual']}")
        lb = res.get("lower_bound")
        floored = res.get("beta_floor_applied") and _num(lb) == _num(res.get("beta_floor"))
        if lb is not None and not res.get("exact") and not floored:
            best = res.get("best")
            lbv = _num(lb)
            if best is None:
                if isinstance(lbv, float) and math.isfinite(lbv) and lbv > 0:
                    msgs.append(f"{rel}: lower bound {lb} without a witness")
            else:
                claim = next((c for c in res["witnesses"] if c["witness_id"] == best), None)
                if claim is None or lbv > _num(claim["dim"][0]) + tol:
                    msgs.append(f"{rel}: lower bound {lb} not supported by witness {best}")
    return VerifyReport(not msgs, checked, msgs)
