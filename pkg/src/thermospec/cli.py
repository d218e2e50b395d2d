"""Command-line front end.

    thermospec map       --map renyi --cylinder 1,2,3 --code 0.3 --n 12
    thermospec thermo    --map linear:3 --symbols 0,2 --depth 1
    thermospec induce    --map renyi --suffixes 2,3 --k 10
    thermospec spectrum  {birkhoff,lyapunov,be,flat,edigits,sample} ... [--out csv|json] [--plot svg PATH]
    thermospec fuchsian  {build,blocks,spectrum,frequency,decay} ...
    thermospec sample    --map renyi --obs digit --n 100000 --seeds 50
    thermospec verify    --store DIR

Exit codes: 0 success, 2 configuration error, 3 validation failure,
4 solver non-convergence (results are still written and flagged).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from .fuchsian import (GeometryError, arc_decay, block_decompose, bowen_series_from_spec, build_cusp_induced_map,
                       cusp_frequency_spectrum, cusp_schedule, cusp_winding_spectrum)
from .inducing import SchemeValidationError, load_scheme, parabolic_bowen_root, renyi_jump_scheme
from .maps import EscapeError, map_from_name, parse_observable
from .measures import dimension
from .spectra import (FrequencyVector, Schedule, SpectrumQuery, besicovitch_eggleston, birkhoff_spectrum,
                      bounded_digit_dimension, default_schedule, flat_spectrum_witnesses, lyapunov_spectrum,
                      sample_birkhoff, witness_id)
from .store import ResultStore, canonical_json, config_hash, verify_store
from .symbolic import InputError
from .thermo import (ConvergenceError, ParabolicError, PotentialSpec, beta_infinity, bowen_root, build_subsystem,
                     equilibrium, pressure)

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_SOLVER = 0, 2, 3, 4


class ValidationFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Parsing helpers

def _floats(text: str) -> tuple:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _ints(text: str) -> tuple:
    """'1,2,5' or '1-5' (inclusive) or a mix: '1-3,7'."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if not part.startswith("-") else ("-" + part[1:].split("-", 1)[0], part[1:].split("-", 1)[1])
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def load_schedule(path) -> Schedule:
    """YAML or JSON: {eps: [...], alphabets: [[lo, hi], ...], depths: [...], inducing: bool}."""
    try:
        with open(path) as fh:
            d = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as e:
        raise InputError(f"cannot read schedule {path}: {e}")
    if not isinstance(d, dict):
        raise InputError("schedule must be a mapping")
    return Schedule.from_dict(d)


def _workers(args) -> int:
    w = args.workers if args.workers is not None else int(os.environ.get("THERMOSPEC_WORKERS", "1"))
    if w < 1:
        raise InputError("worker count must be >= 1")
    return w


def _pool_map(fn, items, workers: int) -> list:
    """Independent tasks, merged in submission order (deterministic for any worker count)."""
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# Result payloads (plain data, so tasks can run in worker processes)

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def spectrum_payload(result, label: str) -> dict:
    certs, claims = {}, []
    obs = [o.spec for o in result.observables]
    for w in result.witnesses:
        wid = witness_id(w.cert)
        certs[wid] = w.cert.to_json()
        claims.append({"witness_id": wid, "map": w.cert.map_spec, "observables": obs,
                       "alpha": list(result.alpha), "dim": [w.dim.lo, w.dim.mid, w.dim.hi],
                       "residual": w.residual, "subsystem": w.subsystem, "backend": w.backend,
                       "converged": w.converged})
    body = result.to_json()
    body["label"] = label
    body["witnesses"] = claims
    body["best"] = witness_id(result.best.cert) if result.best is not None else None
    nonconv = result.best is not None and not result.best.converged
    row = {"alpha": list(result.alpha), "dim_lo": result.lower_bound, "dim_hi": result.dim_hi,
           "exact": result.exact, "bracket_width": result.bracket_width,
           "beta_floor_applied": result.beta_floor_applied, "feasibility": result.feasibility,
           "witness_id": body["best"] or "", "provenance": result.provenance}
    return {"label": label, "certs": certs, "result": body, "row": row, "nonconverged": nonconv}


def spectrum_csv(rows: list) -> str:
    k = max(len(r["alpha"]) for r in rows)
    cols = [f"alpha_{i + 1}" for i in range(k)] + ["dim_lo", "dim_hi", "exact", "bracket_width",
                                                  "beta_floor_applied", "feasibility", "witness_id", "provenance"]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(cols)
    for r in rows:
        alpha = list(r["alpha"]) + [""] * (k - len(r["alpha"]))
        wr.writerow([_fmt(a) for a in alpha] + [_fmt(r[c]) for c in cols[k:]])
    return buf.getvalue()


def svg_plot(series: list, title: str, xlabel: str, ylabel: str, width: int = 480, height: int = 320) -> str:
    """Polyline plot; ``series`` is a list of (name, xs, ys).  Non-finite points are skipped."""
    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    x1, y1 = (x1 if x1 > x0 else x0 + 1), (y1 if y1 > y0 else y0 + 1)
    m = 48

    def sx(x):
        return m + (x - x0) / (x1 - x0) * (width - 2 * m)

    def sy(y):
        return height - m - (y - y0) / (y1 - y0) * (height - 2 * m)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
           f'<line x1="{m}" y1="{height - m}" x2="{width - m}" y2="{height - m}" stroke="black"/>',
           f'<line x1="{m}" y1="{m}" x2="{m}" y2="{height - m}" stroke="black"/>',
           f'<text x="{width / 2:.1f}" y="{height - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
           f'<text x="14" y="{height / 2:.1f}" font-size="12" transform="rotate(-90 14 {height / 2:.1f})" '
           f'text-anchor="middle">{ylabel}</text>',
           f'<text x="{m}" y="{height - m + 16}" font-size="10">{x0:.4g}</text>',
           f'<text x="{width - m}" y="{height - m + 16}" font-size="10" text-anchor="end">{x1:.4g}</text>',
           f'<text x="{m - 4}" y="{height - m}" font-size="10" text-anchor="end">{y0:.4g}</text>',
           f'<text x="{m - 4}" y="{m + 4}" font-size="10" text-anchor="end">{y1:.4g}</text>']
    for i, (name, xs, ys) in enumerate(series):
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y))
        c = colors[i % len(colors)]
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{coords}"/>')
        out.append(f'<text x="{width - m}" y="{m + 14 * i}" font-size="10" fill="{c}" text-anchor="end">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _store_spectra(store: ResultStore, name: str, payloads: list, xlabel: str = "alpha") -> bool:
    nonconv = False
    for i, pl in enumerate(payloads):
        for wid, d in sorted(pl["certs"].items()):
            store.files[f"certs/{wid}.json"] = canonical_json(d)
        store.put_result(f"{name}-{i:03d}", pl["result"])
        nonconv |= pl["nonconverged"]
    rows = [pl["row"] for pl in payloads]
    store.put_table(name, spectrum_csv(rows))
    if len(rows) > 1:
        xs = [r["alpha"][0] for r in rows]
        ys = [r["dim_lo"] if isinstance(r["dim_lo"], float) else math.nan for r in rows]
        store.put_plot(name, svg_plot([("dim_lo", xs, ys)], name, xlabel, "dimension lower bound"))
    return nonconv


def _print_rows(rows, args=None):
    """Rows to stdout as CSV or JSON; ``--plot svg PATH`` also writes (alpha, dim_lo)."""
    fmt = getattr(args, "out", None) or "csv"
    if fmt == "json":
        sys.stdout.write(canonical_json(rows))
    else:
        sys.stdout.write(spectrum_csv(rows))
    plot = getattr(args, "plot", None)
    if plot:
        xs = [float(r["alpha"][0]) for r in rows]
        ys = [r["dim_lo"] if isinstance(r["dim_lo"], float) else math.nan for r in rows]
        title = f"{args.command} {getattr(args, 'kind', '')}".strip()
        Path(plot[1]).write_text(svg_plot([("dim_lo", xs, ys)], title, "alpha", "dimension lower bound"))


# ---------------------------------------------------------------------------
# Worker tasks

def _schedule_for(fmap, sched_dict):
    return Schedule.from_dict(sched_dict) if sched_dict else default_schedule(fmap)


def task_birkhoff(item):
    map_spec, obs_specs, alpha, sched, backend, seed = item
    fmap = map_from_name(map_spec)
    obs = tuple(parse_observable(s) for s in obs_specs)
    q = SpectrumQuery(fmap, obs, alpha, _schedule_for(fmap, sched), backend)
    return spectrum_payload(birkhoff_spectrum(q, seed=seed), f"birkhoff {alpha}")


def task_lyapunov(item):
    map_spec, alpha, sched, backend = item
    fmap = map_from_name(map_spec)
    r = lyapunov_spectrum(fmap, [alpha], _schedule_for(fmap, sched), backend)[0]
    return spectrum_payload(r, f"lyapunov {alpha}")


def task_be(item):
    map_spec, head, tail, sched, backend = item
    fmap = map_from_name(map_spec)
    r = besicovitch_eggleston(fmap, FrequencyVector(head, tail), _schedule_for(fmap, sched), backend)
    return spectrum_payload(r, f"be {head} tail {tail}")


def task_cusp_winding(item):
    spec, alpha, sched, n_max, backend = item
    bs = bowen_series_from_spec(spec)
    schedule = Schedule.from_dict(sched) if sched else None
    return spectrum_payload(cusp_winding_spectrum(bs, alpha, schedule, n_max, backend), f"winding {alpha}")


# ---------------------------------------------------------------------------
# Commands

def _config(args) -> dict:
    skip = {"func", "store", "out", "plot", "workers"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _sched_dict(args):
    return load_schedule(args.schedule).to_dict() if getattr(args, "schedule", None) else None


def cmd_map(args, store):
    fmap = map_from_name(args.map)
    info = {"map": fmap.spec, "ambient": fmap.ambient, "finite": fmap.alphabet.finite,
            "alphabet_head": list(fmap.alphabet.head(12)), "neutral": {str(k): v for k, v in fmap.neutral.items()},
            "closed_form": fmap.closed_form, "warnings": fmap.warnings}
    if args.cylinder:
        c = fmap.cylinder(_ints(args.cylinder))
        info["cylinder"] = {"word": list(c.word), "lo": c.lo, "hi": c.hi, "diameter": c.diameter,
                            "exact": None if c.exact_lo is None else [str(c.exact_lo), str(c.exact_hi)]}
    if args.code is not None:
        word, _ = fmap.code(args.code, args.n)
        info["code"] = list(word)
    if not fmap.alphabet.finite and fmap.tail_exponent is not None:
        info["beta_inf"] = beta_infinity(fmap).to_json()
    store.put_result("map", info)
    print(canonical_json(info), end="")
    return EXIT_OK


def cmd_thermo(args, store):
    fmap = map_from_name(args.map)
    syms = _ints(args.symbols)
    if args.parabolic:
        root = parabolic_bowen_root(fmap, syms, depth=args.depth)
        info = {"map": fmap.spec, "symbols": list(syms), "parabolic_root": root.to_json()}
        store.put_result("thermo", info)
        print(canonical_json(info), end="")
        return EXIT_OK
    sub = build_subsystem(fmap, syms, args.depth)
    terms = tuple((q, parse_observable(o)) for q, o in zip(args.q or (), args.obs or ()))
    info = {"map": fmap.spec, "subsystem": sub.describe()}
    if args.beta is None and not terms:
        br = bowen_root(sub)
        info["bowen_root"] = br.to_json()
        pot = PotentialSpec((), br.t.mid)
    else:
        pot = PotentialSpec(terms, args.beta or 0.0)
        pv = pressure(sub, pot)
        info["pressure"] = [pv.lo, pv.hi]
    cert = equilibrium(sub, pot)
    d = dimension(cert)
    wid = store.put_cert(cert)
    info["equilibrium"] = {"witness_id": wid, "h": cert.h, "chi": [cert.chi.lo, cert.chi.hi],
                           "dim": [d.lo, d.mid, d.hi]}
    info["witnesses"] = [{"witness_id": wid, "map": cert.map_spec, "observables": [], "alpha": [],
                          "dim": [d.lo, d.mid, d.hi], "residual": 0.0}]
    store.put_result("thermo", info)
    print(canonical_json(info), end="")
    return EXIT_OK


def cmd_induce(args, store):
    base = map_from_name(args.map)
    try:
        if args.scheme:
            scheme = load_scheme(base, args.scheme)
        else:
            scheme = renyi_jump_scheme(base, _ints(args.suffixes), args.k)
    except SchemeValidationError as e:
        info = {"map": base.spec, "valid": False, "error": str(e)}
        store.put_result("induce", info)
        print(canonical_json(info), end="")
        return EXIT_VALIDATION
    info = {"map": base.spec, "valid": True, "scheme": scheme.to_json()}
    store.put_result("induce", info)
    print(canonical_json(info), end="")
    return EXIT_OK


def cmd_spectrum(args, store):
    w = _workers(args)
    sched = _sched_dict(args)
    kind = args.kind
    if kind == "birkhoff":
        if not args.obs:
            raise InputError("--obs is required")
        items = [(args.map, tuple(args.obs), _floats(a), sched, args.backend, args.seed) for a in args.alpha]
        payloads = _pool_map(task_birkhoff, items, w)
    elif kind == "lyapunov":
        items = [(args.map, a, sched, args.backend) for a in _floats(",".join(args.alpha))]
        payloads = _pool_map(task_lyapunov, items, w)
    elif kind == "be":
        if args.freq:
            heads = [(_floats(f), 0.0) for f in args.freq]
        elif args.freq_head:
            heads = [(_floats(args.freq_head), args.tail)]
        else:
            raise InputError("--freq or --freq-head is required")
        items = [(args.map, h, t, sched, args.backend) for h, t in heads]
        payloads = _pool_map(task_be, items, w)
    elif kind == "flat":
        return _flat(args, store)
    elif kind == "edigits":
        return _edigits(args, store, w)
    elif kind == "sample":
        return cmd_sample(args, store)
    else:
        raise InputError(f"unknown spectrum kind {kind!r}")
    nonconv = _store_spectra(store, f"spectrum-{kind}", payloads)
    _print_rows([pl["row"] for pl in payloads], args)
    return EXIT_SOLVER if nonconv else EXIT_OK


def _flat(args, store):
    fmap = map_from_name(args.map)
    rows, claims = [], []
    alphas = _floats(",".join(args.alpha))
    for a in alphas:
        fr = flat_spectrum_witnesses(fmap, a, j_max=args.j_max)
        for fw in fr.witnesses:
            wid = store.put_cert(fw.nu)
            claims.append({"witness_id": wid, "map": fmap.spec, "observables": ["digit"],
                           "alpha": [fw.integral.mid], "dim": [fw.dim_nu.lo, fw.dim_nu.mid, fw.dim_nu.hi],
                           "residual": 0.0 if not math.isfinite(a) else abs(fw.integral.mid - (a + 1.0 / fw.j)) + 1e-12})
            rows.append({"alpha": [a, fw.j], "dim_lo": fw.dim_nu.lo, "dim_hi": math.nan, "exact": False,
                         "bracket_width": fw.dim_nu.hi - fw.dim_nu.lo, "beta_floor_applied": False,
                         "feasibility": "witness", "witness_id": wid,
                         "provenance": f"p={fw.p} m={fw.m} t={fw.t!r} int_b1={fw.integral.mid!r}"})
    store.put_result("spectrum-flat", {"alpha": list(alphas), "witnesses": claims,
                                       "rows": rows})
    store.put_table("spectrum-flat", spectrum_csv(rows))
    _print_rows(rows, args)
    return EXIT_OK


def _task_edigit(item):
    n, depth = item
    r = bounded_digit_dimension(map_from_name("renyi"), n, depth=depth)
    return n, r.to_json()


def _edigits(args, store, w):
    ns = _ints(args.n or "3-15")
    out = _pool_map(_task_edigit, [(n, args.depth) for n in ns], w)
    rows = []
    for n, d in out:
        t = d["t"]
        rows.append({"alpha": [n], "dim_lo": t[0], "dim_hi": t[1], "exact": False, "bracket_width": t[1] - t[0],
                     "beta_floor_applied": False, "feasibility": "bowen root", "witness_id": "",
                     "provenance": f"parabolic collocation depth {args.depth}"})
    store.put_result("spectrum-edigits", {"n": list(ns), "roots": [d for _, d in out]})
    store.put_table("spectrum-edigits", spectrum_csv(rows))
    if len(rows) > 1:
        store.put_plot("spectrum-edigits", svg_plot([("t_n", [r["alpha"][0] for r in rows],
                                                      [r["dim_lo"] for r in rows])], "bounded digits", "n", "t_n"))
    _print_rows(rows, args)
    return EXIT_OK


def cmd_fuchsian(args, store):
    spec = "fuchsian:" + (args.generators or "default")
    try:
        bs = bowen_series_from_spec(spec)
    except GeometryError as e:
        store.put_result("fuchsian-build", {"generators": spec, "valid": False, "error": str(e)})
        print(f"geometry check failed: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    kind = args.kind
    if kind == "build":
        store.put_table("fuchsian-arcs", bs.arc_csv())
        info = {"generators": spec, "valid": True, "arcs": bs.arc_table(),
                "checks": [list(c) for c in bs.transcript], "cusps": bs.gens.cusp_points}
        if args.induce:
            scheme = build_cusp_induced_map(bs, args.n_max)
            info["induced"] = {"patterns": len(scheme.patterns),
                               "checks": [[c.name, c.passed, c.detail] for c in scheme.transcript]}
        store.put_result("fuchsian-build", info)
        sys.stdout.write(bs.arc_csv())
        return EXIT_OK
    if kind == "blocks":
        words = args.word or []
        out = []
        for wtxt in words:
            toks = [t.strip() for t in wtxt.split(",") if t.strip()]
            seq = block_decompose(bs.gens, [int(t) if t.isdigit() else t for t in toks])
            blocks = [[bs.gens.labels[s], n] for s, n in seq.blocks]
            out.append({"word": toks, "blocks": blocks, "cusp": list(seq.cusp),
                        "windings": [n - 1 if c is not None else 0 for (_, n), c in zip(seq.blocks, seq.cusp)]})
        store.put_result("fuchsian-blocks", {"decompositions": out})
        print(canonical_json(out), end="")
        return EXIT_OK
    if kind == "decay":
        d = arc_decay(bs, args.n_max)
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "diameter"])
        for n, diam in zip(d["n"].tolist(), d["diameter"].tolist()):
            wr.writerow([n, repr(diam)])
        store.put_table("fuchsian-decay", buf.getvalue())
        store.put_result("fuchsian-decay", {"slope": d["slope"], "generator": d["generator"],
                                            "lookahead": d["lookahead"], "n_max": args.n_max})
        store.put_plot("fuchsian-decay", svg_plot([("log diam", [math.log(n) for n in d["n"].tolist()],
                                                    [math.log(x) for x in d["diameter"].tolist()])],
                                                  "parabolic block arcs", "log n", "log diameter"))
        print(f"slope {d['slope']!r}")
        return EXIT_OK
    sched = _sched_dict(args)
    if kind == "spectrum":
        items = [(spec, _floats(a), sched, args.n_max, args.backend) for a in args.alpha]
        payloads = _pool_map(task_cusp_winding, items, _workers(args))
    elif kind == "frequency":
        freq = {}
        for item in (args.freq or "").split(","):
            if not item.strip():
                continue
            key, _, val = item.partition("=")
            i, _, j = key.partition(":")
            freq[(int(i), int(j))] = float(val)
        if not freq:
            raise InputError("--freq i:j=value,... is required")
        schedule = Schedule.from_dict(sched) if sched else None
        r = cusp_frequency_spectrum(bs, freq, args.tail, schedule, args.n_max, args.backend)
        payloads = [spectrum_payload(r, "frequency")]
    else:
        raise InputError(f"unknown fuchsian command {kind!r}")
    nonconv = _store_spectra(store, f"fuchsian-{kind}", payloads)
    _print_rows([pl["row"] for pl in payloads], args)
    return EXIT_SOLVER if nonconv else EXIT_OK


def cmd_sample(args, store):
    fmap = map_from_name(args.map)
    obs = tuple(parse_observable(s) for s in (args.obs or ["digit"]))
    n = int(args.n) if args.n else 100_000
    tab = sample_birkhoff(fmap, obs, n, args.seeds, rng_seed=args.seed, burn_in=args.burn_in)
    store.put_result("sample", tab.to_json())
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["observable", "checkpoint", "median", "q1", "q3", "running_min_median"])
    import numpy as np
    rmin = np.median(tab.running_min, axis=1)
    for r, o in enumerate(obs):
        for c, cp in enumerate(tab.checkpoints.tolist()):
            wr.writerow([o.spec, cp, repr(float(tab.median[r, c])), repr(float(tab.q1[r, c])),
                         repr(float(tab.q3[r, c])), repr(float(rmin[r, c]))])
    store.put_table("sample", buf.getvalue())
    xs = [math.log10(c) for c in tab.checkpoints.tolist()]
    store.put_plot("sample", svg_plot([(f"median {o.spec}", xs, tab.median[r].tolist()) for r, o in enumerate(obs)],
                                      "Birkhoff means", "log10 n", "mean"))
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_verify(args, store):
    rep = verify_store(args.store)
    print(canonical_json(rep.to_json()), end="")
    return EXIT_OK if rep.ok else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# Parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thermospec", description="Dimension spectra of Birkhoff averages")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, schedule=True):
        sp.add_argument("--store", default="thermospec-out", help="result store directory")
        sp.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
        sp.add_argument("--workers", type=int, default=None, help="worker processes (default $THERMOSPEC_WORKERS or 1)")
        if schedule:
            sp.add_argument("--schedule", help="YAML/JSON schedule file")
            sp.add_argument("--backend", default="legendre", choices=("legendre", "direct", "both"))

    def tables(sp):
        sp.add_argument("--out", default="csv", choices=("csv", "json"), help="stdout table format")
        sp.add_argument("--plot", nargs=2, metavar=("FORMAT", "PATH"), help="also write a plot, e.g. --plot svg a.svg")

    sp = sub.add_parser("map", help="inspect a map: cylinders and codings")
    common(sp, False)
    sp.add_argument("--map", required=True)
    sp.add_argument("--cylinder", help="comma-separated word")
    sp.add_argument("--code", type=float, help="point to code")
    sp.add_argument("--n", type=int, default=10)
    sp.set_defaults(func=cmd_map)

    sp = sub.add_parser("thermo", help="pressure, Bowen roots and equilibrium states")
    common(sp, False)
    sp.add_argument("--map", required=True)
    sp.add_argument("--symbols", required=True, help="e.g. 0,2 or 1-5")
    sp.add_argument("--depth", type=int, default=1)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--obs", action="append", help="observable spec (repeatable, paired with --q)")
    sp.add_argument("--q", type=float, action="append")
    sp.add_argument("--parabolic", action="store_true", help="root through the induced system of a parabolic subalphabet")
    sp.set_defaults(func=cmd_thermo)

    sp = sub.add_parser("induce", help="build and validate an inducing scheme")
    common(sp, False)
    sp.add_argument("--map", required=True)
    sp.add_argument("--suffixes", default="2", help="symbols ending a return (not the neutral one)")
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--scheme", help="JSON scheme file")
    sp.set_defaults(func=cmd_induce)

    sp = sub.add_parser("spectrum", help="dimension spectra")
    sp.add_argument("kind", choices=("birkhoff", "lyapunov", "be", "flat", "edigits", "sample"))
    common(sp)
    tables(sp)
    sp.add_argument("--map", default="renyi")
    sp.add_argument("--obs", action="append", help="observable spec (repeatable)")
    sp.add_argument("--alpha", action="append", default=[], help="target(s); repeatable")
    sp.add_argument("--freq", action="append", help="full frequency vector a,b,...")
    sp.add_argument("--freq-head", help="explicit head of a frequency vector")
    sp.add_argument("--tail", type=float, default=0.0, help="declared tail mass")
    sp.add_argument("--j-max", type=int, default=4)
    sp.add_argument("--n", help="bounded-digit levels (edigits, default 3-15) or orbit length (sample)")
    sp.add_argument("--depth", type=int, default=6)
    sp.add_argument("--seeds", type=int, default=100)
    sp.add_argument("--burn-in", type=int, default=100)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("fuchsian", help="Bowen-Series maps and cusp-winding spectra")
    sp.add_argument("kind", choices=("build", "blocks", "spectrum", "frequency", "decay"))
    common(sp)
    tables(sp)
    sp.add_argument("--generators", help="JSON generator file (default group if omitted)")
    sp.add_argument("--word", action="append", help="comma-separated generator labels or ids")
    sp.add_argument("--alpha", action="append", default=[], help="winding targets, one per cusp")
    sp.add_argument("--freq", help="frequencies i:j=value,...")
    sp.add_argument("--tail", type=float, default=0.0)
    sp.add_argument("--n-max", type=int, default=64)
    sp.add_argument("--induce", action="store_true", help="also build and check the cusp-induced map")
    sp.set_defaults(func=cmd_fuchsian)

    sp = sub.add_parser("sample", help="empirical Birkhoff averages")
    common(sp, False)
    sp.add_argument("--map", default="renyi")
    sp.add_argument("--obs", action="append")
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--seeds", type=int, default=100)
    sp.add_argument("--burn-in", type=int, default=100)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("verify", help="re-derive every stored claim from its witness")
    sp.add_argument("--store", required=True)
    sp.set_defaults(func=cmd_verify, workers=None)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    store = None
    if args.command != "verify":
        store = ResultStore(Path(args.store), prefix=config_hash(_config(args))[:8])
    code = EXIT_OK
    try:
        if getattr(args, "plot", None) and args.plot[0] != "svg":
            raise InputError(f"unsupported plot format {args.plot[0]!r} (svg only)")
        code = args.func(args, store)
    except (InputError, EscapeError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (SchemeValidationError, GeometryError, ParabolicError, ValidationFailure) as e:
        print(f"validation failure: {e}", file=sys.stderr)
        code = EXIT_VALIDATION
    except ConvergenceError as e:
        print(f"solver did not converge: {e}", file=sys.stderr)
        code = EXIT_SOLVER
    if store is not None:
        store.commit(_config(args))
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
