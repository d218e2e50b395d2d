import hashlib
import json
import math
from pathlib import Path

import pytest

from thermospec.cli import run


def H2(a):
    return -(a * math.log(a) + (1 - a) * math.log(1 - a)) / math.log(2)


def _files(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def _rehash(root: Path, rel: str):
    man = json.loads((root / "manifest.json").read_text())
    man["files"][rel] = hashlib.sha256((root / rel).read_bytes()).hexdigest()
    (root / "manifest.json").write_text(json.dumps(man, indent=1, sort_keys=True))


@pytest.fixture(scope="module")
def be_store(tmp_path_factory):
    root = tmp_path_factory.mktemp("be")
    assert run(["spectrum", "be", "--map", "linear:2", "--freq", "0.25,0.75", "--backend", "both",
                "--store", str(root)]) == 0
    return root


def test_be_table_value(be_store, capsys):
    res = json.loads(next((be_store / "results").glob("*.json")).read_text())
    assert abs(res["lower_bound"] - H2(0.25)) < 1e-4
    ws = [w for w in res["witnesses"] if w["backend"] in ("direct", "legendre") and w["residual"] < 1e-3]
    assert {w["backend"] for w in ws} == {"direct", "legendre"}
    # the two backends agree on the dimension of their witnesses
    dims = {b: max(w["dim"][0] for w in ws if w["backend"] == b) for b in ("direct", "legendre")}
    assert abs(dims["direct"] - dims["legendre"]) < 1e-3


def test_store_is_byte_identical(be_store, tmp_path, monkeypatch):
    monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)
    assert run(["spectrum", "be", "--map", "linear:2", "--freq", "0.25,0.75", "--backend", "both",
                "--store", str(tmp_path)]) == 0
    assert _files(tmp_path) == _files(be_store)


def test_verify_clean(be_store):
    assert run(["verify", "--store", str(be_store)]) == 0


def _copy(src: Path, dst: Path) -> Path:
    for rel, data in _files(src).items():
        (dst / rel).parent.mkdir(parents=True, exist_ok=True)
        (dst / rel).write_bytes(data)
    return dst


def test_verify_detects_hash_mismatch(be_store, tmp_path):
    root = _copy(be_store, tmp_path)
    cert = next((root / "certs").glob("*.json"))
    cert.write_text(cert.read_text().replace("0.", "0.1", 1))
    assert run(["verify", "--store", str(root)]) == 3


def test_verify_detects_inflated_claim(be_store, tmp_path):
    # a consistent manifest does not help: the claim is re-derived from the witness
    root = _copy(be_store, tmp_path)
    rp = next((root / "results").glob("*.json"))
    res = json.loads(rp.read_text())
    res["lower_bound"] = 0.9
    rp.write_text(json.dumps(res, indent=1, sort_keys=True))
    _rehash(root, str(rp.relative_to(root)))
    assert run(["verify", "--store", str(root)]) == 3


def test_verify_detects_tampered_cert(be_store, tmp_path):
    root = _copy(be_store, tmp_path)
    res = json.loads(next((root / "results").glob("*.json")).read_text())
    rel = f"certs/{res['best']}.json"
    d = json.loads((root / rel).read_text())
    _perturb_first_prob(d)
    (root / rel).write_text(json.dumps(d, indent=1, sort_keys=True))
    _rehash(root, rel)
    assert run(["verify", "--store", str(root)]) == 3


def _perturb_first_prob(d):
    for key in ("q", "p", "probs"):
        if key in d:
            v = d[key]
            if isinstance(v, list):
                v[0] = v[0] * 0.5 + 0.25 if isinstance(v[0], (int, float)) else v[0]
                return
            if isinstance(v, dict):
                k = next(iter(v))
                v[k] = v[k] * 0.5 + 0.25
                return
    for v in d.values():
        if isinstance(v, dict):
            _perturb_first_prob(v)
            return
    raise AssertionError("no probability field found")


def test_unknown_map_is_config_error(tmp_path):
    assert run(["spectrum", "be", "--map", "nope", "--freq", "0.5,0.5", "--store", str(tmp_path)]) == 2


def test_bad_argument_is_config_error(tmp_path):
    assert run(["spectrum", "nosuchkind", "--store", str(tmp_path)]) == 2
    assert run(["spectrum", "be", "--freq", "0.5,0.5", "--plot", "png", "x.png", "--store", str(tmp_path)]) == 2


def test_tail_case_json(tmp_path, capsys):
    assert run(["spectrum", "be", "--map", "renyi", "--freq-head", "0.1,0.2", "--tail", "0.05",
                "--store", str(tmp_path), "--out", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["exact"] and rows[0]["dim_lo"] == 0.5 and rows[0]["dim_hi"] == 0.5


def test_svg_plot(tmp_path, capsys):
    svg = tmp_path / "be.svg"
    assert run(["spectrum", "be", "--map", "linear:2", "--freq", "0.25,0.75", "--freq", "0.5,0.5",
                "--store", str(tmp_path / "s"), "--plot", "svg", str(svg)]) == 0
    text = svg.read_text()
    assert text.startswith("<svg") or text.startswith("<?xml")
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("alpha_1,alpha_2,dim_lo") and len(out) == 3


def test_map_and_thermo_commands(tmp_path, capsys):
    assert run(["map", "--map", "renyi", "--cylinder", "1,2,3", "--code", "0.3", "--store", str(tmp_path)]) == 0
    assert run(["thermo", "--map", "linear:3", "--symbols", "0,2", "--store", str(tmp_path)]) == 0
    assert "0.6309" in capsys.readouterr().out


def test_induce_rejects_neutral_suffix(tmp_path):
    assert run(["induce", "--map", "renyi", "--suffixes", "1,2", "--k", "4", "--store", str(tmp_path)]) == 3


def test_fuchsian_blocks(tmp_path, capsys):
    assert run(["fuchsian", "blocks", "--word", "a,a,B", "--store", str(tmp_path)]) == 0
    assert capsys.readouterr().out.strip()
