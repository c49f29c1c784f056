import csv
import json
import subprocess
import sys

import pytest

from ietflow import __version__
from ietflow.cli import main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def _header_line(path):
    first = path.read_text().splitlines()[0]
    assert first.startswith("# config_hash=") and first.endswith(f"version={__version__}")
    return first


def test_induct_golden_mmy(tmp_path):
    assert run(tmp_path, "induct", "--instance", "golden", "--depth", "50", "--schedule", "mmy") == 0
    blocks = json.loads((tmp_path / "blocks.json").read_text())
    assert blocks["norms"] == [1] * 50
    assert blocks["version"] == __version__ and len(blocks["config_hash"]) == 16
    lines = (tmp_path / "trace.jsonl").read_text().splitlines()
    assert json.loads(lines[0])["header"]["config_hash"] == blocks["config_hash"]
    assert len(lines) > 50


def test_induct_depth_zero(tmp_path):
    assert run(tmp_path, "induct", "--depth", "0") == 0
    assert json.loads((tmp_path / "blocks.json").read_text())["norms"] == []


def test_induct_rational_ties(tmp_path, capsys):
    assert run(tmp_path, "induct", "--instance", "euclid", "--schedule", "raw") == 2
    assert "step" in capsys.readouterr().err


def test_induct_inline_instance(tmp_path):
    inst = json.dumps({"alphabet": ["A", "B"], "pi0": ["A", "B"], "pi1": ["B", "A"], "lengths": ["3/5", "2/5"]})
    assert run(tmp_path, "induct", "--instance", inst, "--schedule", "raw", "--depth", "2") == 0


def test_bad_instance_is_usage_error(tmp_path):
    assert run(tmp_path, "induct", "--instance", "no-such-file.json") == 64


def test_certify_golden(tmp_path):
    assert run(tmp_path, "certify", "--K", "50", "--gaps", "200") == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["certified"] is True
    assert json.loads((tmp_path / "audit.json").read_text())["passed"] is True
    gaps = tmp_path / "gaps.csv"
    _header_line(gaps)
    rows = list(csv.reader(gaps.read_text().splitlines()[1:]))
    assert rows[0] == ["n", "j", "scope", "min_gap", "max_gap"]
    assert len(rows) > 200


def test_certify_unbounded(tmp_path):
    assert run(tmp_path, "certify", "--instance", "unbounded-quotients", "--K", "20") == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["certified"] is False
    norms = cert["norms"]
    assert norms[-1] > norms[0] and max(norms) >= 10


def test_certify_K0_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "certify", "--K", "0")
    assert exc.value.code == 64


def test_unknown_flag_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "sweep", "--bogus")
    assert exc.value.code == 64


def test_sweep_zero_pairs(tmp_path):
    assert run(tmp_path, "sweep", "--pairs", "0", "--seed", "42") == 0
    rep = json.loads((tmp_path / "sweep.json").read_text())
    assert all(s["pairs"] == 0 for s in rep["summary"]["scales"])
    lines = (tmp_path / "pairs.csv").read_text().splitlines()
    assert len(lines) == 2
    assert not (tmp_path / "witnesses").exists()


def test_sweep_adaptive_tiny_eps_writes_witnesses(tmp_path):
    rc = run(tmp_path, "sweep", "--pairs", "3", "--scales", "1e-4", "--constants", '{"eps": "1/1000000"}')
    assert rc == 4
    ws = sorted((tmp_path / "witnesses").glob("pair_*.json"))
    assert len(ws) == 3
    assert {json.loads(w.read_text())["status"] for w in ws} == {"DriftNotKept"}


def test_sweep_strict_desk_scale_fails(tmp_path):
    # delta <= eps, so strict mode rejects every desk-scale pair before drift is measured
    rc = run(tmp_path, "sweep", "--mode", "strict", "--pairs", "2", "--scales", "1e-4")
    assert rc == 4
    ws = sorted((tmp_path / "witnesses").glob("pair_*.json"))
    assert {json.loads(w.read_text())["status"] for w in ws} == {"PairTooFar"}


def _artifacts(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_sweep_outputs_independent_of_jobs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["sweep", "--pairs", "10", "--scales", "1e-3,1e-4", "--seed", "7"]
    assert main([*args, "--out", str(a)]) == 0
    assert main([*args, "--out", str(b), "--jobs", "2"]) == 0
    assert _artifacts(a) == _artifacts(b)
    _header_line(a / "pairs.csv")


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "ietflow.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
