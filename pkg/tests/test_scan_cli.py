import json
import os
import signal
import subprocess
import sys
import time
from pathlib import Path

import pytest

from ptlab.cli import main
from ptlab.config import ExperimentConfig, parse_primes
from ptlab.scan import ScanRun, ScanSpec, read_scan, run_scan

FORM = "diag:d=3;1,2,3,5"


def cli(*args, cwd=None, **kw):
    return subprocess.run([sys.executable, "-m", "ptlab", *args], cwd=cwd, capture_output=True, text=True, **kw)


def test_scan_layout(tmp_path):
    spec = ScanSpec(form="fermat:m=4", p=7, R=1, mode="full")
    out = run_scan(spec, ScanRun(out=str(tmp_path / "s.csv")))
    h, rows = read_scan(out)
    assert h == spec.sha256()
    assert len(rows) == 7 ** 4 - 1
    lines = out.read_text().splitlines()
    assert lines[1].startswith("p,m,d,form,c1,c2,c3,c4,disc_zero,pairing,")
    meta = json.loads((tmp_path / "s.csv.meta.json").read_text())
    assert meta["config_sha256"] == h and meta["schema"] == "v1"
    # every pairing row is flagged singular
    assert all(r["disc_zero"] == "1" for r in rows if r["pairing"])
    proj = run_scan(ScanSpec(form="fermat:m=4", p=7, R=1), ScanRun(out=str(tmp_path / "p.csv")))
    assert len(read_scan(proj)[1]) == (7 ** 4 - 1) // 6


def test_workers_byte_identical(tmp_path):
    spec = ScanSpec(form=FORM, p=11, R=2)
    a = run_scan(spec, ScanRun(out=str(tmp_path / "w1.csv"), workers=1, chunk_size=50))
    b = run_scan(spec, ScanRun(out=str(tmp_path / "w8.csv"), workers=8, chunk_size=17))
    assert a.read_bytes() == b.read_bytes()


def test_sampled_scan_partition_independent(tmp_path):
    spec = ScanSpec(form="fermat:m=6", p=11, R=1, mode="sample", samples=60, seed=3)
    a = run_scan(spec, ScanRun(out=str(tmp_path / "a.csv"), workers=1, chunk_size=60))
    b = run_scan(spec, ScanRun(out=str(tmp_path / "b.csv"), workers=3, chunk_size=7))
    assert a.read_bytes() == b.read_bytes()


def test_corrupt_checkpoint_recomputed(tmp_path):
    spec = ScanSpec(form=FORM, p=7, R=1)
    clean = run_scan(spec, ScanRun(out=str(tmp_path / "clean.csv"), chunk_size=40)).read_bytes()
    ck = tmp_path / "ck"
    run_scan(spec, ScanRun(out=str(tmp_path / "x.csv"), chunk_size=40, checkpoint_dir=str(ck)))
    victim = sorted(ck.iterdir())[3]
    victim.write_text(victim.read_text()[:50])      # a torn write
    other = sorted(ck.iterdir())[5]
    doc = json.loads(other.read_text())
    doc["rows"][0] = doc["rows"][0].replace(",", ";", 1)   # checksum no longer matches
    other.write_text(json.dumps(doc))
    out = run_scan(spec, ScanRun(out=str(tmp_path / "y.csv"), chunk_size=40, checkpoint_dir=str(ck), resume=True))
    assert out.read_bytes() == clean


def test_kill_and_resume(tmp_path):
    args = ["scan", "--form", FORM, "--p", "13", "--rmax", "2", "--no-symmetry-cache", "--chunk-size", "16",
            "--checkpoint-dir", str(tmp_path / "ck"), "-v"]
    ref = cli(*args[:-3], "--out", str(tmp_path / "ref.csv"))
    assert ref.returncode == 0, ref.stderr
    proc = subprocess.Popen([sys.executable, "-m", "ptlab", *args, "--out", str(tmp_path / "run.csv")],
                            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    ck = tmp_path / "ck"
    deadline = time.time() + 120
    while time.time() < deadline:
        if ck.exists() and len(list(ck.glob("chunk_*.json"))) >= 20:
            break
        time.sleep(0.05)
    proc.send_signal(signal.SIGKILL)
    proc.wait()
    n_before = len(list(ck.glob("chunk_*.json")))
    assert 0 < n_before < 149, "the scan should have been killed mid-run"
    assert not (tmp_path / "run.csv").exists()
    res = cli(*args, "--resume", "--out", str(tmp_path / "run.csv"))
    assert res.returncode == 0, res.stderr
    assert "already done" in res.stderr
    assert (tmp_path / "run.csv").read_bytes() == (tmp_path / "ref.csv").read_bytes()


def test_exit_codes(tmp_path, capsys):
    assert main(["count", "--form", "fermat:m=4", "--p", "7"]) == 0
    assert main(["count", "--form", "fermat:m=6", "--p", "31", "--rmax", "2", "--budget", "1000"]) == 2
    assert main(["count", "--form", "cubic:1,2", "--p", "7"]) == 2
    assert main(["count", "--form", "fermat:m=4", "--p", "8"]) == 2
    assert main(["series", "--form", "fermat:m=4", "--p", "7"]) == 2          # missing --c
    with pytest.raises(SystemExit) as info:
        main(["count", "--bogus"])
    assert info.value.code == 2
    assert main(["scan", "--form", FORM, "--p", "7,11", "--out", str(tmp_path / "x.csv")]) == 2


def test_cli_documents(capsys):
    assert main(["series", "--form", "fermat:m=4", "--p", "7", "--c", "1,1,1,1", "--rmax", "2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["N"] == [21, 147] and doc["command"] == "series"
    assert main(["identities", "--form", "poly:d=3;m=3;x1^3+x2^3+x3^3+x1*x2*x3", "--p", "7"]) == 0
    docs = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert len(docs) == 3 and all(d["report"]["equal"] for d in docs)


def test_rich_configs_output(capsys):
    assert main(["rich-configs", "--n", "4", "--r", "3", "--char", "0"]) == 0
    assert capsys.readouterr().out.strip() == "[[-1/2, -1/2, -1/2, 1/2], [-2, -1, 1, 1], [-1, -1, -1, 2], '---']"


def test_config_file_and_hash(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"form": "fermat:m=4", "primes": "11-19", "R": 2, "workers": 4}))
    cfg = ExperimentConfig.load(str(path))
    assert cfg.primes == [11, 13, 17, 19]
    # execution fields do not enter the hash; computational ones do
    assert cfg.override(workers=1, chunk_size=7).sha256() == cfg.sha256()
    assert cfg.override(R=3).sha256() != cfg.sha256()
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"nonsense": 1})
    with pytest.raises(ValueError):
        parse_primes("9")


def test_audit(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["scan", "--form", "fermat:m=4", "--p", "7", "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["audit", "--config", str(out)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rows"] == 7 ** 4 - 1
    assert sum(r["count"] for r in doc["table"]) == doc["rows"]
