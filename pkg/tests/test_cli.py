import json
import subprocess
import sys

import numpy as np
import pytest

from wavetbvp.cli import OUT_ENV, run
from wavetbvp.io import read_csv


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc, encoding="utf-8")
    return str(p)


def manifest(d):
    return json.loads((d / "manifest.json").read_text(encoding="utf-8"))


LINE = {"kind": "line", "f": "sin(x)", "g": "cos(2*x)*exp(-x^2)", "T": 0.7}


def test_line_solve_and_verify(tmp_path, capsys):
    out = tmp_path / "out"
    assert run(["solve", "--problem", write(tmp_path, "p.json", LINE), "--out", str(out)]) == 0
    m = manifest(out)
    assert m["status"] == "ok"
    assert m["problem"]["kind"] == "line"
    assert m["diagnostics"]["passed"] is True
    assert {"manifest.json", "v.csv", "y.csv"} <= {p.name for p in out.iterdir()}
    header, v = read_csv(out / "v.csv")
    assert header == ["x", "v"] and v.shape[1] == 2
    capsys.readouterr()
    assert run(["verify", str(out)]) == 0
    text = capsys.readouterr().out
    assert "PASS  terminal_error" in text
    assert "FAIL" not in text


def test_solve_is_byte_deterministic(tmp_path):
    p = write(tmp_path, "p.json", LINE)
    run(["solve", "--problem", p, "--out", str(tmp_path / "a")])
    run(["solve", "--problem", p, "--out", str(tmp_path / "b")])
    for name in ("v.csv", "y.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_out_env_variable(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    assert run(["solve", "--problem", write(tmp_path, "p.json", LINE)]) == 0
    assert (tmp_path / "env" / "manifest.json").exists()


def test_zero_problem_gives_zero_velocity(tmp_path):
    out = tmp_path / "z"
    assert run(["solve", "--problem", write(tmp_path, "z.json", {"kind": "line", "f": 0, "g": 0, "T": 1}),
                "--out", str(out)]) == 0
    _, v = read_csv(out / "v.csv")
    assert np.all(v[:, 1] == 0.0)


def test_resonance_rejection(tmp_path):
    out = tmp_path / "r"
    doc = {"kind": "periodic", "f": "sin(2*pi*x)", "g": "cos(2*pi*x)", "T": 1, "L": 1}
    assert run(["solve", "--problem", write(tmp_path, "r.json", doc), "--out", str(out)]) == 2
    m = manifest(out)
    assert m["status"] == "rejected"
    assert m["reason"] == "resonance-obstruction"
    assert m["details"]["residual"] == pytest.approx(np.sqrt(2.0), rel=1e-6)
    assert not (out / "v.csv").exists()


def test_irrational_ratio_rejected(tmp_path):
    out = tmp_path / "i"
    doc = {"kind": "periodic", "f": "sin(2*pi*x)", "g": 0, "T": "2^(-0.5)", "L": 1}
    assert run(["solve", "--problem", write(tmp_path, "i.json", doc), "--out", str(out)]) == 2
    assert manifest(out)["reason"] == "irrational-ratio"


def test_periodic_solve(tmp_path):
    out = tmp_path / "p"
    doc = {"kind": "periodic", "f": "sin(2*pi*x)", "g": 0, "T": 0.25, "L": 1}
    assert run(["solve", "--problem", write(tmp_path, "p.json", doc), "--out", str(out)]) == 0
    assert (out / "coefficients.json").exists()


def test_info_reports_ordering_violation(tmp_path, capsys):
    doc = {"kind": "wavemap", "f": 1, "g": 2, "T": 1}
    assert run(["info", "--problem", write(tmp_path, "w.json", doc)]) == 2
    rep = json.loads(capsys.readouterr().out)
    assert rep["admissible"] is False
    assert rep["reason"] == "ordering-violated"


def test_info_admissible(tmp_path, capsys):
    assert run(["info", "--problem", write(tmp_path, "p.json", LINE)]) == 0
    assert json.loads(capsys.readouterr().out)["admissible"] is True


def test_malformed_json(tmp_path, capsys):
    p = write(tmp_path, "bad.json", '{"kind": "line",\n  "f": "sin(x)" "g": 0}')
    assert run(["solve", "--problem", p, "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err


def test_bad_expression_and_missing_file(tmp_path):
    p = write(tmp_path, "e.json", {"kind": "line", "f": "sin(x)*", "g": 0, "T": 1})
    assert run(["solve", "--problem", p, "--out", str(tmp_path / "o")]) == 1
    assert run(["solve", "--problem", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 1


def test_missing_field(tmp_path, capsys):
    p = write(tmp_path, "m.json", {"kind": "line", "f": 0})
    assert run(["solve", "--problem", p, "--out", str(tmp_path / "o")]) == 1
    assert "needs field" in capsys.readouterr().err


def test_frames(tmp_path):
    doc = {"kind": "curvflow", "f": "1+0.5*sin(x)", "L": "2*pi", "T": "2*pi/3"}
    out = tmp_path / "fr"
    assert run(["frames", "--problem", write(tmp_path, "f.json", doc), "--out", str(out), "--frames", "3"]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["frame_000.svg", "frame_001.svg", "frame_002.svg", "frames.json"]
    assert (out / "frame_000.svg").read_text(encoding="utf-8").lstrip().startswith("<")


def test_frames_wrong_kind(tmp_path):
    assert run(["frames", "--problem", write(tmp_path, "p.json", LINE), "--out", str(tmp_path / "o")]) == 1


def test_entry_point_subprocess(tmp_path):
    out = tmp_path / "s"
    r = subprocess.run([sys.executable, "-m", "wavetbvp", "solve", "--problem", write(tmp_path, "p.json", LINE),
                        "--out", str(out)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert manifest(out)["status"] == "ok"
