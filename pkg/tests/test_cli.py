import json

import pytest

from respoisson.cli import main


def test_verify_appendix(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "appendixB", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["pass"] is True
    man = json.loads((tmp_path / "v.json.manifest.json").read_text())
    assert man["subcommand"] == "verify"


def test_verify_lemmas_reports_failure():
    assert main(["verify", "lemmas"]) == 1


def test_solve_preset_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["solve", "--preset", "laplace_usq", "--out", str(a)]) == 0
    assert main(["solve", "--preset", "laplace_usq", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_solve_hypothesis_violation(tmp_path, capsys):
    sysf, cfgf = tmp_path / "s.json", tmp_path / "c.json"
    sysf.write_text(json.dumps({"n": 3, "m": 1, "N": 1, "alpha": 0.5, "rhs": ["1 + u1^2"]}))
    cfgf.write_text(json.dumps({"R": 0.5, "gamma": 0.5, "h": [{"b": 0.1, "beta": [1, 1, 0]}],
                                "degree": 8, "grid": [12, 8]}))
    code = main(["solve", "--system", str(sysf), "--config", str(cfgf), "--mode", "AUTONOMOUS"])
    assert code == 2
    assert "a(0) != 0" in capsys.readouterr().err


def test_constants(tmp_path):
    out = tmp_path / "c.json"
    assert main(["constants", "--max-order", "2", "--out", str(out)]) == 0
    rows = json.loads(out.read_text())
    rows = rows["rows"] if isinstance(rows, dict) else rows
    assert rows[0]["kind"] == "x1-coefficient"


def test_usage_errors():
    assert main(["solve"]) == 2
    with pytest.raises(SystemExit):
        main(["nosuch"])
