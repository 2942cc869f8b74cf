import json
import os
import subprocess
import sys

import pytest

from luttinger2d.cli import run


def call(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = run([*argv, "--output", str(out)])
    return code, (out.read_text() if out.exists() else None)


def test_params_json(tmp_path):
    code, text = call(tmp_path, "params", "--V", "2", "--nu", "0.55")
    assert code == 0
    doc = json.loads(text)
    assert doc["result"]["g3_eff"] == pytest.approx(3.5096167457657596, rel=1e-14)
    assert doc["result"]["stable"] is True
    assert doc["config"]["command"] == "params"


def test_params_unstable_reports(tmp_path):
    code, text = call(tmp_path, "params", "--V", "20")
    assert code == 0
    doc = json.loads(text)["result"]
    assert doc["stable"] is False and doc["g3_eff"] is None


def test_partition_csv(tmp_path):
    code, text = call(tmp_path, "partition", "--cells", "3", "--format", "csv")
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("# luttinger2d ") and lines[1].startswith("# config: ")
    assert lines[2] == "k1,k2,r,s,kp_plus,kp_minus"
    assert len(lines) == 3 + 72


def test_ed(tmp_path):
    code, text = call(tmp_path, "ed", "--n1", "4", "--n2", "2", "--V", "4")
    assert code == 0
    res = json.loads(text)["result"]
    assert res["energy"] == pytest.approx(-4.612184759848123, abs=1e-10)


def test_dispersion_and_unstable(tmp_path):
    code, text = call(tmp_path, "dispersion", "--gamma", "0.3", "--grid", "8", "--format", "csv")
    assert code == 0 and len(text.splitlines()) == 3 + 64
    code, _ = call(tmp_path, "dispersion", "--gamma", "1.2", name="bad")
    assert code == 1
    assert not (tmp_path / "bad").exists()


def test_free_energy(tmp_path):
    code, text = call(tmp_path, "free-energy", "--V", "2", "--cells", "5", "--T", "0,0.5,1")
    assert code == 0
    table = json.loads(text)["result"]["table"]
    F = [f for _, f in table]
    assert F[0] > F[1] > F[2]


def test_gap(tmp_path):
    code, text = call(tmp_path, "gap", "--nus", "0.49,0.5,0.51", "--grid", "32", "--format", "csv")
    assert code == 0
    rows = [line.split(",") for line in text.splitlines()[3:]]
    assert len(rows) == 3
    assert float(rows[0][3]) == pytest.approx(float(rows[2][3]), abs=1e-8)


@pytest.mark.parametrize("check,extra", [("schwinger", ["--modes", "6", "--margin", "2"]),
                                         ("kronig", ["--modes", "8"]),
                                         ("hn", ["--modes", "4"])])
def test_verify(tmp_path, check, extra):
    code, text = call(tmp_path, "verify", "--check", check, *extra)
    assert code == 0
    doc = json.loads(text)["result"]
    assert doc["pass"] is True
    assert set(doc) == {"check", "dims", "max_residual", "levels_compared", "pass", "details"}


def test_verify_failure_exit_code(tmp_path, monkeypatch):
    from luttinger2d import cli, verify

    def failing(space, tol=1e-12):
        return verify.VerifyReport("schwinger", {}, 1.0, 0, False, {})

    monkeypatch.setattr(cli.verify, "schwinger_sweep", failing)
    code, text = call(tmp_path, "verify", "--check", "schwinger", "--modes", "6")
    assert code == 1
    assert json.loads(text)["result"]["pass"] is False


def test_verify_unstable_gamma(tmp_path):
    code, _ = call(tmp_path, "verify", "--check", "hn", "--modes", "4", "--gamma", "1.0")
    assert code == 1


def test_determinism(tmp_path):
    _, a = call(tmp_path, "gap", "--nus", "0.5", "--grid", "16", name="a")
    _, b = call(tmp_path, "gap", "--nus", "0.5", "--grid", "16", name="b")
    assert a == b


def test_config_roundtrip_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "params", "V": 3.0, "nu": 0.6}))
    code, text = call(tmp_path, "params", "--config", str(cfg))
    assert code == 0
    doc = json.loads(text)
    assert doc["config"]["V"] == 3.0
    # an output file is itself a valid config
    code, again = call(tmp_path, "params", "--config", str(tmp_path / "out"), name="again")
    assert again == text
    code, text = call(tmp_path, "params", "--config", str(cfg), "--V", "1.0", name="over")
    assert json.loads(text)["config"]["V"] == 1.0


def test_csv_output_is_config(tmp_path):
    call(tmp_path, "partition", "--cells", "3", "--format", "csv", name="p.csv")
    code, again = call(tmp_path, "partition", "--config", str(tmp_path / "p.csv"), name="q.csv")
    assert code == 0 and again == (tmp_path / "p.csv").read_text()


def test_usage_errors(tmp_path, capsys):
    assert run(["bogus"]) == 2
    assert run(["params", "--V", "abc"]) == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"unknown_key": 1}))
    assert run(["params", "--config", str(cfg)]) == 2
    assert run(["params", "--config", str(tmp_path / "missing.json")]) == 2
    cfg.write_text(json.dumps({"command": "gap"}))
    assert run(["params", "--config", str(cfg)]) == 2


def test_domain_errors(tmp_path):
    assert run(["params", "--nu", "0.1"]) == 1
    assert run(["ed", "--n1", "5", "--n2", "5"]) == 1


def test_no_temp_files_left(tmp_path):
    call(tmp_path, "params")
    call(tmp_path, "dispersion", "--gamma", "1.5", name="bad")
    assert sorted(os.listdir(tmp_path)) == ["out"]


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "luttinger2d.cli", "params", "--nu", "0.5"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["mu_a"] == 0.0
