import dataclasses
import json
import subprocess
import sys
from types import SimpleNamespace

import pytest

import nhmc.cli as cli
from nhmc.chain import build_dobrushin_example, power_rate
from nhmc.specfmt import instantiate, load_document


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_json_envelope(capsys):
    code, out, _ = run(capsys, "analyze", "dobrushin_quarter", "--n", "200")
    assert code == 0
    env = json.loads(out)
    assert env["schema_version"] == cli.SCHEMA_VERSION
    assert env["command"] == "analyze"
    assert env["defaults"]["seed"] == 12345 and env["defaults"]["samples"] == 10000
    rep = env["result"]["reports"][0]
    assert rep["n"] == 200 and rep["lower_bound_ok"] and rep["z_bound_ok"]


def test_analyze_n_list_and_csv(capsys):
    code, out, _ = run(capsys, "analyze", "slow_switching", "--n-list", "10", "20", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 3 and "V_Sn" in lines[0]


def test_analyze_text(capsys):
    code, out, _ = run(capsys, "analyze", "three_state_cycle", "--n", "30", "--format", "text")
    assert code == 0 and "V_Sn" in out and out.startswith("# nhmc")


def test_degenerate_exit_code(capsys):
    code, out, _ = run(capsys, "analyze", "constant_summand", "--n", "10")
    assert code == 2
    assert json.loads(out)["result"]["reports"][0]["degenerate"] is True
    code, _, err = run(capsys, "simulate", "constant_summand", "--n", "10", "--samples", "20")
    assert code == 2 and "degenerate" in err


def test_bound_failure_exit_code(capsys, monkeypatch):
    real = cli.analyze
    failing = SimpleNamespace(passed=False, to_dict=lambda: {"passed": False})
    monkeypatch.setattr(cli, "analyze", lambda spec, cap: dataclasses.replace(real(spec, cap), z_bound=failing))
    code, out, _ = run(capsys, "analyze", "dobrushin_quarter", "--n", "50")
    assert code == 3
    assert json.loads(out)["result"]["reports"][0]["z_bound_ok"] is False


@pytest.mark.parametrize("argv", [
    ["analyze", "dobrushin_quarter"],
    ["analyze", "dobrushin_quarter", "--n", "10", "--n-list", "20"],
    ["analyze", "dobrushin_quarter", "--n", "ten"],
    ["gate", "--exponent", "abc"],
    ["gate", "--exponent", "1.5"],
    ["example", "--exponent", "0"],
    ["simulate", "dobrushin_quarter", "--n-list", "10", "20"],
    ["frobnicate"],
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as ex:
        code = cli.main(argv)
        raise SystemExit(code)
    assert ex.value.code == 1


def test_document_error_exit_code(capsys, tmp_path):
    p = tmp_path / "bad.nhmc.json"
    p.write_text('{"states": ["a"]}')
    code, _, err = run(capsys, "analyze", str(p), "--n", "5")
    assert code == 1 and "structure" in err


def test_missing_file_is_io_error(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", str(tmp_path / "nope.nhmc.json"), "--n", "5")
    assert code == 4 and "cannot read" in err


def test_unwritable_output_is_io_error(capsys, tmp_path):
    code, _, _ = run(capsys, "analyze", "slow_switching", "--n", "5", "--out", str(tmp_path / "no" / "x.json"))
    assert code == 4


def test_simulate_csv_is_byte_identical(capsys, tmp_path):
    blobs = []
    for k in range(3):
        out = tmp_path / f"s{k}.csv"
        code, _, _ = run(capsys, "simulate", "dobrushin_quarter", "--n", "300", "--samples", "200", "--out", str(out))
        assert code == 0
        blobs.append(out.read_bytes())
        fit = json.loads((tmp_path / f"s{k}.fit.json").read_text())
        assert fit["fit"]["count"] == 200 and fit["seed"] == 12345
    assert blobs[0] == blobs[1] == blobs[2]


def test_simulate_too_few_samples(capsys):
    code, out, _ = run(capsys, "simulate", "dobrushin_quarter", "--n", "100", "--samples", "5")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["fit"] is None and "10" in res["fit_error"]


def test_count_accepts_scientific():
    assert cli._count("1e5") == 100000
    assert cli._exponent("1/3") == pytest.approx(1 / 3)


def test_gate_text_verdicts(capsys):
    code, out, _ = run(capsys, "gate", "--n-list", "1000", "10000", "--format", "text")
    assert code == 0
    verdicts = [l for l in out.splitlines() if "verdict:" in l]
    assert len(verdicts) == 2
    assert "CLT predicted" in verdicts[0] and "not decreasing" in verdicts[1]


def test_gate_json_rows(capsys):
    code, out, _ = run(capsys, "gate", "--exponent", "0.25", "--n-list", "1000", "10000")
    rows = json.loads(out)["result"]["families"][0]["rows"]
    for r in rows:
        assert r["condition_value"] == pytest.approx(0.5 * r["n"] ** -0.25, rel=0.05)


def test_example_writes_builder_document(capsys, tmp_path):
    out = tmp_path / "q.nhmc.json"
    code, _, _ = run(capsys, "example", "--exponent", "1/4", "--out", str(out))
    assert code == 0
    assert instantiate(load_document(out), 64) == build_dobrushin_example(64, power_rate(0.25))


def test_example_run(capsys):
    code, out, _ = run(capsys, "example", "--exponent", "0.25", "--run", "--n", "200", "--samples", "50")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["analysis"]["n"] == 200 and res["simulation"]["samples"] == 50


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "nhmc", "--version"], capture_output=True, text=True)
    assert p.returncode == 0 and p.stdout.startswith("nhmc ")
