import csv
import io
import json
import math

import numpy as np
import pytest

from bellsim.cli import main, parse_theta_grid, CliError
from bellsim.io import read_ensemble

from schema_util import validate


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_chsh_singlet_exact(capsys):
    code, out, _ = run(capsys, "chsh", "singlet", "--paper-config", "--exact")
    assert code == 0
    rep = json.loads(out)
    validate(rep, "chsh_report")
    assert rep["S"] == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert rep["stderr"] == 0.0 and rep["method"] == "Exact"
    assert f"{rep['S']:.10f}" == "2.8284271247"


def test_chsh_sign_exact_and_mc(capsys):
    _, out, _ = run(capsys, "chsh", "sign", "--paper-config", "--exact")
    rep = json.loads(out)
    assert [rep[k] for k in ("E_ab", "E_abp", "E_apb", "E_apbp")] == pytest.approx(
        [-0.5, -0.5, -0.5, 0.5], abs=1e-12)
    assert rep["S"] == pytest.approx(2.0, abs=1e-12)
    _, out, _ = run(capsys, "chsh", "sign", "--empirical", "--n", 100_000, "--seed", 3)
    mc = json.loads(out)
    assert mc["method"] == "MonteCarlo"
    assert abs(mc["S"] - 2.0) < 4 * mc["stderr"]


def test_angles_flag_in_degrees_and_radians(capsys):
    _, deg, _ = run(capsys, "chsh", "singlet", "--angles", "0,90,45,-45", "--exact")
    _, rad, _ = run(capsys, "chsh", "singlet", "--angles", "0,pi/2,pi/4,-pi/4", "--exact")
    _, rad2, _ = run(capsys, "chsh", "singlet", "--angles", "0,1.5707963267948966,0.7853981633974483,-0.7853981633974483",
                     "--exact", "--radians")
    s = [json.loads(x)["S"] for x in (deg, rad, rad2)]
    assert s == pytest.approx([2 * math.sqrt(2)] * 3, abs=1e-12)


def test_simulate_writes_ensemble(tmp_path, capsys):
    out = tmp_path / "leak.ndjson"
    code, _, _ = run(capsys, "simulate", "leak", "--n", 100_000, "--seed", 42, "--out", out)
    assert code == 0
    ens, header = read_ensemble(out)
    assert len(ens) == 100_000
    validate(header, "ensemble_header")
    m = header["manifest"]
    assert (m["command"], m["model_id"], m["n_runs"], m["master_seed"]) == ("simulate", "leak", 100_000, 42)


@pytest.mark.parametrize("argv", [
    ("simulate", "nope"),
    ("simulate", "dice:1.2,0.3"),
    ("simulate", "leak", "--n", 0),
    ("sweep", "singlet", "--theta-grid", "0:pi:0"),
    ("sweep", "singlet", "--theta-grid", "0:pi"),
    ("game", "constant", "--rounds", 0),
    ("game", "telepathy"),
    ("chsh", "singlet", "--exact", "--empirical"),
    ("audit", "leak", "--condition", "Telepathy"),
    ("chsh", "singlet", "--alpha", 2),
])
def test_bad_arguments_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err


def test_model_failure_exit_3(capsys):
    code, _, err = run(capsys, "game", "pilot-wave", "--rounds", 10)
    assert code == 3 and "model failure" in err


def test_chsh_on_ensemble_missing_pair(tmp_path, capsys):
    out = tmp_path / "s.ndjson"
    run(capsys, "simulate", "singlet", "--angles", "0,90,45,-45", "--n", 100, "--out", out)
    code, _, err = run(capsys, "chsh", out, "--angles", "0,90,45,135")
    assert code == 2 and "need at least 2" in err
    code, out_json, _ = run(capsys, "chsh", out, "--angles", "0,90,45,-45")
    assert code == 0 and json.loads(out_json)["method"] == "MonteCarlo"


def _verdicts(out):
    data = json.loads(out)
    validate(data, "audit_verdict")
    return {v["condition"]: v["passed"] for v in data}


def test_audit_leak_exact(capsys):
    code, out, _ = run(capsys, "audit", "leak", "--all", "--exact")
    assert code == 0
    v = _verdicts(out)
    assert v["SettingsIndependence"] and v["StructuralLocality"]
    assert not v["MicrostateIndependence"]
    assert not v["Factorizability"] and not v["ParameterIndependence"]
    # outcomes are fixed once lambda and the settings are, so OI holds
    assert v["OutcomeIndependence"]


def test_audit_sign_exact_all_pass_but_inverted(capsys):
    _, out, _ = run(capsys, "audit", "sign", "--all", "--exact")
    v = _verdicts(out)
    assert not v.pop("InvertedOiPattern")
    assert all(v.values())


def test_audit_single_condition_and_empirical(capsys):
    _, out, _ = run(capsys, "audit", "adversarial", "--condition", "SettingsIndependence",
                    "--empirical", "--n", 100_000, "--seed", 1)
    data = json.loads(out)
    assert len(data) == 1 and data[0]["mode"] == "empirical" and not data[0]["passed"]
    assert data[0]["p_value"] < 1e-3


def test_audit_ensemble_mode_conflict(tmp_path, capsys):
    out = tmp_path / "e.ndjson"
    run(capsys, "simulate", "leak", "--n", 2000, "--out", out)
    code, _, err = run(capsys, "audit", out, "--exact")
    assert code == 2 and "--exact" in err
    code, res, _ = run(capsys, "audit", out)
    assert code == 0 and all(v["mode"] in ("empirical", "exact") for v in json.loads(res))


def test_game_command(capsys, tmp_path):
    code, out, _ = run(capsys, "game", "pilot-wave", "--leak", "shirt-color", "--rounds", 100_000,
                       "--seed", 3, "--transcript", tmp_path / "t.ndjson")
    assert code == 0
    score = json.loads(out)
    validate(score, "game_score")
    assert abs(score["chsh_empirical"] - 2 * math.sqrt(2)) < 4 * score["chsh_stderr"]
    ens, header = read_ensemble(tmp_path / "t.ndjson")
    assert header["model_id"] == "game:pilot-wave:shirt-color" and len(ens) == 100_000
    _, out, _ = run(capsys, "game", "sign", "--rounds", 100_000)
    score = json.loads(out)
    assert score["max_abs_deviation"] > 0.15
    assert score["chsh_empirical"] <= 2 + 4 * score["chsh_stderr"]


def _sweep(capsys, *argv):
    code, out, _ = run(capsys, "sweep", *argv)
    assert code == 0
    return list(csv.DictReader(io.StringIO(out)))


def test_sweep_singlet_and_sign(capsys):
    rows = _sweep(capsys, "singlet", "--theta-grid", "0:π:7", "--n", 20_000)
    assert list(rows[0]) == ["theta", "E_exact", "E_mc", "stderr"]
    assert len(rows) == 7
    for r in rows:
        t = float(r["theta"])
        assert float(r["E_exact"]) == pytest.approx(-math.cos(t), abs=1e-12)
        assert abs(float(r["E_mc"]) - float(r["E_exact"])) <= max(4 * float(r["stderr"]), 1e-12)
    rows = _sweep(capsys, "sign", "--theta-grid", "0:180:7", "--exact")
    for r in rows:
        t = float(r["theta"])
        assert float(r["E_exact"]) == pytest.approx(-1 + 2 * t / math.pi, abs=1e-12)
        assert r["E_mc"] == ""


def test_parse_theta_grid():
    assert np.allclose(parse_theta_grid("0:180:3"), [0, math.pi / 2, math.pi])
    assert np.allclose(parse_theta_grid("0:pi:3"), [0, math.pi / 2, math.pi])
    assert np.allclose(parse_theta_grid("0:3.14159:2", radians=True), [0, 3.14159])
    assert np.allclose(parse_theta_grid("pi/4:3pi/4:2"), [math.pi / 4, 3 * math.pi / 4])
    with pytest.raises(CliError):
        parse_theta_grid("0:x:3")


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("seed = 5\nn = 2000\nempirical = true\n")
    _, a, _ = run(capsys, "chsh", "leak", "--config", cfg)
    _, b, _ = run(capsys, "chsh", "leak", "--empirical", "--seed", 5, "--n", 2000)
    assert a == b and json.loads(a)["method"] == "MonteCarlo"
    _, c, _ = run(capsys, "chsh", "leak", "--config", cfg, "--exact")
    assert json.loads(c)["method"] == "Exact"
    cfg.write_text("colour = 1\n")
    code, _, _ = run(capsys, "chsh", "leak", "--config", cfg)
    assert code == 2


def test_out_flag_embeds_manifest(tmp_path, capsys):
    out = tmp_path / "r.json"
    run(capsys, "chsh", "singlet", "--exact", "--out", out)
    doc = json.loads(out.read_text())
    validate(doc, "report_file")
    validate(doc["result"], "chsh_report")
    assert doc["manifest"]["command"] == "chsh"
    csv_out = tmp_path / "s.csv"
    run(capsys, "sweep", "sign", "--exact", "--out", csv_out)
    first = csv_out.read_text().splitlines()[0]
    assert first.startswith("# manifest: ")
    validate(json.loads(first[len("# manifest: "):]), "manifest")


def test_commands_are_deterministic(capsys):
    _, a, _ = run(capsys, "audit", "dice:0.9,0.2", "--empirical", "--n", 5000, "--seed", 9)
    _, b, _ = run(capsys, "audit", "dice:0.9,0.2", "--empirical", "--n", 5000, "--seed", 9)
    assert a == b


def test_global_flags_before_subcommand(capsys):
    code, out, _ = run(capsys, "--seed", 4, "--n", 1000, "chsh", "singlet", "--empirical")
    _, out2, _ = run(capsys, "chsh", "singlet", "--empirical", "--seed", 4, "--n", 1000)
    assert code == 0 and out == out2
