import json
import subprocess
import sys

import pytest

from probid.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_family_list(capsys):
    code, out, _ = run(capsys, "family", "list")
    assert code == 0 and "bernoulli" in out and "mu_p" in out


def test_measure_eval(capsys):
    code, out, _ = run(capsys, "measure", "eval", "--spec", "bernoulli:p=1/4", "--sigma", "10")
    assert code == 0 and json.loads(out)["probability"] == "3/16"


def test_rho(capsys):
    code, out, _ = run(capsys, "rho", "--a", "bernoulli:p=1/2", "--b", "bernoulli:p=1/4", "--M", "2")
    assert json.loads(out)["interval"] == ["9/32", "29/64"]


def test_learner_run(capsys):
    code, out, _ = run(capsys, "learner", "run", "--spec", "first_bit", "--input", "011", "--budget", "4")
    d = json.loads(out)
    assert code == 0 and d["emitted"][0]["center"] == "mixture:p=1/1" and d["emitted"][0]["radius"] == "0/1"


def test_sample(capsys):
    code, out, _ = run(capsys, "sample", "--spec", "point:sigma=1", "--n", "4", "--seed", "9")
    assert json.loads(out)["bits"] == "1000"


def test_bad_spec_exit_code(capsys):
    code, _, err = run(capsys, "measure", "eval", "--spec", "bernoulli:p=2", "--sigma", "1")
    assert code == 2 and "error" in err


def test_adversary_stage_writes_outputs(capsys, tmp_path):
    out, csv_, figs = tmp_path / "r.json", tmp_path / "t.csv", tmp_path / "figs"
    code, _, _ = run(capsys, "adversary", "stage", "--config", "adversary_stubborn.cfg", "--out", str(out),
                     "--csv", str(csv_), "--figures", str(figs))
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["verdict"] == "stage-witness" and rep["validation"]["valid"]
    assert csv_.read_text().startswith("stage,sigma,emitted_radius,ed_hat,label")
    assert list(figs.glob("*.png"))
    code, vout, _ = run(capsys, "verify", str(out))
    assert code == 0 and "valid" in vout


def test_verify_rejects_tampered(capsys, tmp_path):
    out = tmp_path / "r.json"
    run(capsys, "adversary", "diagonalize", "--config", "diagonal_null.cfg", "--out", str(out))
    rep = json.loads(out.read_text())
    rep["diagonal"]["eta"] = "1/8"
    out.write_text(json.dumps(rep))
    code, vout, _ = run(capsys, "verify", str(out))
    assert code == 2 and "INVALID" in vout


def test_inconclusive_exit_code(capsys, tmp_path):
    cfg = {"name": "z", "kind": "amplify", "learner": "null", "budget": 0}
    p = tmp_path / "z.cfg"
    p.write_text(json.dumps(cfg))
    code, out, _ = run(capsys, "run", "--config", str(p))
    assert code == 4 and json.loads(out)["verdict"] == "inconclusive"


def test_hypothesis_violation_exit_code(capsys, tmp_path):
    cfg = {"name": "h", "kind": "stage", "learner": "first_bit", "family": "mixture", "n": 1, "s_override": 2,
           "base_ball": {"center": "mixture:p=1/2", "radius": "1/1", "closed": False}}
    p = tmp_path / "h.cfg"
    p.write_text(json.dumps(cfg))
    code, _, err = run(capsys, "run", "--config", str(p))
    assert code == 3 and "hypothesis violation" in err


def test_config_error_exit_code(capsys, tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("{")
    code, _, err = run(capsys, "run", "--config", str(p))
    assert code == 2 and "bad.cfg" in err


def test_run_list(capsys):
    code, out, _ = run(capsys, "run", "--list")
    assert "adversary_stubborn.cfg" in out


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "probid", "family", "list"], capture_output=True, text=True)
    assert p.returncode == 0 and "mixture" in p.stdout


def test_usage_error():
    with pytest.raises(SystemExit) as e:
        main(["adversary", "explode"])
    assert e.value.code == 2
