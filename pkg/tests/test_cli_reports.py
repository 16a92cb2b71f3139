import csv
import json
import math

import numpy as np
import pytest

from bellkit.cli import RunConfig, dispatch, main
from bellkit.reports import CLAIM_TAGS, Report, canonical_json, emit, table_rows


def run(tmp_path, *args, name="r.json"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def load(path):
    return json.loads(path.read_text())


def test_chsh_tilted_report(tmp_path):
    code, out = run(tmp_path, "chsh-tilted", "--beta", "0")
    assert code == 0
    payload = load(out)["payload"]
    assert payload["quantum_value"] == 2.8284271247461903
    assert payload["local_bound"] == 2
    assert abs(payload["canonical_value"] - 2 * math.sqrt(2)) < 1e-12
    assert '"quantum_value": 2.8284271247461903' in out.read_text()


def test_satwap_certify(tmp_path):
    code, out = run(tmp_path, "satwap", "--d", "3", "--certify")
    payload = load(out)["payload"]
    assert code == 0 and payload["quantum_value"] == 4
    assert abs(payload["canonical_value"] - 4) < 1e-12
    assert payload["sos_residual_max"] < 1e-10
    assert max(payload["identity_residuals"].values()) < 1e-10


def test_embezzle_field(tmp_path):
    code, out = run(tmp_path, "embezzle", "--n", "3")
    assert code == 0
    assert abs(load(out)["payload"]["p11_20"] - 1 / 3) < 1e-12


@pytest.mark.parametrize("args", [
    ["selftest-extract", "--seed", "3"],
    ["witness-qqs", "--alpha", "0.5", "--K", "8"],
    ["ternary-variant", "--K", "6"],
    ["lhv-bound", "--target", "satwap", "--param", "3"],
    ["seesaw", "--restarts", "2"],
])
def test_every_command_runs(tmp_path, args):
    code, out = run(tmp_path, *args)
    assert code == 0
    doc = load(out)
    assert doc["metadata"]["command"] == args[0]
    assert set(doc["claims"]) == set(doc["payload"])
    assert set(doc["claims"].values()) <= CLAIM_TAGS


def test_witness_records_boundary_policy(tmp_path):
    _, out = run(tmp_path, "witness-qqs", "--K", "6")
    assert "truncation" in load(out)["metadata"]["boundary_policies"]


def test_json_roundtrip_is_byte_identical(tmp_path):
    _, out = run(tmp_path, "embezzle", "--n", "2")
    text = out.read_text()
    assert canonical_json(json.loads(text)) == text


def test_csv_rows(tmp_path):
    code, out = run(tmp_path, "embezzle", "--n", "2", "--format", "csv", name="r.csv")
    rows = list(csv.reader(out.open()))
    assert code == 0 and rows[0] == ["table", "s", "t", "a", "b", "p"]
    assert len(rows) - 1 == 144
    assert len(table_rows(np.zeros((4, 4, 3, 3)))) == 144


def test_empty_report(tmp_path):
    rep = Report("noop")
    path = tmp_path / "e.json"
    emit(rep, "json", str(path))
    doc = load(path)
    assert doc["payload"] == {} and doc["metadata"]["command"] == "noop"
    assert emit(rep, "csv").strip() == "table,s,t,a,b,p"


def test_unknown_claim_tag():
    with pytest.raises(ValueError):
        Report("x").add("v", 1.0, "made_up")


def test_unknown_command(capsys):
    assert main(["frobnicate"]) != 0
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "UnknownCommand"


def test_invalid_parameter(capsys):
    assert main(["embezzle", "--n", "9"]) != 0
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "InvalidParameter" and err["field"] == "n"
    assert main(["witness-qqs", "--alpha", "1.5"]) != 0
    assert json.loads(capsys.readouterr().err)["field"] == "alpha"


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"beta": 1.0}))
    _, out = run(tmp_path, "chsh-tilted", "--config", str(cfg))
    assert load(out)["payload"]["local_bound"] == pytest.approx(3.0)
    _, out = run(tmp_path, "chsh-tilted", "--config", str(cfg), "--beta", "0.5", name="s.json")
    assert load(out)["payload"]["local_bound"] == pytest.approx(2.5)


def test_config_file_unknown_field(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"gamma": 1.0}))
    assert main(["chsh-tilted", "--config", str(cfg)]) != 0
    assert json.loads(capsys.readouterr().err)["field"] == "gamma"


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("BELLKIT_THREADS", "2")
    _, out = run(tmp_path, "seesaw", "--restarts", "2")
    assert load(out)["metadata"]["parameters"]["threads"] == 2
    _, out = run(tmp_path, "seesaw", "--restarts", "2", "--threads", "1", name="s.json")
    assert load(out)["metadata"]["parameters"]["threads"] == 1


def test_dispatch_is_deterministic():
    cfg = {"target": "satwap", "param": 3, "restarts": 2, "seed": 5, "max_iters": 100}
    a = dispatch(RunConfig("seesaw", dict(cfg))).to_dict()["payload"]
    b = dispatch(RunConfig("seesaw", dict(cfg))).to_dict()["payload"]
    assert a == b


def test_stdout_when_no_out(capsys):
    assert main(["lhv-bound", "--target", "chsh-tilted", "--param", "0.5"]) == 0
    assert json.loads(capsys.readouterr().out)["payload"]["local_bound"] == pytest.approx(2.5)
