import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from conftest import MODELS
from mmalab.cli import run

SCHEMA_FOR = {"check": "condition_report", "classify": "rate_report", "indices": "indices",
              "existence": "existence_report", "fubini": "fubini_report", "simulate": "simulation",
              "experiment": "experiment_report"}


def schema(name):
    return json.loads(resources.files("mmalab").joinpath("schemas", f"{name}.json").read_text())


def call(capsys, *argv):
    code = run(list(argv))
    return code, capsys.readouterr().out


def model(name):
    return str(MODELS / f"{name}.toml")


def test_classify_atom(capsys):
    code, out = call(capsys, "classify", "--model", model("supou_atom"))
    body = json.loads(out)
    assert code == 0
    assert body["regime"] == "α ≥ 1, η ≥ 2" and body["inv_gamma"] == 0.5
    jsonschema.validate(body, schema("rate_report"))


def test_check_divergent(capsys):
    code, out = call(capsys, "check", "--model", model("divergent_check"), "--gamma", "1.3")
    body = json.loads(out)
    assert code == 2
    assert body["convergent"] is False and body["divergent_at"] == ["z→∞"]
    jsonschema.validate(body, schema("condition_report"))


def test_check_needs_gamma(capsys):
    code, out = call(capsys, "check", "--model", model("supou_atom"))
    body = json.loads(out)
    assert code == 1 and body["error"]["key"] == "gamma"
    jsonschema.validate(body, schema("error"))


@pytest.mark.parametrize("command", ["check", "classify", "indices", "existence", "fubini"])
def test_analytic_outputs_match_schema(capsys, command):
    extra = ["--gamma", "1.5"] if command == "check" else []
    for name in ("supou_atom", "supou_pareto", "supou_slow_mixing", "supou_gaussian", "supou_lil"):
        code, out = call(capsys, command, "--model", model(name), *extra)
        body = json.loads(out)
        is_err = isinstance(body.get("error"), dict)
        jsonschema.validate(body, schema("error" if is_err else SCHEMA_FOR[command]))
        assert code in (0, 2)


def test_simulate_csv_deterministic(tmp_path):
    outs = []
    for i, workers in enumerate((1, 2)):
        out = tmp_path / f"p{i}.csv"
        assert run(["simulate", "--model", model("supou_atom"), "--paths", "4", "--t-max", "100",
                    "--workers", str(workers), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    header = outs[0].decode().splitlines()[0]
    assert header == "path_id,t,xstar,drift,gaussian,past_jumps,window_jumps,compensator"


def test_simulate_json_schema_and_manifest(tmp_path):
    out = tmp_path / "sim.json"
    assert run(["simulate", "--model", model("supou_gaussian"), "--paths", "2", "--t-max", "10",
                "--format", "json", "--out", str(out)]) == 0
    jsonschema.validate(json.loads(out.read_text()), schema("simulation"))
    man = json.loads((tmp_path / "sim.json.manifest.json").read_text())
    jsonschema.validate(man, schema("manifest"))
    assert man["params"]["seed"] == 42 and man["command"] == "simulate"


def test_manifest_replay(tmp_path):
    first = tmp_path / "a.csv"
    assert run(["simulate", "--model", model("supou_atom"), "--paths", "3", "--t-max", "100",
                "--seed", "5", "--out", str(first)]) == 0
    replay = tmp_path / "b.csv"
    assert run(["simulate", "--model", str(tmp_path / "a.csv.manifest.json"), "--out", str(replay)]) == 0
    assert first.read_bytes() == replay.read_bytes()


def test_out_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("MMA_LAB_OUT", str(tmp_path))
    code, out = call(capsys, "classify", "--model", model("supou_atom"))
    assert code == 0 and out == ""
    assert json.loads((tmp_path / "classify.json").read_text())["inv_gamma"] == 0.5
    assert (tmp_path / "classify.json.manifest.json").exists()


def test_seed_mandatory(tmp_path, capsys):
    src = (MODELS / "supou_atom.toml").read_text().replace("seed = 42\n", "")
    f = tmp_path / "noseed.toml"
    f.write_text(src)
    code, out = call(capsys, "simulate", "--model", str(f), "--paths", "1", "--t-max", "10")
    assert code == 1 and json.loads(out)["error"]["key"] == "seed"


def test_config_error_names_key(tmp_path, capsys):
    src = (MODELS / "supou_atom.toml").read_text().replace('variant = "supou"', 'variant = "nope"')
    f = tmp_path / "bad.toml"
    f.write_text(src)
    code, out = call(capsys, "classify", "--model", str(f))
    err = json.loads(out)["error"]
    assert code == 1 and err["type"] == "config" and err["key"].startswith("kernel")
    jsonschema.validate(json.loads(out), schema("error"))


def test_unknown_key_rejected(tmp_path, capsys):
    f = tmp_path / "bad.toml"
    f.write_text((MODELS / "supou_atom.toml").read_text().replace("b = 0.0", "b = 0.0\nbogus = 1"))
    code, out = call(capsys, "classify", "--model", str(f))
    assert code == 1 and "bogus" in json.loads(out)["error"]["key"]


def test_legacy_centering_alias(tmp_path, capsys):
    f = tmp_path / "alias.toml"
    f.write_text((MODELS / "supou_atom.toml").read_text().replace("b = 0.0", 'b = 0.0\ncentering = "paper-thm1"'))
    code, _ = call(capsys, "classify", "--model", str(f))
    assert code == 0


def test_missing_file(capsys):
    code, out = call(capsys, "classify", "--model", "/nonexistent/model.toml")
    assert code == 1 and "error" in json.loads(out)


def test_usage_error():
    assert run(["classify"]) == 1


def test_experiment_small(tmp_path):
    out = tmp_path / "exp.json"
    code = run(["experiment", "--model", model("supou_atom"), "--paths", "10", "--t-max", "1e4",
                "--out", str(out)])
    body = json.loads(out.read_text())
    jsonschema.validate(body, schema("experiment_report"))
    assert code == (0 if body["passed"] else 2)
    assert (tmp_path / "exp.curve.csv").exists()
    assert "runtime" not in body


def test_entry_point():
    res = subprocess.run([sys.executable, "-m", "mmalab.cli", "indices", "--model", model("supou_atom")],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0 and "alpha" in json.loads(res.stdout)
