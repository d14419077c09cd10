import json
import re
import subprocess
import sys

import pytest

from critgraph.cli import config_hash, main, resolve_config


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def only_dir(root):
    (d,) = [p for p in root.iterdir() if p.is_dir()]
    return d


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["walk", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path)]) == 2
    assert "config file not found" in capsys.readouterr().err


@pytest.mark.parametrize("text", ['bogus = 1\n', '[section]\nn = 5\n', 'n = [\n'])
def test_bad_config_exits_2(tmp_path, text):
    cfg = tmp_path / "c.toml"
    cfg.write_text(text)
    assert main(["walk", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("args", [["walk", "--reps", "0"], ["oracle", "--n", "200"],
                                  ["walk", "--n", "10", "20"], ["ranking", "--family", "file"],
                                  ["ranking", "--family", "two_point", "--a", "3", "--b", "2"]])
def test_invalid_values_exit_2(tmp_path, args):
    assert run(tmp_path, *args) == 2


def test_unknown_flag_exits_2(tmp_path):
    assert run(tmp_path, "walk", "--frobnicate") == 2


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('family = "two_point"\nn = 700\nreps = 9\nt_grid = [0.5]\n')
    assert main(["walk", "--config", str(cfg), "--reps", "4", "--out", str(tmp_path / "o")]) == 0
    report = json.loads((only_dir(tmp_path / "o") / "report.json").read_text())
    assert report["config"]["reps"] == 4 and report["config"]["n"] == 700
    assert report["config"]["family"]["name"] == "two_point"


def test_run_directory_and_determinism(tmp_path):
    args = ["roots", "--n", "600", "--reps", "4", "--seed", "3", "--no-gates"]
    assert run(tmp_path / "a", *args) == 0
    assert run(tmp_path / "b", *args, "--workers", "2") == 0
    da, db = only_dir(tmp_path / "a"), only_dir(tmp_path / "b")
    assert re.fullmatch(r"roots-[0-9a-f]{12}-\d{8}T\d{6}", da.name)
    assert da.name.split("-")[1] == db.name.split("-")[1]
    assert (da / "report.json").read_bytes() == (db / "report.json").read_bytes()
    meta = json.loads((da / "meta.json").read_text())
    assert {"timestamp", "config_hash", "version", "argv"} <= set(meta)
    assert {p.name for p in da.iterdir()} >= {"report.json", "meta.json", "root_weight.csv", "corrected.csv"}


def test_outputs_never_overwrite(tmp_path):
    args = ["counting", "--n", "300", "--reps", "2", "--t-points", "11", "--no-gates"]
    assert run(tmp_path, *args) == 0 and run(tmp_path, *args) == 0
    assert len(list(tmp_path.iterdir())) == 2


def test_environment_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("CRITGRAPH_OUT", str(tmp_path / "env"))
    assert main(["oracle", "--n", "10", "--reps", "50"]) == 0
    assert only_dir(tmp_path / "env").name.startswith("oracle-")


def test_failed_gate_exits_1(tmp_path):
    gates = tmp_path / "gates.json"
    gates.write_text(json.dumps({"ranking": {"freq": 1.01}}))
    code = run(tmp_path / "o", "ranking", "--family", "two_point", "--n", "400", "--reps", "5", "--k", "1",
               "--gates-file", str(gates))
    assert code == 1


def test_missing_gate_section_exits_2(tmp_path):
    gates = tmp_path / "gates.json"
    gates.write_text("{}")
    assert run(tmp_path / "o", "counting", "--n", "300", "--reps", "2", "--gates-file", str(gates)) == 2


def test_theorem_outputs(tmp_path):
    code = run(tmp_path, "theorem11", "--n", "800", "--reps", "10", "--limit-reps", "10", "--k", "2",
               "--dt", "1e-3", "--no-gates")
    assert code == 0
    d = only_dir(tmp_path)
    names = {p.name for p in d.iterdir()}
    assert {"ks_limit.csv", "ks_mutual.csv", "gamma.csv", "ecdf_gamma_1.dat", "ecdf_C_size_1_n800.dat"} <= names
    header = (d / "ks_limit.csv").read_text().splitlines()[0]
    assert header == "n,mode,i,coord,ks,p,reps,limit_reps,seeds"


def test_gammas_csv(tmp_path):
    assert run(tmp_path, "gammas", "--mu", "1", "--mu-prime", "1", "--lambda", "0", "--reps", "3",
               "--k", "2", "--dt", "1e-3") == 0
    lines = (only_dir(tmp_path) / "gammas.csv").read_text().splitlines()
    assert lines[0] == "replicate,i,gamma,g,d" and len(lines) == 1 + 3 * 2


def test_clocksdump(tmp_path):
    assert run(tmp_path, "clocksdump", "--n", "25", "--family", "two_point", "--replicate", "2") == 0
    d = only_dir(tmp_path)
    for mode in ("size_biased", "weight_biased"):
        rows = [json.loads(x) for x in (d / f"components_{mode}.ndjson").read_text().splitlines()]
        assert sum(r["size"] for r in rows) == 25
        assert set(rows[0]) == {"k", "root", "size", "weight", "tauStart", "tauEnd"}
    assert (d / "clocks.csv").read_text().splitlines()[0] == "vertex,J,Ekey,Ehatkey"
    assert len((d / "weights.txt").read_text().split()) == 25


def test_hash_ignores_workers_and_output():
    a = resolve_config("walk", {"workers": 1, "out": "x"})
    b = resolve_config("walk", {"workers": 4, "out": "y"})
    assert config_hash("walk", a) == config_hash("walk", b)
    assert config_hash("walk", a) != config_hash("roots", a)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "critgraph", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
