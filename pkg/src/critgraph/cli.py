"""Command-line entry point.

``critgraph <subcommand> [--config run.toml] [flags]``. A flat TOML file may
set any flag (keys use underscores, e.g. ``limit_reps``); explicit flags win
over the file. Results go to ``<out>/<subcommand>-<config hash>-<timestamp>/``
where ``<out>`` defaults to ``$CRITGRAPH_OUT`` or ``./runs``. ``report.json``
depends only on the configuration; the timestamp lives in ``meta.json``.

Exit codes: 0 success, 1 a statistical gate failed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import CALIBRATION_FILE, load_gates
from .exploration import coupled_explore, dump_ndjson, sample_clocks
from .experiments import (
    CriticalityError, run_counting_lln, run_oracle_equivalence, run_ranking_consistency,
    run_root_lln, run_theorem_1_1, run_walk_convergence,
)
from .limit import LimitParams, sample_gammas, save_gammas
from .stats import ExperimentReport, mean_se
from .streams import seed_streams
from .weights import Family, save_weights

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

__all__ = ["main", "seed_streams"]

SUBCOMMANDS = ("theorem11", "ranking", "walk", "roots", "counting", "oracle", "gammas", "clocksdump")
OUT_ENV = "CRITGRAPH_OUT"

DEFAULTS = {
    "family": "constant", "a": 0.5, "b": 2.0, "weights_file": None,
    "lambda": 0.0, "n": [10_000], "reps": 200, "k": 4, "limit_reps": 200,
    "dt": 1e-4, "t_init": None, "mu": 1.0, "mu_prime": 1.0,
    "seed": 42, "workers": 1, "out": None, "gates": True, "gates_file": None,
    "t_grid": [0.5, 1.0, 2.0], "s_grid": [0.5, 1.0, 2.0], "s": 1.0, "t": 1.0,
    "t_max": 5.0, "t_points": 501, "alpha": 1e-3,
    "replicate": 0, "mode": "both",
}
LIST_KEYS = {"n", "t_grid", "s_grid"}
# keys that do not influence any reported number
NON_RESULT_KEYS = {"workers", "out", "config"}


class ConfigError(ValueError):
    pass


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="critgraph", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path)
        p.add_argument("--family", choices=["constant", "two_point", "file"])
        p.add_argument("--a", type=float)
        p.add_argument("--b", type=float)
        p.add_argument("--weights-file", dest="weights_file")
        p.add_argument("--lambda", dest="lambda", type=float)
        p.add_argument("--n", type=int, nargs="+")
        p.add_argument("--reps", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--limit-reps", dest="limit_reps", type=int)
        p.add_argument("--dt", type=float)
        p.add_argument("--t-init", dest="t_init", type=float)
        p.add_argument("--mu", type=float)
        p.add_argument("--mu-prime", dest="mu_prime", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out")
        p.add_argument("--no-gates", dest="gates", action="store_const", const=False)
        p.add_argument("--gates-file", dest="gates_file")
        p.add_argument("--t-grid", dest="t_grid", type=float, nargs="+")
        p.add_argument("--s-grid", dest="s_grid", type=float, nargs="+")
        p.add_argument("--s", type=float)
        p.add_argument("--t", type=float)
        p.add_argument("--t-max", dest="t_max", type=float)
        p.add_argument("--t-points", dest="t_points", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--replicate", type=int)
        p.add_argument("--mode", choices=["size_biased", "weight_biased", "both"])
    return ap


def resolve_config(command: str, flags: dict) -> dict:
    cfg = dict(DEFAULTS)
    path = flags.get("config")
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}")
        for key, value in data.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            if isinstance(value, dict):
                raise ConfigError(f"config must be flat; {key!r} is a table")
            cfg[key] = value
    for key, value in flags.items():
        if key in ("config", "command") or value is None:
            continue
        cfg[key] = value
    for key in LIST_KEYS:
        if not isinstance(cfg[key], list):
            cfg[key] = [cfg[key]]
    _validate(command, cfg)
    return cfg


def _validate(command: str, cfg: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    for key in ("reps", "k", "limit_reps", "t_points"):
        need(int(cfg[key]) >= 1, f"{key} must be >= 1")
    need(all(int(n) >= 1 for n in cfg["n"]), "n must be >= 1")
    need(cfg["dt"] > 0, "dt must be positive")
    need(cfg["t_init"] is None or cfg["t_init"] > 0, "t_init must be positive")
    need(int(cfg["seed"]) >= 0, "seed must be nonnegative")
    need(int(cfg["workers"]) >= 1, "workers must be >= 1")
    need(cfg["mu"] > 0 and cfg["mu_prime"] > 0, "mu and mu_prime must be positive")
    need(int(cfg["replicate"]) >= 0, "replicate must be nonnegative")
    if cfg["family"] == "file":
        need(cfg["weights_file"] is not None, "family 'file' needs weights_file")
        need(Path(cfg["weights_file"]).is_file(), f"weights file not found: {cfg['weights_file']}")
    if cfg["family"] == "two_point":
        need(0 < cfg["a"] < cfg["b"], "two_point family needs 0 < a < b")
    if command == "oracle":
        need(len(cfg["n"]) == 1 and cfg["n"][0] <= 100, "oracle runs at a single n <= 100")
    if command in ("walk", "clocksdump"):
        need(len(cfg["n"]) == 1, f"{command} takes a single n")


def _family(cfg: dict) -> Family:
    if cfg["family"] == "two_point":
        return Family("two_point", {"a": float(cfg["a"]), "b": float(cfg["b"])})
    if cfg["family"] == "file":
        return Family("file", {"path": str(cfg["weights_file"])})
    return Family("constant")


def config_hash(command: str, cfg: dict) -> str:
    key = {k: v for k, v in cfg.items() if k not in NON_RESULT_KEYS}
    blob = json.dumps({"command": command, **key}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _run_dir(command: str, cfg: dict) -> Path:
    root = Path(cfg["out"] or os.environ.get(OUT_ENV) or "runs")
    stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    base = root / f"{command}-{config_hash(command, cfg)}-{stamp}"
    path, i = base, 1
    while path.exists():
        path = Path(f"{base}-{i}")
        i += 1
    path.mkdir(parents=True)
    return path


def _gates(cfg: dict, section: str) -> dict | None:
    if not cfg["gates"]:
        return None
    path = Path(cfg["gates_file"]) if cfg["gates_file"] else CALIBRATION_FILE
    if not path.exists():
        raise ConfigError(f"gates file not found: {path}")
    data = load_gates(path)
    if section not in data:
        raise ConfigError(f"gates file has no {section!r} section")
    return data[section]


def _grid(cfg: dict) -> list[float]:
    return np.linspace(0.0, float(cfg["t_max"]), int(cfg["t_points"])).tolist()


def _experiment(command: str, cfg: dict) -> tuple[ExperimentReport, dict]:
    fam, lam, seed, workers = _family(cfg), float(cfg["lambda"]), int(cfg["seed"]), int(cfg["workers"])
    reps, k = int(cfg["reps"]), int(cfg["k"])
    extra: dict = {}
    if command == "theorem11":
        rep = run_theorem_1_1(fam, lam, cfg["n"], reps, k, int(cfg["limit_reps"]), seed, dt=float(cfg["dt"]),
                              t_init=cfg["t_init"], workers=workers, gates=_gates(cfg, "theorem"))
        extra["ecdf"] = {f"gamma_{i + 1}": rep.samples["gamma"][:, i] for i in range(k)}
        for n in cfg["n"]:
            coords = rep.samples[(int(n), "size_biased")]
            for i in range(k):
                extra["ecdf"][f"C_size_{i + 1}_n{n}"] = coords[:, i, 0]
    elif command == "ranking":
        rep = run_ranking_consistency(fam, lam, cfg["n"], reps, k, seed, workers=workers,
                                      gates=_gates(cfg, "ranking"))
    elif command == "walk":
        rep = run_walk_convergence(fam, lam, cfg["n"][0], reps, cfg["t_grid"], seed, workers=workers)
    elif command == "roots":
        rep = run_root_lln(fam, lam, cfg["n"], reps, cfg["s_grid"], seed, st=(float(cfg["s"]), float(cfg["t"])),
                           workers=workers, gates=_gates(cfg, "roots"))
    elif command == "counting":
        rep = run_counting_lln(fam, lam, cfg["n"], reps, _grid(cfg), seed, workers=workers,
                               gates=_gates(cfg, "counting"))
    elif command == "oracle":
        rep = run_oracle_equivalence(fam, lam, cfg["n"][0], reps, seed, workers=workers, alpha=float(cfg["alpha"]))
    elif command == "gammas":
        rep, extra = _gammas(cfg)
    elif command == "clocksdump":
        rep, extra = _clocksdump(cfg)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown subcommand {command}")
    return rep, extra


def _gammas(cfg: dict):
    lp = LimitParams(lam=float(cfg["lambda"]), mu=float(cfg["mu"]), mu_prime=float(cfg["mu_prime"]),
                     dt=float(cfg["dt"]), t_init=cfg["t_init"], k=int(cfg["k"]))
    seed, reps = int(cfg["seed"]), int(cfg["reps"])
    samples = [sample_gammas(lp, seed_streams(seed, r, "limit")) for r in range(reps)]
    rep = ExperimentReport("gammas", {"lambda": lp.lam, "mu": lp.mu, "mu_prime": lp.mu_prime, "dt": lp.dt,
                                      "t_init": lp.t_init, "k": lp.k, "reps": reps, "seed": seed})
    flagged = np.array([s.flagged for s in samples])
    rep.replicates["limit"] = int((~flagged).sum())
    rep.flagged["limit"] = int(flagged.sum())
    gam = np.array([s.gammas for s in samples])[~flagged]
    for i in range(lp.k):
        m, se = mean_se(gam[:, i]) if gam.size else (float("nan"), float("nan"))
        rep.add_rows("gamma", [{"i": i + 1, "mean": m, "se": se, "reps": int(gam.shape[0]),
                                "seeds": f"master={seed} role=limit replicates=0..{reps - 1}"}])
    return rep, {"gammas": samples}


def _clocksdump(cfg: dict):
    fam, lam, seed, r = _family(cfg), float(cfg["lambda"]), int(cfg["seed"]), int(cfg["replicate"])
    n = int(cfg["n"][0])
    w, _ = fam.build(n, lam)
    clocks = sample_clocks(w, lam, seed_streams(seed, r, "clocks"), seed=(seed, r))
    sb, wb = coupled_explore(w, clocks)
    results = {"size_biased": sb, "weight_biased": wb}
    modes = list(results) if cfg["mode"] == "both" else [cfg["mode"]]
    rep = ExperimentReport("clocksdump", {"family": fam.describe(), "lambda": lam, "n": n, "seed": seed,
                                          "replicate": r, "mode": cfg["mode"]})
    rep.replicates["clocks"] = 1
    for m in modes:
        res = results[m]
        rep.add_rows("components", [{"mode": m, "K": res.K, "largest": int(res.sizes.max()),
                                     "ell1": w.ell1, "tau_end": float(res.tau[-1])}])
    return rep, {"dump": (w, clocks, {m: results[m] for m in modes})}


def _write_extras(outdir: Path, extra: dict) -> None:
    if "gammas" in extra:
        save_gammas(extra["gammas"], outdir / "gammas.csv")
    if "dump" in extra:
        w, clocks, results = extra["dump"]
        save_weights(w, outdir / "weights.txt")
        with open(outdir / "clocks.csv", "w") as fh:
            fh.write("vertex,J,Ekey,Ehatkey\n")
            for v, (j, e, eh) in enumerate(zip(clocks.J.tolist(), clocks.Ekeys.tolist(), clocks.Ehatkeys.tolist())):
                fh.write(f"{v + 1},{j!r},{e!r},{eh!r}\n")
        for m, res in results.items():
            dump_ndjson(res, outdir / f"components_{m}.ndjson")


def main(argv=None) -> int:
    ap = _parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the problem
        return int(exc.code) if isinstance(exc.code, int) else 2
    flags = vars(ns)
    command = flags.pop("command")
    try:
        cfg = resolve_config(command, flags)
        rep, extra = _experiment(command, cfg)
    except (ConfigError, CriticalityError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    outdir = _run_dir(command, cfg)
    rep.write(outdir, ecdf=extra.get("ecdf"))
    _write_extras(outdir, extra)
    meta = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()), "argv": list(argv or sys.argv[1:]),
            "version": __version__, "config_hash": config_hash(command, cfg), "workers": cfg["workers"]}
    (outdir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    for line in rep.summary_lines():
        print(line)
    for name, rows in rep.tables.items():
        print(f"[{name}] {len(rows)} rows -> {outdir / (name + '.csv')}")
    print(f"output: {outdir}")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
