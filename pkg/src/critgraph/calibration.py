"""Statistical gates for the desk-scale acceptance runs.

Procedure: every gated experiment is run as four independent batches, each
the size of the acceptance run, with master seeds disjoint from the
acceptance seed. The observed statistic is the batch mean and its standard
error the batch standard deviation. Gates add a 50% margin in the
unfavourable direction:

* upper gates (distances, sums that should vanish): ``1.5 * observed``
* frequency gates (should approach 1): ``1 - 1.5 * (1 - observed)``

Run ``python -m critgraph.calibration`` to regenerate ``calibration.json``;
gates are never edited by hand.
"""
from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

import numpy as np

from .experiments import (
    CORRECTED, run_counting_lln, run_ranking_consistency, run_root_lln, run_theorem_1_1,
    theorem_ks_values,
)
from .weights import Family

CALIBRATION_FILE = Path(__file__).with_name("calibration.json")
ACCEPT_SEED = 20240601
CALIBRATION_SEEDS = (910001, 910002, 910003, 910004)
MARGIN = 0.5

THEOREM = dict(family=Family("constant"), lam=0.0, n_list=[10_000, 100_000], reps=2000, k=2,
               limit_reps=2000, dt=1e-4)
RANKING = dict(family=Family("two_point", {"a": 0.5, "b": 2.0}), lam=0.0,
               n_list=[10_000, 30_000, 100_000], reps=2000, k=1)
ROOTS = dict(family=Family("two_point", {"a": 0.5, "b": 2.0}), lam=0.0,
             n_list=[10_000, 30_000, 100_000], reps=1000, s_grid=[0.5, 1.0, 2.0], st=(1.0, 1.0))
COUNTING = dict(family=Family("constant"), lam=0.0, n_list=[10_000, 30_000, 100_000], reps=1000,
                t_grid=np.linspace(0.0, 5.0, 501).tolist())


def theorem(seed: int, gates: dict | None = None, workers: int = 1):
    return run_theorem_1_1(seed=seed, gates=gates, workers=workers, **THEOREM)


def ranking(seed: int, gates: dict | None = None, workers: int = 1):
    return run_ranking_consistency(seed=seed, gates=gates, workers=workers, **RANKING)


def roots(seed: int, gates: dict | None = None, workers: int = 1):
    return run_root_lln(seed=seed, gates=gates, workers=workers, **ROOTS)


def counting(seed: int, gates: dict | None = None, workers: int = 1):
    return run_counting_lln(seed=seed, gates=gates, workers=workers, **COUNTING)


def load_gates(path: Path = CALIBRATION_FILE) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _upper(values) -> tuple[float, float, float]:
    v = np.asarray(values, dtype=np.float64)
    obs = float(v.mean())
    return obs, float(v.std(ddof=1)), (1.0 + MARGIN) * obs


def _lower_freq(values) -> tuple[float, float, float]:
    v = np.asarray(values, dtype=np.float64)
    obs = float(v.mean())
    return obs, float(v.std(ddof=1)), 1.0 - (1.0 + MARGIN) * (1.0 - obs)


def calibrate_theorem(workers: int = 1) -> dict:
    nmin, nmax = min(THEOREM["n_list"]), max(THEOREM["n_list"])
    per_batch_max, per_key = [], {}
    for seed in CALIBRATION_SEEDS:
        rep = theorem(seed, workers=workers)
        ks = theorem_ks_values(rep, nmax)
        per_batch_max.append(max(ks["limit"] + ks["mutual"]))
        for r in rep.tables["ks_limit"]:
            if r["i"] <= 2:
                per_key.setdefault((r["mode"], r["i"], r["coord"], r["n"]), []).append(r["ks"])
    # gate on the largest batch-mean statistic among all gated KS values
    keys_big = [k for k in per_key if k[3] == nmax]
    means = {k: float(np.mean(per_key[k])) for k in per_key}
    worst = max(keys_big, key=lambda k: means[k])
    obs = means[worst]
    # SE of the difference KS(nmax) - KS(nmin), worst coordinate
    diff_se = max(
        float(np.sqrt(np.var(per_key[k], ddof=1) + np.var(per_key[(k[0], k[1], k[2], nmin)], ddof=1)))
        for k in keys_big
    )
    return {
        "ks": (1.0 + MARGIN) * obs,
        "trend_se": diff_se,
        "observed": obs,
        "observed_key": list(worst[:3]),
        "batch_max": per_batch_max,
        "batch_means": {f"{k[0]}:{k[1]}:{k[2]}:{k[3]}": v for k, v in sorted(means.items())},
    }


def calibrate_ranking(workers: int = 1) -> dict:
    nmax = max(RANKING["n_list"])
    freqs = []
    for seed in CALIBRATION_SEEDS:
        rep = ranking(seed, workers=workers)
        freqs.append(next(r["freq"] for r in rep.tables["frequency"] if r["n"] == nmax and r["i"] == 1))
    obs, se, gate = _lower_freq(freqs)
    return {"freq": gate, "observed": obs, "se": se, "batches": freqs}


def calibrate_roots(workers: int = 1) -> dict:
    nmax = max(ROOTS["n_list"])
    vals: dict[str, list] = {}
    for seed in CALIBRATION_SEEDS:
        rep = roots(seed, workers=workers)
        for r in rep.tables["corrected"]:
            if r["n"] == nmax:
                vals.setdefault(f"{r['mode']}:{r['sum']}", []).append(r["mean"])
    out = {"corrected": {}, "observed": {}, "se": {}, "batches": vals}
    for key, v in sorted(vals.items()):
        obs, se, gate = _upper(v)
        out["corrected"][key] = gate
        out["observed"][key] = obs
        out["se"][key] = se
    assert set(out["corrected"]) == {f"{m}:{s}" for m in ("size_biased", "weight_biased") for s in CORRECTED}
    return out


def calibrate_counting(workers: int = 1) -> dict:
    nmax = max(COUNTING["n_list"])
    vals: dict[str, list] = {}
    for seed in CALIBRATION_SEEDS:
        rep = counting(seed, workers=workers)
        for r in rep.tables["sup_deviation"]:
            if r["n"] == nmax:
                vals.setdefault(r["process"], []).append(r["q99"])
    out = {"counting_q99": {}, "observed": {}, "se": {}, "batches": vals}
    for key, v in sorted(vals.items()):
        obs, se, gate = _upper(v)
        out["counting_q99"][key] = gate
        out["observed"][key] = obs
        out["se"][key] = se
    return out


def calibrate(path: Path = CALIBRATION_FILE, workers: int = 1, only: list[str] | None = None) -> dict:
    steps = {"theorem": calibrate_theorem, "ranking": calibrate_ranking,
             "roots": calibrate_roots, "counting": calibrate_counting}
    result = load_gates(path) if path.exists() else {}
    for name, fn in steps.items():
        if only and name not in only:
            continue
        t0 = time.time()
        result[name] = fn(workers)
        print(f"calibrated {name} in {time.time() - t0:.0f}s: "
              + json.dumps({k: v for k, v in result[name].items() if not isinstance(v, (dict, list))}))
        result["procedure"] = {
            "batches": len(CALIBRATION_SEEDS), "seeds": list(CALIBRATION_SEEDS), "margin": MARGIN,
            "acceptance_seed": ACCEPT_SEED,
        }
        path.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return result


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Regenerate the acceptance gates.")
    ap.add_argument("--out", type=Path, default=CALIBRATION_FILE)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--only", nargs="*", choices=["theorem", "ranking", "roots", "counting"])
    args = ap.parse_args(argv)
    calibrate(args.out, args.workers, args.only)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
