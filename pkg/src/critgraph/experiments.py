"""Monte Carlo verification experiments.

Every replicate is a pure function of ``(family, n, lambda, master seed,
replicate index)``; its randomness comes from :func:`seed_streams`, so the
tables do not depend on the worker count. Replicate functions live at module
level so they can be shipped to worker processes.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache

import numpy as np

from .exploration import (
    CountingProcess, check_identities, coupled_explore, explore, ranked_indices,
    root_prefix_sums, competing_clock_sums, key_clock_series, sample_clocks,
    walk_path, exact_walk_moments,
)
from .limit import LimitParams, sample_gammas
from .oracle import AliasTable, component_sizes, sample_bernoulli, sample_poisson
from .stats import ExperimentReport, Gate, ks_two_sample, mean_se, wilson_interval, z_score
from .streams import seed_streams, stream_id
from .weights import DEFAULT_THRESHOLDS, Family, criticality_report

COORDS = ("C_size", "H_size", "C_weight", "H_weight")


class CriticalityError(ValueError):
    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


def _family_key(family: Family) -> tuple:
    return (family.name, tuple(sorted(family.params.items())))


@lru_cache(maxsize=16)
def _build(fkey: tuple, n: int, lam: float):
    return Family(fkey[0], dict(fkey[1])).build(n, lam)


def _map(fn, items: list, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunk))


def _seed_range(seed: int, reps: int, role: str) -> str:
    return f"master={seed} role={role} replicates=0..{reps - 1}"


def _check_criticality(family: Family, n_list, lam, thresholds) -> dict:
    out = {}
    for n in n_list:
        w, p = _build(_family_key(family), int(n), float(lam))
        rep = criticality_report(w, p)
        out[int(n)] = rep.as_dict()
        if not rep.within(thresholds):
            raise CriticalityError(f"family {family.name} fails criticality thresholds at n={n}: {rep}", out)
    return out


# --- limit samples -----------------------------------------------------------

def _gamma_rep(args):
    lp, seed, r = args
    s = sample_gammas(lp, seed_streams(seed, r, "limit"))
    return s.gammas, s.starts, s.ends, s.flagged


def limit_gamma_samples(lp: LimitParams, reps: int, seed: int, workers: int = 1):
    out = _map(_gamma_rep, [(lp, seed, r) for r in range(reps)], workers)
    gam = np.array([o[0] for o in out]).reshape(reps, lp.k)
    starts = np.array([o[1] for o in out]).reshape(reps, lp.k)
    ends = np.array([o[2] for o in out]).reshape(reps, lp.k)
    flagged = np.array([o[3] for o in out], dtype=bool)
    return gam, starts, ends, flagged


# --- Theorem: ranked sizes and weights vs excursion lengths ----------------

def _coords(res, n: int, k: int) -> np.ndarray:
    c = n ** (-2.0 / 3.0)
    bys = ranked_indices(res, "size", k)
    byw = ranked_indices(res, "weight", k)
    out = np.zeros((k, 4))
    for i in range(k):
        if bys[i] >= 0:
            out[i, 0] = res.sizes[bys[i]]
            out[i, 2] = res.weights[bys[i]]
        if byw[i] >= 0:
            out[i, 1] = res.sizes[byw[i]]
            out[i, 3] = res.weights[byw[i]]
    return c * out


def _theorem_rep(args):
    fkey, n, lam, seed, r, k = args
    w, _ = _build(fkey, n, lam)
    clocks = sample_clocks(w, lam, seed_streams(seed, r, "clocks"))
    sb, wb = coupled_explore(w, clocks)
    out = []
    for res in (sb, wb):
        # re-assert the exact identities before anything is aggregated
        problems = check_identities(w, res)
        if problems:
            raise RuntimeError(f"replicate {r}: {problems}")
        sizes = np.sort(res.sizes)[::-1] * n ** (-2.0 / 3.0)
        out.append((_coords(res, n, k), float(np.sum(sizes[k:] ** 2))))
    return out


def run_theorem_1_1(family: Family, lam: float, n_list, reps: int, k: int, limit_reps: int,
                    seed: int, dt: float = 1e-4, t_init: float | None = None, workers: int = 1,
                    thresholds: dict | None = None, gates: dict | None = None) -> ExperimentReport:
    """Ranked component sizes and weights against simulated excursion lengths.

    ``gates`` (optional): ``ks`` caps every per-coordinate and mutual KS at the
    largest n; ``trend_se`` allows KS at the largest n to exceed the smallest
    by at most 2 * trend_se.
    """
    n_list = [int(n) for n in n_list]
    crit = _check_criticality(family, n_list, lam, thresholds or DEFAULT_THRESHOLDS)
    fkey = _family_key(family)
    _, p = _build(fkey, n_list[0], float(lam))
    lp = LimitParams.from_model(p, dt=dt, t_init=t_init, k=k)
    gam, starts, ends, flagged = limit_gamma_samples(lp, limit_reps, seed, workers)
    good = ~flagged
    rep = ExperimentReport("theorem11", {
        "family": family.describe(), "lambda": lam, "n": n_list, "reps": reps, "k": k,
        "limit_reps": limit_reps, "dt": dt, "t_init": lp.t_init, "seed": seed,
    })
    rep.tables["criticality"] = [{"n": n, **crit[n]} for n in n_list]
    rep.flagged["limit"] = int(flagged.sum())
    rep.replicates["limit"] = int(good.sum())
    rep.samples["gamma"] = gam[good]
    for i in range(k):
        m, se = mean_se(gam[good, i])
        rep.add_rows("gamma", [{"i": i + 1, "mean": m, "se": se, "reps": int(good.sum()),
                                "seeds": _seed_range(seed, limit_reps, "limit")}])
    for n in n_list:
        out = _map(_theorem_rep, [(fkey, n, float(lam), seed, r, k) for r in range(reps)], workers)
        rep.replicates[f"n={n}"] = reps
        for mi, mode in enumerate(("size_biased", "weight_biased")):
            coords = np.stack([o[mi][0] for o in out])  # (reps, k, 4)
            tail = np.array([o[mi][1] for o in out])
            rep.samples[(n, mode)] = coords
            seeds = _seed_range(seed, reps, "clocks")
            for i in range(k):
                for j, name in enumerate(COORDS):
                    D, pv = ks_two_sample(coords[:, i, j], gam[good, i])
                    rep.add_rows("ks_limit", [{"n": n, "mode": mode, "i": i + 1, "coord": name,
                                               "ks": D, "p": pv, "reps": reps, "limit_reps": int(good.sum()),
                                               "seeds": seeds}])
                for (a, na), (b, nb) in itertools.combinations(enumerate(COORDS), 2):
                    D, pv = ks_two_sample(coords[:, i, a], coords[:, i, b])
                    rep.add_rows("ks_mutual", [{"n": n, "mode": mode, "i": i + 1, "pair": f"{na}|{nb}",
                                                "ks": D, "p": pv, "reps": reps, "seeds": seeds}])
            disc = np.max(np.abs(coords[:, :, 1] - coords[:, :, 3]), axis=1)
            tm, tse = mean_se(tail)
            dm, dse = mean_se(disc)
            rep.add_rows("diagnostics", [{
                "n": n, "mode": mode, "tail_mass_mean": tm, "tail_mass_se": tse,
                "max_H_size_weight_gap_mean": dm, "max_H_size_weight_gap_q99": float(np.quantile(disc, 0.99)),
                "reps": reps, "seeds": seeds,
            }])
    if gates:
        _theorem_gates(rep, n_list, gates)
    return rep


def theorem_ks_values(rep: ExperimentReport, n: int, imax: int = 2) -> dict:
    """KS values at one n for i <= imax: per-coordinate and mutual."""
    lim = [r["ks"] for r in rep.tables["ks_limit"] if r["n"] == n and r["i"] <= imax]
    mut = [r["ks"] for r in rep.tables["ks_mutual"] if r["n"] == n and r["i"] <= imax]
    return {"limit": lim, "mutual": mut}


def _theorem_gates(rep: ExperimentReport, n_list, gates: dict) -> None:
    nmax, nmin = max(n_list), min(n_list)
    big = theorem_ks_values(rep, nmax)
    rep.gates.append(Gate(f"max KS to limit, i<=2, n={nmax}", max(big["limit"]), gates["ks"], "<="))
    rep.gates.append(Gate(f"max mutual KS, i<=2, n={nmax}", max(big["mutual"]), gates["ks"], "<="))
    if nmin != nmax and "trend_se" in gates:
        small = [r for r in rep.tables["ks_limit"] if r["n"] == nmin and r["i"] <= 2]
        large = {(r["mode"], r["i"], r["coord"]): r["ks"] for r in rep.tables["ks_limit"]
                 if r["n"] == nmax and r["i"] <= 2}
        worst = max(large[(r["mode"], r["i"], r["coord"])] - r["ks"] for r in small)
        rep.gates.append(Gate(f"KS increase from n={nmin} to n={nmax}", worst, 2 * gates["trend_se"], "<=",
                              "largest per-coordinate increase"))


# --- ranking consistency ---------------------------------------------------

def _ranking_rep(args):
    fkey, n, lam, seed, r, k = args
    w, _ = _build(fkey, n, lam)
    clocks = sample_clocks(w, lam, seed_streams(seed, r, "clocks"))
    res = explore(w, clocks, "size_biased")
    return ranked_indices(res, "size", k) == ranked_indices(res, "weight", k)


def run_ranking_consistency(family: Family, lam: float, n_list, reps: int, k: int, seed: int,
                            workers: int = 1, gates: dict | None = None) -> ExperimentReport:
    """Frequency with which the i-th largest component by size is also i-th by weight."""
    n_list = [int(n) for n in n_list]
    fkey = _family_key(family)
    rep = ExperimentReport("ranking", {"family": family.describe(), "lambda": lam, "n": n_list,
                                       "reps": reps, "k": k, "seed": seed})
    for n in n_list:
        same = np.array(_map(_ranking_rep, [(fkey, n, float(lam), seed, r, k) for r in range(reps)], workers))
        rep.replicates[f"n={n}"] = reps
        for i in range(k):
            hits = int(same[:, i].sum())
            lo, hi = wilson_interval(hits, reps)
            rep.add_rows("frequency", [{"n": n, "i": i + 1, "hits": hits, "freq": hits / reps,
                                        "wilson_low": lo, "wilson_high": hi, "reps": reps,
                                        "seeds": _seed_range(seed, reps, "clocks")}])
    if gates:
        rows = sorted((r for r in rep.tables["frequency"] if r["i"] == 1), key=lambda r: r["n"])
        # nondecreasing within interval overlap: each later upper bound reaches
        # every earlier lower bound
        if len(rows) > 1:
            worst = min(b["wilson_high"] - a["wilson_low"] for a, b in itertools.combinations(rows, 2))
            rep.gates.append(Gate("frequency nondecreasing in n (Wilson overlap, i=1)", worst, 0.0, ">=",
                                  "min over n<n' of upper(n') - lower(n)"))
        top = rows[-1]
        rep.gates.append(Gate(f"frequency at n={top['n']}, i=1", top["freq"], gates["freq"], ">="))
    return rep


# --- walk convergence ------------------------------------------------------

def _walk_rep(args):
    fkey, n, lam, seed, r, t_grid = args
    w, _ = _build(fkey, n, lam)
    clocks = sample_clocks(w, lam, seed_streams(seed, r, "clocks"))
    S = walk_path(w, clocks)
    t = np.asarray(t_grid) * n ** (2.0 / 3.0)
    return n ** (-1.0 / 3.0) * S(t)


def run_walk_convergence(family: Family, lam: float, n: int, reps: int, t_grid, seed: int,
                         workers: int = 1) -> ExperimentReport:
    n = int(n)
    t_grid = [float(t) for t in t_grid]
    fkey = _family_key(family)
    w, p = _build(fkey, n, float(lam))
    lp = LimitParams.from_model(p)
    vals = np.array(_map(_walk_rep, [(fkey, n, float(lam), seed, r, tuple(t_grid)) for r in range(reps)], workers))
    vals = vals.reshape(reps, len(t_grid))
    ex_mean, ex_var = exact_walk_moments(w, lam, np.array(t_grid) * n ** (2.0 / 3.0))
    rep = ExperimentReport("walk", {"family": family.describe(), "lambda": lam, "n": n, "reps": reps,
                                    "t_grid": t_grid, "seed": seed})
    rep.replicates["walk"] = reps
    for j, t in enumerate(t_grid):
        x = vals[:, j]
        m, se = mean_se(x)
        v = float(x.var(ddof=1)) if reps > 1 else math.nan
        # standard error of the sample variance from the fourth central moment
        m4 = float(np.mean((x - x.mean()) ** 4)) if reps > 1 else math.nan
        vse = math.sqrt(max(m4 - v * v, 0.0) / reps) if reps > 1 else math.nan
        target_m, target_v = float(lp.mean(t)), float(lp.variance(t))
        em = float(ex_mean[j]) * n ** (-1.0 / 3.0)
        ev = float(ex_var[j]) * n ** (-2.0 / 3.0)
        rep.add_rows("moments", [{
            "t": t, "mean": m, "mean_se": se, "limit_mean": target_m, "z_mean": z_score(m, target_m, se),
            "exact_mean": em, "z_mean_exact": z_score(m, em, se),
            "var": v, "var_se": vse, "limit_var": target_v, "z_var": z_score(v, target_v, vse),
            "exact_var": ev, "z_var_exact": z_score(v, ev, vse),
            "reps": reps, "seeds": _seed_range(seed, reps, "clocks"),
        }])
    return rep


# --- root sums -------------------------------------------------------------

def _roots_rep(args):
    fkey, n, lam, seed, r, s_grid, st = args
    w, _ = _build(fkey, n, lam)
    clocks = sample_clocks(w, lam, seed_streams(seed, r, "clocks"))
    sb, wb = coupled_explore(w, clocks)
    c = n ** (1.0 / 3.0)
    ms = [int(math.floor(s * c)) for s in s_grid]
    out = {}
    for mode, res in (("size_biased", sb), ("weight_biased", wb)):
        out[(mode, "root_weight")] = [root_prefix_sums(res, clocks, w, m, 0.0)["weight"] for m in ms]
        s_c, t_c = st
        pref = root_prefix_sums(res, clocks, w, int(math.floor(s_c * c)), t_c)
        comp = competing_clock_sums(clocks, w, mode, s_c, t_c)
        out[(mode, "corrected")] = [pref["weight_rung"], pref["count_rung"], comp["weight"], comp["count"]]
        kc = key_clock_series(clocks, w, mode, s_grid, ms)
        out[(mode, "V")] = kc["V"].tolist()
        out[(mode, "T")] = kc["T"].tolist()
    return out


CORRECTED = ("root_weight_rung", "root_count_rung", "clock_weight_both", "clock_count_both")


def run_root_lln(family: Family, lam: float, n_list, reps: int, s_grid, seed: int,
                 st: tuple = (1.0, 1.0), workers: int = 1, gates: dict | None = None) -> ExperimentReport:
    """Root-weight sums over the first s n^{1/3} roots and the clock-collision corrections.

    Targets: weight-biased sums -> s, size-biased -> mu s (evaluated at the
    grid value m / n^{1/3} actually summed); corrected sums -> 0.
    """
    n_list = [int(n) for n in np.atleast_1d(n_list)]
    s_grid = [float(s) for s in s_grid]
    fkey = _family_key(family)
    rep = ExperimentReport("roots", {"family": family.describe(), "lambda": lam, "n": n_list,
                                     "reps": reps, "s_grid": s_grid, "st": list(st), "seed": seed})
    for n in n_list:
        _, p = _build(fkey, n, float(lam))
        out = _map(_roots_rep, [(fkey, n, float(lam), seed, r, tuple(s_grid), tuple(st)) for r in range(reps)],
                   workers)
        rep.replicates[f"n={n}"] = reps
        seeds = _seed_range(seed, reps, "clocks")
        c = n ** (1.0 / 3.0)
        for mode in ("size_biased", "weight_biased"):
            scale = p.mu if mode == "size_biased" else 1.0
            rw = np.array([o[(mode, "root_weight")] for o in out])
            V = np.array([o[(mode, "V")] for o in out])
            T = np.array([o[(mode, "T")] for o in out])
            for j, s in enumerate(s_grid):
                s_m = math.floor(s * c) / c
                m, se = mean_se(rw[:, j])
                vm, vse = mean_se(V[:, j])
                tm, tse = mean_se(T[:, j])
                rep.add_rows("root_weight", [{
                    "n": n, "mode": mode, "s": s, "s_grid_value": s_m, "mean": m, "se": se,
                    "target": scale * s_m, "z": z_score(m, scale * s_m, se),
                    "V_mean": vm, "V_se": vse, "V_target": scale * s,
                    "T_mean": tm, "T_se": tse, "T_target": s_m,
                    "reps": reps, "seeds": seeds,
                }])
            corr = np.array([o[(mode, "corrected")] for o in out])
            for j, name in enumerate(CORRECTED):
                m, se = mean_se(corr[:, j])
                rep.add_rows("corrected", [{"n": n, "mode": mode, "s": st[0], "t": st[1], "sum": name,
                                            "mean": m, "se": se, "reps": reps, "seeds": seeds}])
    if gates:
        _roots_gates(rep, n_list, s_grid, gates)
    return rep


def _roots_gates(rep: ExperimentReport, n_list, s_grid, gates: dict) -> None:
    nmax = max(n_list)
    for r in rep.tables["root_weight"]:
        if r["n"] == nmax:
            rep.gates.append(Gate(f"root-weight mean z, {r['mode']}, s={r['s']}, n={nmax}",
                                  abs(r["z"]), 4.0, "<=", f"mean {r['mean']:.5g} target {r['target']:.5g}"))
    for mode in ("size_biased", "weight_biased"):
        for name in CORRECTED:
            rows = sorted((r for r in rep.tables["corrected"] if r["mode"] == mode and r["sum"] == name),
                          key=lambda r: r["n"])
            means = [r["mean"] for r in rows]
            rep.gates.append(Gate(f"{name} ({mode}) decreasing in n", float(np.max(np.diff(means))) if len(means) > 1
                                  else -1.0, 0.0, "<", "max successive change of the mean"))
            rep.gates.append(Gate(f"{name} ({mode}) mean at n={nmax}", means[-1],
                                  gates["corrected"][f"{mode}:{name}"], "<="))


# --- counting-process LLN --------------------------------------------------

def _counting_rep(args):
    fkey, n, lam, seed, r, t_grid = args
    w, _ = _build(fkey, n, lam)
    clocks = sample_clocks(w, lam, seed_streams(seed, r, "clocks"))
    sb, wb = coupled_explore(w, clocks)
    a = n ** (2.0 / 3.0)
    t = np.asarray(t_grid)
    plain = CountingProcess(clocks.J)(t * a) / a
    out = [float(np.max(np.abs(plain - t)))]
    for res in (sb, wb):
        cp = CountingProcess.from_result(clocks, res)
        out.append(float(np.max(np.abs(cp.discovered(t * a) / a - t))))
    return out


def run_counting_lln(family: Family, lam: float, n_list, reps: int, t_grid, seed: int,
                     workers: int = 1, gates: dict | None = None) -> ExperimentReport:
    """sup over the grid of |n^{-2/3} N(t n^{2/3}) - t| for the plain and root-corrected counts."""
    n_list = [int(n) for n in np.atleast_1d(n_list)]
    t_grid = [float(t) for t in t_grid]
    fkey = _family_key(family)
    rep = ExperimentReport("counting", {"family": family.describe(), "lambda": lam, "n": n_list,
                                        "reps": reps, "t_max": max(t_grid), "t_points": len(t_grid),
                                        "seed": seed})
    names = ("N", "N_size_biased", "N_weight_biased")
    for n in n_list:
        out = np.array(_map(_counting_rep, [(fkey, n, float(lam), seed, r, tuple(t_grid)) for r in range(reps)],
                            workers))
        rep.replicates[f"n={n}"] = reps
        for j, name in enumerate(names):
            m, se = mean_se(out[:, j])
            rep.add_rows("sup_deviation", [{
                "n": n, "process": name, "mean": m, "se": se,
                "q50": float(np.quantile(out[:, j], 0.5)), "q90": float(np.quantile(out[:, j], 0.9)),
                "q99": float(np.quantile(out[:, j], 0.99)), "reps": reps,
                "seeds": _seed_range(seed, reps, "clocks"),
            }])
    if gates:
        nmax = max(n_list)
        for name in names[1:]:
            rows = sorted((r for r in rep.tables["sup_deviation"] if r["process"] == name), key=lambda r: r["n"])
            means = [r["mean"] for r in rows]
            rep.gates.append(Gate(f"{name} sup-deviation decreasing in n", float(np.max(np.diff(means)))
                                  if len(means) > 1 else -1.0, 0.0, "<", "max successive change of the mean"))
            rep.gates.append(Gate(f"{name} q99 sup-deviation at n={nmax}", rows[-1]["q99"],
                                  gates["counting_q99"][name], "<="))
    return rep


# --- oracle equivalence ----------------------------------------------------

@lru_cache(maxsize=4)
def _alias(fkey: tuple, n: int, lam: float) -> AliasTable:
    w, _ = _build(fkey, n, lam)
    return AliasTable(w.w)


def _oracle_rep(args):
    fkey, n, lam, seed, r = args
    w, _ = _build(fkey, n, lam)
    res = explore(w, sample_clocks(w, lam, seed_streams(seed, r, "clocks")), "size_biased")
    gb = sample_bernoulli(w, lam, seed_streams(seed, r, "bernoulli"))
    gp = sample_poisson(w, lam, seed_streams(seed, r, "poisson"), _alias(fkey, n, lam))
    sb = component_sizes(gb)
    sp = component_sizes(gp)
    return (int(res.sizes.max()), res.K, int(sb.max()), sb.size, int(sp.max()), sp.size, gb.m, gp.m)


ARMS = ("exploration", "bernoulli", "poisson")


def run_oracle_equivalence(family: Family, lam: float, n: int, reps: int, seed: int,
                           workers: int = 1, alpha: float = 1e-3) -> ExperimentReport:
    n = int(n)
    if n > 100:
        raise ValueError("oracle equivalence runs at n <= 100")
    fkey = _family_key(family)
    out = np.array(_map(_oracle_rep, [(fkey, n, float(lam), seed, r) for r in range(reps)], workers))
    rep = ExperimentReport("oracle", {"family": family.describe(), "lambda": lam, "n": n, "reps": reps,
                                      "seed": seed, "alpha": alpha})
    rep.replicates = {arm: reps for arm in ARMS}
    roles = {"exploration": "clocks", "bernoulli": "bernoulli", "poisson": "poisson"}
    # distinct (replicate, role) keys guarantee independent arms
    ids = {stream_id(seed, 0, roles[a]) for a in ARMS}
    rep.config["independent_streams"] = len(ids) == len(ARMS)
    largest = {a: out[:, 2 * j] for j, a in enumerate(ARMS)}
    count = {a: out[:, 2 * j + 1] for j, a in enumerate(ARMS)}
    rep.samples.update({"largest": largest, "count": count})
    for a, b in itertools.combinations(ARMS, 2):
        for stat, data in (("largest", largest), ("components", count)):
            D, pv = ks_two_sample(data[a], data[b])
            rep.add_rows("ks", [{"statistic": stat, "pair": f"{a}|{b}", "ks": D, "p": pv, "reps": reps,
                                 "seeds": f"master={seed} replicates=0..{reps - 1} roles={roles[a]},{roles[b]}"}])
            if stat == "largest":
                rep.gates.append(Gate(f"KS p-value largest component {a} vs {b}", pv, alpha, ">"))
    for j, a in enumerate(ARMS):
        m, se = mean_se(largest[a])
        cm, cse = mean_se(count[a])
        rep.add_rows("arms", [{"arm": a, "largest_mean": m, "largest_se": se, "components_mean": cm,
                               "components_se": cse, "reps": reps}])
    em_b, em_p = out[:, 6], out[:, 7]
    D, pv = ks_two_sample(em_b, em_p)
    rep.add_rows("ks", [{"statistic": "edges", "pair": "bernoulli|poisson", "ks": D, "p": pv, "reps": reps,
                         "seeds": f"master={seed} replicates=0..{reps - 1} roles=bernoulli,poisson"}])
    return rep
