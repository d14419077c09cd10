# %% [markdown]
# # Monte Carlo experiments
#
# The experiment drivers return an `ExperimentReport` with tables, gates and
# replicate counts. These are small runs; the acceptance budgets live in
# `critgraph.calibration` and the CLI runs any of them from the shell
# (`critgraph theorem11 --help`).

# %%
from critgraph.experiments import (
    run_oracle_equivalence, run_ranking_consistency, run_theorem_1_1, run_walk_convergence,
)
from critgraph.weights import Family

two = Family("two_point", {"a": 0.5, "b": 2.0})

rep = run_oracle_equivalence(two, 0.0, 30, reps=2000, seed=1)
print("\n".join(rep.summary_lines()))

# %%
rep = run_walk_convergence(Family("constant"), 0.0, 10_000, reps=300, t_grid=[0.5, 1.0, 2.0], seed=2)
for row in rep.tables["moments"]:
    print(f"t={row['t']}: mean {row['mean']:.3f} (limit {row['limit_mean']:.3f}), "
          f"var {row['var']:.3f} (limit {row['limit_var']:.3f})")

# %%
rep = run_ranking_consistency(two, 0.0, [3000, 10_000], reps=200, k=1, seed=3)
for row in rep.tables["frequency"]:
    print(row["n"], row["freq"], (row["wilson_low"], row["wilson_high"]))

# %%
rep = run_theorem_1_1(Family("constant"), 0.0, [10_000], reps=200, k=2, limit_reps=200, seed=4, dt=1e-3)
for row in rep.tables["ks_limit"]:
    if row["mode"] == "size_biased":
        print(row["i"], row["coord"], round(row["ks"], 3), round(row["p"], 3))
