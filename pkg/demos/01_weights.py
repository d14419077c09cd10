# %% [markdown]
# # Weight sequences in the critical window
#
# A weight sequence `w` defines the graph: pair `{u, v}` is an edge with
# probability `1 - exp(-t_n w_u w_v / ell1)`. The built-in families are
# constant weights and a two-point mixture balanced so that the first two
# moments agree.

# %%
import numpy as np

from critgraph.weights import (
    Family, aldous_parameters, criticality_report, make_two_point, renormalize_to_critical,
    WeightSequence,
)

w, p = make_two_point(9, 0.5, 2.0)
print(w.w, w.ell1, w.ell2sq, w.ell3cu)
print("mu =", p.mu, "mu' =", p.mu_prime)

# %% [markdown]
# The criticality report measures how far the empirical moments sit from
# their limits, on the scale that matters in the window.

# %%
for name, params in (("constant", {}), ("two_point", {"a": 0.5, "b": 2.0})):
    seq, mp = Family(name, params).build(100_000)
    print(name, criticality_report(seq, mp))

# %% [markdown]
# Any positive sequence can be rescaled so that `ell2sq / ell1 = 1`, and the
# same edge probabilities can be written in Aldous' `(x, q)` form.

# %%
raw = WeightSequence(np.random.default_rng(0).pareto(4.0, 1000) + 0.5)
crit, scale = renormalize_to_critical(raw)
print("scale", scale, "ratio", crit.ell2sq / crit.ell1)
x, q, t = aldous_parameters(crit, p)
print(np.allclose(-np.expm1(-q * x[3] * x[7]), crit.edge_probability(3, 7, 0.0)))
