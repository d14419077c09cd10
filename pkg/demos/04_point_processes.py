# %% [markdown]
# # Size-biased point processes
#
# `generate(X)` lists the entries of `X` in size-biased random order and
# pairs each with the mass accumulated so far. The same structure appears in
# the size-biased exploration: components arrive in size-biased order.

# %%
import numpy as np

from critgraph.exploration import explore, sample_clocks
from critgraph.sbpp import cond1_errors, generate, ord, pi_n_from_exploration, sbpp_conditions_check
from critgraph.weights import make_two_point

pp = generate([4.0, 1.0, 2.0, 3.0], np.random.default_rng(0))
print(pp.atoms, ord(pp), cond1_errors(pp).max())

# %%
n = 50_000
w, _ = make_two_point(n, 0.5, 2.0)
res = explore(w, sample_clocks(w, 0.0, np.random.default_rng(1)), "size_biased")
pin = pi_n_from_exploration(res)
print("atoms", len(pin), "largest", ord(pin)[:3])
rep = sbpp_conditions_check(pin, 0.1, s0_grid=[0.0, 1.0, 3.0])
print("tail sup", rep.tail_sup, "identity ok", rep.cond1_ok)
