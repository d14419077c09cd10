# %% [markdown]
# # Exploring a graph with exponential clocks
#
# Each vertex gets a discovery clock `J_v`. The walk
# `S(t) = -t + sum of w_v over rung clocks` encodes the components: a
# component ends when the walk falls to minus the weight of the roots whose
# clocks have not rung. Roots are drawn weight-proportionally or uniformly
# from presorted exponential keys, so one clock vector drives both orders.

# %%
import numpy as np

from critgraph.exploration import (
    ClockRealization, coupled_explore, explore, rank_components, sample_clocks, walk_path,
)
from critgraph.streams import seed_streams
from critgraph.weights import WeightSequence, make_two_point

# %% [markdown]
# Two vertices, clocks at 0.3 and 5.0. Starting at vertex 2 finds vertex 1
# before the walk is exhausted; starting at vertex 1 does not.

# %%
w2 = WeightSequence([1.0, 1.0])
J = np.array([0.3, 5.0])
for keys in ([2.0, 1.0], [1.0, 2.0]):
    res = explore(w2, ClockRealization(J, np.array(keys), np.array(keys), 0.0), "size_biased")
    print("roots", res.roots + 1, "tau", res.tau, "sizes", res.sizes)

# %% [markdown]
# At scale: one clock realization, both root orders. Both explorations are
# exact (weights equal the tau gaps) but they need not carve out the same
# components.

# %%
n = 100_000
w, _ = make_two_point(n, 0.5, 2.0)
clocks = sample_clocks(w, 0.0, seed_streams(42, 0, "clocks"))
sb, wb = coupled_explore(w, clocks)
for res in (sb, wb):
    top = rank_components(res, "size", 3)
    print(res.mode, "K =", res.K, "largest sizes", [c.size for c in top],
          "scaled", [round(c.size / n ** (2 / 3), 3) for c in top])

# %%
S = walk_path(w, clocks)
t = np.array([0.5, 1.0, 2.0]) * n ** (2 / 3)
print("rescaled walk", S(t) / n ** (1 / 3))
