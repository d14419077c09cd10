# %% [markdown]
# # Excursions and the limiting Brownian motion
#
# Component sizes converge to the excursion lengths of
# `W(t) = sqrt(mu'/mu) B(t) + lambda t - mu'/(2 mu^2) t^2` above its running
# infimum. Excursions of jump-drift paths are computed exactly; grid paths
# interpolate the crossings.

# %%
import numpy as np

from critgraph.excursions import JumpDriftPath, cutoff_excursions, excursions_above_inf, hitting_time
from critgraph.limit import LimitParams, sample_gammas, sample_gammas_coupled
from critgraph.stats import ks_two_sample, mean_se
from critgraph.streams import seed_streams

f = JumpDriftPath([0.2, 0.5], [1.0, 1.0], 3.0)
print(excursions_above_inf(f))
print(hitting_time(f, 0.2), cutoff_excursions(f, [0.0, 0.2, 3.0]))

# %% [markdown]
# Sampling the ranked excursion lengths. The horizon doubles until the top k
# cannot change any more.

# %%
p = LimitParams(dt=1e-3, k=3)
gam = np.array([sample_gammas(p, seed_streams(1, r, "limit")).gammas for r in range(300)])
for i in range(3):
    print(f"Gamma{i + 1}: mean {mean_se(gam[:, i])[0]:.3f}")

# %% [markdown]
# Halving dt on the same Brownian path barely moves the longest excursion.

# %%
pairs = [sample_gammas_coupled(p, seed_streams(2, r, "limit_fine")) for r in range(200)]
D, _ = ks_two_sample([a.gammas[0] for a, _ in pairs], [b.gammas[0] for _, b in pairs])
print("KS between dt and dt/2:", D)
