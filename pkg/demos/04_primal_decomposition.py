"""Splitting the frame between HUE uplinks and the UAV backhaul with a subgradient loop."""
# %%
import numpy as np

from ntn_offload import SystemParams, TaskDecision
from ntn_offload.benders import solve_subproblem
from ntn_offload.physics import random_instance
from ntn_offload.primal import StepRule, primal_decomposition

rng = np.random.default_rng(3)
inst = random_instance(SystemParams(), 6, seed=3, weights=rng.uniform(0.5, 2.0, 6))
y = TaskDecision((1, 0, 1, 0, 0, 1))

# %% The split starts mid-frame and moves toward whichever side has the higher price.
res = primal_decomposition(inst, y, theta0=0.5, step=StepRule("diminishing", zeta0=0.05 / inst.uav_rate_coeff_bps))
for row in res.history[:5] + res.history[-2:]:
    print(row)

# %% Same value as the direct LP.
_, direct, _ = solve_subproblem(inst, y)
print("decomposed", res.value, "direct", direct, "iterations", res.iterations)
