"""Benders bounds on one instance, and a trace written to disk."""
# %%
import tempfile
from pathlib import Path

import numpy as np

from ntn_offload import Mode, SolverOptions, SystemParams, benders_solve, brute_force_optimal
from ntn_offload.benders import write_trace_csv
from ntn_offload.physics import random_instance

# %% Heterogeneous weights make offloading worthwhile for some HUEs.
rng = np.random.default_rng(7)
inst = random_instance(SystemParams(), 10, seed=7, weights=rng.uniform(0.5, 2.0, 10))
sol, state = benders_solve(inst, SolverOptions(mode=Mode.RELAXED))
for it, lb, ub, mask in state.trace:
    print(f"iter {it}: lower {lb:.6e}  upper {ub:.6e}  next y {mask:#06x}")

# %% The enumerated optimum agrees.
oracle = brute_force_optimal(inst, Mode.RELAXED)
print("benders", sol.objective_bps, "oracle", oracle.objective_bps, "offloading", sol.y.y)

# %%
out = Path(tempfile.mkdtemp()) / "trace.csv"
write_trace_csv(out, state.trace)
print(out.read_text())
