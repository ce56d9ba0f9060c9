"""The in-house simplex solver and the duals it reports."""
# %%
import numpy as np

from ntn_offload.lp import LinearProgram, dual_objective, solve_lp, solve_time_budget_lp

# %% Two products share one machine-hour and one labour-hour.
lp = LinearProgram(objective_coeffs=[3.0, 5.0],
                   constraint_matrix=[[1.0, 2.0], [3.0, 1.0]],
                   rhs=[4.0, 6.0])
sol = solve_lp(lp)
print(sol.status, sol.primal, sol.objective)
print("row prices", sol.duals, "dual objective", dual_objective(lp, sol))

# %% A single time budget shared by several links: all time goes to the best link,
# and the budget's price is that link's coefficient.
w = np.array([2.0, 7.5, 4.0])
sol = solve_time_budget_lp(w, 0.8)
print(sol.primal, sol.objective, sol.duals)
