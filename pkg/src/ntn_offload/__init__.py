"""Joint task offloading and airtime allocation for a LEO/UAV maritime edge network."""
from .baselines import brute_force_optimal, random_scheme, time_allocation
from .benders import BendersCut, BendersState, SolverOptions, benders_solve, solve_master, solve_subproblem
from .lp import LinearProgram, LpSolution, LpStatus, solve_lp
from .model import (ConvergenceError, Mode, Scheme, Solution, TaskDecision, TimeAllocation,
                    objective_value, rate_breakdown)
from .physics import (ChannelRealization, Instance, SystemParams, Topology, build_instance,
                      channel_gain, db_to_linear, large_scale_fading_db, linear_to_db, local_rate,
                      random_instance, rate_coefficient, sample_topology, topology_from_positions)
from .primal import StepRule, primal_decomposition

__version__ = "0.1.0"
