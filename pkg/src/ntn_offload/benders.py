"""Joint offloading decision and time allocation by Benders decomposition.

The subproblem at a fixed decision ``y*`` is the time-allocation LP written in
linked form: HUE airtime is only admitted through ``tau_i <= (T - eps) * y_i``.
Pinning ``y = y*`` and dualizing gives, for every HUE,

    slope_i = (T - eps) * pi_i - z_i * R_i^local

with ``pi_i`` the dual of the linking row.  Since the LP's dual feasible set
does not depend on ``y``, the cut

    Psi <= value(y*) + sum_i slope_i * (y_i - y*_i)

over-estimates the subproblem optimum at every ``y`` and is exact at ``y*``.

Bounds follow the maximization convention: the incumbent (best subproblem
value seen) is the lower bound and the master optimum is the upper bound.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lp import LinearProgram, LpStatus, solve_lp
from .model import (ConvergenceError, Mode, Scheme, Solution, TaskDecision,
                    TimeAllocation, objective_value)
from .physics import Instance
from .primal import StepRule, primal_decomposition

TRACE_COLUMNS = ("iteration", "lower_bound_bps", "upper_bound_bps", "gap_bps", "chosen_y_bitmask")
RELAXED_MAX_HUES = 20


@dataclass(frozen=True)
class BendersCut:
    slopes: np.ndarray
    y_star: TaskDecision
    value: float

    def evaluate(self, y: TaskDecision) -> float:
        d = y.array - self.y_star.array
        return self.value + float(self.slopes @ d)


@dataclass
class SolverOptions:
    epsilon: float = 1e-4
    max_iter: int = 50
    mode: Mode = Mode.PAPER
    psi_down: float = -25.0
    initial_y: Optional[TaskDecision] = None
    # "lp": direct LP solve of the subproblem; "primal": primal decomposition
    inner: str = "lp"
    step: Optional[StepRule] = None

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.inner not in ("lp", "primal"):
            raise ValueError(f"unknown inner solver {self.inner!r}")


@dataclass
class BendersState:
    cuts: list = field(default_factory=list)
    lb: float = -np.inf
    ub: float = np.inf
    psi_down: float = -25.0
    iteration: int = 0
    incumbent: Optional[tuple] = None  # (TaskDecision, TimeAllocation, value)
    trace: list = field(default_factory=list)  # (iteration, lb, ub, bitmask of next y)

    @property
    def gap(self) -> float:
        return self.ub - self.lb


def subproblem_lp(instance: Instance, y: TaskDecision) -> LinearProgram:
    """Linked time-allocation LP, variables [tau_u, tau_1..tau_M]."""
    p = instance.params
    m = instance.num_hues
    T, eps = p.frame_duration_s, p.epsilon_tau_s
    c = np.concatenate([[instance.uav_rate_coeff_bps], instance.weighted_leo_coeff])
    A = np.zeros((1 + m, 1 + m))
    A[0, :] = 1.0
    A[1:, 1:] = np.eye(m)
    b = np.concatenate([[T], (T - eps) * y.array])
    lb = np.concatenate([[eps], np.zeros(m)])
    return LinearProgram(c, A, b, lower_bounds=lb)


def _cut_slopes(instance: Instance, link_duals: np.ndarray) -> np.ndarray:
    p = instance.params
    return (p.frame_duration_s - p.epsilon_tau_s) * link_duals - instance.weighted_local_rate


def solve_subproblem(instance: Instance, y_star: TaskDecision, options: Optional[SolverOptions] = None):
    """Optimal airtime at a fixed decision.

    Returns (alloc, value, slopes) where ``slopes`` are the cut coefficients.
    """
    if len(y_star) != instance.num_hues:
        raise ValueError("decision length does not match instance")
    if options is not None and options.inner == "primal":
        res = primal_decomposition(instance, y_star, step=options.step)
        alloc = res.alloc
        # (price, max(0, w - price)) is dual feasible for the linked LP and
        # attains its optimum, so it yields the same kind of exact cut
        price = max(res.offload_price, res.backhaul_price)
        link_duals = np.maximum(instance.weighted_leo_coeff - price, 0.0)
    else:
        sol = solve_lp(subproblem_lp(instance, y_star))
        if sol.status is not LpStatus.OPTIMAL:  # pragma: no cover - always feasible
            raise RuntimeError(f"subproblem LP returned {sol.status}")
        alloc = TimeAllocation(sol.primal[0], sol.primal[1:])
        link_duals = sol.duals[1:]
    value = objective_value(instance, y_star, alloc)
    return alloc, value, _cut_slopes(instance, link_duals)


def _candidates(m: int, mode: Mode) -> np.ndarray:
    if mode is Mode.PAPER:
        return np.vstack([np.zeros((1, m)), np.eye(m)])
    if m > RELAXED_MAX_HUES:
        raise ValueError(f"relaxed master enumeration supports at most {RELAXED_MAX_HUES} HUEs")
    masks = np.arange(1 << m)
    return ((masks[:, None] >> np.arange(m)) & 1).astype(float)


def solve_master(cuts: list, options: SolverOptions, m_h: int) -> tuple:
    """Maximize the min-of-cuts over all mode-feasible decisions.

    Returns (y, psi).  Candidates are scanned in increasing bitmask order
    and the first maximizer wins.
    """
    if not cuts:
        raise ValueError("master problem needs at least one cut")
    Y = _candidates(m_h, options.mode)
    psi = np.full(Y.shape[0], np.inf)
    for cut in cuts:
        # value + slopes @ (y - y*) keeps the cut exact at its generator
        psi = np.minimum(psi, cut.value + (Y - cut.y_star.array) @ cut.slopes)
    psi = np.maximum(psi, options.psi_down)
    k = int(np.argmax(psi))
    return TaskDecision(tuple(int(v) for v in Y[k])), float(psi[k])


def benders_solve(instance: Instance, options: Optional[SolverOptions] = None) -> tuple:
    """Run the decomposition loop; returns (Solution, BendersState).

    Raises :class:`ConvergenceError` (with ``best`` solution and final ``gap``)
    when the gap is still above ``epsilon`` after ``max_iter`` iterations.
    """
    options = options or SolverOptions()
    m = instance.num_hues
    y = options.initial_y or TaskDecision.zeros(m)
    if len(y) != m:
        raise ValueError("initial_y length does not match instance")
    if not y.allowed(options.mode):
        raise ValueError("initial_y violates the offloading cap of paper mode")
    state = BendersState(psi_down=options.psi_down)

    while state.iteration < options.max_iter:
        state.iteration += 1
        alloc, value, slopes = solve_subproblem(instance, y, options)
        if state.incumbent is None or value > state.lb:
            state.lb = value
            state.incumbent = (y, alloc, value)
        state.cuts.append(BendersCut(slopes, y, value))
        y, psi = solve_master(state.cuts, options, m)
        state.ub = psi
        state.trace.append((state.iteration, state.lb, state.ub, y.bitmask))
        if state.gap <= options.epsilon:
            break

    y_inc, alloc_inc, _ = state.incumbent
    sol = Solution.evaluate(instance, y_inc, alloc_inc, Scheme.BENDERS,
                            iterations=state.iteration, trace=list(state.trace), gap=state.gap)
    if state.gap > options.epsilon:
        raise ConvergenceError(f"gap {state.gap:.6g} after {state.iteration} iterations",
                               best=sol, gap=state.gap, state=state)
    return sol, state


def write_trace_csv(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for it, lb, ub, mask in trace:
            w.writerow([it, repr(float(lb)), repr(float(ub)), repr(float(ub - lb)), mask])
