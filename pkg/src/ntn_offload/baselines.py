"""Comparison schemes: exhaustive optimum and random decision/allocation."""
from __future__ import annotations

import numpy as np

from .lp import solve_time_budget_lp
from .model import Mode, Scheme, Solution, TaskDecision, TimeAllocation, enumerate_decisions
from .physics import Instance

RELAXED_MAX_HUES = 20


def time_allocation(instance: Instance, y: TaskDecision) -> TimeAllocation:
    """Optimal airtime for a fixed decision.

    Only the backhaul and the offloading HUEs get variables: after moving
    ``eps`` of mandatory backhaul time out, the free frame ``T - eps`` is a
    single budget row.
    """
    p = instance.params
    off = np.flatnonzero(y.array)
    coeffs = np.concatenate([[instance.uav_rate_coeff_bps], instance.weighted_leo_coeff[off]])
    sol = solve_time_budget_lp(coeffs, p.frame_duration_s - p.epsilon_tau_s)
    tau = np.zeros(instance.num_hues)
    tau[off] = sol.primal[1:]
    return TimeAllocation(p.epsilon_tau_s + sol.primal[0], tau)


def brute_force_optimal(instance: Instance, mode: Mode = Mode.PAPER) -> Solution:
    """Scheme 1: enumerate every mode-feasible decision and keep the best."""
    mode = Mode(mode)
    m = instance.num_hues
    if mode is Mode.RELAXED and m > RELAXED_MAX_HUES:
        raise ValueError(f"relaxed enumeration supports at most {RELAXED_MAX_HUES} HUEs, got {m}")
    best = None
    count = 0
    for y in enumerate_decisions(m, mode):
        count += 1
        cand = Solution.evaluate(instance, y, time_allocation(instance, y), Scheme.ORACLE)
        # strict '>' keeps the lowest bitmask on ties
        if best is None or cand.objective_bps > best.objective_bps:
            best = cand
    best.iterations = count
    return best


def random_scheme(instance: Instance, mode: Mode = Mode.PAPER, rng_seed: int = 0) -> Solution:
    """Scheme 2: uniform feasible decision, Dirichlet(1, ..., 1) airtime split.

    The whole frame is used: ``tau_u = eps + share_0 * (T - eps)`` and each HUE
    gets ``share_i * (T - eps)``.
    """
    mode = Mode(mode)
    p = instance.params
    m = instance.num_hues
    rng = np.random.default_rng(rng_seed)
    if mode is Mode.PAPER:
        k = int(rng.integers(0, m + 1))
        y = TaskDecision.zeros(m) if k == 0 else TaskDecision.unit(m, k - 1)
    else:
        y = TaskDecision(tuple(int(b) for b in rng.integers(0, 2, size=m)))
    share = rng.dirichlet(np.ones(m + 1))
    free = p.frame_duration_s - p.epsilon_tau_s
    alloc = TimeAllocation(p.epsilon_tau_s + share[0] * free, share[1:] * free)
    return Solution.evaluate(instance, y, alloc, Scheme.RANDOM)
