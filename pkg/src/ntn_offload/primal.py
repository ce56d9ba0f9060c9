"""Time allocation by primal decomposition.

The frame budget ``tau_u + sum(tau) <= T`` couples the UAV backhaul and the HUE
uplinks.  Fixing a split ``theta`` (backhaul gets at most ``theta``, HUEs share
``T - theta``) separates the LP into two independent pieces.  The split is then
moved along the subgradient ``backhaul_price - offload_price`` of the combined
value, where each price is the dual of its piece's budget row.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lp import LinearProgram, solve_lp, solve_time_budget_lp
from .model import ConvergenceError, TaskDecision, TimeAllocation
from .physics import Instance

TRACE_COLUMNS = ("iteration", "theta_s", "lambda1", "lambda2", "value_bps")


@dataclass
class PrimalDecompState:
    split: float
    offload_price: float = 0.0
    backhaul_price: float = 0.0
    step: float = 1.0
    iteration: int = 0
    value: float = float("nan")


@dataclass
class StepRule:
    """Step size schedule for the split update.

    ``diminishing``: zeta_t = zeta0 / sqrt(t).  ``constant``: zeta_t = zeta0.
    With ``zeta0=None`` the first step is normalized so that it moves the split
    by a full frame length, i.e. zeta0 = T / |first nonzero subgradient|.
    """

    kind: str = "diminishing"
    zeta0: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("diminishing", "constant"):
            raise ValueError(f"unknown step rule {self.kind!r}")
        if self.zeta0 is not None and not self.zeta0 > 0:
            raise ValueError("zeta0 must be > 0")

    def size(self, t: int, zeta0: float) -> float:
        return zeta0 / math.sqrt(t) if self.kind == "diminishing" else zeta0


@dataclass
class PrimalDecompResult:
    alloc: TimeAllocation
    offload_price: float
    backhaul_price: float
    value: float
    iterations: int
    history: list = field(default_factory=list)


def solve_sub1(instance: Instance, y: TaskDecision, theta: float) -> tuple:
    """HUE piece: share ``T - theta`` among offloading HUEs.

    Returns (tau, offload_price, value) where value includes the local
    computation of the HUEs that keep their task.
    """
    p = instance.params
    ya = y.array
    budget = max(p.frame_duration_s - theta, 0.0)
    sol = solve_time_budget_lp(instance.weighted_leo_coeff * ya, budget)
    const = float(np.sum(instance.weighted_local_rate * (1.0 - ya)))
    return sol.primal, float(sol.duals[0]), const + sol.objective


def solve_sub2(instance: Instance, theta: float) -> tuple:
    """UAV piece: max c_u tau_u with eps <= tau_u <= theta.

    Returns (tau_u, backhaul_price, value).
    """
    eps = instance.params.epsilon_tau_s
    cu = instance.uav_rate_coeff_bps
    if cu == 0.0:
        return theta, 0.0, 0.0
    sol = solve_lp(LinearProgram([cu], [[1.0]], [theta], lower_bounds=[eps]))
    return float(sol.primal[0]), float(sol.duals[0]), sol.objective


def update_theta(state: PrimalDecompState, instance: Instance) -> float:
    """Projected subgradient ascent step on the split."""
    p = instance.params
    g = state.backhaul_price - state.offload_price
    return float(np.clip(state.split + state.step * g, p.epsilon_tau_s, p.frame_duration_s))


def primal_decomposition(instance: Instance, y: TaskDecision, theta0: Optional[float] = None,
                         step: Optional[StepRule] = None, tol: Optional[float] = None,
                         max_iter: int = 500, parallel: bool = False) -> PrimalDecompResult:
    """Iterate the two pieces and the split update until the value settles.

    Stops when the subgradient vanishes, when the split sits on a boundary
    and the subgradient points outward, or when the value moves by at most
    ``tol`` (default 1e-6 relative).  Raises :class:`ConvergenceError` with
    the best iterate after ``max_iter`` updates.
    """
    p = instance.params
    T, eps = p.frame_duration_s, p.epsilon_tau_s
    step = step or StepRule()
    theta = T / 2.0 if theta0 is None else float(theta0)
    if not eps <= theta <= T:
        raise ValueError(f"theta0 must lie in [{eps}, {T}]")

    state = PrimalDecompState(split=theta)
    zeta0 = step.zeta0
    history = []
    best = None
    prev_value = None
    pool = ThreadPoolExecutor(max_workers=2) if parallel else None
    try:
        for it in range(1, max_iter + 1):
            if pool is not None:
                f1 = pool.submit(solve_sub1, instance, y, state.split)
                f2 = pool.submit(solve_sub2, instance, state.split)
                (tau, l1, v1), (tau_u, l2, v2) = f1.result(), f2.result()
            else:
                tau, l1, v1 = solve_sub1(instance, y, state.split)
                tau_u, l2, v2 = solve_sub2(instance, state.split)
            state.offload_price, state.backhaul_price = l1, l2
            state.value, state.iteration = v1 + v2, it
            history.append((it, state.split, l1, l2, state.value))
            if best is None or state.value > best[0]:
                best = (state.value, tau_u, tau.copy(), l1, l2)

            g = l2 - l1
            at_top = state.split >= T and g >= 0
            at_bottom = state.split <= eps and g <= 0
            settled = prev_value is not None and abs(state.value - prev_value) <= (
                tol if tol is not None else 1e-6 * abs(state.value))
            if g == 0 or at_top or at_bottom or settled:
                return PrimalDecompResult(TimeAllocation(tau_u, tau), l1, l2, state.value,
                                          it, history)
            if zeta0 is None:
                zeta0 = T / abs(g)
            state.step = step.size(it, zeta0)
            prev_value = state.value
            state.split = update_theta(state, instance)
    finally:
        if pool is not None:
            pool.shutdown()

    value, tau_u, tau, l1, l2 = best
    raise ConvergenceError(
        "primal decomposition did not settle",
        best=PrimalDecompResult(TimeAllocation(tau_u, tau), l1, l2, value, max_iter, history),
    )


def write_trace_csv(path, history) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in history:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
