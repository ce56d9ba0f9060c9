"""Small dense LP engine in maximization form.

    maximize    c @ x
    subject to  A @ x <= b
                lb <= x <= ub      (ub entries may be None / inf)

Two-phase tableau simplex with Bland's rule.  After the last pivot the primal
point and the row duals are recomputed from the optimal basis with a direct
solve, which keeps them accurate even when the tableau has drifted.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

FEAS_TOL = 1e-9
GAP_TOL = 1e-8
_PIVOT_TOL = 1e-11


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    objective_coeffs: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray
    lower_bounds: Optional[np.ndarray] = None
    upper_bounds: Optional[Sequence[Optional[float]]] = None

    def __post_init__(self):
        c = np.asarray(self.objective_coeffs, dtype=float).ravel()
        n = c.size
        A = np.asarray(self.constraint_matrix, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        b = np.asarray(self.rhs, dtype=float).ravel()
        if A.ndim != 2 or A.shape[1] != n:
            raise ValueError(f"constraint rows must have length {n}, got shape {A.shape}")
        if b.size != A.shape[0]:
            raise ValueError(f"rhs has {b.size} entries for {A.shape[0]} rows")
        lb = np.zeros(n) if self.lower_bounds is None else np.asarray(self.lower_bounds, float).ravel()
        if lb.size != n or not np.all(np.isfinite(lb)):
            raise ValueError("lower_bounds must be finite with one entry per variable")
        if self.upper_bounds is None:
            ub = np.full(n, np.inf)
        else:
            ub = np.array([np.inf if u is None else u for u in self.upper_bounds], dtype=float)
            if ub.size != n:
                raise ValueError("upper_bounds must have one entry per variable")
        self.objective_coeffs, self.constraint_matrix, self.rhs = c, A, b
        self.lower_bounds, self.upper_bounds = lb, ub

    @property
    def num_vars(self) -> int:
        return self.objective_coeffs.size

    @property
    def num_rows(self) -> int:
        return self.rhs.size


@dataclass
class LpSolution:
    status: LpStatus
    primal: Optional[np.ndarray] = None
    objective: float = float("nan")
    # one multiplier >= 0 per A-row
    duals: Optional[np.ndarray] = None
    # multipliers >= 0 for finite upper bounds (0 where ub is infinite)
    bound_duals: Optional[np.ndarray] = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def reduced_costs(lp: LinearProgram, sol: LpSolution) -> np.ndarray:
    """Lower-bound multipliers r = A^T y + u - c (>= 0 at a dual-feasible point)."""
    return lp.constraint_matrix.T @ sol.duals + sol.bound_duals - lp.objective_coeffs


def dual_objective(lp: LinearProgram, sol: LpSolution) -> float:
    fin = np.isfinite(lp.upper_bounds)
    return float(lp.rhs @ sol.duals + lp.upper_bounds[fin] @ sol.bound_duals[fin]
                 - lp.lower_bounds @ reduced_costs(lp, sol))


def _pivot(T: np.ndarray, r: int, k: int) -> None:
    T[r] /= T[r, k]
    col = T[:, k].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _simplex(T: np.ndarray, basis: list, ncols: int, allowed: np.ndarray, tol: float,
             max_pivots: int) -> tuple:
    """Run Bland-rule simplex on tableau T (last row = reduced costs, maximizing).

    Row -1 holds c_j - z_j; a column may enter when it is positive.
    Returns (status, pivots) where status is 'optimal' or 'unbounded'.
    """
    m = T.shape[0] - 1
    pivots = 0
    while pivots < max_pivots:
        obj = T[-1, :ncols]
        cand = np.flatnonzero((obj > tol) & allowed)
        if cand.size == 0:
            return "optimal", pivots
        k = int(cand[0])
        colk = T[:m, k]
        rows = np.flatnonzero(colk > _PIVOT_TOL)
        if rows.size == 0:
            return "unbounded", pivots
        ratios = T[rows, -1] / colk[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        # Bland: among tied rows leave the lowest-index basic variable
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, r, k)
        basis[r] = k
        pivots += 1
    raise RuntimeError("simplex pivot limit reached")


def solve_lp(lp: LinearProgram, max_pivots: int = 50_000) -> LpSolution:
    c, A, b = lp.objective_coeffs, lp.constraint_matrix, lp.rhs
    lb, ub = lp.lower_bounds, lp.upper_bounds
    n, m0 = lp.num_vars, lp.num_rows

    # shift x = lb + x', finite upper bounds become extra rows
    fin = np.flatnonzero(np.isfinite(ub))
    rows = np.vstack([A, np.eye(n)[fin]]) if fin.size else A.copy()
    rhs = np.concatenate([b - A @ lb, ub[fin] - lb[fin]])
    const = float(c @ lb)
    m = rows.shape[0]

    # column layout: [x' (n) | slacks (m) | artificials (na)]
    neg = rhs < 0
    art_rows = np.flatnonzero(neg)
    na = art_rows.size
    ncols = n + m + na
    T = np.zeros((m + 1, ncols + 1))
    T[:m, :n] = rows
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = rhs
    T[art_rows, :n + m] *= -1.0
    T[art_rows, -1] *= -1.0
    basis = list(range(n, n + m))
    for j, i in enumerate(art_rows):
        T[i, n + m + j] = 1.0
        basis[i] = n + m + j

    scale = max(1.0, float(np.abs(c).max()) if n else 1.0)
    total = 0
    allowed = np.ones(ncols, dtype=bool)

    if na:
        # phase I: maximize -sum(artificials)
        T[-1, :] = 0.0
        T[-1, n + m:ncols] = -1.0
        for i in art_rows:
            T[-1] += T[i]
        _, piv = _simplex(T, basis, ncols, allowed, 1e-12, max_pivots)
        total += piv
        if T[-1, -1] > FEAS_TOL * max(1.0, float(np.abs(rhs).max())):
            return LpSolution(LpStatus.INFEASIBLE, iterations=total)
        # drive degenerate artificials out of the basis
        for i in range(m):
            if basis[i] >= n + m:
                nz = np.flatnonzero(np.abs(T[i, :n + m]) > _PIVOT_TOL)
                if nz.size:
                    _pivot(T, i, int(nz[0]))
                    basis[i] = int(nz[0])
        allowed[n + m:] = False

    # phase II objective row: c_j - c_B B^-1 a_j
    cfull = np.zeros(ncols)
    cfull[:n] = c
    T[-1, :] = 0.0
    T[-1, :ncols] = cfull
    for i, j in enumerate(basis):
        if cfull[j] != 0.0:
            T[-1] -= cfull[j] * T[i]
    status, piv = _simplex(T, basis, ncols, allowed, 1e-10 * scale, max_pivots - total)
    total += piv
    if status == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, iterations=total)

    # recompute primal and duals from the basis in the original orientation
    full = np.hstack([rows, np.eye(m)])
    B = full[:, basis]
    cB = np.concatenate([c, np.zeros(m)])[basis]
    xB = np.linalg.solve(B, rhs)
    y = np.linalg.solve(B.T, cB)
    y = np.where(y < 0, 0.0, y)  # clears -0.0 / roundoff below zero
    xs = np.zeros(n + m)
    xs[basis] = xB
    x = lb + np.maximum(xs[:n], 0.0)
    x = np.minimum(x, ub)

    bound_duals = np.zeros(n)
    bound_duals[fin] = y[m0:]
    return LpSolution(
        status=LpStatus.OPTIMAL,
        primal=x,
        objective=float(c @ x),
        duals=y[:m0],
        bound_duals=bound_duals,
        iterations=total,
    )


def solve_time_budget_lp(coeffs: Sequence[float], budget: float) -> LpSolution:
    """max coeffs @ t  s.t. sum(t) <= budget, t >= 0 (single coupling row)."""
    coeffs = np.asarray(coeffs, dtype=float)
    return solve_lp(LinearProgram(coeffs, np.ones((1, coeffs.size)), [budget]))
