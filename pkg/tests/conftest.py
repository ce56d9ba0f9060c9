import itertools

import numpy as np
import pytest

from ntn_offload.model import Mode, TaskDecision, enumerate_decisions
from ntn_offload.physics import SystemParams, random_instance

_REPORT = []


def closed_form_value(inst, y):
    """Subproblem optimum without any LP: eps of mandatory backhaul, then the
    free frame goes to the best of the backhaul and the offloading HUEs."""
    p = inst.params
    ya = np.asarray(y.y, dtype=float)
    w = inst.weights * inst.leo_rate_coeff_bps
    best = max([inst.uav_rate_coeff_bps] + [w[i] for i in np.flatnonzero(ya)])
    local = float(np.sum(inst.weights * inst.local_rate_bps * (1 - ya)))
    return local + inst.uav_rate_coeff_bps * p.epsilon_tau_s + (p.frame_duration_s - p.epsilon_tau_s) * best


def enumerated_optimum(inst, mode):
    return max(closed_form_value(inst, y) for y in enumerate_decisions(inst.num_hues, mode))


def weighted_instance(seed, m, lo=0.5, hi=2.0, params=None):
    """Random instance with heterogeneous weights, so offloading is sometimes worth it."""
    rng = np.random.default_rng([seed, 99])
    return random_instance(params or SystemParams(), m, seed, weights=rng.uniform(lo, hi, m))


def vertex_enumeration(c, A, b, lb, ub):
    """Best objective over all basic feasible points (tiny LPs only)."""
    n = len(c)
    rows, rhs = [list(r) for r in A], list(b)
    for j in range(n):
        e = [0.0] * n
        e[j] = -1.0
        rows.append(e)
        rhs.append(-lb[j])
        if np.isfinite(ub[j]):
            e = [0.0] * n
            e[j] = 1.0
            rows.append(e)
            rhs.append(ub[j])
    G, h = np.array(rows), np.array(rhs)
    best = None
    for idx in itertools.combinations(range(len(h)), n):
        M = G[list(idx)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, h[list(idx)])
        if np.all(G @ x <= h + 1e-9):
            v = float(np.dot(c, x))
            best = v if best is None else max(best, v)
    return best


@pytest.fixture
def params():
    return SystemParams()


@pytest.fixture(scope="session")
def acceptance_report():
    return _REPORT


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)
