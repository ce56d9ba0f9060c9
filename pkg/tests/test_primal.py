import dataclasses

import numpy as np
import pytest

from conftest import closed_form_value, weighted_instance
from ntn_offload.benders import solve_subproblem
from ntn_offload.model import ConvergenceError, TaskDecision
from ntn_offload.physics import SystemParams, random_instance
from ntn_offload.primal import (PrimalDecompState, StepRule, primal_decomposition, solve_sub1,
                                solve_sub2, update_theta, write_trace_csv)


@pytest.fixture
def inst():
    return weighted_instance(4, 5)


def test_sub1_no_offloaders(inst):
    tau, price, value = solve_sub1(inst, TaskDecision.zeros(5), 0.5)
    assert tau.tolist() == [0.0] * 5 and price == 0.0
    assert value == pytest.approx(float(np.sum(inst.weights * inst.local_rate_bps)), rel=1e-15)


def test_sub1_single_offloader(inst):
    T = inst.params.frame_duration_s
    tau, price, _ = solve_sub1(inst, TaskDecision.unit(5, 2), 0.3)
    assert tau[2] == pytest.approx(T - 0.3, rel=1e-15)
    assert price == pytest.approx(inst.weights[2] * inst.leo_rate_coeff_bps[2], rel=1e-12)


def test_sub1_closed_form(inst):
    T = inst.params.frame_duration_s
    theta = T / 2
    y = TaskDecision((1, 0, 1, 1, 0))
    ya = y.array
    w = inst.weights * inst.leo_rate_coeff_bps * ya
    expect = (T - theta) * w.max() + float(np.sum(inst.weights * inst.local_rate_bps * (1 - ya)))
    _, price, value = solve_sub1(inst, y, theta)
    assert value == pytest.approx(expect, rel=1e-12)
    assert price == pytest.approx(w.max(), rel=1e-12)


def test_sub2(inst):
    eps, T = inst.params.epsilon_tau_s, inst.params.frame_duration_s
    tau_u, price, value = solve_sub2(inst, eps)
    assert tau_u == pytest.approx(eps) and value == pytest.approx(inst.uav_rate_coeff_bps * eps)
    tau_u, price, value = solve_sub2(inst, T)
    assert tau_u == T and price == pytest.approx(inst.uav_rate_coeff_bps, rel=1e-12)
    assert value == pytest.approx(inst.uav_rate_coeff_bps * T, rel=1e-12)
    zero = dataclasses.replace(inst, uav_rate_coeff_bps=0.0)
    assert solve_sub2(zero, 0.4) == (0.4, 0.0, 0.0)


def test_update_theta(inst):
    T, eps = inst.params.frame_duration_s, inst.params.epsilon_tau_s
    s = PrimalDecompState(split=0.5, offload_price=3.0, backhaul_price=3.0, step=0.1)
    assert update_theta(s, inst) == 0.5
    s.backhaul_price = 5.0
    assert update_theta(s, inst) == pytest.approx(0.7)
    s.step = 10.0
    assert update_theta(s, inst) == T
    s.backhaul_price = 0.0
    assert update_theta(s, inst) == eps


def test_no_offloaders_pulls_split_to_frame(inst):
    res = primal_decomposition(inst, TaskDecision.zeros(5))
    assert res.alloc.tau_u == inst.params.frame_duration_s
    assert res.offload_price == 0.0


def test_backhaul_dominant_converges_to_top():
    inst = random_instance(SystemParams(), 4, 8, weights=[0.5] * 4)
    y = TaskDecision((1, 1, 0, 0))
    assert inst.uav_rate_coeff_bps > max(inst.weights * inst.leo_rate_coeff_bps)
    res = primal_decomposition(inst, y)
    assert res.alloc.tau_u == pytest.approx(inst.params.frame_duration_s)
    _, direct, _ = solve_subproblem(inst, y)
    assert res.value == pytest.approx(direct, rel=1e-4)


def test_constant_gap_diminishing_steps_reach_floor():
    # offloader beats the backhaul: the split must slide down to eps
    inst = random_instance(SystemParams(), 3, 1, weights=[3.0, 1.0, 1.0])
    y = TaskDecision.unit(3, 0)
    gap = inst.weights[0] * inst.leo_rate_coeff_bps[0] - inst.uav_rate_coeff_bps
    assert gap > 0
    res = primal_decomposition(inst, y, step=StepRule("diminishing", zeta0=0.05 / gap), max_iter=500)
    assert res.history[-1][1] == inst.params.epsilon_tau_s
    assert res.value == pytest.approx(closed_form_value(inst, y), rel=1e-4)
    _, direct, _ = solve_subproblem(inst, y)
    assert res.value == pytest.approx(direct, rel=1e-4)


@pytest.mark.parametrize("seed", range(25))
def test_matches_direct_lp(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 15))
    inst = weighted_instance(seed, m)
    y = TaskDecision(tuple(rng.integers(0, 2, m)))
    res = primal_decomposition(inst, y, theta0=inst.params.frame_duration_s / 2, parallel=seed % 2 == 0)
    _, direct, _ = solve_subproblem(inst, y)
    assert res.value == pytest.approx(direct, rel=1e-4)
    res.alloc.check(inst)
    assert res.alloc.total == pytest.approx(inst.params.frame_duration_s, abs=1e-9)
    assert res.backhaul_price == pytest.approx(inst.uav_rate_coeff_bps, rel=1e-12)
    assert res.offload_price >= 0


def test_iteration_cap_reports_best():
    inst = random_instance(SystemParams(), 3, 1, weights=[3.0, 1.0, 1.0])
    with pytest.raises(ConvergenceError) as e:
        primal_decomposition(inst, TaskDecision.unit(3, 0), step=StepRule("constant", zeta0=1e-12),
                             tol=0.0, max_iter=5)
    assert e.value.best.iterations == 5


def test_trace_csv(tmp_path, inst):
    res = primal_decomposition(inst, TaskDecision((1, 0, 0, 0, 0)))
    path = tmp_path / "pd.csv"
    write_trace_csv(path, res.history)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,theta_s,lambda1,lambda2,value_bps"
    assert len(lines) == len(res.history) + 1
