import numpy as np
import pytest

from conftest import closed_form_value, enumerated_optimum, weighted_instance
from ntn_offload.benders import (BendersCut, SolverOptions, benders_solve, solve_master,
                                 solve_subproblem, write_trace_csv)
from ntn_offload.model import ConvergenceError, Mode, TaskDecision, enumerate_decisions
from ntn_offload.physics import SystemParams, random_instance


def lattice_optimum(inst, y, step):
    """Brute force over an airtime lattice of spacing ``step``.

    Only the backhaul and offloading HUEs earn anything.  The last active
    variable takes whatever lattice time is left, which is its best lattice value
    because every coefficient is positive.
    """
    p = inst.params
    T, eps = p.frame_duration_s, p.epsilon_tau_s
    off = [i for i in range(inst.num_hues) if y.y[i]]
    coeffs = [inst.uav_rate_coeff_bps] + [inst.weights[i] * inst.leo_rate_coeff_bps[i] for i in off]
    local = sum(inst.weights[i] * inst.local_rate_bps[i] for i in range(inst.num_hues) if not y.y[i])
    n = int(np.floor((T - eps) / step + 1e-9))
    grid = np.arange(n + 1) * step
    k = len(coeffs) - 1
    if k:
        heads = np.stack(np.meshgrid(*[np.arange(n + 1)] * k, indexing="ij"), -1).reshape(-1, k)
    else:
        heads = np.zeros((1, 0), dtype=int)
    heads = heads[heads.sum(axis=1) <= n]
    t = np.column_stack([grid[heads], grid[n - heads.sum(axis=1)]])
    t[:, 0] += eps
    best = float((t @ np.array(coeffs)).max())
    return local + best


def test_subproblem_all_local(params):
    inst = random_instance(params, 6, 3)
    alloc, value, slopes = solve_subproblem(inst, TaskDecision.zeros(6))
    assert alloc.tau_u == pytest.approx(params.frame_duration_s, abs=1e-15)
    assert alloc.tau == (0.0,) * 6
    expect = float(np.sum(inst.local_rate_bps)) + inst.uav_rate_coeff_bps * params.frame_duration_s
    assert value == pytest.approx(expect, rel=1e-12)


def test_subproblem_single_dominant_offloader(params):
    inst = random_instance(params, 3, 1, weights=[3.0, 1.0, 1.0])
    assert inst.weights[0] * inst.leo_rate_coeff_bps[0] > inst.uav_rate_coeff_bps
    alloc, _, _ = solve_subproblem(inst, TaskDecision.unit(3, 0))
    T, eps = params.frame_duration_s, params.epsilon_tau_s
    assert alloc.tau[0] == pytest.approx(T - eps, rel=1e-12)
    assert alloc.tau_u == pytest.approx(eps, rel=1e-9)


def test_subproblem_matches_lattice_search():
    inst = weighted_instance(17, 4)
    for y in enumerate_decisions(4, Mode.RELAXED):
        step = {3: 1e-2, 4: 2.5e-2}.get(y.num_offloading, 1e-3)
        _, value, _ = solve_subproblem(inst, y)
        grid = lattice_optimum(inst, y, step)
        coeff_max = max(inst.uav_rate_coeff_bps, max(inst.weights * inst.leo_rate_coeff_bps))
        assert grid <= value * (1 + 1e-12)
        assert value - grid <= step * coeff_max * (y.num_offloading + 1)


@pytest.mark.parametrize("seed", range(10))
def test_budget_tight_and_feasible(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 10))
    inst = weighted_instance(seed, m)
    y = TaskDecision(tuple(rng.integers(0, 2, m)))
    alloc, value, _ = solve_subproblem(inst, y)
    alloc.check(inst)
    assert alloc.total == pytest.approx(inst.params.frame_duration_s, abs=1e-9)
    assert value == pytest.approx(closed_form_value(inst, y), rel=1e-12)


@pytest.mark.parametrize("seed", range(12))
def test_cuts_valid_and_exact(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 9))
    inst = weighted_instance(seed, m)
    truth = {y: closed_form_value(inst, y) for y in enumerate_decisions(m, Mode.RELAXED)}
    for inner in ("lp", "primal"):
        opts = SolverOptions(inner=inner)
        for y_star in list(truth)[:: max(1, len(truth) // 8)]:
            alloc, value, slopes = solve_subproblem(inst, y_star, opts)
            cut = BendersCut(slopes, y_star, value)
            assert cut.evaluate(y_star) == value
            for y, v in truth.items():
                assert cut.evaluate(y) >= v * (1 - 1e-12)


def test_master_keeps_all_local_when_flips_hurt():
    m = 4
    cut = BendersCut(np.array([-1.0, -2.0, -0.5, -3.0]), TaskDecision.zeros(m), 100.0)
    y, psi = solve_master([cut], SolverOptions(), m)
    assert y == TaskDecision.zeros(m) and psi == 100.0


def test_master_picks_best_single_flip():
    m = 4
    cut = BendersCut(np.array([1.0, 5.0, 3.0, 5.0]), TaskDecision.zeros(m), 100.0)
    y, psi = solve_master([cut], SolverOptions(), m)
    # tie between HUE 1 and HUE 3 goes to the lower bitmask
    assert y == TaskDecision.unit(m, 1) and psi == 105.0


def test_master_floor_and_empty_pool():
    cut = BendersCut(np.array([-1.0]), TaskDecision.zeros(1), -100.0)
    _, psi = solve_master([cut], SolverOptions(psi_down=-25.0), 1)
    assert psi == -25.0
    with pytest.raises(ValueError):
        solve_master([], SolverOptions(), 3)


def test_master_relaxed_matches_brute_force():
    rng = np.random.default_rng(0)
    m = 8
    cuts = [BendersCut(rng.normal(size=m), TaskDecision(tuple(rng.integers(0, 2, m))), float(rng.normal()))
            for _ in range(3)]
    y, psi = solve_master(cuts, SolverOptions(mode=Mode.RELAXED), m)
    vals = [(min(c.evaluate(TaskDecision.from_bitmask(k, m)) for c in cuts), k) for k in range(1 << m)]
    best = max(v for v, _ in vals)
    first = min(k for v, k in vals if v == best)
    assert psi == pytest.approx(best, abs=1e-12)
    assert y.bitmask == first


def test_master_relaxed_size_cap():
    cut = BendersCut(np.zeros(21), TaskDecision.zeros(21), 0.0)
    with pytest.raises(ValueError):
        solve_master([cut], SolverOptions(mode=Mode.RELAXED), 21)


def test_single_hue_offloading_dominates(params):
    inst = random_instance(params, 1, 5, weights=[3.0])
    sol, state = benders_solve(inst, SolverOptions(epsilon=1e-4))
    assert sol.y == TaskDecision((1,))
    assert state.iteration <= 3 and state.gap <= 0.0
    assert sol.objective_bps == pytest.approx(enumerated_optimum(inst, Mode.PAPER), rel=1e-12)


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("mode", [Mode.PAPER, Mode.RELAXED])
def test_matches_enumeration(seed, mode):
    rng = np.random.default_rng([seed, 1])
    m = int(rng.integers(2, 11))
    inst = weighted_instance(seed, m)
    truth = enumerated_optimum(inst, mode)
    sol, state = benders_solve(inst, SolverOptions(mode=mode))
    assert sol.objective_bps == pytest.approx(truth, rel=1e-9)
    lbs = [r[1] for r in state.trace]
    ubs = [r[2] for r in state.trace]
    assert all(b >= a for a, b in zip(lbs, lbs[1:]))
    assert all(b <= a for a, b in zip(ubs, ubs[1:]))
    for lb, ub in zip(lbs, ubs):
        assert lb <= truth * (1 + 1e-12) and ub >= truth * (1 - 1e-12)
    sol.alloc.check(inst)
    assert sol.objective_bps == pytest.approx(sum(sol.breakdown), rel=1e-12)


def test_primal_inner_agrees_with_lp_inner():
    for seed in range(8):
        inst = weighted_instance(seed, 6)
        a, _ = benders_solve(inst, SolverOptions(mode=Mode.RELAXED))
        b, _ = benders_solve(inst, SolverOptions(mode=Mode.RELAXED, inner="primal"))
        assert b.objective_bps == pytest.approx(a.objective_bps, rel=1e-6)


def test_infinite_epsilon_stops_after_one_iteration(params):
    inst = weighted_instance(3, 8)
    sol, state = benders_solve(inst, SolverOptions(epsilon=float("inf")))
    assert state.iteration == 1 and len(state.trace) == 1


def test_iteration_cap_raises_with_incumbent():
    # find an instance that needs more than one iteration
    for seed in range(200):
        inst = weighted_instance(seed, 6)
        _, st = benders_solve(inst, SolverOptions(mode=Mode.RELAXED))
        if st.iteration > 1:
            break
    with pytest.raises(ConvergenceError) as e:
        benders_solve(inst, SolverOptions(mode=Mode.RELAXED, max_iter=1))
    assert e.value.best is not None and e.value.gap > 1e-4


def test_initial_y_validation(params):
    inst = random_instance(params, 3, 0)
    with pytest.raises(ValueError):
        benders_solve(inst, SolverOptions(initial_y=TaskDecision((1, 1, 0))))
    sol, _ = benders_solve(inst, SolverOptions(initial_y=TaskDecision((0, 1, 0))))
    assert sol.objective_bps == pytest.approx(enumerated_optimum(inst, Mode.PAPER), rel=1e-12)


def test_trace_csv(tmp_path):
    inst = weighted_instance(1, 5)
    _, state = benders_solve(inst)
    path = tmp_path / "trace.csv"
    write_trace_csv(path, state.trace)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,lower_bound_bps,upper_bound_bps,gap_bps,chosen_y_bitmask"
    assert len(lines) == state.iteration + 1
