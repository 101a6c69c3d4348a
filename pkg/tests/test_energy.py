import math

import numpy as np
import pytest

from noma_opt import (
    BarrierProblem,
    ClusterSpec,
    SystemParams,
    barrier_inner,
    dinkelbach_solve,
    ee_objective_split,
    full_power_condition,
    maximize_sum_rate,
    subgradient_inner,
    to_virtual_oma,
    waterfill,
)
from noma_opt.model import PowerAllocation
from instances import instances
from oracles import OracleConfig, ee_exhaustive, finite_difference_check

LN2 = math.log(2.0)
E_MINUS_1 = math.e - 1.0


def _scalar(p_max=10.0, p_circuit=1.0):
    c = ClusterSpec(0, (0,), (1.0,), (0.0,))
    return [c], SystemParams(1.0, 1, p_max, p_circuit_w=p_circuit)


@pytest.mark.parametrize("inner", ["subgradient", "barrier"])
def test_scalar_instance_recovers_e_minus_one(inner):
    clusters, params = _scalar()
    rep = dinkelbach_solve(clusters, params, inner=inner)
    assert rep.total_power_w == pytest.approx(E_MINUS_1, abs=1e-6)
    assert rep.ee_bps_per_joule == pytest.approx(1.0 / (math.e * LN2), rel=1e-9)
    assert rep.iterations["outer"] <= 10


def test_scalar_instance_under_tight_budget_uses_all_of_it():
    clusters, params = _scalar(p_max=1.0)
    rep = dinkelbach_solve(clusters, params)
    assert rep.total_power_w == pytest.approx(1.0, rel=1e-12)


def test_pinned_box_returns_minimum_power():
    c = ClusterSpec(0, (0, 1), (1.0, 4.0), (1.0, 1.0))
    params = SystemParams(1.0, 1, 1.5, p_circuit_w=1.0)
    rep = dinkelbach_solve([c], params)
    assert rep.total_power_w == pytest.approx(1.5, rel=1e-12)
    assert rep.ee_bps_per_joule == pytest.approx(2.0 / 2.5, rel=1e-9)


def test_full_power_condition_examples():
    clusters, params = _scalar()
    v = to_virtual_oma(clusters, params)
    assert full_power_condition(v, 1.0, 1e-9)
    assert not full_power_condition(v, 1.0, 1e9)
    assert full_power_condition(v, 1.0, 1.0 / (20.0 * LN2))
    assert not full_power_condition(v, 1.0, 1.0 / (10.0 * LN2))


def test_ee_split_examples():
    clusters, params = _scalar()
    assert ee_objective_split(clusters, PowerAllocation.from_powers([[0.0]]), params) == (0.0, 1.0)
    f1, f2 = ee_objective_split(clusters, PowerAllocation.from_powers([[1.0]]), params)
    assert (f1, f2) == (pytest.approx(1.0), pytest.approx(2.0))
    for clusters, params in instances(8, 20):
        rep = maximize_sum_rate(clusters, params)
        f1, f2 = ee_objective_split(clusters, rep.allocation, params)
        assert f1 / f2 == pytest.approx(rep.ee_bps_per_joule, rel=1e-12)


def test_subgradient_inner_cases():
    clusters, params = _scalar()
    v = to_virtual_oma(clusters, params)
    # budget slack: closed form W_s/(ln2*lam) - 1/H
    lam = 1.0 / (3.0 * LN2)
    res = subgradient_inner(v, lam, 1.0)
    assert res.nu == 0.0
    assert res.q_tilde[0] == pytest.approx(2.0, rel=1e-12)
    # lam = 0 reduces to water-filling
    for clusters, params in instances(13, 20):
        v = to_virtual_oma(clusters, params)
        ws = params.subchannel_bandwidth_hz
        a = subgradient_inner(v, 0.0, ws).q_tilde
        b = waterfill(v, ws).q_tilde
        np.testing.assert_allclose(a, b, rtol=1e-6, atol=1e-9 * params.p_max_w)


def test_barrier_inner_matches_waterfill_at_zero_price():
    for clusters, params in instances(14, 20):
        v = to_virtual_oma(clusters, params)
        ws = params.subchannel_bandwidth_hz
        a = barrier_inner(v, 0.0, ws).q_tilde
        b = waterfill(v, ws).q_tilde
        ra = np.sum(np.log1p(a * v.h_eff))
        rb = np.sum(np.log1p(b * v.h_eff))
        assert ra == pytest.approx(rb, rel=1e-6)


def test_dinkelbach_certificate_and_history():
    for clusters, params in instances(19, 40):
        rep = dinkelbach_solve(clusters, params)
        lams = [lam for lam, _ in rep.history]
        fs = [f for _, f in rep.history]
        assert all(b >= a * (1 - 1e-12) for a, b in zip(lams, lams[1:]))
        assert all(f > 0 for f in fs[:-1])
        f1, f2 = ee_objective_split(clusters, rep.allocation, params)
        assert abs(f1 - rep.ee_bps_per_joule * f2) <= 1e-6 * f1 + 1e-300


def test_ee_dominates_full_power_sum_rate_solution():
    for clusters, params in instances(23, 60):
        ee = dinkelbach_solve(clusters, params).ee_bps_per_joule
        full = maximize_sum_rate(clusters, params).ee_bps_per_joule
        assert ee >= full * (1 - 1e-9)


def test_inner_solvers_agree():
    for clusters, params in instances(37, 40):
        a = dinkelbach_solve(clusters, params, inner="subgradient").ee_bps_per_joule
        b = dinkelbach_solve(clusters, params, inner="barrier").ee_bps_per_joule
        assert a == pytest.approx(b, rel=1e-5)


def test_unknown_inner_solver():
    clusters, params = _scalar()
    with pytest.raises(ValueError):
        dinkelbach_solve(clusters, params, inner="simplex")


def test_exhaustive_oracle_examples():
    clusters, params = _scalar()
    rep = ee_exhaustive(clusters, params)
    step = params.p_max_w / 2000
    assert abs(rep.total_power_w - E_MINUS_1) <= step

    c = ClusterSpec(0, (0, 1), (1.0, 4.0), (1.0, 1.0))
    pinned = ee_exhaustive([c], SystemParams(1.0, 1, 1.5))
    assert len(pinned.diagnostics["budgets"]) == 1

    # no circuit power and costly demands: EE falls as soon as the budget grows
    hungry = ClusterSpec(0, (0, 1), (0.1, 0.2), (3.0, 3.0))
    rep = ee_exhaustive([hungry], SystemParams(1.0, 1, 2000.0, p_circuit_w=0.0),
                        OracleConfig(grid_points=201))
    assert rep.diagnostics["best"] <= 2


def test_finite_difference_oracle_on_quadratic():
    a = np.array([[3.0, 1.0], [1.0, 2.0]])

    def f(x):
        return 0.5 * x @ a @ x

    err = finite_difference_check(f, lambda x: a @ x, [0.3, -0.7], 1e-4)
    assert err <= 1e-10
    err = finite_difference_check(lambda x: a @ x, lambda x, v: a @ v, [0.3, -0.7], 1e-4,
                                  directions=np.eye(2))
    assert err <= 1e-10


def test_barrier_problem_f0_gradient():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n = int(rng.integers(1, 5))
        h = 10 ** rng.uniform(-1, 3, n)
        lo = rng.uniform(0, 1, n)
        hi = lo + rng.uniform(0.5, 3, n)
        prob = BarrierProblem(h, lo, hi, float(hi.sum()) - 0.1, rng.uniform(0, 2), 1.0)
        q = lo + rng.uniform(0.1, 0.9, n) * (hi - lo)
        err = finite_difference_check(prob.f0, prob.f0_gradient, q, 1e-6 * q)
        assert err <= 1e-7


def test_barrier_newton_step_solves_the_newton_system():
    rng = np.random.default_rng(1)
    for _ in range(30):
        n = int(rng.integers(1, 5))
        h = 10 ** rng.uniform(-1, 3, n)
        lo = rng.uniform(0, 1, n)
        hi = lo + rng.uniform(0.5, 3, n)
        prob = BarrierProblem(h, lo, hi, float(lo.sum() + 0.6 * (hi - lo).sum()), 0.3, 1.0)
        q = lo + 0.5 * (prob.budget - lo.sum()) / n * np.ones(n)
        dx, g = prob.newton_step(q, 5.0)
        np.testing.assert_allclose(prob.hessian(q, 5.0) @ dx, -g, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(prob.hess_vec(q, 5.0, dx), prob.hessian(q, 5.0) @ dx,
                                   rtol=1e-12)
        assert not prob.feasible(hi + 1.0)
        assert prob.value(hi + 1.0, 5.0) == math.inf
