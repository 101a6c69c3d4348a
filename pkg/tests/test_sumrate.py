import math

import numpy as np
import pytest

from noma_opt import (
    ClusterSpec,
    InfeasibleError,
    ShapeMismatch,
    SystemParams,
    cluster_rates,
    equal_power_optimality,
    maximize_sum_rate,
    mixed_fairness_solve,
    to_virtual_oma,
    waterfill,
)
from noma_opt.sumrate import map_back
from instances import instances
from oracles import projected_gradient_sum_rate

LN2 = math.log(2.0)
TWO = ClusterSpec(0, (0, 1), (1.0, 4.0), (1.0, 0.0))


def _singletons(h, subs=None):
    return [ClusterSpec(i, (i,), (x,), (0.0,)) for i, x in enumerate(h)]


def test_virtual_transform_example():
    v = to_virtual_oma([TWO], SystemParams(1.0, 1, 10.0))
    assert v.alpha[0] == pytest.approx(0.5)
    assert v.c_total[0] == pytest.approx(0.5)
    assert v.h_eff[0] == pytest.approx(2.0)
    assert v.shift[0] == pytest.approx(1.0)
    c = TWO.with_demands([1.0, 1.0])
    v = to_virtual_oma([c], SystemParams(1.0, 1, 10.0))
    assert v.q_tilde_min[0] == pytest.approx(0.5)
    assert math.log2(1 + v.q_tilde_min[0] * v.h_eff[0]) == pytest.approx(1.0)
    # the box maps back exactly
    assert v.q_tilde_min[0] + v.shift[0] == pytest.approx(1.5)


def test_virtual_transform_trivial_cases():
    v = to_virtual_oma(_singletons([3.0]), SystemParams(1.0, 1, 10.0))
    assert v.h_eff.tolist() == [3.0] and v.shift.tolist() == [0.0]
    zero = ClusterSpec(0, (0, 1), (1.0, 4.0), (0.0, 0.0))
    v = to_virtual_oma([zero], SystemParams(1.0, 1, 10.0))
    assert v.alpha.tolist() == [1.0] and v.c_total.tolist() == [0.0] and v.h_eff.tolist() == [4.0]


def test_virtual_transform_rejects_infeasible():
    c = ClusterSpec(0, (0, 1), (1.0, 4.0), (1.0, 1.0))
    with pytest.raises(InfeasibleError) as info:
        to_virtual_oma([c], SystemParams(1.0, 1, 1.0))
    assert not info.value.diagnostics.feasible


def test_waterfill_example():
    params = SystemParams(2.0, 2, 1.0, p_mask_w=1e9)
    v = to_virtual_oma(_singletons([2.0, 1.0]), params)
    wf = waterfill(v, 1.0)
    np.testing.assert_allclose(wf.q_tilde, [0.75, 0.25], rtol=1e-8)
    assert 1.0 / (LN2 * wf.nu) == pytest.approx(1.25, rel=1e-8)
    assert wf.converged and wf.residual <= 1e-8


def test_waterfill_trivial_cases():
    v = to_virtual_oma(_singletons([5.0]), SystemParams(1.0, 1, 3.0))
    assert waterfill(v, 1.0).q_tilde.tolist() == pytest.approx([3.0])
    params = SystemParams(3.0, 3, 3.0, p_mask_w=1e9)
    v = to_virtual_oma(_singletons([2.0, 2.0, 2.0]), params)
    np.testing.assert_allclose(waterfill(v, 1.0).q_tilde, [1.0, 1.0, 1.0], rtol=1e-8)


def test_waterfill_budget_above_masks_skips_bisection():
    params = SystemParams(2.0, 2, 10.0, p_mask_w=(1.0, 2.0))
    wf = waterfill(to_virtual_oma(_singletons([2.0, 1.0]), params), 1.0)
    assert wf.q_tilde.tolist() == [1.0, 2.0] and wf.iterations == 0


def test_sum_rate_single_cluster_uses_everything():
    rep = maximize_sum_rate([TWO], SystemParams(1.0, 1, 2.0))
    np.testing.assert_allclose(rep.allocation.powers_w[0], [1.5, 0.5], rtol=1e-12)
    rep = maximize_sum_rate([TWO], SystemParams(1.0, 1, 5.0, p_mask_w=3.0))
    assert rep.total_power_w == pytest.approx(3.0, rel=1e-12)


def test_sum_rate_matches_projected_gradient_on_fixture():
    clusters = [
        ClusterSpec(0, (0, 1), (1.0, 4.0), (1.0, 1.0)),
        ClusterSpec(1, (2,), (2.0,), (1.0,)),
    ]
    params = SystemParams(2.0, 2, 4.0, p_mask_w=(3.0, 3.0), p_circuit_w=1.0)
    ours = maximize_sum_rate(clusters, params)
    ref = projected_gradient_sum_rate(clusters, params)
    assert ours.sum_rate_bps == pytest.approx(ref.sum_rate_bps, rel=1e-9)
    assert ours.sum_rate_bps == pytest.approx(5.0, rel=1e-9)


def test_sum_rate_report_invariants_and_kkt():
    for clusters, params in instances(17, 150):
        rep = maximize_sum_rate(clusters, params)
        ws = params.subchannel_bandwidth_hz
        flat = [r for row in rep.rates_bps for r in row]
        assert rep.sum_rate_bps == pytest.approx(math.fsum(flat), rel=1e-9)
        denom = rep.total_power_w + params.p_circuit_w
        assert rep.ee_bps_per_joule == pytest.approx(rep.sum_rate_bps / denom, rel=1e-12)
        # box and budget feasibility
        for c, q in zip(clusters, rep.allocation.cluster_budgets_w):
            assert q <= params.p_mask_w[c.subchannel_index] * (1 + 1e-9)
        assert rep.total_power_w <= params.p_max_w * (1 + 1e-9)
        if sum(params.p_mask_w[c.subchannel_index] for c in clusters) > params.p_max_w:
            assert rep.total_power_w == pytest.approx(params.p_max_w, rel=1e-8)
        # head rates are the only ones above demand
        for c, rates in zip(clusters, rep.rates_bps):
            for r, target in zip(rates[:-1], c.r_min_bps[:-1]):
                assert abs(r - target) <= 1e-9 * target + 1e-12 * ws
            assert rates[-1] >= c.r_min_bps[-1] * (1 - 1e-9)
        # KKT: unclamped clusters share one marginal rate per Watt
        v = rep.diagnostics["virtual"]
        q = rep.diagnostics["q_tilde"]
        free = (q > v.q_tilde_min * (1 + 1e-9)) & (q < v.p_tilde_mask * (1 - 1e-9))
        marginal = ws / LN2 * v.h_eff / (1 + q * v.h_eff)
        if free.sum() >= 2:
            m = marginal[free]
            assert np.max(m) <= np.min(m) * (1 + 1e-6)


def test_sum_rate_infeasible_before_iterating():
    c = ClusterSpec(0, (0, 1), (1.0, 4.0), (1.0, 1.0))
    with pytest.raises(InfeasibleError):
        maximize_sum_rate([c], SystemParams(1.0, 1, 1.0))


def test_map_back_is_feasible():
    for clusters, params in instances(29, 40):
        v = to_virtual_oma(clusters, params)
        alloc = map_back(clusters, v, v.q_tilde_min, params)
        for c, row, qmin in zip(clusters, alloc.powers_w, [k.q_min_w for k in v.constants]):
            assert math.fsum(row) == pytest.approx(qmin, rel=1e-9, abs=1e-15)


def test_weight_scaling_leaves_allocation_unchanged():
    for clusters, params in instances(31, 30):
        n = len(clusters)
        w = np.linspace(1.0, 3.0, n)
        a = maximize_sum_rate(clusters, params, w).diagnostics["q_tilde"]
        b = maximize_sum_rate(clusters, params, 7.5 * w).diagnostics["q_tilde"]
        np.testing.assert_allclose(a, b, rtol=1e-7, atol=1e-9 * params.p_max_w)


def test_weights_shape_checked():
    with pytest.raises(ShapeMismatch):
        maximize_sum_rate([TWO], SystemParams(1.0, 1, 2.0), weights=[1.0, 1.0])


def test_equal_split_certificate():
    same = [ClusterSpec(i, (2 * i, 2 * i + 1), (1e6, 4e6), (0.1, 0.1)) for i in range(2)]
    params = SystemParams(2.0, 2, 2.0)
    assert equal_power_optimality(same, params).status == "optimal"
    rep = maximize_sum_rate(same, params)
    np.testing.assert_allclose(rep.allocation.cluster_budgets_w, [1.0, 1.0], rtol=1e-8)

    skew = [same[0], ClusterSpec(1, (2, 3), (1e6, 8e6), (0.1, 0.1))]
    verdict = equal_power_optimality(skew, params)
    assert verdict.status == "not_optimal" and verdict.reason.startswith("ratio")

    tight = SystemParams(2.0, 2, 2.0, p_mask_w=(0.5, 5.0))
    verdict = equal_power_optimality(same, tight)
    assert verdict.status == "not_optimal" and verdict.reason.startswith("box")

    lowcnr = [ClusterSpec(i, (2 * i, 2 * i + 1), (1.0, 4.0), (1.0, 1.0)) for i in range(2)]
    assert equal_power_optimality(lowcnr, SystemParams(2.0, 2, 4.0)).status == "not_applicable"


def test_mixed_fairness():
    clusters = [
        ClusterSpec(0, (0, 1), (1.0, 4.0), (0.5, 0.5)),
        ClusterSpec(1, (2, 3), (2.0, 9.0), (0.4, 0.4)),
    ]
    params = SystemParams(2.0, 2, 6.0, p_mask_w=(4.0, 4.0))
    base = maximize_sum_rate(clusters, params)
    same = mixed_fairness_solve(clusters, params, [[1, 1], [1, 1]], [1.0, 1.0])
    assert same.sum_rate_bps == pytest.approx(base.sum_rate_bps, rel=1e-12)

    doubled = mixed_fairness_solve(clusters, params, [[2.0, 1.0], [1.0, 1.0]])
    assert doubled.rates_bps[0][0] == pytest.approx(1.0, rel=1e-9)

    heavy = mixed_fairness_solve(clusters, params, None, [1e6, 1.0])
    v = heavy.diagnostics["virtual"]
    assert heavy.diagnostics["q_tilde"][0] == pytest.approx(v.p_tilde_mask[0], rel=1e-9)

    with pytest.raises(InfeasibleError):
        mixed_fairness_solve(clusters, params, [[20.0, 1.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        mixed_fairness_solve(clusters, params, [[1.0, 2.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        mixed_fairness_solve(clusters, params, None, [0.5, 1.0])


def test_single_user_clusters_behave_like_fdma():
    params = SystemParams(2.0, 2, 1.0, p_mask_w=1e9)
    rep = maximize_sum_rate(_singletons([2.0, 1.0]), params)
    rates = [cluster_rates(c, row, 1.0)[0] for c, row in zip(_singletons([2.0, 1.0]),
                                                             rep.allocation.powers_w)]
    assert sum(rates) == pytest.approx(math.log2(2.5) + math.log2(1.25), rel=1e-8)
