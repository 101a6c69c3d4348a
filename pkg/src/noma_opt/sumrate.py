"""Sum-rate maximization through the equivalent single-user-per-channel system.

Once every non-head user is pinned to its minimum rate, a cluster behaves
like one user with effective CNR ``alpha*h_head`` whose budget is shifted by
``c_total/alpha``. The multicarrier problem then reduces to water-filling
over these virtual users.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .cluster import cluster_constants, feasibility_check, intra_cluster_optimal
from .errors import InfeasibleError, ShapeMismatch
from .model import PowerAllocation, SolveReport, Status, SystemParams, system_objectives
from .units import LN2

__all__ = [
    "VirtualOmaSystem",
    "to_virtual_oma",
    "WaterfillResult",
    "waterfill",
    "maximize_sum_rate",
    "map_back",
    "EqualPowerVerdict",
    "equal_power_optimality",
    "mixed_fairness_solve",
]


@dataclass(frozen=True)
class VirtualOmaSystem:
    """One virtual user per cluster, with box ``[q_tilde_min, p_tilde_mask]``."""

    h_eff: np.ndarray
    q_tilde_min: np.ndarray
    p_tilde_mask: np.ndarray
    p_tilde_max: float
    shift: np.ndarray
    weights: np.ndarray
    alpha: np.ndarray
    c_total: np.ndarray
    constants: tuple

    @property
    def size(self) -> int:
        return len(self.h_eff)

    def to_cluster_budgets(self, q_tilde):
        return np.asarray(q_tilde, dtype=np.float64) + self.shift

    def head_rates(self, q_tilde, ws_hz):
        return ws_hz * np.log1p(np.asarray(q_tilde) * self.h_eff) / LN2


def to_virtual_oma(clusters, params: SystemParams, weights=None) -> VirtualOmaSystem:
    """Build the virtual system; raises :class:`InfeasibleError` if demands cannot be met."""
    status = feasibility_check(clusters, params)
    if not status.feasible:
        raise InfeasibleError(status.describe(), status)
    ws = params.subchannel_bandwidth_hz
    n = len(clusters)
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (n,):
            raise ShapeMismatch(f"{w.size} weights for {n} clusters")
        if np.any(~np.isfinite(w)) or np.any(w <= 0.0):
            raise ValueError("head weights must be positive and finite")
    consts = tuple(cluster_constants(c, ws) for c in clusters)
    alpha = np.array([k.alpha for k in consts])
    c_total = np.array([k.c_total for k in consts])
    heads = np.array([c.head_cnr for c in clusters])
    head_beta = np.array([k.beta_min[-1] for k in consts])
    masks = np.array([params.p_mask_w[c.subchannel_index] for c in clusters])
    shift = c_total / alpha
    h_eff = alpha * heads
    # computed directly rather than as q_min - shift to avoid cancellation
    q_tilde_min = head_beta / h_eff
    p_tilde_mask = np.maximum(masks - shift, q_tilde_min)
    p_tilde_max = params.p_max_w - math.fsum(shift.tolist())
    return VirtualOmaSystem(
        h_eff=h_eff,
        q_tilde_min=q_tilde_min,
        p_tilde_mask=p_tilde_mask,
        p_tilde_max=p_tilde_max,
        shift=shift,
        weights=w,
        alpha=alpha,
        c_total=c_total,
        constants=consts,
    )


@dataclass(frozen=True)
class WaterfillResult:
    q_tilde: np.ndarray
    nu: float
    iterations: int
    converged: bool
    residual: float


def waterfill(virtual: VirtualOmaSystem, ws_hz: float, budget=None, rtol=1e-8,
              max_iter=200) -> WaterfillResult:
    """Clamped water-filling over the virtual users.

    Returns ``q_tilde`` with entries ``clamp(w_n*W_s/(ln2*nu) - 1/H_n)``
    summing to the budget (``virtual.p_tilde_max`` by default).
    """
    budget = virtual.p_tilde_max if budget is None else float(budget)
    lo = virtual.q_tilde_min
    hi = virtual.p_tilde_mask
    n = virtual.size
    if n == 0:
        return WaterfillResult(np.zeros(0), 0.0, 0, True, 0.0)
    sum_hi = math.fsum(hi.tolist())
    sum_lo = math.fsum(lo.tolist())
    if budget >= sum_hi:
        return WaterfillResult(hi.copy(), 0.0, 0, True, 0.0)
    if budget <= sum_lo + 1e-12 * max(abs(sum_lo), abs(budget), 1e-300):
        return WaterfillResult(lo.copy(), math.inf, 0, True, abs(budget - sum_lo))
    scale = ws_hz / LN2
    q, nu, iters, ok = kernels.waterfill_level(
        1.0 / virtual.h_eff, lo, hi, virtual.weights, budget, scale, rtol, max_iter
    )
    residual = abs(math.fsum(q.tolist()) - budget) / abs(budget)
    return WaterfillResult(q, float(nu), int(iters), bool(ok), residual)


def map_back(clusters, virtual: VirtualOmaSystem, q_tilde, params: SystemParams) -> PowerAllocation:
    """Split the virtual budgets back into per-user powers."""
    ws = params.subchannel_bandwidth_hz
    rows = []
    q = virtual.to_cluster_budgets(q_tilde)
    for c, const, qn in zip(clusters, virtual.constants, q):
        mask = params.p_mask_w[c.subchannel_index]
        qn = min(max(float(qn), const.q_min_w), mask)
        rows.append(intra_cluster_optimal(c, qn, ws, mask, constants=const))
    return PowerAllocation.from_powers(rows)


def _report(clusters, allocation, params, iterations, status, nu=None, diagnostics=None):
    obj = system_objectives(clusters, allocation, params)
    return SolveReport(
        allocation=allocation,
        rates_bps=obj.rates_bps,
        sum_rate_bps=obj.sum_rate_bps,
        ee_bps_per_joule=obj.ee_bps_per_joule,
        iterations=dict(iterations),
        status=status,
        nu=nu,
        diagnostics=diagnostics,
    )


def maximize_sum_rate(clusters, params: SystemParams, weights=None) -> SolveReport:
    """Globally optimal (optionally head-weighted) sum-rate allocation.

    Raises :class:`InfeasibleError` before any iteration when the minimum
    demands do not fit the power limits.
    """
    virtual = to_virtual_oma(clusters, params, weights)
    wf = waterfill(virtual, params.subchannel_bandwidth_hz)
    allocation = map_back(clusters, virtual, wf.q_tilde, params)
    status = Status.OPTIMAL if wf.converged else Status.MAX_ITERATIONS
    return _report(
        clusters, allocation, params, {"bisection": wf.iterations}, status, nu=wf.nu,
        diagnostics={"virtual": virtual, "q_tilde": wf.q_tilde, "residual": wf.residual},
    )


@dataclass(frozen=True)
class EqualPowerVerdict:
    """``status`` is one of ``"optimal"``, ``"not_optimal"``, ``"not_applicable"``."""

    status: str
    reason: str = ""
    offset_ratio: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def equal_power_optimality(clusters, params: SystemParams, c_threshold=1e-3,
                           rtol=1e-6) -> EqualPowerVerdict:
    """Decide whether ``q_n = P_max/N`` is optimal in the high-CNR regime.

    Equal budgets are optimal exactly when the share lies in every box and
    all effective head CNRs ``alpha_n h_head`` coincide. Outside the regime
    where the offsets ``c_total`` are negligible the test does not apply.
    """
    ws = params.subchannel_bandwidth_hz
    n = len(clusters)
    if n == 0:
        return EqualPowerVerdict("not_applicable", "no clusters")
    share = params.p_max_w / n
    consts = [cluster_constants(c, ws) for c in clusters]
    ratio = max(k.c_total / (k.alpha * share) for k in consts)
    if ratio >= c_threshold:
        return EqualPowerVerdict(
            "not_applicable", f"offset ratio {ratio:.3g} is not below {c_threshold:g}", ratio
        )
    for pos, (c, k) in enumerate(zip(clusters, consts)):
        mask = params.p_mask_w[c.subchannel_index]
        if not (k.q_min_w <= share <= mask):
            return EqualPowerVerdict(
                "not_optimal",
                f"box: share {share:.6g} W outside [{k.q_min_w:.6g}, {mask:.6g}] for cluster {pos}",
                ratio,
            )
    h_eff = [k.alpha * c.head_cnr for c, k in zip(clusters, consts)]
    for i in range(n):
        for j in range(i + 1, n):
            if abs(h_eff[i] - h_eff[j]) > rtol * max(h_eff[i], h_eff[j]):
                return EqualPowerVerdict(
                    "not_optimal",
                    f"ratio: head CNR ratio of clusters {i},{j} differs from the inverse alpha ratio",
                    ratio,
                )
    return EqualPowerVerdict("optimal", "", ratio)


def mixed_fairness_solve(clusters, params: SystemParams, lambda_scale=None,
                         head_weights=None) -> SolveReport:
    """Weighted sum-rate with scaled minimum demands.

    ``lambda_scale[n][k]`` multiplies user ``k``'s minimum rate on cluster
    ``n`` (canonical order, at least 1, exactly 1 on heads); ``head_weights``
    weights each head rate in the objective. Raises
    :class:`InfeasibleError` when the scaled demands no longer fit.
    """
    scaled = []
    for pos, c in enumerate(clusters):
        factors = [1.0] * c.size if lambda_scale is None else [float(x) for x in lambda_scale[pos]]
        if len(factors) != c.size:
            raise ShapeMismatch(f"cluster {pos}: {len(factors)} scale factors for {c.size} users")
        if any(f < 1.0 for f in factors):
            raise ValueError("demand scale factors must be at least 1")
        if factors[-1] != 1.0:
            raise ValueError("the cluster head's demand scale must be 1")
        scaled.append(c.with_demands([f * r for f, r in zip(factors, c.r_min_bps)]))
    if head_weights is not None and any(w < 1.0 for w in head_weights):
        raise ValueError("head weights must be at least 1")
    return maximize_sum_rate(scaled, params, head_weights)
