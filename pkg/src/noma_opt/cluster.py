"""Closed-form machinery for a single NOMA cluster.

Covers the minimum-power allocation, feasibility of a whole system, the
optimal split of a cluster budget, the max-rate capped variant, admission
control and the zero-SIC-outage test for imperfect CSI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import BudgetOutOfRange, InfeasibleBox
from .model import ClusterSpec, SystemParams
from .units import LN2

__all__ = [
    "ClusterConstants",
    "cluster_constants",
    "min_power_allocation",
    "FeasibilityResult",
    "feasibility_check",
    "intra_cluster_optimal",
    "approx_intra_powers",
    "MaxRateResult",
    "max_rate_allocation",
    "admission_control",
    "sic_outage_zero",
    "BOX_RTOL",
]

#: Relative slack allowed on cluster-budget boxes before rejecting a budget.
BOX_RTOL = 1e-9


def _betas(rates, ws_hz):
    x = np.asarray(rates, dtype=np.float64) * (LN2 / ws_hz)
    return np.expm1(x), -np.expm1(-x)


@dataclass(frozen=True)
class ClusterConstants:
    """Per-cluster constants derived from CNRs and rate demands.

    ``beta_min`` is the SINR target ``2^(R/W_s) - 1``; ``beta_frac`` is the
    same target divided by ``2^(R/W_s)``. The head receives
    ``alpha*q - c_total`` of a budget ``q``.
    """

    beta_min: np.ndarray
    beta_frac: np.ndarray
    c_per_user: np.ndarray
    alpha: float
    c_total: float
    q_min_w: float
    min_powers_w: np.ndarray
    q_max_w: float | None = None

    @property
    def shift(self) -> float:
        """Budget offset ``c_total/alpha`` of the equivalent single-user channel."""
        return self.c_total / self.alpha

    @property
    def weights(self) -> np.ndarray:
        """Linear coefficients of the budget in each user's power."""
        bf = self.beta_frac
        out = np.empty(len(bf))
        keep = 1.0
        for i in range(len(bf) - 1):
            out[i] = bf[i] * keep
            keep *= 1.0 - bf[i]
        out[-1] = keep
        return out


def cluster_constants(cluster: ClusterSpec, ws_hz: float) -> ClusterConstants:
    h = np.asarray(cluster.cnr, dtype=np.float64)
    beta_min, beta_frac = _betas(cluster.r_min_bps, ws_hz)
    alpha, c_total, c_per = kernels.chain_coefficients(h, beta_frac)
    powers, q_min = kernels.min_power_chain(h, beta_min)
    q_max = None
    if cluster.r_max_bps is not None:
        q_max = _q_max(h, cluster.r_max_bps, ws_hz)
    return ClusterConstants(
        beta_min=beta_min,
        beta_frac=beta_frac,
        c_per_user=c_per,
        alpha=float(alpha),
        c_total=float(c_total),
        q_min_w=float(q_min),
        min_powers_w=powers,
        q_max_w=q_max,
    )


def _q_max(h, r_max, ws_hz):
    r = np.asarray(r_max, dtype=np.float64)
    if not np.all(np.isfinite(r)):
        return math.inf
    beta, _ = _betas(r, ws_hz)
    _, total = kernels.min_power_chain(h, beta)
    return float(total)


def min_power_allocation(cluster: ClusterSpec, ws_hz: float):
    """Powers meeting every minimum rate with equality, and their total.

    Evaluated by the backward recursion ``p_k = beta_k (1/h_k + S_k)``
    where ``S_k`` sums the powers of all stronger users.
    """
    beta_min, _ = _betas(cluster.r_min_bps, ws_hz)
    powers, total = kernels.min_power_chain(np.asarray(cluster.cnr, dtype=np.float64), beta_min)
    return powers, float(total)


@dataclass(frozen=True)
class FeasibilityResult:
    """Outcome of the system-wide minimum-power test.

    ``mask_violations`` lists ``(position, subchannel, q_min, p_mask)`` for
    every cluster whose own mask is too small; ``shortfall_w`` is how far
    the summed minimum powers exceed the total budget (0 when they fit).
    """

    feasible: bool
    q_min_w: tuple
    total_q_min_w: float
    mask_violations: tuple
    shortfall_w: float

    def __bool__(self):
        return self.feasible

    def describe(self) -> str:
        if self.feasible:
            return "feasible"
        parts = []
        for pos, sub, q, mask in self.mask_violations:
            parts.append(
                f"cluster {pos} (subchannel {sub}) needs {q:.6g} W above mask {mask:.6g} W"
            )
        if self.shortfall_w > 0.0:
            parts.append(f"total minimum power exceeds budget by {self.shortfall_w:.6g} W")
        return "infeasible: " + "; ".join(parts)


def feasibility_check(clusters, params: SystemParams) -> FeasibilityResult:
    ws = params.subchannel_bandwidth_hz
    q_mins = []
    violations = []
    for pos, c in enumerate(clusters):
        _, q = min_power_allocation(c, ws)
        q_mins.append(q)
        mask = params.p_mask_w[c.subchannel_index]
        if q > mask:
            violations.append((pos, c.subchannel_index, q, mask))
    total = math.fsum(q_mins)
    shortfall = max(0.0, total - params.p_max_w)
    return FeasibilityResult(
        feasible=not violations and shortfall == 0.0,
        q_min_w=tuple(q_mins),
        total_q_min_w=total,
        mask_violations=tuple(violations),
        shortfall_w=shortfall,
    )


def _check_budget(q, lower, upper):
    if not math.isfinite(q):
        raise BudgetOutOfRange(f"budget {q!r} is not finite", budget=q, lower=lower, upper=upper)
    slack_lo = BOX_RTOL * max(abs(lower), abs(q))
    slack_hi = BOX_RTOL * max(abs(upper), abs(q))
    if q < lower - slack_lo or q > upper + slack_hi:
        raise BudgetOutOfRange(
            f"budget {q!r} outside [{lower!r}, {upper!r}]", budget=q, lower=lower, upper=upper
        )
    return min(max(q, lower), upper)


def intra_cluster_optimal(cluster: ClusterSpec, q_w: float, ws_hz: float, p_mask_w=None,
                          constants: ClusterConstants | None = None):
    """Sum-rate optimal split of a cluster budget.

    Every non-head user is held at its minimum rate and the head receives
    the remainder. ``q_w`` must lie in ``[Q_min, p_mask_w]`` up to a relative
    slack of ``BOX_RTOL``; values within the slack are clamped.
    """
    const = constants if constants is not None else cluster_constants(cluster, ws_hz)
    upper = math.inf if p_mask_w is None else float(p_mask_w)
    q = _check_budget(float(q_w), const.q_min_w, upper)
    return kernels.intra_chain(np.asarray(cluster.cnr, dtype=np.float64), const.beta_frac, q)


def approx_intra_powers(cluster: ClusterSpec, q_w: float, ws_hz: float):
    """High-CNR approximation of the optimal split.

    Drops the additive noise terms, leaving each user's power proportional
    to the budget.
    """
    _, bf = _betas(cluster.r_min_bps, ws_hz)
    coeff = np.empty(cluster.size)
    keep = 1.0
    for i in range(cluster.size - 1):
        coeff[i] = bf[i] * keep
        keep *= 1.0 - bf[i]
    coeff[-1] = keep
    return coeff * q_w


@dataclass(frozen=True)
class MaxRateResult:
    powers_w: np.ndarray
    total_w: float
    budget_slack: bool
    first_uncapped: int | None
    capped: tuple


def max_rate_allocation(cluster: ClusterSpec, budget_w: float, ws_hz: float) -> MaxRateResult:
    """Optimal split when users also have maximum-rate limits.

    Starts from the unconstrained split and walks down from the head,
    capping each user at the power that delivers its maximum rate and
    handing the excess to the next weaker user. The walk stops at the first
    user that stays under its cap. If every user is capped, the budget is
    not used in full and the total equals ``Q_max``.
    """
    if cluster.r_max_bps is None:
        raise InfeasibleBox("cluster has no maximum-rate demands")
    for lo, hi in zip(cluster.r_min_bps, cluster.r_max_bps):
        if hi < lo:
            raise InfeasibleBox(f"rate box [{lo}, {hi}] is empty")
    const = cluster_constants(cluster, ws_hz)
    budget = _check_budget(float(budget_w), const.q_min_w, math.inf)
    h = cluster.cnr
    p = kernels.intra_chain(np.asarray(h, dtype=np.float64), const.beta_frac, budget).tolist()
    gains = [math.expm1(r * LN2 / ws_hz) if math.isfinite(r) else math.inf
             for r in cluster.r_max_bps]

    k = cluster.size
    capped = []
    stronger = 0.0
    first_uncapped = None
    for i in range(k - 1, -1, -1):
        if i < k - 1:
            # the next user down absorbs whatever the capped users released
            p[i] = budget - (math.fsum(p[:i]) + math.fsum(p[i + 1:]))
        cap = gains[i] * (stronger * h[i] + 1.0) / h[i]
        if p[i] > cap:
            p[i] = cap
            capped.append(cluster.user_ids[i])
            stronger += cap
            continue
        first_uncapped = i
        break
    powers = np.array(p)
    total = math.fsum(p)
    return MaxRateResult(
        powers_w=powers,
        total_w=total,
        budget_slack=first_uncapped is None,
        first_uncapped=first_uncapped,
        capped=tuple(capped),
    )


def admission_control(clusters, params: SystemParams):
    """Drop (user, subchannel) pairs until the minimum demands become feasible.

    Each round removes the pair with the largest minimum power. When some
    clusters exceed their own mask, the pair is chosen among those clusters
    only, since removing users elsewhere cannot repair a mask violation.
    Ties go to the user with the smaller CNR, then to the lower subchannel
    index and user id.

    Returns ``(retained_clusters, dropped)`` where ``dropped`` is the list
    of ``(user_id, subchannel_index)`` in removal order. Clusters left
    without users are omitted from the retained list.
    """
    ws = params.subchannel_bandwidth_hz
    current = list(clusters)
    dropped = []
    while True:
        status = feasibility_check(current, params)
        if status.feasible:
            return current, dropped
        if status.mask_violations:
            pool = [pos for pos, *_ in status.mask_violations]
        else:
            pool = range(len(current))
        best = None
        for pos in pool:
            c = current[pos]
            powers, _ = min_power_allocation(c, ws)
            for i in range(c.size):
                key = (-float(powers[i]), c.cnr[i], c.subchannel_index, c.user_ids[i])
                if best is None or key < best[0]:
                    best = (key, pos, c.user_ids[i])
        _, pos, uid = best
        dropped.append((uid, current[pos].subchannel_index))
        reduced = current[pos].without_user(uid)
        if reduced is None:
            del current[pos]
        else:
            current[pos] = reduced


def sic_outage_zero(cluster: ClusterSpec, lower, upper) -> bool:
    """True when no admissible CNR error can reverse the decoding order.

    ``cluster.cnr`` holds the estimated CNRs and ``lower``/``upper`` bound
    the additive estimation error of each user (canonical order). For every
    pair with a strictly larger estimate, the worst case of the stronger
    user must stay at or above the best case of the weaker one.
    """
    lo = [float(x) for x in lower]
    hi = [float(x) for x in upper]
    if len(lo) != cluster.size or len(hi) != cluster.size:
        raise ValueError("one error bound per user is required")
    h = cluster.cnr
    for i in range(cluster.size):
        for j in range(cluster.size):
            if h[i] > h[j] and h[i] + lo[i] < h[j] + hi[j]:
                return False
    return True
