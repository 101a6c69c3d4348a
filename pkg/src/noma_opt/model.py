"""Domain types and the SINR / rate / energy-efficiency evaluators.

Users inside a cluster are stored in decoding order: ascending CNR, ties
broken by ascending user id. The last user is the cluster head, which
cancels every other signal before decoding its own.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import InfeasibleBox, ShapeMismatch
from .units import LN2

__all__ = [
    "SystemParams",
    "ClusterSpec",
    "PowerAllocation",
    "SolveReport",
    "Status",
    "Objectives",
    "sinr",
    "rate_bps",
    "cluster_rates",
    "system_objectives",
]


def _finite_positive(name, value):
    if not (math.isfinite(value) and value > 0.0):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class SystemParams:
    """Global constants of a multicarrier downlink.

    ``p_mask_w`` may be a scalar, in which case every subchannel gets the
    same mask. ``subchannel_bandwidth_hz`` is derived once from the total
    bandwidth and the subchannel count.
    """

    total_bandwidth_hz: float
    n_subchannels: int
    p_max_w: float
    p_mask_w: tuple = None
    p_circuit_w: float = 0.0
    u_max: int = 1
    subchannel_bandwidth_hz: float = field(init=False)

    def __post_init__(self):
        _finite_positive("total_bandwidth_hz", float(self.total_bandwidth_hz))
        _finite_positive("p_max_w", float(self.p_max_w))
        if int(self.n_subchannels) < 1:
            raise ValueError("n_subchannels must be at least 1")
        if int(self.u_max) < 1:
            raise ValueError("u_max must be at least 1")
        if not (math.isfinite(self.p_circuit_w) and self.p_circuit_w >= 0.0):
            raise ValueError("p_circuit_w must be finite and nonnegative")
        n = int(self.n_subchannels)
        mask = self.p_mask_w
        if mask is None:
            mask = (float(self.p_max_w),) * n
        elif isinstance(mask, (int, float)):
            mask = (float(mask),) * n
        else:
            mask = tuple(float(m) for m in mask)
        if len(mask) != n:
            raise ShapeMismatch(f"p_mask_w has {len(mask)} entries, expected {n}")
        for m in mask:
            _finite_positive("p_mask_w entry", m)
        object.__setattr__(self, "n_subchannels", n)
        object.__setattr__(self, "u_max", int(self.u_max))
        object.__setattr__(self, "p_max_w", float(self.p_max_w))
        object.__setattr__(self, "p_circuit_w", float(self.p_circuit_w))
        object.__setattr__(self, "total_bandwidth_hz", float(self.total_bandwidth_hz))
        object.__setattr__(self, "p_mask_w", mask)
        object.__setattr__(
            self, "subchannel_bandwidth_hz", self.total_bandwidth_hz / n
        )

    def replace(self, **changes):
        fields = {
            "total_bandwidth_hz": self.total_bandwidth_hz,
            "n_subchannels": self.n_subchannels,
            "p_max_w": self.p_max_w,
            "p_mask_w": self.p_mask_w,
            "p_circuit_w": self.p_circuit_w,
            "u_max": self.u_max,
        }
        fields.update(changes)
        return SystemParams(**fields)


@dataclass(frozen=True)
class ClusterSpec:
    """Users multiplexed on one subchannel.

    The constructor accepts users in any order and canonicalizes them into
    decoding order. All per-user sequences are permuted together.
    """

    subchannel_index: int
    user_ids: tuple
    cnr: tuple
    r_min_bps: tuple
    r_max_bps: tuple | None = None

    def __post_init__(self):
        ids = tuple(int(u) for u in self.user_ids)
        h = tuple(float(x) for x in self.cnr)
        rmin = tuple(float(x) for x in self.r_min_bps)
        rmax = None if self.r_max_bps is None else tuple(float(x) for x in self.r_max_bps)
        k = len(ids)
        if k == 0:
            raise ShapeMismatch("a cluster needs at least one user")
        if len(h) != k or len(rmin) != k or (rmax is not None and len(rmax) != k):
            raise ShapeMismatch("per-user sequences must have equal length")
        if len(set(ids)) != k:
            raise ValueError("user ids inside a cluster must be distinct")
        for x in h:
            _finite_positive("cnr", x)
        for r in rmin:
            if not (math.isfinite(r) and r >= 0.0):
                raise ValueError(f"r_min_bps must be finite and >= 0, got {r!r}")
        if rmax is not None:
            for lo, hi in zip(rmin, rmax):
                if math.isnan(hi) or hi < lo:
                    raise InfeasibleBox(f"rate box [{lo}, {hi}] is empty")
        order = sorted(range(k), key=lambda i: (h[i], ids[i]))
        object.__setattr__(self, "subchannel_index", int(self.subchannel_index))
        object.__setattr__(self, "user_ids", tuple(ids[i] for i in order))
        object.__setattr__(self, "cnr", tuple(h[i] for i in order))
        object.__setattr__(self, "r_min_bps", tuple(rmin[i] for i in order))
        object.__setattr__(
            self, "r_max_bps", None if rmax is None else tuple(rmax[i] for i in order)
        )

    @property
    def size(self) -> int:
        return len(self.user_ids)

    @property
    def head_cnr(self) -> float:
        return self.cnr[-1]

    def without_user(self, user_id):
        """Return a copy with one user removed, or None if it was the last."""
        keep = [i for i, u in enumerate(self.user_ids) if u != user_id]
        if len(keep) == self.size:
            raise KeyError(user_id)
        if not keep:
            return None
        return ClusterSpec(
            self.subchannel_index,
            [self.user_ids[i] for i in keep],
            [self.cnr[i] for i in keep],
            [self.r_min_bps[i] for i in keep],
            None if self.r_max_bps is None else [self.r_max_bps[i] for i in keep],
        )

    def with_demands(self, r_min_bps, r_max_bps=None):
        """Same users and CNRs, new rate demands given in canonical order."""
        return ClusterSpec(
            self.subchannel_index, self.user_ids, self.cnr, r_min_bps,
            r_max_bps if r_max_bps is not None else self.r_max_bps,
        )


@dataclass(frozen=True)
class PowerAllocation:
    """Per-cluster, per-user powers (canonical user order) and cluster budgets."""

    powers_w: tuple
    cluster_budgets_w: tuple

    def __post_init__(self):
        powers = tuple(tuple(float(p) for p in row) for row in self.powers_w)
        budgets = tuple(float(q) for q in self.cluster_budgets_w)
        if len(powers) != len(budgets):
            raise ShapeMismatch("one budget per cluster is required")
        for row, q in zip(powers, budgets):
            if any(p < 0.0 or not math.isfinite(p) for p in row):
                raise ValueError("powers must be finite and nonnegative")
            s = math.fsum(row)
            if abs(s - q) > 1e-9 * max(abs(q), abs(s)) + 1e-300:
                raise ValueError(f"cluster powers sum to {s!r}, budget is {q!r}")
        object.__setattr__(self, "powers_w", powers)
        object.__setattr__(self, "cluster_budgets_w", budgets)

    @classmethod
    def from_powers(cls, powers):
        rows = [tuple(float(p) for p in row) for row in powers]
        return cls(rows, [math.fsum(r) for r in rows])

    @property
    def total_power_w(self) -> float:
        return math.fsum(self.cluster_budgets_w)


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    MAX_ITERATIONS = "MaxIterations"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SolveReport:
    """Outcome of a solver run."""

    allocation: PowerAllocation | None
    rates_bps: tuple
    sum_rate_bps: float
    ee_bps_per_joule: float
    iterations: Mapping[str, int]
    status: Status
    nu: float | None = None
    history: tuple = ()
    diagnostics: object = None

    @property
    def total_power_w(self) -> float:
        return 0.0 if self.allocation is None else self.allocation.total_power_w


@dataclass(frozen=True)
class Objectives:
    rates_bps: tuple
    sum_rate_bps: float
    total_power_w: float
    ee_bps_per_joule: float


def _check_index(cluster, k):
    if not -cluster.size <= k < cluster.size:
        raise IndexError(f"user index {k} out of range for cluster of {cluster.size}")
    return k % cluster.size


def _check_powers(cluster, powers):
    if len(powers) != cluster.size:
        raise ShapeMismatch(f"{len(powers)} powers for a cluster of {cluster.size}")


def sinr(cluster: ClusterSpec, powers: Sequence[float], k: int) -> float:
    """SINR of user ``k`` (canonical position) decoding its own signal.

    Only users later in the decoding order interfere.
    """
    _check_powers(cluster, powers)
    k = _check_index(cluster, k)
    h = cluster.cnr[k]
    interference = math.fsum(powers[k + 1:])
    return powers[k] * h / (h * interference + 1.0)


def rate_bps(cluster: ClusterSpec, powers: Sequence[float], k: int, ws_hz: float) -> float:
    """Shannon rate of user ``k`` on a subchannel of width ``ws_hz``."""
    return ws_hz * math.log1p(sinr(cluster, powers, k)) / LN2


def cluster_rates(cluster: ClusterSpec, powers: Sequence[float], ws_hz: float) -> tuple:
    _check_powers(cluster, powers)
    out = []
    tail = 0.0
    for k in range(cluster.size - 1, -1, -1):
        h = cluster.cnr[k]
        out.append(ws_hz * math.log1p(powers[k] * h / (h * tail + 1.0)) / LN2)
        tail += powers[k]
    return tuple(reversed(out))


def system_objectives(clusters, allocation: PowerAllocation, params: SystemParams) -> Objectives:
    """Sum-rate and energy efficiency of an allocation."""
    if len(clusters) != len(allocation.powers_w):
        raise ShapeMismatch(
            f"{len(allocation.powers_w)} allocation rows for {len(clusters)} clusters"
        )
    ws = params.subchannel_bandwidth_hz
    rates = tuple(
        cluster_rates(c, row, ws) for c, row in zip(clusters, allocation.powers_w)
    )
    total_rate = math.fsum(r for row in rates for r in row)
    total_power = allocation.total_power_w
    denom = total_power + params.p_circuit_w
    ee = total_rate / denom if denom > 0.0 else 0.0
    return Objectives(rates, total_rate, total_power, ee)
