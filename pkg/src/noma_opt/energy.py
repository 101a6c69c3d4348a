"""Energy-efficiency maximization by Dinkelbach's method.

The ratio ``f1/f2`` (sum-rate over consumed power) is maximized by solving a
sequence of parametric problems ``max f1 - lam*f2`` on the virtual system.
Each parametric problem is concave and separable apart from the budget, so
it is solved by water-filling when the full budget is known to be optimal,
and otherwise by a dual subgradient method or a log-barrier Newton method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import LineSearchStall, MaxIterationsError
from .model import SolveReport, Status, SystemParams, system_objectives
from .sumrate import VirtualOmaSystem, map_back, to_virtual_oma, waterfill
from .units import LN2

__all__ = [
    "DinkelbachState",
    "InnerResult",
    "full_power_condition",
    "subgradient_inner",
    "BarrierProblem",
    "barrier_inner",
    "dinkelbach_solve",
    "ee_objective_split",
    "virtual_ee_terms",
]

INNER_SOLVERS = ("subgradient", "barrier")


@dataclass
class DinkelbachState:
    lam: float
    f_value: float = math.inf
    iteration: int = 0
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class InnerResult:
    q_tilde: np.ndarray
    iterations: int
    method: str
    nu: float | None = None


def full_power_condition(virtual: VirtualOmaSystem, ws_hz: float, lam: float) -> bool:
    """Sufficient test that the whole budget is EE-optimal at parameter ``lam``.

    Holds when every virtual user's unconstrained stationary point
    ``W_s/(ln2*lam) - 1/H_n`` lies above its mask.
    """
    if lam <= 0.0:
        return True
    level = ws_hz / (LN2 * lam)
    return bool(np.all(level - 1.0 / virtual.h_eff > virtual.p_tilde_mask))


def virtual_ee_terms(virtual: VirtualOmaSystem, q_tilde, ws_hz, fixed_rate, p_circuit):
    """Numerator and denominator of EE written in virtual coordinates."""
    q_tilde = np.asarray(q_tilde, dtype=np.float64)
    head = ws_hz * np.log1p(q_tilde * virtual.h_eff) / LN2
    f1 = math.fsum(head.tolist()) + fixed_rate
    f2 = math.fsum((q_tilde + virtual.shift).tolist()) + p_circuit
    return f1, f2


def _degenerate(virtual, budget):
    lo_sum = math.fsum(virtual.q_tilde_min.tolist())
    return budget <= lo_sum + 1e-12 * max(abs(lo_sum), abs(budget), 1e-300)


def subgradient_inner(virtual: VirtualOmaSystem, lam: float, ws_hz: float, tol=1e-9,
                      max_iter=10000) -> InnerResult:
    """Inner parametric problem by projected subgradient on the budget multiplier."""
    budget = virtual.p_tilde_max
    if _degenerate(virtual, budget):
        return InnerResult(virtual.q_tilde_min.copy(), 0, "subgradient", math.inf)
    q, nu, iters, ok = kernels.subgradient_dual(
        1.0 / virtual.h_eff, virtual.q_tilde_min, virtual.p_tilde_mask,
        float(lam), budget, ws_hz / LN2, tol, max_iter,
    )
    if not ok:
        raise MaxIterationsError(
            f"subgradient did not converge in {max_iter} iterations", iterations=iters, last=q
        )
    return InnerResult(q, int(iters), "subgradient", float(nu))


class BarrierProblem:
    """Log-barrier objective of the inner problem, scaled by ``1/W_s``.

    ``U(q) = t*f0(q) - log(B - sum q) - sum log(q - lo) - sum log(hi - q)``
    with ``f0(q) = -sum log2(1 + q H) + (lam/W_s) sum q``. Upper-bound terms
    are dropped for infinite bounds and the budget term is dropped when it
    can never bind.
    """

    def __init__(self, h_eff, lo, hi, budget, lam, ws_hz, use_budget=True):
        self.h = np.asarray(h_eff, dtype=np.float64)
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        self.budget = float(budget)
        self.price = float(lam) / ws_hz
        self.use_budget = bool(use_budget)
        self.finite_hi = np.isfinite(self.hi)
        self.n_constraints = len(self.h) + int(self.finite_hi.sum()) + int(self.use_budget)

    def feasible(self, q):
        if np.any(q <= self.lo) or np.any(q[self.finite_hi] >= self.hi[self.finite_hi]):
            return False
        return not self.use_budget or self.budget - q.sum() > 0.0

    def f0(self, q):
        return -np.sum(np.log1p(q * self.h)) / LN2 + self.price * np.sum(q)

    def f0_gradient(self, q):
        return -self.h / (LN2 * (1.0 + q * self.h)) + self.price

    def f0_hessian_diag(self, q):
        d = 1.0 + q * self.h
        return self.h * self.h / (LN2 * d * d)

    def value(self, q, t):
        if not self.feasible(q):
            return math.inf
        u = t * self.f0(q) - np.sum(np.log(q - self.lo))
        fh = self.finite_hi
        u -= np.sum(np.log(self.hi[fh] - q[fh]))
        if self.use_budget:
            u -= math.log(self.budget - q.sum())
        return float(u)

    def _slack_terms(self, q):
        up = np.zeros_like(q)
        fh = self.finite_hi
        up[fh] = 1.0 / (self.hi[fh] - q[fh])
        down = 1.0 / (q - self.lo)
        inv_s = 1.0 / (self.budget - q.sum()) if self.use_budget else 0.0
        return down, up, inv_s

    def gradient(self, q, t):
        down, up, inv_s = self._slack_terms(q)
        return t * self.f0_gradient(q) - down + up + inv_s

    def _diag(self, q, t):
        down, up, inv_s = self._slack_terms(q)
        return t * self.f0_hessian_diag(q) + down * down + up * up, inv_s

    def hessian(self, q, t):
        diag, inv_s = self._diag(q, t)
        return np.diag(diag) + inv_s * inv_s * np.ones((len(q), len(q)))

    def hess_vec(self, q, t, v):
        diag, inv_s = self._diag(q, t)
        v = np.asarray(v, dtype=np.float64)
        return diag * v + inv_s * inv_s * v.sum()

    def newton_step(self, q, t):
        """Solve ``(D + u u^T) dx = -g`` with Sherman-Morrison, ``u = 1/s``."""
        g = self.gradient(q, t)
        diag, inv_s = self._diag(q, t)
        dg = g / diag
        if inv_s == 0.0:
            return -dg, g
        d1 = 1.0 / diag
        u2 = inv_s * inv_s
        corr = u2 * dg.sum() / (1.0 + u2 * d1.sum())
        return -(dg - d1 * corr), g


def barrier_inner(virtual: VirtualOmaSystem, lam: float, ws_hz: float, eps=1e-8, mu=20.0,
                  alpha=0.1, beta=0.5, newton_tol=1e-10, max_newton=200,
                  max_outer=100) -> InnerResult:
    """Inner parametric problem by a log-barrier method with Newton centering."""
    lo_all = virtual.q_tilde_min
    hi_all = virtual.p_tilde_mask
    budget = virtual.p_tilde_max
    if _degenerate(virtual, budget):
        return InnerResult(lo_all.copy(), 0, "barrier")
    width = hi_all - lo_all
    scale = max(budget, 1e-300)
    pinned = width <= 1e-12 * scale
    q_full = lo_all.copy()
    free = ~pinned
    if not np.any(free):
        return InnerResult(q_full, 0, "barrier")
    lo = lo_all[free]
    hi = hi_all[free]
    b = budget - math.fsum(lo_all[pinned].tolist())
    use_budget = not (math.fsum(hi.tolist()) <= b)
    prob = BarrierProblem(virtual.h_eff[free], lo, hi, b, lam, ws_hz, use_budget)

    n = len(lo)
    share = (b - math.fsum(lo.tolist())) / n
    q = lo + 0.9 * np.minimum(hi - lo, share)
    span = np.minimum(hi - lo, b - math.fsum(lo.tolist()))
    gap0 = float(np.sum(np.abs(prob.f0_gradient(q)) * span))
    m = prob.n_constraints
    t = m / gap0 if gap0 > 0.0 else 1.0

    newton_total = 0
    for _ in range(max_outer):
        for _ in range(max_newton):
            dx, g = prob.newton_step(q, t)
            dec = -float(g @ dx)
            u0 = prob.value(q, t)
            # below ~1e-14*|U| the predicted decrease is lost in rounding
            if dec <= 2.0 * max(newton_tol, 1e-14 * abs(u0)):
                break
            s = 1.0
            while not prob.feasible(q + s * dx):
                s *= beta
            while prob.value(q + s * dx, t) > u0 + alpha * s * float(g @ dx):
                s *= beta
                if s < 1e-14:
                    break
            newton_total += 1
            if s < 1e-14:
                # the decrease left is below the resolution of U
                if dec <= 1e-6 * max(1.0, abs(u0)):
                    break
                raise LineSearchStall(f"backtracking stalled with decrement {dec:.3g}")
            q_next = q + s * dx
            if np.array_equal(q_next, q):
                break
            q = q_next
        else:
            raise MaxIterationsError("Newton centering did not converge", iterations=newton_total)
        if m / t <= eps:
            q_full[free] = q
            return InnerResult(q_full, newton_total, "barrier")
        t *= mu
    raise MaxIterationsError("barrier did not reach the duality-gap target", iterations=newton_total)


def _inner(name):
    if name == "subgradient":
        return subgradient_inner
    if name == "barrier":
        return barrier_inner
    raise ValueError(f"unknown inner solver {name!r}; choose from {INNER_SOLVERS}")


def dinkelbach_solve(clusters, params: SystemParams, inner="subgradient", rtol=1e-7,
                     max_outer=50) -> SolveReport:
    """Maximize energy efficiency; raises :class:`InfeasibleError` on infeasible demands.

    Starts from the EE of the minimum-power allocation and stops once
    ``|f1 - lam*f2| <= rtol*f1``.
    """
    solve_inner = _inner(inner)
    virtual = to_virtual_oma(clusters, params)
    ws = params.subchannel_bandwidth_hz
    fixed_rate = math.fsum(r for c in clusters for r in c.r_min_bps[:-1])
    pc = params.p_circuit_w

    f1, f2 = virtual_ee_terms(virtual, virtual.q_tilde_min, ws, fixed_rate, pc)
    state = DinkelbachState(lam=f1 / f2 if f2 > 0.0 else 0.0)
    counts = {"outer": 0, "waterfill": 0, "bisection": 0, inner: 0}
    q_tilde = virtual.q_tilde_min
    converged = False
    while state.iteration < max_outer:
        state.iteration += 1
        lam = state.lam
        if full_power_condition(virtual, ws, lam):
            wf = waterfill(virtual, ws)
            q_tilde = wf.q_tilde
            counts["waterfill"] += 1
            counts["bisection"] += wf.iterations
        else:
            res = solve_inner(virtual, lam, ws)
            q_tilde = res.q_tilde
            counts[inner] += res.iterations
        f1, f2 = virtual_ee_terms(virtual, q_tilde, ws, fixed_rate, pc)
        state.f_value = f1 - lam * f2
        state.history.append((lam, state.f_value))
        if abs(state.f_value) <= rtol * abs(f1) or f1 == 0.0:
            converged = True
            break
        state.lam = f1 / f2
    counts["outer"] = state.iteration
    if not converged:
        raise MaxIterationsError(
            f"Dinkelbach did not converge in {max_outer} iterations", iterations=state.iteration
        )
    allocation = map_back(clusters, virtual, q_tilde, params)
    obj = system_objectives(clusters, allocation, params)
    return SolveReport(
        allocation=allocation,
        rates_bps=obj.rates_bps,
        sum_rate_bps=obj.sum_rate_bps,
        ee_bps_per_joule=obj.ee_bps_per_joule,
        iterations=counts,
        status=Status.OPTIMAL,
        history=tuple(state.history),
        diagnostics={"virtual": virtual, "q_tilde": q_tilde, "lambda": f1 / f2},
    )


def ee_objective_split(clusters, allocation, params: SystemParams):
    """Return ``(f1, f2)``: total rate in bit/s and consumed power in Watts."""
    obj = system_objectives(clusters, allocation, params)
    return obj.sum_rate_bps, obj.total_power_w + params.p_circuit_w
