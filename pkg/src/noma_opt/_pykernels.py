"""Pure-Python implementations of the numerical hot loops.

The compiled module ``_ckernels`` exposes the same functions with the same
signatures and is preferred when available. Both work on 1-D float64
arrays and return numpy arrays.
"""

import math

import numpy as np

from .errors import BracketFailure

BACKEND = "python"

_WIDEN_STEPS = 5


def min_power_chain(h, beta):
    """Backward recursion for the minimum powers of one cluster.

    Runs from the strongest user down: ``p_k = beta_k (1/h_k + S_k)`` where
    ``S_k`` is the power of every stronger user.
    """
    h = np.asarray(h, dtype=np.float64).tolist()
    beta = np.asarray(beta, dtype=np.float64).tolist()
    k = len(h)
    out = [0.0] * k
    stronger = 0.0
    for i in range(k - 1, -1, -1):
        p = beta[i] * (1.0 / h[i] + stronger)
        out[i] = p
        stronger += p
    return np.array(out), stronger


def intra_chain(h, beta_frac, q):
    """Forward split of budget ``q`` pinning every non-head user to its demand.

    ``p_k = bf_k (r_k + 1/h_k)`` with ``r_k`` the budget left after weaker
    users; the head takes what remains.
    """
    h = np.asarray(h, dtype=np.float64).tolist()
    bf = np.asarray(beta_frac, dtype=np.float64).tolist()
    k = len(h)
    out = [0.0] * k
    used = 0.0
    for i in range(k - 1):
        p = bf[i] * ((q - used) + 1.0 / h[i])
        out[i] = p
        used += p
    head = q - used
    out[k - 1] = head if head > 0.0 else 0.0
    return np.array(out)


def chain_coefficients(h, beta_frac):
    """Affine coefficients of the forward split.

    Returns ``(alpha, c_total, c_per_user)`` such that the head receives
    ``alpha*q - c_total`` and non-head user ``k`` receives
    ``a_k q + c_per_user[k]``. The head's entry of ``c_per_user`` is zero.
    """
    h = np.asarray(h, dtype=np.float64).tolist()
    bf = np.asarray(beta_frac, dtype=np.float64).tolist()
    k = len(h)
    alpha = 1.0
    acc = 0.0
    per_user = [0.0] * k
    for i in range(k - 1):
        nxt = acc * (1.0 - bf[i]) + bf[i] / h[i]
        per_user[i] = nxt - acc
        acc = nxt
        alpha *= 1.0 - bf[i]
    return alpha, acc, np.array(per_user)


def _clamped_sum(inv_h, lo, hi, w, level_num, denom, out):
    total = 0.0
    for i in range(len(inv_h)):
        if denom > 0.0:
            x = w[i] * level_num / denom - inv_h[i]
        else:
            x = math.inf
        if x < lo[i]:
            x = lo[i]
        elif x > hi[i]:
            x = hi[i]
        out[i] = x
        total += x
    return total


def _polish(inv_h, lo, hi, w, scale, budget, nu, out):
    """Solve for the exact level on the free set found by the search."""
    free_w = 0.0
    free_inv = 0.0
    clamped = 0.0
    for i in range(len(inv_h)):
        x = w[i] * scale / nu - inv_h[i]
        if lo[i] < x < hi[i]:
            free_w += w[i]
            free_inv += inv_h[i]
        else:
            clamped += lo[i] if x <= lo[i] else hi[i]
    if free_w == 0.0:
        return nu
    level = (budget - clamped + free_inv) / free_w
    if level <= 0.0:
        return nu
    return scale / level


def waterfill_level(inv_h, lo, hi, weights, budget, scale, rtol=1e-8, max_iter=200):
    """Bisection on the water-level multiplier ``nu``.

    Allocation is ``clamp(w_n*scale/nu - inv_h_n, lo_n, hi_n)`` and ``nu``
    is chosen so the allocation sums to ``budget``. The caller guarantees
    ``sum(lo) < budget < sum(hi)``. Midpoints are geometric because the
    bracket spans many decades.

    Returns ``(q, nu, iterations, converged)``.
    """
    inv_h = np.asarray(inv_h, dtype=np.float64).tolist()
    lo = np.asarray(lo, dtype=np.float64).tolist()
    hi = np.asarray(hi, dtype=np.float64).tolist()
    w = np.asarray(weights, dtype=np.float64).tolist()
    n = len(inv_h)
    out = [0.0] * n

    max_wh = max(w[i] / inv_h[i] for i in range(n))
    nu_hi = 10.0 * scale * max_wh
    cap = 0.0
    for x in hi:
        cap += x
    if not math.isfinite(cap):
        cap = budget
    nu_lo = min(w) * scale / (cap + max(inv_h))

    for _ in range(_WIDEN_STEPS + 1):
        if _clamped_sum(inv_h, lo, hi, w, scale, nu_hi, out) <= budget:
            break
        nu_hi *= 10.0
    else:
        raise BracketFailure("allocation stays above the budget at the upper bracket")
    for _ in range(_WIDEN_STEPS + 1):
        if _clamped_sum(inv_h, lo, hi, w, scale, nu_lo, out) >= budget:
            break
        nu_lo /= 10.0
    else:
        raise BracketFailure("allocation stays below the budget at the lower bracket")

    tol = rtol * abs(budget)
    nu = math.sqrt(nu_lo * nu_hi)
    converged = False
    iters = 0
    while iters < max_iter:
        iters += 1
        nu = math.sqrt(nu_lo * nu_hi)
        total = _clamped_sum(inv_h, lo, hi, w, scale, nu, out)
        if abs(total - budget) <= tol:
            converged = True
            break
        if total > budget:
            nu_lo = nu
        else:
            nu_hi = nu
        if nu_hi <= nu_lo * (1.0 + 4e-16):
            break

    residual = abs(total - budget)
    exact = _polish(inv_h, lo, hi, w, scale, budget, nu, out)
    trial = [0.0] * n
    t_total = _clamped_sum(inv_h, lo, hi, w, scale, exact, trial)
    if abs(t_total - budget) <= residual:
        out = trial
        nu = exact
        residual = abs(t_total - budget)
    if residual <= tol:
        converged = True
    return np.array(out), nu, iters, converged


def subgradient_dual(inv_h, lo, hi, lam, budget, scale, tol=1e-9, max_iter=10000):
    """Projected subgradient on the budget multiplier of the inner EE problem.

    Primal recovery ``q_n = clamp(scale/(lam+nu) - inv_h_n, lo_n, hi_n)`` and
    update ``nu <- [nu - eps_t (budget - sum q)]^+``. The step is
    ``eps_t = 1/(sqrt(t) * kappa_t)`` where ``kappa_t`` is the local slope of
    ``sum q`` in ``nu``; a residual-sign bracket rejects overshoots.

    Returns ``(q, nu, iterations, converged)``.
    """
    inv_h = np.asarray(inv_h, dtype=np.float64).tolist()
    lo = np.asarray(lo, dtype=np.float64).tolist()
    hi = np.asarray(hi, dtype=np.float64).tolist()
    n = len(inv_h)
    ones = [1.0] * n
    q = [0.0] * n

    total = _clamped_sum(inv_h, lo, hi, ones, scale, lam, q)
    if total <= budget:
        return np.array(q), 0.0, 1, True

    inv_sum = 0.0
    for x in inv_h:
        inv_sum += x
    level = (budget + inv_sum) / n
    nu = scale / level - lam if level > 0.0 else scale
    if nu <= 0.0:
        nu = 1e-6 * (scale / level)
    nu_lo, nu_hi = 0.0, math.inf
    total = _clamped_sum(inv_h, lo, hi, ones, scale, lam + nu, q)
    res_tol = 1e-10 * abs(budget)
    new = [0.0] * n
    for t in range(1, max_iter + 1):
        r = budget - total
        if r < 0.0:
            nu_lo = max(nu_lo, nu)
        else:
            nu_hi = min(nu_hi, nu)
        d = lam + nu
        slope = 0.0
        for i in range(n):
            x = scale / d - inv_h[i]
            if lo[i] < x < hi[i]:
                slope += scale / (d * d)
        if slope == 0.0:
            slope = n * scale / (d * d)
        cand = nu - r / (math.sqrt(t) * slope)
        if not (nu_lo < cand < nu_hi):
            if math.isfinite(nu_hi):
                cand = 0.5 * (nu_lo + nu_hi)
            else:
                cand = 2.0 * nu
        if cand < 0.0:
            cand = 0.0
        new_total = _clamped_sum(inv_h, lo, hi, ones, scale, lam + cand, new)
        change = 0.0
        mag = 0.0
        for i in range(n):
            change = max(change, abs(new[i] - q[i]))
            mag = max(mag, abs(new[i]))
        q, new = new, q
        nu, total = cand, new_total
        if change <= tol * max(mag, 1e-300) and (
            nu == 0.0 or abs(budget - total) <= res_tol
        ):
            return np.array(q), nu, t, True
    return np.array(q), nu, max_iter, False
