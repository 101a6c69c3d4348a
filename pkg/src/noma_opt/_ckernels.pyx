# cython: language_level=3
"""Compiled versions of the hot loops in ``_pykernels``.

Signatures and return values match the pure-Python module exactly.
"""

import numpy as np

from libc.math cimport INFINITY, fabs, isfinite, sqrt

from .errors import BracketFailure

BACKEND = "cython"

cdef int _WIDEN_STEPS = 5


cdef inline object _vec(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def min_power_chain(h, beta):
    cdef const double[::1] hv = _vec(h)
    cdef const double[::1] bv = _vec(beta)
    cdef Py_ssize_t k = hv.shape[0], i
    out = np.zeros(k, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double stronger = 0.0, p
    for i in range(k - 1, -1, -1):
        p = bv[i] * (1.0 / hv[i] + stronger)
        ov[i] = p
        stronger += p
    return out, stronger


def intra_chain(h, beta_frac, double q):
    cdef const double[::1] hv = _vec(h)
    cdef const double[::1] bv = _vec(beta_frac)
    cdef Py_ssize_t k = hv.shape[0], i
    out = np.zeros(k, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double used = 0.0, p, head
    for i in range(k - 1):
        p = bv[i] * ((q - used) + 1.0 / hv[i])
        ov[i] = p
        used += p
    head = q - used
    ov[k - 1] = head if head > 0.0 else 0.0
    return out


def chain_coefficients(h, beta_frac):
    cdef const double[::1] hv = _vec(h)
    cdef const double[::1] bv = _vec(beta_frac)
    cdef Py_ssize_t k = hv.shape[0], i
    per_user = np.zeros(k, dtype=np.float64)
    cdef double[::1] pv = per_user
    cdef double alpha = 1.0, acc = 0.0, nxt
    for i in range(k - 1):
        nxt = acc * (1.0 - bv[i]) + bv[i] / hv[i]
        pv[i] = nxt - acc
        acc = nxt
        alpha *= 1.0 - bv[i]
    return alpha, acc, per_user


cdef double _clamped_sum(const double[::1] inv_h, const double[::1] lo,
                         const double[::1] hi, const double[::1] w,
                         double level_num, double denom, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i
    cdef double x, total = 0.0
    for i in range(inv_h.shape[0]):
        if denom > 0.0:
            x = w[i] * level_num / denom - inv_h[i]
        else:
            x = INFINITY
        if x < lo[i]:
            x = lo[i]
        elif x > hi[i]:
            x = hi[i]
        out[i] = x
        total += x
    return total


cdef double _polish(const double[::1] inv_h, const double[::1] lo,
                    const double[::1] hi, const double[::1] w, double scale,
                    double budget, double nu) noexcept nogil:
    cdef Py_ssize_t i
    cdef double x, free_w = 0.0, free_inv = 0.0, clamped = 0.0, level
    for i in range(inv_h.shape[0]):
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


def waterfill_level(inv_h, lo, hi, weights, double budget, double scale,
                    double rtol=1e-8, int max_iter=200):
    cdef const double[::1] iv = _vec(inv_h)
    cdef const double[::1] lv = _vec(lo)
    cdef const double[::1] hv = _vec(hi)
    cdef const double[::1] wv = _vec(weights)
    cdef Py_ssize_t n = iv.shape[0], i
    out_arr = np.zeros(n, dtype=np.float64)
    trial_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] trial = trial_arr

    cdef double max_wh = wv[0] / iv[0], min_w = wv[0], max_inv = iv[0], cap = 0.0
    for i in range(n):
        if wv[i] / iv[i] > max_wh:
            max_wh = wv[i] / iv[i]
        if wv[i] < min_w:
            min_w = wv[i]
        if iv[i] > max_inv:
            max_inv = iv[i]
    for i in range(n):
        cap += hv[i]
    if not isfinite(cap):
        cap = budget
    cdef double nu_hi = 10.0 * scale * max_wh
    cdef double nu_lo = min_w * scale / (cap + max_inv)
    cdef int step
    cdef bint ok = False
    for step in range(_WIDEN_STEPS + 1):
        if _clamped_sum(iv, lv, hv, wv, scale, nu_hi, out) <= budget:
            ok = True
            break
        nu_hi *= 10.0
    if not ok:
        raise BracketFailure("allocation stays above the budget at the upper bracket")
    ok = False
    for step in range(_WIDEN_STEPS + 1):
        if _clamped_sum(iv, lv, hv, wv, scale, nu_lo, out) >= budget:
            ok = True
            break
        nu_lo /= 10.0
    if not ok:
        raise BracketFailure("allocation stays below the budget at the lower bracket")

    cdef double tol = rtol * fabs(budget)
    cdef double nu = sqrt(nu_lo * nu_hi), total = 0.0
    cdef bint converged = False
    cdef int iters = 0
    with nogil:
        while iters < max_iter:
            iters += 1
            nu = sqrt(nu_lo * nu_hi)
            total = _clamped_sum(iv, lv, hv, wv, scale, nu, out)
            if fabs(total - budget) <= tol:
                converged = True
                break
            if total > budget:
                nu_lo = nu
            else:
                nu_hi = nu
            if nu_hi <= nu_lo * (1.0 + 4e-16):
                break

    cdef double residual = fabs(total - budget)
    cdef double exact = _polish(iv, lv, hv, wv, scale, budget, nu)
    cdef double t_total = _clamped_sum(iv, lv, hv, wv, scale, exact, trial)
    if fabs(t_total - budget) <= residual:
        out_arr = trial_arr
        nu = exact
        residual = fabs(t_total - budget)
    if residual <= tol:
        converged = True
    return out_arr, nu, iters, bool(converged)


def subgradient_dual(inv_h, lo, hi, double lam, double budget, double scale,
                     double tol=1e-9, int max_iter=10000):
    cdef const double[::1] iv = _vec(inv_h)
    cdef const double[::1] lv = _vec(lo)
    cdef const double[::1] hv = _vec(hi)
    cdef Py_ssize_t n = iv.shape[0], i
    ones_arr = np.ones(n, dtype=np.float64)
    cdef const double[::1] ones = ones_arr
    a_arr = np.zeros(n, dtype=np.float64)
    b_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] q = a_arr
    cdef double[::1] new = b_arr
    cdef double[::1] tmp

    cdef double total = _clamped_sum(iv, lv, hv, ones, scale, lam, q)
    if total <= budget:
        return np.asarray(q).copy(), 0.0, 1, True

    cdef double inv_sum = 0.0
    for i in range(n):
        inv_sum += iv[i]
    cdef double level = (budget + inv_sum) / n
    cdef double nu
    if level > 0.0:
        nu = scale / level - lam
    else:
        nu = scale
    if nu <= 0.0:
        nu = 1e-6 * (scale / level)
    cdef double nu_lo = 0.0, nu_hi = INFINITY
    total = _clamped_sum(iv, lv, hv, ones, scale, lam + nu, q)
    cdef double res_tol = 1e-10 * fabs(budget)
    cdef double r, d, slope, x, cand, new_total, change, mag
    cdef int t
    for t in range(1, max_iter + 1):
        r = budget - total
        if r < 0.0:
            if nu > nu_lo:
                nu_lo = nu
        else:
            if nu < nu_hi:
                nu_hi = nu
        d = lam + nu
        slope = 0.0
        for i in range(n):
            x = scale / d - iv[i]
            if lv[i] < x < hv[i]:
                slope += scale / (d * d)
        if slope == 0.0:
            slope = n * scale / (d * d)
        cand = nu - r / (sqrt(<double>t) * slope)
        if not (nu_lo < cand < nu_hi):
            if isfinite(nu_hi):
                cand = 0.5 * (nu_lo + nu_hi)
            else:
                cand = 2.0 * nu
        if cand < 0.0:
            cand = 0.0
        new_total = _clamped_sum(iv, lv, hv, ones, scale, lam + cand, new)
        change = 0.0
        mag = 0.0
        for i in range(n):
            if fabs(new[i] - q[i]) > change:
                change = fabs(new[i] - q[i])
            if fabs(new[i]) > mag:
                mag = fabs(new[i])
        tmp = q
        q = new
        new = tmp
        nu = cand
        total = new_total
        if change <= tol * (mag if mag > 1e-300 else 1e-300) and (
            nu == 0.0 or fabs(budget - total) <= res_tol
        ):
            return np.asarray(q).copy(), nu, t, True
    return np.asarray(q).copy(), nu, max_iter, False
