"""Bounded-variable primal simplex for small dense LPs.

Solves ``min c.y  s.t.  G y >= h,  lo <= y <= hi`` with finite ``lo`` and
``hi``. Each row gets a surplus variable and, when the starting point
violates it, an artificial one. Phase 1 drives the artificials to zero;
phase 2 then pins them to ``[0, 0]`` and optimizes ``c``.

Pricing is Dantzig's rule until a run of degenerate pivots, then Bland's
smallest-index rule, which cannot cycle. The kernels are compiled with
numba; the LPs here have three variables and at most a dozen rows, so the
interpreter overhead would otherwise dominate.
"""

from __future__ import annotations

import numpy as np
from numba import njit

OPTIMAL = 0
INFEASIBLE = 1
CYCLING = 2
UNBOUNDED = 3

MAX_ITER = 5000
BLAND_AFTER = 25


@njit(cache=True)
def _pivot(tab, row, col):
    m, n = tab.shape
    p = tab[row, col]
    for k in range(n):
        tab[row, k] /= p
    for i in range(m):
        if i != row:
            f = tab[i, col]
            if f != 0.0:
                for k in range(n):
                    tab[i, k] -= f * tab[row, k]
            tab[i, col] = 0.0
    tab[row, col] = 1.0


@njit(cache=True)
def _run_phase(tab, cost, x, lo, hi, basis, is_basic, at_upper, iters_left):
    """Optimize ``cost`` from the current basic feasible solution.

    Returns ``(status, iterations)``.
    """
    m, n = tab.shape
    scale = 1.0
    for j in range(n):
        scale = max(scale, abs(cost[j]))
    dtol = 1e-12 * scale
    ptol = 1e-11
    degenerate = 0
    it = 0
    d = np.empty(n)
    while True:
        if it >= iters_left:
            return CYCLING, it
        for j in range(n):
            s = cost[j]
            for i in range(m):
                s -= cost[basis[i]] * tab[i, j]
            d[j] = s
        bland = degenerate >= BLAND_AFTER
        enter = -1
        best = 0.0
        for j in range(n):
            if is_basic[j] or hi[j] - lo[j] <= 0.0:
                continue
            if at_upper[j]:
                gain = d[j]
            else:
                gain = -d[j]
            if gain > dtol:
                if bland:
                    enter = j
                    break
                if gain > best:
                    best = gain
                    enter = j
        if enter < 0:
            return OPTIMAL, it
        direction = -1.0 if at_upper[enter] else 1.0
        theta = hi[enter] - lo[enter]
        leave = -1
        leave_to_upper = False
        for i in range(m):
            rate = -direction * tab[i, enter]
            b = basis[i]
            if rate < -ptol:
                lim = (x[b] - lo[b]) / (-rate)
                to_upper = False
            elif rate > ptol and np.isfinite(hi[b]):
                lim = (hi[b] - x[b]) / rate
                to_upper = True
            else:
                continue
            if lim < 0.0:
                lim = 0.0
            if lim < theta or (lim == theta and leave >= 0 and b < basis[leave]):
                theta = lim
                leave = i
                leave_to_upper = to_upper
        if not np.isfinite(theta):
            return UNBOUNDED, it
        if theta <= 1e-13:
            degenerate += 1
        else:
            degenerate = 0
        for i in range(m):
            x[basis[i]] -= direction * tab[i, enter] * theta
        x[enter] += direction * theta
        if leave < 0:
            at_upper[enter] = not at_upper[enter]
            x[enter] = hi[enter] if at_upper[enter] else lo[enter]
        else:
            out = basis[leave]
            x[out] = hi[out] if leave_to_upper else lo[out]
            at_upper[out] = leave_to_upper
            is_basic[out] = False
            is_basic[enter] = True
            at_upper[enter] = False
            basis[leave] = enter
            _pivot(tab, leave, enter)
        it += 1


@njit(cache=True)
def solve_ge(c, g, h, lo, hi):
    """Minimize ``c.y`` over ``{g y >= h, lo <= y <= hi}``.

    Returns ``(status, y, value, iterations)``.
    """
    m, q = g.shape
    n = q + 2 * m
    tab = np.zeros((m, n))
    big_lo = np.zeros(n)
    big_hi = np.full(n, np.inf)
    x = np.zeros(n)
    for j in range(q):
        big_lo[j] = lo[j]
        big_hi[j] = hi[j]
        x[j] = lo[j] if c[j] >= 0.0 else hi[j]
    basis = np.empty(m, dtype=np.int64)
    is_basic = np.zeros(n, dtype=np.bool_)
    at_upper = np.zeros(n, dtype=np.bool_)
    for j in range(q):
        at_upper[j] = c[j] < 0.0 and hi[j] > lo[j]
    rhs = np.empty(m)
    for i in range(m):
        r = h[i]
        for j in range(q):
            r -= g[i, j] * x[j]
        rhs[i] = r
        # row i:  g_i y - s_i + sigma_i t_i = h_i
        if r <= 0.0:
            # surplus is basic with value -r >= 0; scale row by -1
            for j in range(q):
                tab[i, j] = -g[i, j]
            tab[i, q + i] = 1.0
            tab[i, q + m + i] = 0.0
            basis[i] = q + i
            x[q + i] = -r
            big_hi[q + m + i] = 0.0
        else:
            for j in range(q):
                tab[i, j] = g[i, j]
            tab[i, q + i] = -1.0
            tab[i, q + m + i] = 1.0
            basis[i] = q + m + i
            x[q + m + i] = r
        is_basic[basis[i]] = True

    total = 0
    cost1 = np.zeros(n)
    need_phase1 = False
    for i in range(m):
        if basis[i] >= q + m:
            cost1[basis[i]] = 1.0
            need_phase1 = True
    if need_phase1:
        status, it = _run_phase(tab, cost1, x, big_lo, big_hi, basis, is_basic, at_upper, MAX_ITER)
        total += it
        if status != OPTIMAL:
            return status, x[:q].copy(), np.nan, total
        infeas = 0.0
        hscale = 1.0
        for i in range(m):
            infeas += x[q + m + i]
            hscale = max(hscale, abs(h[i]))
        if infeas > 1e-9 * hscale:
            return INFEASIBLE, x[:q].copy(), np.nan, total
    for i in range(m):
        big_hi[q + m + i] = 0.0
        if not is_basic[q + m + i]:
            x[q + m + i] = 0.0
    cost2 = np.zeros(n)
    for j in range(q):
        cost2[j] = c[j]
    status, it = _run_phase(tab, cost2, x, big_lo, big_hi, basis, is_basic, at_upper, MAX_ITER - total)
    total += it
    y = x[:q].copy()
    value = 0.0
    for j in range(q):
        value += c[j] * y[j]
    return status, y, value, total


@njit(cache=True)
def batch_lower_bounds(objs, neighbors, counts, g_all, h_all, lo, hi):
    """LP values for many objectives, each with its own constraint subset.

    ``neighbors[p, :counts[p]]`` index the rows of ``g_all``/``h_all`` used
    for objective ``objs[p]``. Returns ``(values, statuses, iterations)``.
    """
    npts = objs.shape[0]
    q = objs.shape[1]
    values = np.empty(npts)
    statuses = np.empty(npts, dtype=np.int64)
    iters = np.empty(npts, dtype=np.int64)
    for p in range(npts):
        k = counts[p]
        g = np.empty((k, q))
        h = np.empty(k)
        for r in range(k):
            idx = neighbors[p, r]
            h[r] = h_all[idx]
            for j in range(q):
                g[r, j] = g_all[idx, j]
        status, _, value, it = solve_ge(objs[p], g, h, lo, hi)
        values[p] = value
        statuses[p] = status
        iters[p] = it
    return values, statuses, iters
