"""Compiled numeric kernels.

All kernels are numba-jitted, single-threaded, and operate on float64 arrays
in place where noted.  They return status codes instead of raising so the
Python wrappers in :mod:`fldmot.linalg` and :mod:`fldmot.assignment` can map
failures to the package's exception types.  Loops are arranged so the inner
dimension is row-contiguous.
"""

import math

import numpy as np
from numba import njit

_EPS = 2.220446049250313e-16


@njit(cache=True, fastmath=True)
def cholesky_lower(a):
    """In-place lower Cholesky of symmetric a.  Returns failing pivot or -1.

    On success the strict upper triangle is zeroed.  A pivot that is not
    strictly positive (or is NaN) aborts the factorization.
    """
    n = a.shape[0]
    for j in range(n):
        s = a[j, j]
        aj = a[j]
        for k in range(j):
            s -= aj[k] * aj[k]
        if not (s > 0.0):
            return j
        d = math.sqrt(s)
        a[j, j] = d
        for i in range(j + 1, n):
            ai = a[i]
            t = ai[j]
            for k in range(j):
                t -= ai[k] * aj[k]
            ai[j] = t / d
    for i in range(n):
        for j in range(i + 1, n):
            a[i, j] = 0.0
    return -1


@njit(cache=True, fastmath=True)
def solve_lower(lo, b):
    """Forward substitution: returns X with lo @ X = b (b is n x m)."""
    n = b.shape[0]
    m = b.shape[1]
    x = b.copy()
    for i in range(n):
        xi = x[i]
        li = lo[i]
        for k in range(i):
            lik = li[k]
            if lik != 0.0:
                xk = x[k]
                for j in range(m):
                    xi[j] -= lik * xk[j]
        d = li[i]
        for j in range(m):
            xi[j] /= d
    return x


@njit(cache=True, fastmath=True)
def solve_lower_transpose(lo, b):
    """Back substitution: returns X with lo.T @ X = b (b is n x m)."""
    n = b.shape[0]
    m = b.shape[1]
    x = b.copy()
    for i in range(n - 1, -1, -1):
        xi = x[i]
        for k in range(i + 1, n):
            lki = lo[k, i]
            if lki != 0.0:
                xk = x[k]
                for j in range(m):
                    xi[j] -= lki * xk[j]
        d = lo[i, i]
        for j in range(m):
            xi[j] /= d
    return x


@njit(cache=True, fastmath=True)
def tridiagonalize(a, d, e, u, p):
    """Householder reduction of symmetric a to tridiagonal form.

    Works on the lower triangle of a in place; the Householder vectors are
    left in the strict lower triangle for `accumulate_q_rows`.  On exit d
    holds the diagonal and e[1:] the subdiagonal.  u and p are length-n
    scratch vectors.

    Columns whose norm is negligible against the matrix scale are flushed to
    zero instead of eliminated: rank-deficient inputs otherwise leave
    geometrically shrinking rounding dust that drags every remaining sweep
    into denormal arithmetic.  The perturbation is far below the solver's
    residual tolerance.
    """
    n = a.shape[0]
    anorm = 0.0
    for i in range(n):
        for j in range(i + 1):
            v = abs(a[i, j])
            if v > anorm:
                anorm = v
    flush = 16.0 * n * _EPS * anorm
    for k in range(n - 2):
        scale = 0.0
        for i in range(k + 1, n):
            scale += abs(a[i, k])
        if scale <= flush:
            e[k + 1] = 0.0
            for i in range(k + 1, n):
                a[i, k] = 0.0
            continue
        h = 0.0
        for i in range(k + 1, n):
            u[i] = a[i, k] / scale
            h += u[i] * u[i]
        f = u[k + 1]
        g = math.sqrt(h)
        if f >= 0.0:
            g = -g
        e[k + 1] = scale * g
        h -= f * g
        u[k + 1] = f - g
        for i in range(k + 1, n):
            a[i, k] = u[i]
        # p = A u / h, using only the lower triangle of the trailing block
        for i in range(k + 1, n):
            p[i] = a[i, i] * u[i]
        for i in range(k + 2, n):
            ui = u[i]
            s = 0.0
            ai = a[i]
            for j in range(k + 1, i):
                s += ai[j] * u[j]
                p[j] += ai[j] * ui
            p[i] += s
        kk = 0.0
        for i in range(k + 1, n):
            p[i] /= h
            kk += u[i] * p[i]
        kk /= 2.0 * h
        for i in range(k + 1, n):
            p[i] -= kk * u[i]
        # rank-2 update A -= q u^T + u q^T on the lower triangle
        for i in range(k + 1, n):
            ui = u[i]
            qi = p[i]
            ai = a[i]
            for j in range(k + 1, i + 1):
                ai[j] -= qi * u[j] + ui * p[j]
    e[0] = 0.0
    if n >= 2:
        e[n - 1] = a[n - 1, n - 2]
    for i in range(n):
        d[i] = a[i, i]


@njit(cache=True, fastmath=True)
def accumulate_q_rows(a, qt, u):
    """Back-accumulate the Householder reflectors of `tridiagonalize`.

    Fills qt so that row c of qt is column c of the orthogonal Q with
    Q^T A Q tridiagonal.  Rows c <= k are untouched by reflector k, which
    keeps the sweep O(n^3/3).
    """
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            qt[i, j] = 0.0
        qt[i, i] = 1.0
    for k in range(n - 3, -1, -1):
        h = 0.0
        for i in range(k + 1, n):
            u[i] = a[i, k]
            h += u[i] * u[i]
        if h == 0.0:
            continue
        h *= 0.5
        for c in range(k + 1, n):
            qc = qt[c]
            s = 0.0
            for i in range(k + 1, n):
                s += qc[i] * u[i]
            s /= h
            for i in range(k + 1, n):
                qc[i] -= s * u[i]


@njit(cache=True)
def ql_implicit(d, e, zt, max_sweeps):
    """Implicit-shift QL on the tridiagonal (d, e[1:]).

    Convergence is judged against a running global scale (max of |d| + |e|
    seen so far) so that zero blocks of rank-deficient matrices deflate
    cleanly.  Rotations are folded into the rows of zt (zt = Z^T so the
    update is contiguous).  Returns 0 on success, or 1 + the index of the
    eigenvalue whose off-diagonal failed to collapse within max_sweeps.
    """
    n = d.shape[0]
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    f = 0.0
    tst1 = 0.0
    for l in range(n):
        scale = abs(d[l]) + abs(e[l])
        if scale > tst1:
            tst1 = scale
        m = l
        while m < n - 1:
            if abs(e[m]) <= _EPS * tst1:
                break
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_sweeps:
                    return 1 + l
                # implicit Wilkinson-style shift
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0.0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f += h
                # QL sweep from m down to l
                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    zi = zt[i]
                    zi1 = zt[i + 1]
                    for j in range(zt.shape[1]):
                        t = zi[j]
                        h2 = zi1[j]
                        zi1[j] = s * t + c * h2
                        zi[j] = c * t - s * h2
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= _EPS * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0
    return 0


@njit(cache=True)
def munkres_square(cost, tol):
    """Kuhn-Munkres on a square cost matrix.

    Returns (row_to_col, u, v): the optimal assignment plus the dual prices
    accumulated from the row/column reductions (entry (i, j) is tight when
    cost[i, j] - u[i] - v[j] is within tol of zero).  Zero tests use tol to
    absorb float dust introduced by repeated adjustment rounds.
    """
    n = cost.shape[0]
    c = cost.copy()
    u = np.zeros(n, np.float64)
    v = np.zeros(n, np.float64)
    star_col = np.full(n, -1, np.int64)   # star column per row
    star_row = np.full(n, -1, np.int64)   # star row per column
    prime_col = np.full(n, -1, np.int64)
    row_cov = np.zeros(n, np.bool_)
    col_cov = np.zeros(n, np.bool_)
    if n == 0:
        return star_col, u, v

    for i in range(n):
        mn = c[i, 0]
        for j in range(1, n):
            if c[i, j] < mn:
                mn = c[i, j]
        u[i] = mn
        for j in range(n):
            c[i, j] -= mn
    for j in range(n):
        mn = c[0, j]
        for i in range(1, n):
            if c[i, j] < mn:
                mn = c[i, j]
        v[j] = mn
        for i in range(n):
            c[i, j] -= mn

    for i in range(n):
        for j in range(n):
            if abs(c[i, j]) <= tol and star_col[i] == -1 and star_row[j] == -1:
                star_col[i] = j
                star_row[j] = i

    while True:
        covered = 0
        for j in range(n):
            col_cov[j] = star_row[j] >= 0
            if col_cov[j]:
                covered += 1
        if covered == n:
            return star_col, u, v
        while True:
            zi = -1
            zj = -1
            for i in range(n):
                if row_cov[i]:
                    continue
                ci = c[i]
                for j in range(n):
                    if not col_cov[j] and abs(ci[j]) <= tol:
                        zi = i
                        zj = j
                        break
                if zi >= 0:
                    break
            if zi < 0:
                mn = np.inf
                for i in range(n):
                    if row_cov[i]:
                        continue
                    ci = c[i]
                    for j in range(n):
                        if not col_cov[j] and ci[j] < mn:
                            mn = ci[j]
                for i in range(n):
                    ci = c[i]
                    if row_cov[i]:
                        for j in range(n):
                            if col_cov[j]:
                                ci[j] += mn
                    else:
                        u[i] += mn
                        for j in range(n):
                            if not col_cov[j]:
                                ci[j] -= mn
                for j in range(n):
                    if col_cov[j]:
                        v[j] -= mn
                continue
            prime_col[zi] = zj
            if star_col[zi] == -1:
                r = zi
                cc = zj
                while True:
                    displaced = star_row[cc]
                    star_col[r] = cc
                    star_row[cc] = r
                    if displaced == -1:
                        break
                    nc = prime_col[displaced]
                    r = displaced
                    cc = nc
                for i in range(n):
                    prime_col[i] = -1
                    row_cov[i] = False
                for j in range(n):
                    col_cov[j] = False
                break
            row_cov[zi] = True
            col_cov[star_col[zi]] = False
