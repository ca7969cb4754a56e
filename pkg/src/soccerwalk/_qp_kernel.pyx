# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dual active-set QP kernel; algorithmic mirror of _qp_fallback.

Same canonical form and same iteration order as the pure-Python kernel:
  minimize 0.5 x'Px + q'x  s.t.  C x >= d, first meq rows equalities.
Results agree with the fallback up to floating-point rounding.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, isfinite, sqrt

cnp.import_array()

STATUS_OPTIMAL = 0
STATUS_INFEASIBLE = 1
STATUS_MAX_ITERATIONS = 2

cdef enum:
    _OPTIMAL = 0
    _INFEASIBLE = 1
    _MAX_ITERATIONS = 2

cdef double DEP_TOL = 1e-11
cdef double R_TOL = 1e-12


cdef int _cholesky(double[:, ::1] a, int n) noexcept nogil:
    cdef int i, j, k
    cdef double s
    for j in range(n):
        s = a[j, j]
        for k in range(j):
            s -= a[j, k] * a[j, k]
        if s <= 0.0:
            return -1
        a[j, j] = sqrt(s)
        for i in range(j + 1, n):
            s = a[i, j]
            for k in range(j):
                s -= a[i, k] * a[j, k]
            a[i, j] = s / a[j, j]
    return 0


cdef void _chol_solve(double[:, ::1] L, double[::1] b, double[::1] out, int n) noexcept nogil:
    cdef int i, k
    cdef double s
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * out[k]
        out[i] = s / L[i, i]
    for i in range(n - 1, -1, -1):
        s = out[i]
        for k in range(i + 1, n):
            s -= L[k, i] * out[k]
        out[i] = s / L[i, i]


cdef double _dot(double[::1] a, double[::1] b, int n) noexcept nogil:
    cdef int i
    cdef double s = 0.0
    for i in range(n):
        s += a[i] * b[i]
    return s


cdef int _directions(double[:, ::1] csgn, int p, double[:, ::1] L, int n,
                     int m, int[::1] active, double[:, ::1] pbt,
                     double[::1] v, double[::1] z, double[::1] w, double[::1] r,
                     double[:, ::1] mbuf, double[:, ::1] lmbuf) noexcept nogil:
    """Fill v = P^-1 c_p, dual rates r and primal direction z. Returns 0, or -1 if
    the active-set Gram matrix loses positive definiteness (should not happen)."""
    cdef int i, j, k
    cdef double s
    _chol_solve(L, csgn[p], v, n)
    if m == 0:
        for i in range(n):
            z[i] = v[i]
        return 0
    for j in range(m):
        s = 0.0
        for k in range(n):
            s += csgn[active[j], k] * v[k]
        w[j] = s
    for i in range(m):
        for j in range(m):
            s = 0.0
            for k in range(n):
                s += csgn[active[i], k] * pbt[k, j]
            mbuf[i, j] = s
            lmbuf[i, j] = s
    if _cholesky(lmbuf, m) != 0:
        return -1
    for i in range(m):
        s = w[i]
        for k in range(i):
            s -= lmbuf[i, k] * r[k]
        r[i] = s / lmbuf[i, i]
    for i in range(m - 1, -1, -1):
        s = r[i]
        for k in range(i + 1, m):
            s -= lmbuf[k, i] * r[k]
        r[i] = s / lmbuf[i, i]
    for i in range(n):
        s = v[i]
        for j in range(m):
            s -= pbt[i, j] * r[j]
        z[i] = s
    return 0


def solve_kernel(double[:, ::1] P, double[::1] q, double[:, ::1] C, double[::1] d,
                 int meq, double tol, int max_iter):
    cdef int n = P.shape[0]
    cdef int n_rows = C.shape[0]
    cdef int i, j, k, p, m, k1, worst, status, iters, is_eq, have_z, res
    cdef double s_p, den, curv, t1, t2, t, tj, u_p, worst_s, s

    l_arr = np.array(P, dtype=np.float64, copy=True)
    cdef double[:, ::1] L = l_arr
    if _cholesky(L, n) != 0:
        raise np.linalg.LinAlgError("matrix is not positive definite")

    x_arr = np.zeros(n)
    cdef double[::1] x = x_arr
    neg_q = np.ascontiguousarray(-np.asarray(q))
    cdef double[::1] nq = neg_q
    _chol_solve(L, nq, x, n)

    lam_arr = np.zeros(n_rows)
    cdef double[::1] lam = lam_arr
    if n_rows == 0:
        return x_arr, lam_arr, STATUS_OPTIMAL, 0

    csgn_arr = np.array(C, dtype=np.float64, copy=True)
    dsgn_arr = np.array(d, dtype=np.float64, copy=True)
    flip_arr = np.ones(n_rows)
    cdef double[:, ::1] csgn = csgn_arr
    cdef double[::1] dsgn = dsgn_arr
    cdef double[::1] flip = flip_arr

    active_arr = np.zeros(n, dtype=np.intc)
    u_arr = np.zeros(n)
    pbt_arr = np.zeros((n, n))
    v_arr = np.zeros(n)
    z_arr = np.zeros(n)
    w_arr = np.zeros(n)
    r_arr = np.zeros(n)
    m_arr = np.zeros((n, n))
    lm_arr = np.zeros((n, n))
    cdef int[::1] active = active_arr
    cdef double[::1] u = u_arr
    cdef double[:, ::1] pbt = pbt_arr
    cdef double[::1] v = v_arr
    cdef double[::1] z = z_arr
    cdef double[::1] w = w_arr
    cdef double[::1] r = r_arr
    cdef double[:, ::1] mbuf = m_arr
    cdef double[:, ::1] lmbuf = lm_arr

    m = 0
    iters = 0
    status = STATUS_OPTIMAL

    # Phase 1: equality rows in order; phase 2: most-violated inequality.
    for p in range(meq):
        s = _dot(csgn[p], x, n) - dsgn[p]
        if s > 0.0:
            flip[p] = -1.0
            for k in range(n):
                csgn[p, k] = -csgn[p, k]
            dsgn[p] = -dsgn[p]
        status = _enforce_loop(csgn, dsgn, meq, p, L, n, x, &m, active, u, pbt,
                               tol, max_iter, &iters, v, z, w, r, mbuf, lmbuf)
        if status != STATUS_OPTIMAL:
            break

    while status == STATUS_OPTIMAL:
        worst = -1
        worst_s = -tol
        for p in range(meq, n_rows):
            s_p = _dot(csgn[p], x, n) - dsgn[p]
            if s_p < worst_s:
                worst_s = s_p
                worst = p
        if worst < 0:
            break
        status = _enforce_loop(csgn, dsgn, meq, worst, L, n, x, &m, active, u, pbt,
                               tol, max_iter, &iters, v, z, w, r, mbuf, lmbuf)

    for j in range(m):
        lam[active[j]] = u[j] * flip[active[j]]
    return x_arr, lam_arr, status, iters


cdef int _enforce_loop(double[:, ::1] csgn, double[::1] dsgn, int meq, int p,
                       double[:, ::1] L, int n, double[::1] x, int* m_ptr,
                       int[::1] active, double[::1] u, double[:, ::1] pbt,
                       double tol, int max_iter, int* iters,
                       double[::1] v, double[::1] z, double[::1] w, double[::1] r,
                       double[:, ::1] mbuf, double[:, ::1] lmbuf) noexcept nogil:
    cdef int m = m_ptr[0]
    cdef int is_eq = p < meq
    cdef int i, j, k, k1, have_z
    cdef double u_p = 0.0
    cdef double s_p, den, curv, t1, t2, t, tj
    while True:
        iters[0] += 1
        if iters[0] > max_iter:
            m_ptr[0] = m
            return _MAX_ITERATIONS
        s_p = _dot(csgn[p], x, n) - dsgn[p]
        if s_p >= -tol:
            if is_eq:
                if _directions(csgn, p, L, n, m, active, pbt, v, z, w, r, mbuf, lmbuf) != 0:
                    m_ptr[0] = m
                    return _MAX_ITERATIONS
                den = _dot(csgn[p], z, n)
                curv = _dot(csgn[p], v, n)
                if den > DEP_TOL * (1.0 + fabs(curv)):
                    active[m] = p
                    u[m] = u_p
                    for i in range(n):
                        pbt[i, m] = v[i]
                    m += 1
            elif u_p > 0.0:
                _chol_solve(L, csgn[p], v, n)
                active[m] = p
                u[m] = u_p
                for i in range(n):
                    pbt[i, m] = v[i]
                m += 1
            m_ptr[0] = m
            return _OPTIMAL
        if _directions(csgn, p, L, n, m, active, pbt, v, z, w, r, mbuf, lmbuf) != 0:
            m_ptr[0] = m
            return _MAX_ITERATIONS
        den = _dot(csgn[p], z, n)
        curv = _dot(csgn[p], v, n)
        have_z = den > DEP_TOL * (1.0 + fabs(curv))
        t1 = INFINITY
        k1 = -1
        for j in range(m):
            if active[j] >= meq and r[j] > R_TOL:
                tj = u[j] / r[j]
                if tj < t1:
                    t1 = tj
                    k1 = j
        if have_z:
            t2 = -s_p / den
        else:
            t2 = INFINITY
        t = t1 if t1 < t2 else t2
        if not isfinite(t):
            m_ptr[0] = m
            return _INFEASIBLE
        if have_z:
            for i in range(n):
                x[i] += t * z[i]
        for j in range(m):
            u[j] -= t * r[j]
        u_p += t
        if have_z and t2 <= t1:
            active[m] = p
            u[m] = u_p
            for i in range(n):
                pbt[i, m] = v[i]
            m += 1
            m_ptr[0] = m
            return _OPTIMAL
        # partial step: drop constraint k1 and retry the same row
        for j in range(k1, m - 1):
            active[j] = active[j + 1]
            u[j] = u[j + 1]
            for i in range(n):
                pbt[i, j] = pbt[i, j + 1]
        m -= 1
