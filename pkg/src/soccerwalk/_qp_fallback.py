"""Pure-numpy dual active-set QP kernel; algorithmic mirror of the compiled extension.

Canonical form handled here:

    minimize    0.5 x'Px + q'x
    subject to  C x >= d          (rows 0..meq-1 are equalities, never dropped)

P must be positive definite. Equality rows whose residual is positive at the
current iterate are sign-flipped so the dual step machinery sees a violated
">=" row; the flip is undone in the reported multipliers.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

STATUS_OPTIMAL = 0
STATUS_INFEASIBLE = 1
STATUS_MAX_ITERATIONS = 2

_DEP_TOL = 1e-11  # curvature threshold below which a row counts as dependent
_R_TOL = 1e-12  # multiplier-rate threshold for partial steps


def solve_kernel(P, q, C, d, meq, tol, max_iter):
    n = P.shape[0]
    n_rows = C.shape[0]
    fac = cho_factor(P, lower=True)
    x = -cho_solve(fac, q)
    lam = np.zeros(n_rows)
    if n_rows == 0:
        return x, lam, STATUS_OPTIMAL, 0

    flip = np.ones(n_rows)
    csgn = C.copy()
    dsgn = d.copy()
    active: list[int] = []
    u: list[float] = []
    pbt = np.zeros((n, 0))  # P^{-1} N' for the current active set
    iters = 0

    def refresh_pbt():
        nonlocal pbt
        if active:
            pbt = cho_solve(fac, csgn[active].T)
        else:
            pbt = np.zeros((n, 0))

    def directions(cp):
        """Primal step z and dual rates r for candidate row cp."""
        v = cho_solve(fac, cp)
        if active:
            nmat = csgn[active]
            w = nmat @ v
            mmat = nmat @ pbt
            r = np.linalg.solve(mmat, w)
            z = v - pbt @ r
        else:
            r = np.zeros(0)
            z = v
        return v, r, z

    def enforce(p):
        """Drive row p into the active set; returns a STATUS_* code."""
        nonlocal x, iters
        cp = csgn[p]
        dp = dsgn[p]
        is_eq = p < meq
        u_p = 0.0
        while True:
            iters += 1
            if iters > max_iter:
                return STATUS_MAX_ITERATIONS
            s_p = cp @ x - dp
            if s_p >= -tol:
                if is_eq:
                    v, r, z = directions(cp)
                    den = cp @ z
                    if den > _DEP_TOL * (1.0 + abs(cp @ v)):
                        active.append(p)
                        u.append(u_p)
                        refresh_pbt()
                    # else: dependent but consistent equality, nothing to add
                elif u_p > 0.0:
                    active.append(p)
                    u.append(u_p)
                    refresh_pbt()
                return STATUS_OPTIMAL
            v, r, z = directions(cp)
            den = cp @ z
            have_z = den > _DEP_TOL * (1.0 + abs(cp @ v))
            t1 = np.inf
            k1 = -1
            for j, row in enumerate(active):
                if row >= meq and r[j] > _R_TOL:
                    tj = u[j] / r[j]
                    if tj < t1:
                        t1 = tj
                        k1 = j
            t2 = -s_p / den if have_z else np.inf
            t = min(t1, t2)
            if not np.isfinite(t):
                return STATUS_INFEASIBLE
            if have_z:
                x = x + t * z
            for j in range(len(active)):
                u[j] -= t * r[j]
            u_p += t
            if have_z and t2 <= t1:
                active.append(p)
                u.append(u_p)
                refresh_pbt()
                return STATUS_OPTIMAL
            del active[k1]
            del u[k1]
            refresh_pbt()

    status = STATUS_OPTIMAL
    for p in range(meq):
        if csgn[p] @ x - dsgn[p] > 0.0:
            flip[p] = -1.0
            csgn[p] = -csgn[p]
            dsgn[p] = -dsgn[p]
        status = enforce(p)
        if status != STATUS_OPTIMAL:
            break

    while status == STATUS_OPTIMAL:
        worst = -1
        worst_s = -tol
        for p in range(meq, n_rows):
            s_p = csgn[p] @ x - dsgn[p]
            if s_p < worst_s:
                worst_s = s_p
                worst = p
        if worst < 0:
            break
        status = enforce(worst)

    for j, row in enumerate(active):
        lam[row] = u[j] * flip[row]
    return x, lam, status, iters
