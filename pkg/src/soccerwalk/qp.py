"""Dense strictly-convex QP solver: the single backend for CoM preview and whole-body IK.

Problems are canonicalized to  min 0.5 x'Px + q'x  s.t.  C x >= d  (leading rows
equalities) and handed to a dual active-set kernel.  A compiled extension is
used when available; a pure-Python mirror is selected at import otherwise, or
when SOCCERWALK_PURE_PYTHON is set.  Both yield the same iterates up to
floating-point noise, so results are interchangeable at solver tolerance.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _qp_fallback

if os.environ.get("SOCCERWALK_PURE_PYTHON", "") not in ("", "0"):
    _kernel = _qp_fallback
    BACKEND = "python"
else:
    try:
        from . import _qp_kernel as _kernel  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _kernel = _qp_fallback
        BACKEND = "python"


class ContractViolationError(ValueError):
    """Inconsistent problem dimensions or malformed data."""


@dataclass
class QuadProgProblem:
    """min 0.5 x'Px + q'x  s.t.  A_eq x = b_eq,  A_in x <= b_in,  lb <= x <= ub."""

    P: np.ndarray
    q: np.ndarray
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    A_in: Optional[np.ndarray] = None
    b_in: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None

    def __post_init__(self):
        self.P = np.ascontiguousarray(self.P, dtype=float)
        self.q = np.ascontiguousarray(self.q, dtype=float).ravel()
        n = self.q.shape[0]
        if self.P.shape != (n, n):
            raise ContractViolationError(f"P must be {n}x{n}, got {self.P.shape}")
        if np.max(np.abs(self.P - self.P.T)) > 1e-10 * max(1.0, np.max(np.abs(self.P))):
            raise ContractViolationError("P must be symmetric")
        for name in ("A_eq", "A_in"):
            a = getattr(self, name)
            b = getattr(self, "b" + name[1:])
            if (a is None) != (b is None):
                raise ContractViolationError(f"{name} and its rhs must be given together")
            if a is not None:
                a = np.ascontiguousarray(a, dtype=float).reshape(-1, n)
                b = np.ascontiguousarray(b, dtype=float).ravel()
                if a.shape[0] != b.shape[0]:
                    raise ContractViolationError(f"{name} rows do not match rhs length")
                setattr(self, name, a)
                setattr(self, "b" + name[1:], b)
        if self.lb is None:
            self.lb = np.full(n, -np.inf)
        else:
            self.lb = np.ascontiguousarray(self.lb, dtype=float).ravel()
        if self.ub is None:
            self.ub = np.full(n, np.inf)
        else:
            self.ub = np.ascontiguousarray(self.ub, dtype=float).ravel()
        if self.lb.shape[0] != n or self.ub.shape[0] != n:
            raise ContractViolationError("bound lengths do not match problem size")
        if np.any(self.lb > self.ub):
            raise ContractViolationError("lb > ub for some component")

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.P @ x + self.q @ x)


@dataclass
class QpSolution:
    x: np.ndarray
    status: str  # optimal | infeasible | max_iterations
    stationarity: float
    primal: float
    complementarity: float
    iterations: int = 0
    backend: str = field(default=BACKEND)


_STATUS_NAMES = {0: "optimal", 1: "infeasible", 2: "max_iterations"}


def solve(
    problem: QuadProgProblem,
    tolerance: float = 1e-9,
    max_iterations: Optional[int] = None,
    warm_start: Optional[np.ndarray] = None,
) -> QpSolution:
    """Solve a strictly-convex dense QP.

    warm_start is accepted for interface compatibility and ignored; the
    dual active-set method starts from the unconstrained optimum either way,
    which keeps results deterministic.
    """
    del warm_start
    n = problem.n

    pinned = problem.lb == problem.ub
    free = ~pinned
    x_pin = np.where(pinned, problem.lb, 0.0)
    nf = int(free.sum())

    rows = []
    rhs = []
    kinds = []  # (family, original_index) for multiplier reporting
    if problem.A_eq is not None:
        for i in range(problem.A_eq.shape[0]):
            rows.append(problem.A_eq[i])
            rhs.append(problem.b_eq[i])
            kinds.append(("eq", i))
    meq_full = len(rows)
    if problem.A_in is not None:
        for i in range(problem.A_in.shape[0]):
            rows.append(-problem.A_in[i])
            rhs.append(-problem.b_in[i])
            kinds.append(("in", i))
    for i in range(n):
        if free[i] and np.isfinite(problem.lb[i]):
            e = np.zeros(n)
            e[i] = 1.0
            rows.append(e)
            rhs.append(problem.lb[i])
            kinds.append(("lb", i))
        if free[i] and np.isfinite(problem.ub[i]):
            e = np.zeros(n)
            e[i] = -1.0
            rows.append(e)
            rhs.append(-problem.ub[i])
            kinds.append(("ub", i))

    c_full = np.array(rows).reshape(len(rows), n) if rows else np.zeros((0, n))
    d_full = np.array(rhs)

    # Reduce out pinned variables and normalize rows.
    c_red = c_full[:, free] if rows else np.zeros((0, nf))
    d_red = d_full - (c_full[:, pinned] @ x_pin[pinned] if rows else 0.0)
    keep = []
    scale = []
    for i in range(c_red.shape[0]):
        nrm = float(np.linalg.norm(c_red[i]))
        if nrm < 1e-14:
            # Row vanished under pinning: it is now a pure feasibility fact.
            violated = d_red[i] > tolerance if i >= meq_full else abs(d_red[i]) > tolerance
            if violated:
                return QpSolution(
                    x=_expand(x_pin, free, np.zeros(nf)),
                    status="infeasible",
                    stationarity=np.inf,
                    primal=float(abs(d_red[i])),
                    complementarity=np.inf,
                )
            continue
        keep.append(i)
        scale.append(nrm)
    keep_idx = np.array(keep, dtype=int)
    meq = int(sum(1 for i in keep if i < meq_full))
    if nf == 0:
        x = x_pin.copy()
        primal = _primal_residual(problem, x)
        status = "optimal" if primal <= tolerance else "infeasible"
        return QpSolution(x=x, status=status, stationarity=0.0, primal=primal, complementarity=0.0)

    p_red = np.ascontiguousarray(problem.P[np.ix_(free, free)])
    q_red = problem.q[free] + problem.P[np.ix_(free, pinned)] @ x_pin[pinned]
    scale_arr = np.array(scale) if keep else np.zeros(0)
    if keep:
        c_kern = np.ascontiguousarray(c_red[keep_idx] / scale_arr[:, None])
        d_kern = np.ascontiguousarray(d_red[keep_idx] / scale_arr)
    else:
        c_kern = np.zeros((0, nf))
        d_kern = np.zeros(0)

    if max_iterations is None:
        max_iterations = 10 * (nf + c_kern.shape[0])

    try:
        x_f, lam_kern, code, iters = _kernel.solve_kernel(
            np.ascontiguousarray(p_red),
            np.ascontiguousarray(q_red),
            c_kern,
            d_kern,
            meq,
            float(tolerance),
            int(max_iterations),
        )
    except np.linalg.LinAlgError as exc:
        raise ContractViolationError(f"cost matrix is not positive definite: {exc}") from None

    x = _expand(x_pin, free, np.asarray(x_f))
    lam_rows = np.zeros(c_full.shape[0])
    if keep:
        lam_rows[keep_idx] = np.asarray(lam_kern) / scale_arr

    status = _STATUS_NAMES[int(code)]
    stationarity, primal, complementarity = _residuals(
        problem, x, c_full, d_full, lam_rows, meq_full
    )
    return QpSolution(
        x=x,
        status=status,
        stationarity=stationarity,
        primal=primal,
        complementarity=complementarity,
        iterations=int(iters),
    )


def _expand(x_pin: np.ndarray, free: np.ndarray, x_free: np.ndarray) -> np.ndarray:
    x = x_pin.copy()
    x[free] = x_free
    return x


def _primal_residual(problem: QuadProgProblem, x: np.ndarray) -> float:
    worst = 0.0
    if problem.A_eq is not None:
        worst = max(worst, float(np.max(np.abs(problem.A_eq @ x - problem.b_eq), initial=0.0)))
    if problem.A_in is not None:
        worst = max(worst, float(np.max(problem.A_in @ x - problem.b_in, initial=0.0)))
    worst = max(worst, float(np.max(problem.lb - x, initial=0.0)))
    worst = max(worst, float(np.max(x - problem.ub, initial=0.0)))
    return worst


def _residuals(problem, x, c_full, d_full, lam_rows, meq_full):
    grad = problem.P @ x + problem.q
    if c_full.shape[0]:
        grad = grad - c_full.T @ lam_rows
        slack = c_full @ x - d_full
        comp = float(np.max(np.abs(lam_rows * slack), initial=0.0))
    else:
        comp = 0.0
    # Pinned variables carry an implicit equality multiplier absorbing any gradient.
    pinned = problem.lb == problem.ub
    grad = np.where(pinned, 0.0, grad)
    stationarity = float(np.max(np.abs(grad), initial=0.0))
    primal = _primal_residual(problem, x)
    return stationarity, primal, comp
