"""Benchmark the compiled QP kernel against the pure-Python fallback on the two
workloads that dominate runtime: the CoM preview problem and the per-tick IK
problem. Run:  python benchmarks/bench_qp.py
"""

import time

import numpy as np

from soccerwalk import _qp_fallback
from soccerwalk.geom import Pose2
from soccerwalk.preview import ComState, PreviewParams, build_problem, build_schedule
from soccerwalk.qp import QuadProgProblem

try:
    from soccerwalk import _qp_kernel

    KERNELS = [("pure-python", _qp_fallback), ("compiled", _qp_kernel)]
except ImportError:
    print("compiled kernel not built; benchmarking the fallback only")
    KERNELS = [("pure-python", _qp_fallback)]


def canonical(problem):
    """Mirror of the canonical >= form used by qp.solve (no pinned variables here)."""
    rows = []
    rhs = []
    meq = 0
    if problem.A_eq is not None:
        for i in range(problem.A_eq.shape[0]):
            rows.append(problem.A_eq[i])
            rhs.append(problem.b_eq[i])
        meq = problem.A_eq.shape[0]
    if problem.A_in is not None:
        for i in range(problem.A_in.shape[0]):
            rows.append(-problem.A_in[i])
            rhs.append(-problem.b_in[i])
    n = problem.n
    for i in range(n):
        if np.isfinite(problem.lb[i]):
            e = np.zeros(n)
            e[i] = 1.0
            rows.append(e)
            rhs.append(problem.lb[i])
        if np.isfinite(problem.ub[i]):
            e = np.zeros(n)
            e[i] = -1.0
            rows.append(e)
            rhs.append(-problem.ub[i])
    c = np.array(rows)
    d = np.array(rhs)
    norms = np.linalg.norm(c, axis=1)
    return problem.P.copy(), problem.q.copy(), np.ascontiguousarray(c / norms[:, None]), d / norms, meq


def preview_problem():
    prints = [
        (Pose2(0, 0.05, 0), "left"),
        (Pose2(0, -0.05, 0), "right"),
        (Pose2(0.06, 0.05, 0), "left"),
        (Pose2(0.12, -0.05, 0), "right"),
        (Pose2(0.18, 0.05, 0), "left"),
    ]
    params = PreviewParams(com_height=0.22)
    sched = build_schedule(prints, 0.36, 0.036, 0.14, 0.08, params, n_steps=48)
    c0 = ComState.rest([0.0, 0.0])
    cf = ComState.rest(sched[47].zmp_ref)
    return build_problem(c0, cf, sched, params)


def ik_like_problem(rng):
    n = 18
    j = rng.normal(size=(18, n))
    p = 2 * (j.T @ j * 0.2 + 1e-6 * np.eye(n))
    q = rng.normal(size=n) * 0.01
    a_eq = rng.normal(size=(6, n))
    b_eq = rng.normal(size=6) * 1e-3
    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    lb[6:] = -0.027
    ub[6:] = 0.027
    return QuadProgProblem(P=p, q=q, A_eq=a_eq, b_eq=b_eq, lb=lb, ub=ub)


def bench(name, problem, repeats):
    args = canonical(problem)
    cap = 10 * (problem.n + args[2].shape[0])
    print(f"\n{name}: n={problem.n}, rows={args[2].shape[0]}")
    base = None
    for kname, kernel in KERNELS:
        x, lam, status, iters = kernel.solve_kernel(*args, 1e-9, cap)
        assert status == 0, f"{kname} returned status {status}"
        t0 = time.perf_counter()
        for _ in range(repeats):
            kernel.solve_kernel(*args, 1e-9, cap)
        per = (time.perf_counter() - t0) / repeats * 1e3
        speedup = "" if base is None else f"  ({base / per:.1f}x faster)"
        base = base or per
        print(f"  {kname:12s} {per:8.3f} ms/solve, {iters} active-set iterations{speedup}")


def main():
    rng = np.random.default_rng(0)
    bench("CoM preview QP (N=48)", preview_problem(), repeats=20)
    bench("whole-body IK QP", ik_like_problem(rng), repeats=200)


if __name__ == "__main__":
    main()
