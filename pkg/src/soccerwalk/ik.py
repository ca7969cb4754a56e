"""Differential whole-body IK: task-space errors to joint increments via one QP per tick.

Four tasks are tracked (point task on the CoM or trunk, trunk orientation,
support foot frame, swing foot frame: 3 + 3 + 6 + 6 = 18 task dimensions).
The support foot is a hard equality (ground contact is physical); the rest are
weighted soft terms.  Joint limits and per-tick velocity bounds are box
constraints; the floating base is unbounded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import kinematics as rb
from .qp import QuadProgProblem, solve
from .so3 import log_so3


class IkInfeasibleError(RuntimeError):
    def __init__(self, family: str, message: str):
        super().__init__(f"{family}: {message}")
        self.family = family


@dataclass(frozen=True)
class IkParams:
    regularization: float = 1e-6
    dt: float = 0.005
    velocity_limit_scale: float = 0.9
    mode: str = "com"  # "com" | "trunk"
    weight_point: float = 10.0
    weight_orientation: float = 1.0
    weight_swing: float = 5.0

    def __post_init__(self):
        if self.regularization <= 0 or self.dt <= 0:
            raise ValueError("regularization and dt must be positive")
        if not 0.0 < self.velocity_limit_scale <= 1.0:
            raise ValueError("velocity_limit_scale must be in (0, 1]")
        if self.mode not in ("com", "trunk"):
            raise ValueError(f"invalid mode {self.mode!r}")


@dataclass
class Task:
    kind: str  # "position3" | "orientation3" | "frame6"
    frame: str  # link name, or "com" for the whole-body CoM point
    target: object  # (3,) point, (3,3) rotation, or (rotation, point) pair
    weight: float = 1.0
    hard: bool = False

    @property
    def dim(self) -> int:
        return 6 if self.kind == "frame6" else 3


def build_tasks(targets, mode: str, params: Optional[IkParams] = None) -> List[Task]:
    """The four walk tasks from one tick's targets (see walk.TickTargets)."""
    p = params or IkParams(mode=mode)
    if mode == "trunk":
        point = Task("position3", targets.trunk_frame, np.asarray(targets.trunk_position), p.weight_point)
    else:
        point = Task("position3", "com", np.asarray(targets.com_position), p.weight_point)
    orient = Task("orientation3", targets.trunk_frame, np.asarray(targets.trunk_orientation), p.weight_orientation)
    support = Task("frame6", targets.support_frame, targets.support_target, hard=True)
    swing = Task("frame6", targets.swing_frame, targets.swing_target, p.weight_swing)
    return [point, orient, support, swing]


def _task_error_jacobian(model, config, task: Task, poses) -> Tuple[np.ndarray, np.ndarray]:
    if task.kind == "position3":
        if task.frame == "com":
            err = np.asarray(task.target, dtype=float) - rb.com(model, config, poses)
            jac = rb.com_jacobian(model, config, poses)
        else:
            r, p = poses[task.frame]
            err = np.asarray(task.target, dtype=float) - p
            jac = rb.frame_jacobian(model, config, task.frame, poses)[0:3]
        return err, jac
    if task.kind == "orientation3":
        r, _ = poses[task.frame]
        err = log_so3(np.asarray(task.target, dtype=float) @ r.T)
        jac = rb.frame_jacobian(model, config, task.frame, poses)[3:6]
        return err, jac
    if task.kind == "frame6":
        r_t, p_t = task.target
        r, p = poses[task.frame]
        err = np.concatenate([np.asarray(p_t, dtype=float) - p, log_so3(np.asarray(r_t) @ r.T)])
        jac = rb.frame_jacobian(model, config, task.frame, poses)
        return err, jac
    raise ValueError(f"unknown task kind {task.kind!r}")


def solve_step(
    model: rb.RobotModel,
    q0: rb.Configuration,
    tasks: Sequence[Task],
    params: IkParams,
    poses=None,
) -> np.ndarray:
    """One differential IK solve around q0; returns the tangent increment."""
    if poses is None:
        poses = rb.fk_all(model, q0)
    n = model.dof
    p_mat = 2.0 * params.regularization * np.eye(n)
    q_vec = np.zeros(n)
    eq_rows = []
    eq_rhs = []
    for task in tasks:
        err, jac = _task_error_jacobian(model, q0, task, poses)
        if task.hard:
            eq_rows.append(jac)
            eq_rhs.append(err)
        else:
            p_mat += 2.0 * task.weight * jac.T @ jac
            q_vec -= 2.0 * task.weight * jac.T @ err

    lo, hi = model.joint_limits()
    vel = model.velocity_limits() * params.dt * params.velocity_limit_scale
    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    lb[6:] = np.maximum(lo - q0.q, -vel)
    ub[6:] = np.minimum(hi - q0.q, vel)

    problem = QuadProgProblem(
        P=p_mat,
        q=q_vec,
        A_eq=np.vstack(eq_rows) if eq_rows else None,
        b_eq=np.concatenate(eq_rhs) if eq_rhs else None,
        lb=lb,
        ub=ub,
    )
    sol = solve(problem)
    if sol.status != "optimal":
        raise IkInfeasibleError(
            "hard_tasks_vs_limits",
            f"IK QP returned {sol.status} (hard tasks conflict with joint/velocity bounds)",
        )
    return sol.x


@dataclass
class TrackResult:
    times: np.ndarray
    joint_names: List[str]
    joints: np.ndarray  # (ticks+1, nj)
    base_pos: np.ndarray  # (ticks+1, 3)
    base_quat: np.ndarray  # (ticks+1, 4)
    soft_residuals: np.ndarray  # (ticks,) weighted soft residual norm after each solve
    hard_residuals: np.ndarray  # (ticks,) linear-model hard residual after each solve
    final: rb.Configuration


def track(
    model: rb.RobotModel,
    q_init: rb.Configuration,
    target_stream,
    params: IkParams,
) -> TrackResult:
    """Run solve_step over a time-ordered stream of tick targets, integrating q."""
    config = q_init.copy()
    lo, hi = model.joint_limits()
    vel = model.velocity_limits() * params.dt * params.velocity_limit_scale
    times = [0.0]
    joints = [config.q.copy()]
    base_pos = [config.base_pos.copy()]
    base_quat = [config.base_quat.copy()]
    soft_res = []
    hard_res = []
    for k, targets in enumerate(target_stream):
        tasks = build_tasks(targets, params.mode, params)
        poses0 = rb.fk_all(model, config)
        try:
            dq = solve_step(model, config, tasks, params, poses=poses0)
        except IkInfeasibleError as exc:
            raise IkInfeasibleError(exc.family, f"tick {k}: {exc}") from None
        h_acc = 0.0
        for task in tasks:
            if task.hard:
                err, jac = _task_error_jacobian(model, config, task, poses0)
                h_acc = max(h_acc, float(np.max(np.abs(jac @ dq - err))))
        # clamp float-level overshoot so limit checks hold exactly
        dq[6:] = np.clip(dq[6:], -vel, vel)
        config = config.perturbed(dq)
        config.q = np.clip(config.q, lo, hi)
        poses = rb.fk_all(model, config)
        s_acc = 0.0
        for task in tasks:
            if not task.hard:
                err, _ = _task_error_jacobian(model, config, task, poses)
                s_acc += task.weight * float(err @ err)
        soft_res.append(np.sqrt(s_acc))
        hard_res.append(h_acc)
        times.append(times[-1] + params.dt)
        joints.append(config.q.copy())
        base_pos.append(config.base_pos.copy())
        base_quat.append(config.base_quat.copy())
    return TrackResult(
        times=np.array(times),
        joint_names=list(model.joint_order),
        joints=np.array(joints),
        base_pos=np.array(base_pos),
        base_quat=np.array(base_quat),
        soft_residuals=np.array(soft_res),
        hard_residuals=np.array(hard_res),
        final=config,
    )
