"""Preview control of the center of mass under the LIPM.

The CoM is planned over a receding horizon by a QP on the per-interval jerks:
states follow the discrete triple integrator, the ZMP z = c - (h/g) c_ddot is
kept inside the support polygons and close to its reference, and boundary
states pin both ends of the horizon.  Jerks are the only decision variables
(2N for N preview steps); everything else is eliminated by forward substitution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .geom import ConvexPolygon, Footprint, Pose2, convex_hull
from .qp import QuadProgProblem, solve


class PreviewError(ValueError):
    pass


class PreviewInfeasibleError(PreviewError):
    def __init__(self, family: str, message: str):
        super().__init__(f"{family}: {message}")
        self.family = family


@dataclass(frozen=True)
class PreviewParams:
    dt: float = 0.036
    horizon_steps: int = 48
    com_height: float = 0.22
    gravity: float = 9.81
    jerk_weight: float = 1e-6
    zmp_reference_offset: Tuple[float, float] = (0.0, 0.0)
    # polygons are shrunk by this much before the half-plane conversion so the
    # ZMP stays strictly interior under solver tolerance; 0 restores the
    # literal in-polygon constraint
    safety_margin: float = 0.005

    def __post_init__(self):
        if self.dt <= 0 or self.horizon_steps < 2:
            raise PreviewError("dt must be positive and horizon_steps >= 2")
        if self.com_height <= 0 or self.gravity <= 0 or self.jerk_weight <= 0:
            raise PreviewError("com_height, gravity and jerk_weight must be positive")


@dataclass
class ComState:
    pos: np.ndarray
    vel: np.ndarray
    acc: np.ndarray

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=float).reshape(2)
        self.vel = np.asarray(self.vel, dtype=float).reshape(2)
        self.acc = np.asarray(self.acc, dtype=float).reshape(2)
        if not (np.all(np.isfinite(self.pos)) and np.all(np.isfinite(self.vel)) and np.all(np.isfinite(self.acc))):
            raise PreviewError("CoM state must be finite")

    @classmethod
    def rest(cls, pos) -> "ComState":
        return cls(np.asarray(pos, dtype=float), np.zeros(2), np.zeros(2))

    def stacked(self) -> np.ndarray:
        """Per-axis stacking: [[x, vx, ax], [y, vy, ay]]."""
        return np.stack([np.array([self.pos[i], self.vel[i], self.acc[i]]) for i in range(2)])


@dataclass
class PreviewStep:
    polygon: ConvexPolygon
    zmp_ref: np.ndarray
    phase: str  # "single" | "double"
    footstep_index: int
    # standing reference for double-support steps: where the ZMP can park if the
    # gait stops here (midpoint of the two planted prints)
    stop_ref: Optional[np.ndarray] = None

    def __post_init__(self):
        self.zmp_ref = np.asarray(self.zmp_ref, dtype=float).reshape(2)
        if self.phase not in ("single", "double"):
            raise PreviewError(f"invalid phase {self.phase!r}")
        if not self.polygon.contains(self.zmp_ref, tol=1e-9):
            raise PreviewError("desired ZMP must lie inside its support polygon")
        if self.stop_ref is not None:
            self.stop_ref = np.asarray(self.stop_ref, dtype=float).reshape(2)


@dataclass
class SupportSchedule:
    steps: List[PreviewStep]
    dt: float

    def __len__(self) -> int:
        return len(self.steps)

    def __getitem__(self, k: int) -> PreviewStep:
        return self.steps[k]

    def slice(self, start: int, n: int) -> "SupportSchedule":
        """Window [start, start+n); padded by repeating the terminal step."""
        if start < 0:
            raise PreviewError("start must be >= 0")
        out = []
        for k in range(start, start + n):
            out.append(self.steps[min(k, len(self.steps) - 1)])
        return SupportSchedule(out, self.dt)

    def stopping_window(self, start: int, n: int, min_tail: Optional[int] = None):
        """A feasible receding-horizon window: the gait up to the last double
        support that leaves `min_tail` steps of horizon, then standing there.

        Returns (window schedule, rest state at the standing reference); the
        terminal rest is always reachable, which keeps every replan feasible."""
        if min_tail is None:
            min_tail = max(8, n // 4)
        raw = self.slice(start, n)
        cut = None
        for j in range(n - 1 - min_tail, -1, -1):
            step = raw[j]
            if step.phase == "double" and step.stop_ref is not None:
                cut = j
                break
        if cut is None:
            return raw, ComState.rest(raw[n - 1].zmp_ref)
        stop = raw[cut]
        steps = list(raw.steps[: cut + 1])
        stand = PreviewStep(stop.polygon, stop.stop_ref, "double", stop.footstep_index, stop.stop_ref)
        while len(steps) < n:
            steps.append(stand)
        return SupportSchedule(steps, self.dt), ComState.rest(stop.stop_ref)

    def zmp_references(self) -> np.ndarray:
        return np.stack([s.zmp_ref for s in self.steps])


def _print_polygon(pose: Pose2, length: float, width: float, margin: float) -> ConvexPolygon:
    poly = ConvexPolygon(Footprint(length, width, pose).corners())
    return poly.shrink(margin) if margin > 0 else poly


def _as_prints(footsteps) -> List[Tuple[Pose2, str]]:
    prints = []
    for f in footsteps:
        if hasattr(f, "support_pose"):
            prints.append((f.support_pose, f.support_side))
        else:
            pose, side = f
            prints.append((pose, side))
    return prints


def build_schedule(
    footsteps,
    single_support: float,
    double_support: float,
    foot_length: float,
    foot_width: float,
    params: PreviewParams,
    n_steps: Optional[int] = None,
) -> SupportSchedule:
    """Per-preview-step support polygons and ZMP references for a print sequence.

    `footsteps` is the full print sequence: the two initial stance prints
    followed by the successive placements (alternating sides).  Durations are
    rounded to whole preview intervals (at least one).  When `n_steps` is given
    the schedule is truncated or padded with the terminal stance.
    """
    prints = _as_prints(footsteps)
    if not prints:
        raise PreviewError("footsteps must not be empty")
    dt = params.dt
    n_ss = max(1, round(single_support / dt))
    n_ds = max(1, round(double_support / dt))
    off = np.asarray(params.zmp_reference_offset, dtype=float)

    def center(pose: Pose2) -> np.ndarray:
        return pose.transform(off)

    steps: List[PreviewStep] = []
    if len(prints) == 1:
        pose, _ = prints[0]
        poly = _print_polygon(pose, foot_length, foot_width, params.safety_margin)
        total = n_steps if n_steps is not None else n_ss
        for _ in range(total):
            steps.append(PreviewStep(poly, center(pose), "single", 0))
        return SupportSchedule(steps, dt)

    def hull_of(pa: Pose2, pb: Pose2) -> ConvexPolygon:
        pts = np.vstack(
            [Footprint(foot_length, foot_width, pa).corners(), Footprint(foot_length, foot_width, pb).corners()]
        )
        poly = convex_hull(pts)
        return poly.shrink(params.safety_margin) if params.safety_margin > 0 else poly

    stance_mid = 0.5 * (center(prints[0][0]) + center(prints[1][0]))
    if len(prints) == 2:
        # standing: a single double-support stance
        poly = hull_of(prints[0][0], prints[1][0])
        total = n_steps if n_steps is not None else n_ds
        for _ in range(total):
            steps.append(PreviewStep(poly, stance_mid, "double", 1, stance_mid))
        return SupportSchedule(steps, dt)

    # initial weight shift onto the first support foot (the print the first
    # placement does NOT move, i.e. the print before it with the other side)
    first_support = prints[1][0] if prints[2][1] != prints[1][1] else prints[0][0]
    first_other = prints[0][0] if first_support is prints[1][0] else prints[1][0]
    poly0 = hull_of(prints[0][0], prints[1][0])
    for k in range(n_ds):
        frac = (k + 0.5) / n_ds
        zd = (1 - frac) * stance_mid + frac * center(first_support)
        steps.append(PreviewStep(poly0, zd, "double", 1, stance_mid))

    support = first_support
    prev_other = first_other
    for i in range(2, len(prints)):
        place_pose, _ = prints[i]
        poly_ss = _print_polygon(support, foot_length, foot_width, params.safety_margin)
        for _ in range(n_ss):
            steps.append(PreviewStep(poly_ss, center(support), "single", i))
        poly_ds = hull_of(support, place_pose)
        nxt = center(place_pose) if i + 1 < len(prints) else 0.5 * (center(support) + center(place_pose))
        ds_mid = 0.5 * (center(support) + center(place_pose))
        for k in range(n_ds):
            frac = (k + 0.5) / n_ds
            zd = (1 - frac) * center(support) + frac * nxt
            steps.append(PreviewStep(poly_ds, zd, "double", i, ds_mid))
        prev_other = support
        support = place_pose

    # terminal stance: rest between the last two prints
    final_mid = 0.5 * (center(prev_other) + center(support))
    poly_end = hull_of(prev_other, support)
    steps.append(PreviewStep(poly_end, final_mid, "double", len(prints) - 1, final_mid))

    if n_steps is not None:
        if len(steps) >= n_steps:
            steps = steps[:n_steps]
        else:
            while len(steps) < n_steps:
                steps.append(steps[-1])
    return SupportSchedule(steps, dt)


def _prediction_matrices(dt: float, n: int):
    """Phi (3N x 3) and Gamma (3N x N): states 1..N from the initial state and jerks."""
    a = np.array([[1.0, dt, 0.5 * dt * dt], [0.0, 1.0, dt], [0.0, 0.0, 1.0]])
    b = np.array([dt**3 / 6.0, 0.5 * dt * dt, dt])
    phi = np.zeros((3 * n, 3))
    gamma = np.zeros((3 * n, n))
    a_pow = np.eye(3)
    for k in range(n):
        a_pow = a @ a_pow
        phi[3 * k : 3 * k + 3] = a_pow
    # fill Gamma column-wise: column j affects states k >= j via A^(k-1-j) B
    for j in range(n):
        vec = b.copy()
        gamma[3 * j : 3 * j + 3, j] = vec
        for k in range(j + 1, n):
            vec = a @ vec
            gamma[3 * k : 3 * k + 3, j] = vec
    return phi, gamma


@dataclass
class _HorizonMatrices:
    phi: np.ndarray
    gamma: np.ndarray
    z_from_state: np.ndarray  # (N x 3) rows picking pos - (h/g) acc
    zu: np.ndarray  # (N x N)

    @classmethod
    def build(cls, params: PreviewParams, n: int) -> "_HorizonMatrices":
        phi, gamma = _prediction_matrices(params.dt, n)
        hg = params.com_height / params.gravity
        sel = np.zeros((n, 3 * n))
        for k in range(n):
            sel[k, 3 * k] = 1.0
            sel[k, 3 * k + 2] = -hg
        return cls(phi, gamma, sel @ phi, sel @ gamma)


def build_problem(
    c_init: ComState,
    c_final: ComState,
    schedule: SupportSchedule,
    params: PreviewParams,
) -> QuadProgProblem:
    """Assemble the preview QP over the 2N jerk decision variables."""
    n = len(schedule)
    mats = _HorizonMatrices.build(params, n)
    s0 = c_init.stacked()  # (2, 3) rows x then y
    z_aff = np.stack([mats.z_from_state @ s0[axis] for axis in range(2)], axis=1)  # (N, 2)
    zd = schedule.zmp_references()

    eps = params.jerk_weight
    ztz = mats.zu.T @ mats.zu
    p_axis = 2.0 * (ztz + eps * np.eye(n))
    p_mat = np.zeros((2 * n, 2 * n))
    p_mat[:n, :n] = p_axis
    p_mat[n:, n:] = p_axis
    q_vec = np.concatenate(
        [2.0 * mats.zu.T @ (z_aff[:, 0] - zd[:, 0]), 2.0 * mats.zu.T @ (z_aff[:, 1] - zd[:, 1])]
    )

    rows = []
    rhs = []
    for k in range(n):
        normals, offsets = schedule[k].polygon.halfplanes()
        for normal, offset in zip(normals, offsets):
            row = np.zeros(2 * n)
            row[:n] = normal[0] * mats.zu[k]
            row[n:] = normal[1] * mats.zu[k]
            rows.append(row)
            rhs.append(offset - normal @ z_aff[k])
    a_in = np.array(rows)
    b_in = np.array(rhs)

    sfin = c_final.stacked()
    a_eq = np.zeros((6, 2 * n))
    b_eq = np.zeros(6)
    last = slice(3 * (n - 1), 3 * n)
    for axis in range(2):
        cols = slice(0, n) if axis == 0 else slice(n, 2 * n)
        a_eq[3 * axis : 3 * axis + 3, cols] = mats.gamma[last]
        b_eq[3 * axis : 3 * axis + 3] = sfin[axis] - mats.phi[last] @ s0[axis]

    return QuadProgProblem(P=p_mat, q=q_vec, A_eq=a_eq, b_eq=b_eq, A_in=a_in, b_in=b_in)


@dataclass
class ComTrajectory:
    """Piecewise constant-jerk CoM trajectory; C2 by (triple-integration) construction."""

    initial: ComState
    dt: float
    jerks: np.ndarray  # (N, 2)
    params: PreviewParams
    _states: np.ndarray = field(init=False, repr=False)  # (N+1, 2, 3) interval boundary states

    def __post_init__(self):
        self.jerks = np.asarray(self.jerks, dtype=float).reshape(-1, 2)
        n = self.jerks.shape[0]
        states = np.zeros((n + 1, 2, 3))
        states[0] = self.initial.stacked()
        dt = self.dt
        a = np.array([[1.0, dt, 0.5 * dt * dt], [0.0, 1.0, dt], [0.0, 0.0, 1.0]])
        b = np.array([dt**3 / 6.0, 0.5 * dt * dt, dt])
        for k in range(n):
            for axis in range(2):
                states[k + 1, axis] = a @ states[k, axis] + b * self.jerks[k, axis]
        self._states = states

    @property
    def n_intervals(self) -> int:
        return self.jerks.shape[0]

    @property
    def duration(self) -> float:
        return self.n_intervals * self.dt

    def state_at_step(self, k: int) -> ComState:
        s = self._states[k]
        return ComState(s[:, 0].copy(), s[:, 1].copy(), s[:, 2].copy())

    def eval(self, t: float) -> ComState:
        if t < -1e-12 or t > self.duration + 1e-12:
            raise PreviewError(f"t={t} outside [0, {self.duration}]")
        t = min(max(t, 0.0), self.duration)
        k = min(int(t / self.dt), self.n_intervals - 1)
        tau = t - k * self.dt
        s = self._states[k]
        j = self.jerks[k]
        pos = s[:, 0] + s[:, 1] * tau + 0.5 * s[:, 2] * tau**2 + j * tau**3 / 6.0
        vel = s[:, 1] + s[:, 2] * tau + 0.5 * j * tau**2
        acc = s[:, 2] + j * tau
        return ComState(pos, vel, acc)

    def zmp(self, t: float) -> np.ndarray:
        st = self.eval(t)
        return st.pos - (self.params.com_height / self.params.gravity) * st.acc

    def zmp_at_steps(self) -> np.ndarray:
        """ZMP at the constrained samples k = 1..N."""
        hg = self.params.com_height / self.params.gravity
        return self._states[1:, :, 0] - hg * self._states[1:, :, 2]


def plan_com(
    c_init: ComState,
    c_final: ComState,
    schedule: SupportSchedule,
    params: PreviewParams,
    tolerance: float = 1e-9,
) -> ComTrajectory:
    problem = build_problem(c_init, c_final, schedule, params)
    sol = solve(problem, tolerance=tolerance)
    if sol.status != "optimal":
        # identify the offending family for the caller
        lsq = np.linalg.lstsq(problem.A_eq, problem.b_eq, rcond=None)
        eq_residual = float(np.linalg.norm(problem.A_eq @ lsq[0] - problem.b_eq))
        family = "boundary_equalities" if eq_residual > 1e-7 else "zmp_polygon"
        raise PreviewInfeasibleError(family, f"preview QP returned status {sol.status}")
    n = len(schedule)
    jerks = np.stack([sol.x[:n], sol.x[n:]], axis=1)
    return ComTrajectory(c_init, params.dt, jerks, params)


def objective_value(traj: ComTrajectory, schedule: SupportSchedule) -> float:
    """Recompute the QP objective from a trajectory (test/diagnostic helper)."""
    z = traj.zmp_at_steps()
    zd = schedule.zmp_references()
    return float(np.sum((z - zd) ** 2) + traj.params.jerk_weight * np.sum(traj.jerks**2))
