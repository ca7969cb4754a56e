"""Walk orchestration: footsteps to support schedule, receding-horizon CoM plan,
swing trajectories, per-tick IK task targets, and the landing-contact delay gate."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import kinematics as rb
from .footsteps import FootstepState
from .geom import Pose2, wrap_angle
from .preview import ComState, PreviewParams, build_schedule, plan_com
from .so3 import rpy_to_matrix
from .swing import SwingTrajectory, swing_trajectory


@dataclass(frozen=True)
class WalkParams:
    single_support: float = 0.360
    double_support: float = 0.036
    control_period: float = 0.005
    replan_period: float = 0.025
    swing_height: float = 0.02
    swing_plateau_ratio: float = 0.30
    trunk_pitch: float = float(np.deg2rad(11.5))
    mode: str = "com"  # "com" | "trunk"
    contact_freeze_cap: float = 0.200

    def __post_init__(self):
        for name in ("single_support", "double_support", "control_period", "replan_period"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.swing_plateau_ratio < 1.0:
            raise ValueError("swing_plateau_ratio must be in (0, 1)")
        if self.control_period > self.replan_period:
            raise ValueError("control_period must not exceed replan_period")
        if self.mode not in ("com", "trunk"):
            raise ValueError(f"invalid mode {self.mode!r}")


@dataclass
class TickTargets:
    """The four task targets of one control tick."""

    time: float
    phase: str  # "single" | "double"
    support_side: str
    com_position: np.ndarray
    trunk_position: np.ndarray
    trunk_orientation: np.ndarray
    trunk_frame: str
    support_frame: str
    support_target: Tuple[np.ndarray, np.ndarray]  # (rotation, point)
    swing_frame: str
    swing_target: Tuple[np.ndarray, np.ndarray]
    frozen: bool = False
    forced: bool = False


@dataclass
class _Segment:
    kind: str  # "single" | "double"
    t0: float
    t1: float
    support_side: str
    support_pose: Pose2
    other_side: str
    other_pose: Pose2  # planted pose of the non-support foot (end pose during swing)
    swing: Optional[SwingTrajectory] = None
    index: int = 0


def _planar_of(r: np.ndarray, p: np.ndarray) -> Pose2:
    return Pose2(p[0], p[1], float(np.arctan2(r[1, 0], r[0, 0])))


def _flat_pose(pose: Pose2, z: float) -> Tuple[np.ndarray, np.ndarray]:
    return rpy_to_matrix(0.0, 0.0, pose.theta), np.array([pose.x, pose.y, z])


def _circular_mean(a: float, b: float) -> float:
    return wrap_angle(a + 0.5 * wrap_angle(b - a))


class WalkSession:
    """Single-writer walk state machine; tick() calls must be serialized."""

    def __init__(
        self,
        model: rb.RobotModel,
        footsteps: Sequence[FootstepState],
        params: WalkParams,
        preview: PreviewParams,
        initial: rb.Configuration,
        trunk_frame: str = "trunk",
        sole_frames: Optional[Dict[str, str]] = None,
        foot_length: float = 0.14,
        foot_width: float = 0.08,
    ):
        if not footsteps:
            raise ValueError("footstep list must not be empty")
        self.model = model
        self.params = params
        self.trunk_frame = trunk_frame
        self.sole_frames = sole_frames or {"left": "left_foot_sole", "right": "right_foot_sole"}
        self.initial = initial.copy().validate(model)

        poses = rb.fk_all(model, initial)
        stance = {side: poses[self.sole_frames[side]] for side in ("left", "right")}
        self.ground_z = float(np.mean([stance[s][1][2] for s in stance]))
        foot_print = {s: _planar_of(*stance[s]) for s in stance}

        com0 = rb.com(model, initial, poses)
        height = float(com0[2] - self.ground_z)
        self.preview = dataclasses.replace(preview, com_height=height)
        self.trunk_offset = poses[trunk_frame][1] - com0

        dt = self.preview.dt
        n_ss = max(1, round(params.single_support / dt))
        n_ds = max(1, round(params.double_support / dt))
        self.ss_duration = n_ss * dt
        self.ds_duration = n_ds * dt

        placements = list(footsteps)
        prints = [(foot_print["left"], "left"), (foot_print["right"], "right")] + [
            (f.support_pose, f.support_side) for f in placements
        ]
        self.foot_length = foot_length
        self.foot_width = foot_width
        self.schedule = build_schedule(
            prints, self.ss_duration, self.ds_duration, self.foot_length, self.foot_width, self.preview
        )

        # phase timeline
        segments: List[_Segment] = []
        first_side = placements[0].support_side
        support_side = "right" if first_side == "left" else "left"
        current = dict(foot_print)
        t = 0.0
        segments.append(
            _Segment("double", t, t + self.ds_duration, support_side, current[support_side],
                     first_side, current[first_side], index=0)
        )
        t += self.ds_duration
        for i, pl in enumerate(placements):
            side = pl.support_side
            sup = "right" if side == "left" else "left"
            traj = swing_trajectory(
                current[side], pl.support_pose, self.ground_z, params.swing_height,
                self.ss_duration, params.swing_plateau_ratio,
            )
            segments.append(
                _Segment("single", t, t + self.ss_duration, sup, current[sup], side,
                         pl.support_pose, swing=traj, index=i + 1)
            )
            t += self.ss_duration
            current[side] = pl.support_pose
            other = sup
            segments.append(
                _Segment("double", t, t + self.ds_duration, side, current[side], other,
                         current[other], index=i + 1)
            )
            t += self.ds_duration
        last = segments[-1]
        segments.append(
            _Segment("double", t, np.inf, last.support_side, last.support_pose,
                     last.other_side, last.other_pose, index=last.index)
        )
        self.segments = segments
        self.walk_end = t
        self.exchange_times = [s.t1 for s in segments if s.kind == "single"]

        # initial CoM plan, anchored at preview step 0
        c_init = ComState(com0[:2], np.zeros(2), np.zeros(2))
        self._plans: List[Tuple[int, object]] = []
        self._plan(0, c_init)
        self._next_replan = params.replan_period

        self._wall_origin: Optional[float] = None
        self._last_wall = -np.inf
        self._last_traj_t = 0.0
        self._delay = 0.0
        self._frozen_at: Optional[float] = None
        self._freeze_wall_start = 0.0
        self.forced_exchanges = 0

    # -- CoM planning ---------------------------------------------------------

    def _plan(self, anchor_step: int, c_init: ComState):
        n = self.preview.horizon_steps
        window, c_final = self.schedule.stopping_window(anchor_step, n)
        traj = plan_com(c_init, c_final, window, self.preview)
        self._plans.append((anchor_step, traj))
        # drop plans superseded before they were ever active
        keep = []
        for i, (a, tr) in enumerate(self._plans):
            later = [b for b, _ in self._plans[i + 1 :]]
            if not any(b <= a for b in later):
                keep.append((a, tr))
        self._plans = keep

    def _active_plan(self, t: float):
        dt = self.preview.dt
        best = self._plans[0]
        for a, tr in self._plans:
            if a * dt <= t + 1e-12:
                best = (a, tr)
        return best

    def com_state(self, t: float) -> ComState:
        a, tr = self._active_plan(t)
        local = min(max(t - a * self.preview.dt, 0.0), tr.duration)
        return tr.eval(local)

    def _maybe_replan(self, t: float):
        dt = self.preview.dt
        while self._next_replan <= t + 1e-12:
            anchor = int(np.ceil((self._next_replan - 1e-12) / dt))
            if all(a != anchor for a, _ in self._plans):
                self._plan(anchor, self._state_at_anchor(anchor))
            self._next_replan += self.params.replan_period

    def _state_at_anchor(self, anchor: int) -> ComState:
        # the anchor may be ahead of the clock; evaluate the newest plan covering it
        a, tr = max(((b, q) for b, q in self._plans if b <= anchor), key=lambda x: x[0])
        local = min((anchor - a) * self.preview.dt, tr.duration)
        return tr.eval(local)

    # -- ticking --------------------------------------------------------------

    def tick(self, now: float, swing_contact: bool = True) -> TickTargets:
        if self._wall_origin is None:
            self._wall_origin = now
        if now < self._last_wall - 1e-12:
            raise ValueError("tick times must be non-decreasing")
        self._last_wall = now
        wall_t = now - self._wall_origin

        if self._frozen_at is not None:
            held = wall_t - self._freeze_wall_start
            forced = held >= self.params.contact_freeze_cap - 1e-12
            if swing_contact or forced:
                self._delay += held
                self._last_traj_t = self._frozen_at
                self._frozen_at = None
                if forced and not swing_contact:
                    self.forced_exchanges += 1
            else:
                return self._targets_at(self._frozen_at, frozen=True)

        t = wall_t - self._delay
        if not swing_contact:
            for tx in self.exchange_times:
                if self._last_traj_t < tx <= t:
                    self._frozen_at = tx
                    self._freeze_wall_start = wall_t - (t - tx)
                    self._maybe_replan(tx)
                    self._last_traj_t = tx
                    return self._targets_at(tx, frozen=True)
        self._maybe_replan(t)
        self._last_traj_t = t
        return self._targets_at(t)

    def _segment_at(self, t: float) -> _Segment:
        for seg in self.segments:
            if t < seg.t1:
                return seg
        return self.segments[-1]

    def _targets_at(self, t: float, frozen: bool = False) -> TickTargets:
        seg = self._segment_at(t)
        sup_r, sup_p = _flat_pose(seg.support_pose, self.ground_z)
        if seg.kind == "single":
            local = min(max(t - seg.t0, 0.0), seg.swing.duration)
            sw_pose = seg.swing.pose(local)
            sw_r, sw_p = _flat_pose(sw_pose, seg.swing.height(local))
            swing_yaw = sw_pose.theta
        else:
            sw_r, sw_p = _flat_pose(seg.other_pose, self.ground_z)
            swing_yaw = seg.other_pose.theta

        st = self.com_state(t)
        com_pos = np.array([st.pos[0], st.pos[1], self.ground_z + self.preview.com_height])
        trunk_pos = com_pos + self.trunk_offset
        yaw = _circular_mean(seg.support_pose.theta, swing_yaw)
        trunk_r = rpy_to_matrix(0.0, self.params.trunk_pitch, yaw)

        return TickTargets(
            time=t,
            phase=seg.kind,
            support_side=seg.support_side,
            com_position=com_pos,
            trunk_position=trunk_pos,
            trunk_orientation=trunk_r,
            trunk_frame=self.trunk_frame,
            support_frame=self.sole_frames[seg.support_side],
            support_target=(sup_r, sup_p),
            swing_frame=self.sole_frames[seg.other_side],
            swing_target=(sw_r, sw_p),
            frozen=frozen,
            forced=self.forced_exchanges > 0,
        )


def make_ready_configuration(
    model: rb.RobotModel,
    crouch: float = 0.35,
    trunk_pitch: float = 0.0,
    base_pose: Pose2 = Pose2(),
    sole_frames: Optional[Dict[str, str]] = None,
    joint_overrides: Optional[Dict[str, float]] = None,
) -> rb.Configuration:
    """Symmetric bent-knee stance with soles flat on the ground plane z = 0.

    The trunk is pitched by `trunk_pitch` and the hip pitch counter-rotates so
    the legs stay vertical; the base height is solved so soles touch z = 0.
    """
    sole_frames = sole_frames or {"left": "left_foot_sole", "right": "right_foot_sole"}
    q = np.zeros(model.nj)
    idx = {name: i for i, name in enumerate(model.joint_order)}
    for side in ("left", "right"):
        q[idx[f"{side}_hip_pitch"]] = -crouch - trunk_pitch
        q[idx[f"{side}_knee"]] = 2.0 * crouch
        q[idx[f"{side}_ankle_pitch"]] = -crouch
    for name, value in (joint_overrides or {}).items():
        q[idx[name]] = value
    pitch_r = rpy_to_matrix(0.0, trunk_pitch, base_pose.theta)
    from .so3 import matrix_to_quat

    cfg = rb.Configuration(np.zeros(3), matrix_to_quat(pitch_r), q)
    poses = rb.fk_all(model, cfg)
    sole_z = min(poses[sole_frames[s]][1][2] for s in ("left", "right"))
    sole_mid = 0.5 * (poses[sole_frames["left"]][1] + poses[sole_frames["right"]][1])
    base = np.array(
        [base_pose.x - sole_mid[0], base_pose.y - sole_mid[1], -sole_z]
    )
    return rb.Configuration(base, matrix_to_quat(pitch_r), q).validate(model)


def velocity_report(times: np.ndarray, joints: np.ndarray, joint_names, model: rb.RobotModel) -> dict:
    """Finite-difference per-joint max |velocity| against model limits."""
    times = np.asarray(times, dtype=float)
    joints = np.asarray(joints, dtype=float)
    if joints.shape[0] < 2:
        raise ValueError("need at least 2 samples for a velocity report")
    dt = np.diff(times)[:, None]
    vel = np.abs(np.diff(joints, axis=0) / dt)
    vmax = vel.max(axis=0)
    limits = model.velocity_limits()
    rows = {}
    for i, name in enumerate(joint_names):
        rows[name] = {
            "max_velocity": float(vmax[i]),
            "limit": float(limits[i]),
            "exceeds": bool(vmax[i] > limits[i]),
        }
    return {
        "joints": rows,
        "any_exceeds": bool(np.any(vmax > limits)),
    }


def run_walk(
    model: rb.RobotModel,
    q_init: rb.Configuration,
    footsteps: Sequence[FootstepState],
    walk_params: WalkParams,
    preview_params: PreviewParams,
    ik_params,
    settle: float = 0.2,
    contact_fn=None,
):
    """Drive the full pipeline: session ticks through IK tracking.

    Returns (session, ik.TrackResult, targets log)."""
    from . import ik as ik_mod

    session = WalkSession(model, footsteps, walk_params, preview_params, q_init)
    duration = session.walk_end + settle
    n_ticks = int(round(duration / walk_params.control_period))
    targets_log: List[TickTargets] = []

    def stream():
        for k in range(n_ticks):
            t = k * walk_params.control_period
            contact = True if contact_fn is None else contact_fn(t)
            targets = session.tick(t, contact)
            targets_log.append(targets)
            yield targets

    result = ik_mod.track(model, q_init, stream(), ik_params)
    return session, result, targets_log
