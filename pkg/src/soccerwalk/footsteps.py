"""Footstep environment: geometric step dynamics, ellipsoid action clipping,
target-frame observations, cost-shaped reward, a deterministic baseline planner
and the step-count estimator used by the kick strategy."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .geom import Pose2, wrap_angle

LEFT = "left"
RIGHT = "right"

#: Step count reported when the planner hits its cap (large, finite sentinel).
NON_CONVERGED_STEPS = 10_000


@dataclass(frozen=True)
class StepParams:
    dx_max: float = 0.08
    dy_max: float = 0.04
    dtheta_max: float = 0.35
    feet_spacing: float = 0.10
    tol_x: float = 0.05
    tol_theta: float = 0.17
    step_cost: float = 1.0
    shaping_alpha: float = 0.0
    ball_collision_penalty: float = 10.0
    ball_radius: float = 0.07
    # foot contact patch, used for ball-collision checks
    foot_length: float = 0.14
    foot_width: float = 0.08

    def __post_init__(self):
        for name in ("dx_max", "dy_max", "dtheta_max", "feet_spacing", "tol_x", "tol_theta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.shaping_alpha < 0:
            raise ValueError("shaping_alpha must be >= 0")

    @property
    def foot_half_diagonal(self) -> float:
        return 0.5 * float(np.hypot(self.foot_length, self.foot_width))

    @property
    def collision_radius(self) -> float:
        return self.ball_radius + self.foot_half_diagonal


@dataclass(frozen=True)
class FootstepState:
    support_pose: Pose2
    support_side: str  # "left" | "right"

    def __post_init__(self):
        if self.support_side not in (LEFT, RIGHT):
            raise ValueError(f"invalid side {self.support_side!r}")


@dataclass(frozen=True)
class StepAction:
    dx: float = 0.0
    dy: float = 0.0
    dtheta: float = 0.0


@dataclass(frozen=True)
class Observation:
    """Support pose expressed in the target frame plus the side flag."""

    x: float
    y: float
    theta: float
    side: str

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta, 1.0 if self.side == LEFT else -1.0])


def other_side(side: str) -> str:
    return RIGHT if side == LEFT else LEFT


def ellipsoid_radius(a: StepAction, p: StepParams) -> float:
    return float(
        np.sqrt(
            (a.dx / p.dx_max) ** 2 + (a.dy / p.dy_max) ** 2 + (a.dtheta / p.dtheta_max) ** 2
        )
    )


def clip_action(a: StepAction, p: StepParams) -> StepAction:
    """Radially scale the action back onto the step ellipsoid when outside it.

    The small slack keeps clipping exactly idempotent: a clipped action lands
    within one rounding step of the boundary and is then left untouched."""
    s = ellipsoid_radius(a, p)
    if s <= 1.0 + 1e-12:
        return a
    return StepAction(a.dx / s, a.dy / s, a.dtheta / s)


def neutral_pose(state: FootstepState, p: StepParams) -> Pose2:
    """Where a zero step would land: the support pose mirrored across the body midline."""
    shift = -p.feet_spacing if state.support_side == LEFT else p.feet_spacing
    return state.support_pose.compose(Pose2(0.0, shift, 0.0))


def midline_pose(state: FootstepState, p: StepParams) -> Pose2:
    shift = -0.5 * p.feet_spacing if state.support_side == LEFT else 0.5 * p.feet_spacing
    return state.support_pose.compose(Pose2(0.0, shift, 0.0))


def placement(state: FootstepState, a: StepAction, p: StepParams) -> Pose2:
    return neutral_pose(state, p).compose(Pose2(a.dx, a.dy, a.dtheta))


def step(state: FootstepState, a: StepAction, p: StepParams) -> FootstepState:
    """Purely geometric step: the new support foot lands at neutral * action."""
    return FootstepState(placement(state, a, p), other_side(state.support_side))


def observe(state: FootstepState, target: Pose2) -> Observation:
    rel = target.inverse().compose(state.support_pose)
    return Observation(rel.x, rel.y, rel.theta, state.support_side)


def state_from_observation(obs: Observation, target: Pose2) -> FootstepState:
    return FootstepState(target.compose(Pose2(obs.x, obs.y, obs.theta)), obs.side)


def collides_ball(pose: Pose2, ball, p: StepParams) -> bool:
    """Foot disc (at the foot center) against ball disc."""
    if ball is None:
        return False
    return float(np.hypot(pose.x - ball[0], pose.y - ball[1])) < p.collision_radius


def _potential(state: FootstepState, target: Pose2, p: StepParams) -> float:
    n = neutral_pose(state, p)
    dist = float(np.hypot(n.x - target.x, n.y - target.y))
    ang = abs(wrap_angle(n.theta - target.theta))
    return dist + (p.tol_x / p.tol_theta) * ang


def reward(
    state: FootstepState,
    a: StepAction,
    next_state: FootstepState,
    ball,
    target: Pose2,
    p: StepParams,
) -> float:
    """Cost-shaped reward: step cost, potential-difference shaping, ball collision penalty."""
    r = -p.step_cost
    if p.shaping_alpha > 0.0:
        r -= p.shaping_alpha * (_potential(next_state, target, p) - _potential(state, target, p))
    if collides_ball(next_state.support_pose, ball, p):
        r -= p.ball_collision_penalty
    return r


def is_done(state: FootstepState, target: Pose2, p: StepParams) -> bool:
    n = neutral_pose(state, p)
    dist = float(np.hypot(n.x - target.x, n.y - target.y))
    ang = abs(wrap_angle(n.theta - target.theta))
    return dist <= p.tol_x and ang <= p.tol_theta


@dataclass
class PlanResult:
    steps: List[FootstepState]
    converged: bool
    reason: str = ""

    def __iter__(self):
        return iter(self.steps)

    def __len__(self) -> int:
        return len(self.steps)


PolicyFn = Callable[[Observation], StepAction]


def _segment_point_distance(a: np.ndarray, b: np.ndarray, q: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-18:
        return float(np.linalg.norm(q - a))
    t = np.clip(float((q - a) @ ab) / denom, 0.0, 1.0)
    return float(np.linalg.norm(q - (a + t * ab)))


def _detour_aim(mid_xy: np.ndarray, target_xy: np.ndarray, ball, p: StepParams):
    """Replace the aim point with a waypoint beside (and past) the ball when it
    blocks the direct route."""
    if ball is None:
        return target_xy
    b = np.asarray(ball, dtype=float)
    clear = p.collision_radius + p.feet_spacing + 0.05
    target_gap = float(np.linalg.norm(target_xy - b))
    if target_gap <= p.collision_radius + 0.03:
        return target_xy  # target is on the disc itself; candidate repair handles safety
    # shrink the detour radius when the target itself sits close to the ball
    clear = max(min(clear, target_gap - 0.01), p.collision_radius + 0.02)
    seg = target_xy - mid_xy
    seg_len = float(np.linalg.norm(seg))
    if seg_len < 1e-9:
        return target_xy
    t = float((b - mid_xy) @ seg) / (seg_len * seg_len)
    perp_dist = float(np.linalg.norm(b - (mid_xy + np.clip(t, 0.0, 1.0) * seg)))
    if not (0.0 < t < 1.0) or perp_dist >= clear:
        return target_xy
    along = seg / seg_len
    rel = mid_xy - b
    side = np.sign(along[0] * rel[1] - along[1] * rel[0]) or 1.0
    # waypoint perpendicular to the approach direction so the route to it stays
    # tangent to the clearance disc instead of clipping it
    to_ball = b - mid_xy
    d_mb = float(np.linalg.norm(to_ball))
    tang = np.array([-to_ball[1], to_ball[0]]) / d_mb if d_mb > 1e-9 else np.array([-along[1], along[0]])
    if np.sign(along[0] * tang[1] - along[1] * tang[0]) != side:
        tang = -tang
    return b + clear * tang


def _baseline_action(state: FootstepState, target: Pose2, ball, p: StepParams) -> StepAction:
    """Rotate toward the goal, walk forward with clipped steps (detouring around
    the ball), then steer each new foot onto its finishing placement."""
    neutral = neutral_pose(state, p)
    mid = midline_pose(state, p)
    mid_xy = np.array([mid.x, mid.y])
    dist_target = float(np.hypot(target.x - mid.x, target.y - mid.y))
    endgame_clear = ball is None or _segment_point_distance(
        mid_xy, np.array([target.x, target.y]), np.asarray(ball, dtype=float)
    ) >= p.collision_radius + 0.01

    if dist_target > 0.30 or not endgame_clear:
        aim = _detour_aim(mid_xy, np.array([target.x, target.y]), ball, p)
        e = mid.inverse().compose(Pose2(aim[0], aim[1], target.theta))
        bearing = float(np.arctan2(e.y, e.x))
        if abs(bearing) > 0.8:
            return StepAction(0.0, 0.0, float(np.clip(bearing, -p.dtheta_max, p.dtheta_max)))
        return StepAction(
            float(np.clip(e.x, -p.dx_max, p.dx_max)),
            float(np.clip(e.y, -p.dy_max, p.dy_max)),
            float(np.clip(0.6 * bearing, -0.5 * p.dtheta_max, 0.5 * p.dtheta_max)),
        )

    # endgame: place the next foot toward the mirror of the target so the new
    # neutral frame converges onto the target pose
    next_side = other_side(state.support_side)
    off = p.feet_spacing if next_side == LEFT else -p.feet_spacing
    desired = target.compose(Pose2(0.0, off, 0.0))
    rel = neutral.inverse().compose(desired)
    return StepAction(
        float(np.clip(rel.x, -p.dx_max, p.dx_max)),
        float(np.clip(rel.y, -p.dy_max, p.dy_max)),
        float(np.clip(rel.theta, -p.dtheta_max, p.dtheta_max)),
    )


def _collision_free_action(state: FootstepState, a: StepAction, ball, p: StepParams):
    """Clip, then repair the action so the placed foot clears the ball disc.

    Returns None when no safe candidate is found (planner gives up rather than
    emit a colliding footstep)."""
    a = clip_action(a, p)
    if ball is None:
        return a
    margin = 0.005
    cand = placement(state, a, p)
    b = np.asarray(ball, dtype=float)
    if float(np.hypot(cand.x - b[0], cand.y - b[1])) > p.collision_radius + margin:
        return a
    neutral = neutral_pose(state, p)
    # push the placement radially out of the inflated disc
    outward = np.array([cand.x - b[0], cand.y - b[1]])
    nrm = float(np.linalg.norm(outward))
    outward = outward / nrm if nrm > 1e-9 else np.array([1.0, 0.0])
    fixed_xy = b + outward * (p.collision_radius + 2.0 * margin)
    rel = neutral.inverse().compose(Pose2(fixed_xy[0], fixed_xy[1], cand.theta))
    a2 = clip_action(StepAction(rel.x, rel.y, rel.theta), p)
    cand2 = placement(state, a2, p)
    if float(np.hypot(cand2.x - b[0], cand2.y - b[1])) > p.collision_radius + margin:
        return a2
    # last resort: largest clipped step straight away from the ball
    away = np.array([neutral.x - b[0], neutral.y - b[1]])
    nrm = float(np.linalg.norm(away))
    away = away / nrm if nrm > 1e-9 else np.array([-1.0, 0.0])
    c, s = np.cos(neutral.theta), np.sin(neutral.theta)
    local = np.array([c * away[0] + s * away[1], -s * away[0] + c * away[1]])
    a3 = clip_action(StepAction(10.0 * p.dx_max * local[0], 10.0 * p.dy_max * local[1], 0.0), p)
    cand3 = placement(state, a3, p)
    if float(np.hypot(cand3.x - b[0], cand3.y - b[1])) > p.collision_radius + margin:
        return a3
    return None


def plan(
    start: FootstepState,
    target: Pose2,
    ball=None,
    p: StepParams = StepParams(),
    policy: Optional[PolicyFn] = None,
    step_cap: int = 300,
) -> PlanResult:
    """Roll the baseline (or an external) policy out to the target.

    The returned sequence contains the successive new support states; it is
    empty when the start state already satisfies the tolerances.
    """
    if step_cap <= 0:
        raise ValueError("step_cap must be positive")
    steps: List[FootstepState] = []
    state = start
    for _ in range(step_cap):
        if is_done(state, target, p):
            return PlanResult(steps, True)
        if policy is not None:
            raw = policy(observe(state, target))
        else:
            raw = _baseline_action(state, target, ball, p)
        action = _collision_free_action(state, raw, ball, p)
        if action is None:
            return PlanResult(steps, False, "no collision-free step available")
        state = step(state, action, p)
        steps.append(state)
    if is_done(state, target, p):
        return PlanResult(steps, True)
    return PlanResult(steps, False, "step cap reached")


def start_state_for_pose(robot_pose: Pose2, p: StepParams) -> FootstepState:
    """Canonical stance for a body-midline pose: left support half a spacing out."""
    return FootstepState(robot_pose.compose(Pose2(0.0, 0.5 * p.feet_spacing, 0.0)), LEFT)


def estimate_step_count(
    robot_pose: Pose2,
    kick_pose: Pose2,
    p: StepParams = StepParams(),
    ball=None,
    policy: Optional[PolicyFn] = None,
    step_cap: int = 300,
) -> int:
    """Number of baseline-policy steps from a body pose to a placement target."""
    result = plan(start_state_for_pose(robot_pose, p), kick_pose, ball, p, policy, step_cap)
    if not result.converged:
        return NON_CONVERGED_STEPS
    return len(result.steps)


def plan_to_json(result: PlanResult) -> str:
    rows = [
        {"x": s.support_pose.x, "y": s.support_pose.y, "theta": s.support_pose.theta, "side": s.support_side}
        for s in result.steps
    ]
    return json.dumps(rows, indent=2)


def plan_from_json(text: str) -> List[FootstepState]:
    return [
        FootstepState(Pose2(row["x"], row["y"], row["theta"]), row["side"])
        for row in json.loads(text)
    ]
