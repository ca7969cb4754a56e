"""Kick decision making: outcome sampling, time-based MDP reward, offline value
iteration over ball positions, online one-step search with augmented rewards,
and footstep-count re-ranking of the top actions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .geom import Pose2, wrap_angle


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class FieldModel:
    length: float = 9.0
    width: float = 6.0
    goal_width: float = 2.6
    grid_resolution: float = 0.1
    # protection zone in front of the own goal (used by the approach penalty)
    goal_area_length: float = 1.0
    goal_area_width: float = 3.0

    def __post_init__(self):
        for name in ("length", "width", "goal_width", "grid_resolution"):
            if getattr(self, name) <= 0:
                raise StrategyError(f"{name} must be positive")
        for n, dim in (("nx", self.length), ("ny", self.width)):
            cells = dim / self.grid_resolution
            if abs(cells - round(cells)) > 1e-9:
                raise StrategyError("grid resolution must divide the field dimensions")

    @property
    def nx(self) -> int:
        return int(round(self.length / self.grid_resolution))

    @property
    def ny(self) -> int:
        return int(round(self.width / self.grid_resolution))

    @property
    def half_length(self) -> float:
        return 0.5 * self.length

    @property
    def half_width(self) -> float:
        return 0.5 * self.width

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(abs(p[0]) <= self.half_length and abs(p[1]) <= self.half_width)

    def cell_centers(self) -> np.ndarray:
        """(ny*nx, 2) centers, row-major over (iy, ix)."""
        res = self.grid_resolution
        xs = -self.half_length + (np.arange(self.nx) + 0.5) * res
        ys = -self.half_width + (np.arange(self.ny) + 0.5) * res
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx.ravel(), gy.ravel()], axis=1)

    def cell_index(self, points: np.ndarray) -> np.ndarray:
        """Flat cell index of each 2D point (clipped to the grid)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        res = self.grid_resolution
        ix = np.clip(((p[:, 0] + self.half_length) / res).astype(int), 0, self.nx - 1)
        iy = np.clip(((p[:, 1] + self.half_width) / res).astype(int), 0, self.ny - 1)
        return iy * self.nx + ix

    def opponent_goal_segment(self) -> Tuple[np.ndarray, np.ndarray]:
        x = self.half_length
        return np.array([x, -0.5 * self.goal_width]), np.array([x, 0.5 * self.goal_width])

    def own_goal_zone(self) -> Tuple[float, float, float]:
        """(x_min, x_max, half_width) of the protection area in front of the own goal."""
        return -self.half_length, -self.half_length + self.goal_area_length, 0.5 * self.goal_area_width


@dataclass(frozen=True)
class KickTemplate:
    name: str
    placement_offset: Pose2  # robot pose relative to the ball, in the kick frame
    length_mean: float
    length_std: float
    angle_std: float
    nominal_direction: float = 0.0  # ball travel direction relative to the robot heading

    def __post_init__(self):
        if self.length_mean <= 0:
            raise StrategyError("kick length mean must be positive")
        if self.length_std < 0 or self.angle_std < 0:
            raise StrategyError("kick deviations must be >= 0")


def default_templates() -> List[KickTemplate]:
    deg = math.pi / 180.0
    return [
        KickTemplate("classic", Pose2(-0.15, -0.05, 0.0), 2.0, 0.5, 10 * deg, 0.0),
        KickTemplate("small", Pose2(-0.12, -0.05, 0.0), 0.7, 0.2, 10 * deg, 0.0),
        KickTemplate("lateral", Pose2(-0.05, 0.15, 0.0), 0.8, 0.3, 15 * deg, -math.pi / 2),
        KickTemplate("diag", Pose2(-0.14, 0.04, 0.0), 1.2, 0.4, 12 * deg, -math.pi / 4),
    ]


@dataclass(frozen=True)
class StrategyParams:
    t_k: float = 8.0  # kick duration (s)
    t_p: float = 60.0  # out-of-field penalty (s)
    walk_speed: float = 0.15  # m/s
    turn_speed: float = 0.8  # rad/s
    grass_factor: float = 0.30  # length multiplier when kicking against the grass
    grass_direction: float = 0.0  # direction the grass blades lean toward
    collision_probability: float = 0.5
    indirect_penalty: float = 30.0
    opponent_closer_penalty: float = 10.0
    own_goal_obstruction_penalty: float = 15.0
    robot_radius: float = 0.2
    n_samples: int = 16
    vi_tolerance: float = 1e-6
    vi_max_iterations: int = 2000
    top_fraction: float = 0.10
    yaw_bins: int = 16
    seed: int = 12345

    def __post_init__(self):
        if self.t_k <= 0 or self.t_p <= 0:
            raise StrategyError("t_k and t_p must be positive")
        for name in ("grass_factor", "collision_probability", "top_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise StrategyError(f"{name} must be in [0, 1]")
        if self.n_samples < 1:
            raise StrategyError("n_samples must be >= 1")
        if self.walk_speed <= 0 or self.turn_speed <= 0:
            raise StrategyError("walk and turn speeds must be positive")


@dataclass
class Scenario:
    ball: np.ndarray
    allies: List[Pose2] = field(default_factory=list)
    opponents: List[np.ndarray] = field(default_factory=list)
    indirect_free_kick: bool = False
    robot: int = 0  # acting ally index

    def __post_init__(self):
        self.ball = np.asarray(self.ball, dtype=float).reshape(2)
        self.opponents = [np.asarray(o, dtype=float).reshape(2) for o in self.opponents]
        if self.allies and not 0 <= self.robot < len(self.allies):
            raise StrategyError("acting robot index out of range")

    def validate(self, field_model: FieldModel) -> "Scenario":
        if not field_model.contains(self.ball):
            raise StrategyError("ball must be inside the field")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        return cls(
            ball=np.asarray(data["ball"], dtype=float),
            allies=[Pose2(*a) for a in data.get("allies", [])],
            opponents=[np.asarray(o, dtype=float) for o in data.get("opponents", [])],
            indirect_free_kick=bool(data.get("indirect", False)),
            robot=int(data.get("robot", 0)),
        )

    def to_dict(self) -> dict:
        return {
            "ball": [float(self.ball[0]), float(self.ball[1])],
            "allies": [[a.x, a.y, a.theta] for a in self.allies],
            "opponents": [[float(o[0]), float(o[1])] for o in self.opponents],
            "indirect": bool(self.indirect_free_kick),
            "robot": int(self.robot),
        }


@dataclass
class ValueGrid:
    values: np.ndarray  # (ny, nx), seconds (<= 0)
    field: FieldModel
    iterations: int
    converged: bool
    seed: int

    def value_at(self, point) -> float:
        idx = self.field.cell_index(np.asarray(point, dtype=float))[0]
        return float(self.values.ravel()[idx])

    def to_dict(self) -> dict:
        return {
            "geometry": {
                "length": self.field.length,
                "width": self.field.width,
                "goal_width": self.field.goal_width,
                "resolution": self.field.grid_resolution,
                "nx": self.field.nx,
                "ny": self.field.ny,
            },
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "seed": int(self.seed),
            "values": [[float(v) for v in row] for row in self.values],
        }

    @classmethod
    def from_dict(cls, data: dict, field_model: FieldModel) -> "ValueGrid":
        geom = data["geometry"]
        if (
            geom["nx"] != field_model.nx
            or geom["ny"] != field_model.ny
            or abs(geom["resolution"] - field_model.grid_resolution) > 1e-12
            or abs(geom["length"] - field_model.length) > 1e-12
            or abs(geom["width"] - field_model.width) > 1e-12
        ):
            raise StrategyError("value grid geometry does not match the field model")
        return cls(
            values=np.asarray(data["values"], dtype=float),
            field=field_model,
            iterations=int(data["iterations"]),
            converged=bool(data["converged"]),
            seed=int(data.get("seed", 0)),
        )


# -- kick outcome model --------------------------------------------------------


def grass_attenuation(direction: float, params: StrategyParams) -> float:
    """Length multiplier: 1 with the grass, `grass_factor` straight against it,
    cosine-blended in between."""
    c = math.cos(wrap_angle(direction - params.grass_direction))
    return 1.0 - (1.0 - params.grass_factor) * 0.5 * (1.0 - c)


def sample_kick(ball, yaw: float, template: KickTemplate, params: StrategyParams, rng) -> np.ndarray:
    """One sampled ball destination for a kick aimed along world direction `yaw`."""
    length = max(0.0, template.length_mean + template.length_std * rng.standard_normal())
    angle = yaw + template.angle_std * rng.standard_normal()
    length *= grass_attenuation(angle, params)
    b = np.asarray(ball, dtype=float)
    return b + length * np.array([math.cos(angle), math.sin(angle)])


def kick_offsets(template: KickTemplate, yaw: float, params: StrategyParams, rng, n: int) -> np.ndarray:
    """n sampled displacement vectors for (template, yaw); shared across cells."""
    lengths = np.maximum(0.0, template.length_mean + template.length_std * rng.standard_normal(n))
    angles = yaw + template.angle_std * rng.standard_normal(n)
    att = 1.0 - (1.0 - params.grass_factor) * 0.5 * (1.0 - np.cos(angles - params.grass_direction))
    lengths = lengths * att
    return np.stack([lengths * np.cos(angles), lengths * np.sin(angles)], axis=1)


def _segments_cross(p0, p1, q0, q1) -> np.ndarray:
    """Vectorized proper/touching segment intersection: p-rows against one segment q."""
    p0 = np.atleast_2d(p0)
    p1 = np.atleast_2d(p1)
    d = p1 - p0
    e = q1 - q0
    denom = d[:, 0] * e[1] - d[:, 1] * e[0]
    diff = q0 - p0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (diff[:, 0] * e[1] - diff[:, 1] * e[0]) / denom
        u = (diff[:, 0] * d[:, 1] - diff[:, 1] * d[:, 0]) / denom
    ok = np.isfinite(t) & np.isfinite(u)
    return ok & (t >= 0.0) & (t <= 1.0) & (u >= 0.0) & (u <= 1.0)


def crosses_goal(start, dest, field_model: FieldModel) -> bool:
    g0, g1 = field_model.opponent_goal_segment()
    return bool(_segments_cross(np.asarray(start, dtype=float), np.asarray(dest, dtype=float), g0, g1)[0])


def walk_time(from_point, to_point, params: StrategyParams, heading: Optional[float] = None) -> float:
    """Distance over walk speed, plus the turn toward the destination when the
    walker's heading is known."""
    a = np.asarray(from_point, dtype=float)
    b = np.asarray(to_point, dtype=float)
    d = float(np.linalg.norm(b - a))
    t = d / params.walk_speed
    if heading is not None and d > 1e-9:
        bearing = math.atan2(b[1] - a[1], b[0] - a[0])
        t += abs(wrap_angle(bearing - heading)) / params.turn_speed
    return t


def reward(s, destination, field_model: FieldModel, params: StrategyParams, walk_t: float) -> float:
    """Time-cost reward: goal, stay-on-field, or out of the field."""
    if crosses_goal(s, destination, field_model):
        return -params.t_k
    if field_model.contains(destination):
        return -params.t_k - walk_t
    return -params.t_p


# -- offline value iteration ----------------------------------------------------


def action_space(templates: Sequence[KickTemplate], params: StrategyParams) -> List[Tuple[KickTemplate, float]]:
    """(template, yaw) pairs; yaw bins cover (-pi, pi] uniformly."""
    bins = params.yaw_bins
    yaws = [wrap_angle(-math.pi + (b + 1) * 2.0 * math.pi / bins) for b in range(bins)]
    return [(tpl, yaw) for tpl in templates for yaw in yaws]


def value_iteration(
    field_model: FieldModel,
    templates: Sequence[KickTemplate],
    params: StrategyParams,
) -> ValueGrid:
    """Baseline values (negative seconds-to-score) over discretized ball positions.

    Expectations use common random numbers: one offset tensor per (action,
    sample), drawn once from the configured seed and shared by every cell."""
    centers = field_model.cell_centers()  # (C, 2)
    actions = action_space(templates, params)
    n_cells = centers.shape[0]
    n_act = len(actions)
    n_s = params.n_samples
    rng = np.random.default_rng(params.seed)

    offsets = np.stack(
        [kick_offsets(tpl, yaw, params, rng, n_s) for tpl, yaw in actions]
    )  # (A, S, 2)
    dests = centers[:, None, None, :] + offsets[None, :, :, :]  # (C, A, S, 2)
    flat = dests.reshape(-1, 2)
    starts = np.broadcast_to(centers[:, None, None, :], dests.shape).reshape(-1, 2)

    g0, g1 = field_model.opponent_goal_segment()
    goal = _segments_cross(starts, flat, g0, g1)
    inside = (np.abs(flat[:, 0]) <= field_model.half_length) & (
        np.abs(flat[:, 1]) <= field_model.half_width
    )
    on_field = inside & ~goal
    out = ~inside & ~goal

    idx = field_model.cell_index(flat)
    tw = np.linalg.norm(offsets, axis=2) / params.walk_speed  # (A, S)
    tw_full = np.broadcast_to(tw[None], (n_cells, n_act, n_s)).reshape(-1)

    base = np.where(goal, -params.t_k, np.where(out, -params.t_p, -params.t_k - tw_full))
    base = base.reshape(n_cells, n_act, n_s)
    on_field = on_field.reshape(n_cells, n_act, n_s)
    idx = idx.reshape(n_cells, n_act, n_s)

    v = np.zeros(n_cells)
    iterations = 0
    converged = False
    for iterations in range(1, params.vi_max_iterations + 1):
        contrib = base + np.where(on_field, v[idx], 0.0)
        v_new = contrib.mean(axis=2).max(axis=1)
        change = float(np.max(np.abs(v_new - v)))
        v = v_new
        if change < params.vi_tolerance:
            converged = True
            break
    return ValueGrid(
        values=v.reshape(field_model.ny, field_model.nx),
        field=field_model,
        iterations=iterations,
        converged=converged,
        seed=params.seed,
    )


# -- online one-step search -----------------------------------------------------


@dataclass
class ActionEvaluation:
    template: str
    yaw: float
    value: float
    placement: Pose2
    index: int
    samples: List[List[float]] = field(default_factory=list)
    step_count: Optional[int] = None

    def to_dict(self) -> dict:
        out = {
            "template": self.template,
            "yaw": float(self.yaw),
            "value": float(self.value),
            "placement": [self.placement.x, self.placement.y, self.placement.theta],
            "index": int(self.index),
            "samples": self.samples,
        }
        if self.step_count is not None:
            out["steps"] = int(self.step_count)
        return out


def placement_pose(ball, yaw: float, template: KickTemplate) -> Pose2:
    """Where the robot must stand (world) to fire `template` along `yaw`."""
    heading = wrap_angle(yaw - template.nominal_direction)
    b = np.asarray(ball, dtype=float)
    return Pose2(b[0], b[1], heading).compose(template.placement_offset)


def _first_disc_hit(p0: np.ndarray, p1: np.ndarray, discs: List[np.ndarray], radius: float):
    """Earliest intersection of segment p0->p1 with any disc; None if clear."""
    d = p1 - p0
    seg2 = float(d @ d)
    if seg2 < 1e-18:
        return None
    best_t = None
    for c in discs:
        f = p0 - c
        a = seg2
        b = 2.0 * float(f @ d)
        cc = float(f @ f) - radius * radius
        disc = b * b - 4 * a * cc
        if disc <= 0:
            continue
        sq = math.sqrt(disc)
        for t in ((-b - sq) / (2 * a), (-b + sq) / (2 * a)):
            if 0.0 <= t <= 1.0:
                if best_t is None or t < best_t:
                    best_t = t
                break
    if best_t is None:
        return None
    return p0 + best_t * d


def _segment_hits_rect(p0: np.ndarray, p1: np.ndarray, x0: float, x1: float, half_w: float) -> bool:
    """Does segment p0->p1 touch the axis-aligned rectangle [x0,x1] x [-hw,hw]?"""
    lo = np.array([x0, -half_w])
    hi = np.array([x1, half_w])
    d = p1 - p0
    t0, t1 = 0.0, 1.0
    for ax in range(2):
        if abs(d[ax]) < 1e-12:
            if p0[ax] < lo[ax] or p0[ax] > hi[ax]:
                return False
        else:
            ta = (lo[ax] - p0[ax]) / d[ax]
            tb = (hi[ax] - p0[ax]) / d[ax]
            ta, tb = min(ta, tb), max(ta, tb)
            t0 = max(t0, ta)
            t1 = min(t1, tb)
            if t0 > t1:
                return False
    return True


def evaluate_actions(
    scenario: Scenario,
    grid: ValueGrid,
    field_model: FieldModel,
    templates: Sequence[KickTemplate],
    params: StrategyParams,
) -> List[ActionEvaluation]:
    """Expected augmented value of every (template, yaw) action, best first."""
    if not grid.converged:
        raise StrategyError("value grid is not converged")
    if grid.values.size == 0:
        raise StrategyError("value grid is empty")
    scenario.validate(field_model)
    ball = scenario.ball
    actor = scenario.allies[scenario.robot] if scenario.allies else Pose2(ball[0] - 0.2, ball[1], 0.0)
    rng = np.random.default_rng(params.seed)

    obstacles = [np.array([a.x, a.y]) for i, a in enumerate(scenario.allies) if i != scenario.robot]
    obstacles += [np.asarray(o, dtype=float) for o in scenario.opponents]

    zone_x0, zone_x1, zone_hw = field_model.own_goal_zone()

    def branch_value(dest: np.ndarray, placement: Pose2) -> float:
        if crosses_goal(ball, dest, field_model):
            r = -params.t_k
            if scenario.indirect_free_kick:
                r -= params.indirect_penalty
            return r
        if not field_model.contains(dest):
            return -params.t_p
        # walkers: every ally, with the kicker standing at its kick placement
        best_tw = math.inf
        for i, a in enumerate(scenario.allies):
            pose = placement if i == scenario.robot else a
            best_tw = min(best_tw, walk_time([pose.x, pose.y], dest, params, heading=pose.theta))
        if not scenario.allies:
            best_tw = walk_time([placement.x, placement.y], dest, params, heading=placement.theta)
        r = -params.t_k - best_tw + grid.value_at(dest)
        if scenario.opponents:
            d_opp = min(float(np.linalg.norm(o - dest)) for o in scenario.opponents)
            d_ally = min(
                float(np.hypot((placement if i == scenario.robot else a).x - dest[0],
                               (placement if i == scenario.robot else a).y - dest[1]))
                for i, a in enumerate(scenario.allies)
            ) if scenario.allies else float(np.hypot(placement.x - dest[0], placement.y - dest[1]))
            if d_opp < d_ally:
                r -= params.opponent_closer_penalty
        return r

    results: List[ActionEvaluation] = []
    for index, (tpl, yaw) in enumerate(action_space(templates, params)):
        place = placement_pose(ball, yaw, tpl)
        # approach-path penalty: walking to the placement through our goal area
        approach_penalty = 0.0
        if _segment_hits_rect(
            np.array([actor.x, actor.y]), np.array([place.x, place.y]), zone_x0, zone_x1, zone_hw
        ):
            approach_penalty = params.own_goal_obstruction_penalty
        total = 0.0
        sample_log: List[List[float]] = []
        for _ in range(params.n_samples):
            dest = sample_kick(ball, yaw, tpl, params, rng)
            hit = _first_disc_hit(ball, dest, obstacles, params.robot_radius)
            if hit is None:
                val = branch_value(dest, place)
            else:
                val = params.collision_probability * branch_value(hit, place) + (
                    1.0 - params.collision_probability
                ) * branch_value(dest, place)
            total += val
            sample_log.append([float(dest[0]), float(dest[1])])
        results.append(
            ActionEvaluation(
                template=tpl.name,
                yaw=yaw,
                value=total / params.n_samples - approach_penalty,
                placement=place,
                index=index,
                samples=sample_log,
            )
        )
    results.sort(key=lambda r: (-r.value, r.index))
    return results


StepEstimator = Callable[[Pose2, Pose2], int]


def select_with_footsteps(
    ranked: Sequence[ActionEvaluation],
    robot_pose: Pose2,
    params: StrategyParams,
    step_estimator: Optional[StepEstimator] = None,
) -> ActionEvaluation:
    """Among the top fraction, pick the action whose placement needs the fewest
    steps; ties fall back to expected value, then enumeration order."""
    if not ranked:
        raise StrategyError("ranked action list must not be empty")
    if step_estimator is None:
        from .footsteps import StepParams, estimate_step_count

        sp = StepParams()
        step_estimator = lambda a, b: estimate_step_count(a, b, sp)  # noqa: E731
    top_n = max(1, math.ceil(params.top_fraction * len(ranked)))
    best = None
    for cand in ranked[:top_n]:
        cand.step_count = step_estimator(robot_pose, cand.placement)
        if best is None or cand.step_count < best.step_count:
            best = cand
    return best
