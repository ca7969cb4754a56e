"""HTTP API for the playbook board: strategy evaluation, value-grid access,
walk preview, config tuning and scenario persistence."""

from __future__ import annotations

import dataclasses
import json
import re
import threading
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import footsteps as fs
from . import strategy as st
from .config import SuiteConfig
from .geom import Pose2
from .kinematics import com as com_of
from .kinematics import fk_all
from .preview import ComState, PreviewInfeasibleError, build_schedule, plan_com
from .walk import make_ready_configuration

# parameters of StrategyParams that the offline baseline grid depends on;
# changing anything else only affects the online augmentation
OFFLINE_PARAMS = {
    "t_k",
    "t_p",
    "walk_speed",
    "grass_factor",
    "grass_direction",
    "n_samples",
    "vi_tolerance",
    "vi_max_iterations",
    "yaw_bins",
    "seed",
}

_NAME_RE = re.compile(r"^[A-Za-z0-9_\-]{1,64}$")


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


class AppState:
    """Mutable service state; snapshots are swapped atomically under the lock."""

    def __init__(self, config: SuiteConfig, grid: Optional[st.ValueGrid], scenarios_dir: Path):
        self.lock = threading.Lock()
        self.config = config
        self.strategy = config.strategy
        self.grid = grid
        self.scenarios_dir = scenarios_dir
        model = config.load_robot()
        q0 = make_ready_configuration(
            model, crouch=config.robot.crouch, trunk_pitch=config.walk.trunk_pitch,
            sole_frames=config.robot.sole_frames,
        )
        poses = fk_all(model, q0)
        ground = min(poses[f][1][2] for f in config.robot.sole_frames.values())
        self.com_height = float(com_of(model, q0, poses)[2] - ground)

    def ensure_grid(self) -> st.ValueGrid:
        with self.lock:
            if self.grid is None:
                self.grid = st.value_iteration(self.config.field, self.config.templates, self.strategy)
            return self.grid


def create_app(
    config: SuiteConfig,
    grid_path: Optional[str] = None,
    scenarios_dir: Optional[str] = None,
    ui_dir: Optional[str] = None,
) -> FastAPI:
    sdir = Path(scenarios_dir) if scenarios_dir else config.base_dir / "scenarios"
    sdir.mkdir(parents=True, exist_ok=True)
    grid = None
    if grid_path:
        grid = st.ValueGrid.from_dict(json.loads(Path(grid_path).read_text()), config.field)
    state = AppState(config, grid, sdir)

    app = FastAPI(title="soccerwalk", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.suite = state

    @app.get("/api/config")
    def get_config():
        with state.lock:
            strategy = dataclasses.asdict(state.strategy)
            grid_ready = state.grid is not None
        return {
            "strategy": strategy,
            "field": dataclasses.asdict(state.config.field),
            "templates": [
                {
                    "name": t.name,
                    "length_mean": t.length_mean,
                    "length_std": t.length_std,
                    "angle_std": t.angle_std,
                    "direction": t.nominal_direction,
                }
                for t in state.config.templates
            ],
            "grid_ready": grid_ready,
        }

    @app.put("/api/config")
    async def put_config(request: Request):
        body = await request.json()
        if not isinstance(body, dict):
            return _error(422, "bad_request", "expected a JSON object of parameter updates")
        valid = {f.name for f in dataclasses.fields(st.StrategyParams)}
        unknown = set(body) - valid
        if unknown:
            return _error(422, "unknown_parameter", f"unknown parameters: {sorted(unknown)}")
        with state.lock:
            try:
                new_params = dataclasses.replace(state.strategy, **body)
            except (st.StrategyError, TypeError, ValueError) as exc:
                return _error(422, "invalid_parameter", str(exc))
            invalidate = any(
                getattr(new_params, name) != getattr(state.strategy, name) for name in OFFLINE_PARAMS
            )
            state.strategy = new_params
            if invalidate:
                state.grid = None
        return {"updated": sorted(body), "grid_invalidated": invalidate}

    @app.get("/api/value-grid")
    def get_value_grid():
        with state.lock:
            grid = state.grid
        if grid is None:
            return _error(409, "grid_not_ready", "value grid has not been built yet")
        return grid.to_dict()

    @app.post("/api/evaluate")
    async def evaluate(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return _error(422, "bad_json", "request body is not valid JSON")
        try:
            scenario = st.Scenario.from_dict(body)
            scenario.validate(state.config.field)
        except (KeyError, TypeError, st.StrategyError) as exc:
            return _error(422, "bad_scenario", f"scenario: {exc}")
        grid = state.ensure_grid()
        with state.lock:
            params = state.strategy
        ranked = st.evaluate_actions(scenario, grid, state.config.field, state.config.templates, params)
        robot_pose = scenario.allies[scenario.robot] if scenario.allies else Pose2(*scenario.ball, 0.0)
        estimator = lambda a, b: fs.estimate_step_count(a, b, state.config.steps)  # noqa: E731
        selected = st.select_with_footsteps(ranked, robot_pose, params, estimator)
        top_n = max(1, int(np.ceil(params.top_fraction * len(ranked))))
        return {
            "ranked": [a.to_dict() for a in ranked],
            "top": [a.to_dict() for a in ranked[:top_n]],
            "selected": selected.to_dict(),
            "grid_iterations": grid.iterations,
        }

    @app.post("/api/plan-walk")
    async def plan_walk(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return _error(422, "bad_json", "request body is not valid JSON")
        try:
            start = Pose2(*(float(v) for v in body["start"]))
            target = Pose2(*(float(v) for v in body["target"]))
            ball = tuple(float(v) for v in body["ball"]) if body.get("ball") else None
        except (KeyError, TypeError, ValueError) as exc:
            return _error(422, "bad_request", f"start/target poses: {exc}")
        steps_cfg = state.config.steps
        result = fs.plan(fs.start_state_for_pose(start, steps_cfg), target, ball, steps_cfg)
        footsteps = [
            {"x": s.support_pose.x, "y": s.support_pose.y, "theta": s.support_pose.theta,
             "side": s.support_side}
            for s in result.steps
        ]
        com_polyline = []
        if result.steps:
            half = 0.5 * steps_cfg.feet_spacing
            prints = [
                (start.compose(Pose2(0.0, half, 0.0)), "left"),
                (start.compose(Pose2(0.0, -half, 0.0)), "right"),
            ] + [(s.support_pose, s.support_side) for s in result.steps]
            pview = dataclasses.replace(state.config.preview, com_height=state.com_height)
            schedule = build_schedule(
                prints, state.config.walk.single_support, state.config.walk.double_support,
                steps_cfg.foot_length, steps_cfg.foot_width, pview,
            )
            c0 = ComState.rest([start.x, start.y])
            cf = ComState.rest(schedule[len(schedule) - 1].zmp_ref)
            try:
                traj = plan_com(c0, cf, schedule, pview)
            except PreviewInfeasibleError as exc:
                return _error(409, "com_plan_infeasible", str(exc))
            n_pts = 80
            for k in range(n_pts + 1):
                s = traj.eval(traj.duration * k / n_pts)
                com_polyline.append([float(s.pos[0]), float(s.pos[1])])
        return {"footsteps": footsteps, "com": com_polyline, "converged": result.converged}

    @app.get("/api/scenarios")
    def list_scenarios():
        names = sorted(p.stem for p in state.scenarios_dir.glob("*.json"))
        return {"scenarios": names}

    @app.get("/api/scenarios/{name}")
    def get_scenario(name: str):
        if not _NAME_RE.match(name):
            return _error(422, "bad_name", "scenario names are [A-Za-z0-9_-], max 64 chars")
        path = state.scenarios_dir / f"{name}.json"
        if not path.exists():
            return _error(404, "scenario_not_found", f"no scenario named {name!r}")
        return json.loads(path.read_text())

    @app.post("/api/scenarios")
    async def save_scenario(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return _error(422, "bad_json", "request body is not valid JSON")
        name = body.get("name", "")
        if not isinstance(name, str) or not _NAME_RE.match(name):
            return _error(422, "bad_name", "scenario names are [A-Za-z0-9_-], max 64 chars")
        try:
            scenario = st.Scenario.from_dict(body.get("scenario", {}))
            scenario.validate(state.config.field)
        except (KeyError, TypeError, st.StrategyError) as exc:
            return _error(422, "bad_scenario", f"scenario: {exc}")
        path = state.scenarios_dir / f"{name}.json"
        if path.exists() and not body.get("overwrite", False):
            return _error(409, "scenario_exists", f"scenario {name!r} already exists")
        path.write_text(json.dumps(scenario.to_dict(), indent=2, sort_keys=True) + "\n")
        return {"saved": name}

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
