"""Command-line entry points: walk planning, value-grid baking, scenario
evaluation, and the HTTP service for the playbook board."""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import footsteps as fs
from . import strategy as st
from .config import ConfigError, load_config
from .geom import Pose2
from .preview import PreviewInfeasibleError
from .walk import make_ready_configuration, run_walk, velocity_report

EXIT_BAD_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_NOT_CONVERGED = 3


def _fail(code: str, message: str, exit_code: int = EXIT_BAD_INPUT):
    sys.stderr.write(json.dumps({"code": code, "message": message}, sort_keys=True) + "\n")
    sys.exit(exit_code)


def _parse_pose(text: str) -> Pose2:
    try:
        x, y, theta = (float(v) for v in text.split(","))
    except ValueError:
        _fail("bad_pose", f"expected 'x,y,theta', got {text!r}")
    return Pose2(x, y, theta)


def _fmt(v: float) -> str:
    return repr(float(v))


@click.group()
def main():
    """Planning suite for a kid-size soccer biped."""


@main.command("plan-walk")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--start", required=True, help="start pose 'x,y,theta'")
@click.option("--target", required=True, help="target pose 'x,y,theta'")
@click.option("--ball", default=None, help="optional ball position 'x,y' to avoid")
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_plan_walk(config_path, start, target, ball, out_dir):
    """Plan footsteps, CoM trajectory and joint trajectory for one walk."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        _fail(exc.code, str(exc))
    start_pose = _parse_pose(start)
    target_pose = _parse_pose(target)
    ball_pt = None
    if ball is not None:
        try:
            ball_pt = tuple(float(v) for v in ball.split(","))
        except ValueError:
            _fail("bad_ball", f"expected 'x,y', got {ball!r}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    result = fs.plan(
        fs.start_state_for_pose(start_pose, cfg.steps), target_pose, ball_pt, cfg.steps
    )
    if not result.converged:
        _fail("plan_not_converged", f"footstep planner: {result.reason}", EXIT_INFEASIBLE)
    (out / "footsteps.json").write_text(fs.plan_to_json(result) + "\n")

    com_header = "t,cx,cy,vx,vy,ax,ay,zmpx,zmpy"
    joints_header = None
    if not result.steps:
        (out / "com_trajectory.csv").write_text(com_header + "\n")
        model = cfg.load_robot()
        joints_header = "t," + ",".join(model.joint_order) + ",base_x,base_y,base_z,base_qw,base_qx,base_qy,base_qz"
        (out / "joints.csv").write_text(joints_header + "\n")
        (out / "velocity_report.json").write_text(
            json.dumps({"joints": {}, "any_exceeds": False}, indent=2, sort_keys=True) + "\n"
        )
        click.echo("empty plan: start pose already satisfies the target tolerances")
        return

    model = cfg.load_robot()
    q0 = make_ready_configuration(
        model,
        crouch=cfg.robot.crouch,
        trunk_pitch=cfg.walk.trunk_pitch,
        base_pose=start_pose,
        sole_frames=cfg.robot.sole_frames,
    )
    try:
        session, track, targets = run_walk(
            model, q0, result.steps, cfg.walk, cfg.preview, cfg.ik
        )
    except PreviewInfeasibleError as exc:
        _fail("com_plan_infeasible", str(exc), EXIT_INFEASIBLE)

    rows = [com_header]
    dtc = cfg.walk.control_period
    hg = session.preview.com_height / session.preview.gravity
    for k in range(len(track.times)):
        t = k * dtc
        s = session.com_state(min(t, session.walk_end))
        zmp = s.pos - hg * s.acc
        rows.append(
            ",".join(
                [_fmt(t)]
                + [_fmt(v) for v in (s.pos[0], s.pos[1], s.vel[0], s.vel[1], s.acc[0], s.acc[1], zmp[0], zmp[1])]
            )
        )
    (out / "com_trajectory.csv").write_text("\n".join(rows) + "\n")

    joints_header = "t," + ",".join(track.joint_names) + ",base_x,base_y,base_z,base_qw,base_qx,base_qy,base_qz"
    rows = [joints_header]
    for k in range(track.joints.shape[0]):
        rows.append(
            ",".join(
                [_fmt(track.times[k])]
                + [_fmt(v) for v in track.joints[k]]
                + [_fmt(v) for v in track.base_pos[k]]
                + [_fmt(v) for v in track.base_quat[k]]
            )
        )
    (out / "joints.csv").write_text("\n".join(rows) + "\n")

    report = velocity_report(track.times, track.joints, track.joint_names, model)
    (out / "velocity_report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    click.echo(
        f"planned {len(result.steps)} footsteps, {track.joints.shape[0]} joint samples, "
        f"walk duration {session.walk_end:.3f}s"
    )


@main.command("value-grid")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", default=None, type=int, help="override the config seed")
def cmd_value_grid(config_path, out_path, seed):
    """Bake the offline baseline value grid to a JSON file."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        _fail(exc.code, str(exc))
    if seed is not None:
        cfg.strategy = dataclasses.replace(cfg.strategy, seed=seed)
    grid = st.value_iteration(cfg.field, cfg.templates, cfg.strategy)
    Path(out_path).write_text(json.dumps(grid.to_dict(), indent=2, sort_keys=True) + "\n")
    click.echo(
        f"value iteration: {grid.iterations} sweeps, converged={grid.converged}, "
        f"tolerance {cfg.strategy.vi_tolerance}"
    )
    if not grid.converged:
        _fail("grid_not_converged", "value iteration hit its sweep cap", EXIT_NOT_CONVERGED)


@main.command("evaluate")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--grid", "grid_path", required=True, type=click.Path())
@click.option("--scenario", "scenario_path", required=True, type=click.Path())
@click.option("--seed", default=None, type=int, help="override the config seed")
def cmd_evaluate(config_path, grid_path, scenario_path, seed):
    """Rank kick actions for a scenario; prints JSON to stdout."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        _fail(exc.code, str(exc))
    if seed is not None:
        cfg.strategy = dataclasses.replace(cfg.strategy, seed=seed)
    try:
        grid = st.ValueGrid.from_dict(json.loads(Path(grid_path).read_text()), cfg.field)
    except FileNotFoundError:
        _fail("grid_not_found", f"grid file not found: {grid_path}")
    except (json.JSONDecodeError, KeyError, st.StrategyError) as exc:
        _fail("bad_grid", f"grid file: {exc}")
    try:
        scenario = st.Scenario.from_dict(json.loads(Path(scenario_path).read_text()))
        scenario.validate(cfg.field)
    except FileNotFoundError:
        _fail("scenario_not_found", f"scenario file not found: {scenario_path}")
    except (json.JSONDecodeError, KeyError, TypeError, st.StrategyError) as exc:
        _fail("bad_scenario", f"scenario: {exc}")

    ranked = st.evaluate_actions(scenario, grid, cfg.field, cfg.templates, cfg.strategy)
    robot_pose = scenario.allies[scenario.robot] if scenario.allies else Pose2(*scenario.ball, 0.0)
    estimator = lambda a, b: fs.estimate_step_count(a, b, cfg.steps)  # noqa: E731
    selected = st.select_with_footsteps(ranked, robot_pose, cfg.strategy, estimator)
    top_n = max(1, int(np.ceil(cfg.strategy.top_fraction * len(ranked))))
    payload = {
        "ranked": [a.to_dict() for a in ranked],
        "top": [a.to_dict() for a in ranked[:top_n]],
        "selected": selected.to_dict(),
    }
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--port", default=8008, type=int)
@click.option("--host", default="127.0.0.1")
@click.option("--grid", "grid_path", default=None, type=click.Path())
@click.option("--scenarios-dir", default=None, type=click.Path())
@click.option("--ui", "ui_dir", default=None, type=click.Path())
def cmd_serve(config_path, port, host, grid_path, scenarios_dir, ui_dir):
    """Run the HTTP API consumed by the playbook board."""
    import uvicorn

    from .service import create_app

    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        _fail(exc.code, str(exc))
    app = create_app(cfg, grid_path=grid_path, scenarios_dir=scenarios_dir, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
