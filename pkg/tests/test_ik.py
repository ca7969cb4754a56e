import numpy as np
import pytest

from soccerwalk import ik as wbik
from soccerwalk import kinematics as rb
from soccerwalk.walk import WalkParams, make_ready_configuration


@pytest.fixture()
def ready(model):
    wp = WalkParams()
    return make_ready_configuration(model, crouch=0.35, trunk_pitch=wp.trunk_pitch)


def stance_targets(model, config, mode="com"):
    """TickTargets-shaped object describing exactly the current stance."""
    from soccerwalk.walk import TickTargets

    poses = rb.fk_all(model, config)
    com = rb.com(model, config, poses)
    trunk_r, trunk_p = poses["trunk"]
    return TickTargets(
        time=0.0,
        phase="double",
        support_side="left",
        com_position=com.copy(),
        trunk_position=trunk_p.copy(),
        trunk_orientation=trunk_r.copy(),
        trunk_frame="trunk",
        support_frame="left_foot_sole",
        support_target=(poses["left_foot_sole"][0].copy(), poses["left_foot_sole"][1].copy()),
        swing_frame="right_foot_sole",
        swing_target=(poses["right_foot_sole"][0].copy(), poses["right_foot_sole"][1].copy()),
    )


def test_build_tasks_com_mode(model, ready):
    targets = stance_targets(model, ready)
    tasks = wbik.build_tasks(targets, "com")
    assert len(tasks) == 4
    kinds = [t.kind for t in tasks]
    assert kinds == ["position3", "orientation3", "frame6", "frame6"]
    assert tasks[0].frame == "com"
    assert tasks[2].hard and not tasks[0].hard
    assert sum(t.dim for t in tasks) == 18


def test_build_tasks_trunk_mode(model, ready):
    targets = stance_targets(model, ready)
    tasks = wbik.build_tasks(targets, "trunk")
    assert tasks[0].kind == "position3"
    assert tasks[0].frame == "trunk"
    assert sum(t.dim for t in tasks) == 18


def test_zero_error_gives_zero_step(model, ready):
    targets = stance_targets(model, ready)
    params = wbik.IkParams()
    dq = wbik.solve_step(model, ready, wbik.build_tasks(targets, "com", params), params)
    assert np.max(np.abs(dq)) < 1e-9


def test_small_com_displacement_reduced(model, ready):
    targets = stance_targets(model, ready)
    targets.com_position = targets.com_position + np.array([0.001, 0.0, 0.0])
    params = wbik.IkParams()
    tasks = wbik.build_tasks(targets, "com", params)
    before = np.linalg.norm(targets.com_position - rb.com(model, ready))
    dq = wbik.solve_step(model, ready, tasks, params)
    after = np.linalg.norm(targets.com_position - rb.com(model, ready.perturbed(dq)))
    assert after < 0.1 * before


def test_zero_velocity_limit_pins_joint(model, ready):
    # rebuild the model with one joint's velocity limit at zero
    from importlib import resources

    text = (resources.files("soccerwalk") / "models" / "biped.urdf").read_text()
    text = text.replace(
        '<parent link="left_thigh"/>\n    <child link="left_shin"/>\n    <origin xyz="0 0 -0.10"/>\n    <axis xyz="0 1 0"/>\n    <limit lower="-0.05" upper="2.4" velocity="12.0" effort="8.0"/>',
        '<parent link="left_thigh"/>\n    <child link="left_shin"/>\n    <origin xyz="0 0 -0.10"/>\n    <axis xyz="0 1 0"/>\n    <limit lower="-0.05" upper="2.4" velocity="0.0" effort="8.0"/>',
    )
    pinned_model = rb.load_model(text)
    assert pinned_model.velocity_limits()[pinned_model.joint_order.index("left_knee")] == 0.0
    cfg = make_ready_configuration(pinned_model, crouch=0.35, trunk_pitch=0.2)
    targets = stance_targets(pinned_model, cfg)
    targets.com_position = targets.com_position + np.array([0.002, 0.001, 0.0])
    params = wbik.IkParams()
    dq = wbik.solve_step(pinned_model, cfg, wbik.build_tasks(targets, "com", params), params)
    knee_idx = 6 + pinned_model.joint_order.index("left_knee")
    assert dq[knee_idx] == 0.0


def test_hard_task_residual_small(model, ready):
    targets = stance_targets(model, ready)
    targets.com_position = targets.com_position + np.array([0.002, -0.001, 0.0])
    params = wbik.IkParams()
    tasks = wbik.build_tasks(targets, "com", params)
    poses = rb.fk_all(model, ready)
    dq = wbik.solve_step(model, ready, tasks, params, poses=poses)
    for task in tasks:
        if task.hard:
            err, jac = wbik._task_error_jacobian(model, ready, task, poses)
            assert np.max(np.abs(jac @ dq - err)) < 1e-8


def test_limits_never_violated_on_track(model, ready):
    rng = np.random.default_rng(0)
    params = wbik.IkParams()
    lo, hi = model.joint_limits()
    vel = model.velocity_limits() * params.dt * params.velocity_limit_scale

    def stream():
        base = stance_targets(model, ready)
        for k in range(120):
            t = base
            t.com_position = t.com_position + np.array([0.0003, 0.0002 * np.sin(k * 0.3), 0])
            t.time = k * params.dt
            yield t

    result = wbik.track(model, ready, stream(), params)
    assert np.all(result.joints >= lo - 1e-15)
    assert np.all(result.joints <= hi + 1e-15)
    steps = np.abs(np.diff(result.joints, axis=0))
    assert np.all(steps <= vel + 1e-15)
    assert np.max(result.hard_residuals) < 1e-8


def test_constant_targets_constant_trajectory(model, ready):
    params = wbik.IkParams()
    base = stance_targets(model, ready)

    def stream():
        for _ in range(40):
            yield base

    result = wbik.track(model, ready, stream(), params)
    assert np.max(np.abs(result.joints - result.joints[0])) < 1e-7


def test_linearization_residual_quadratic(model, ready):
    params = wbik.IkParams()

    def residual(delta):
        targets = stance_targets(model, ready)
        targets.com_position = targets.com_position + np.array([delta, 0.0, 0.0])
        tasks = wbik.build_tasks(targets, "com", params)
        dq = wbik.solve_step(model, ready, tasks, params)
        after = rb.com(model, ready.perturbed(dq))
        return np.linalg.norm(after - targets.com_position)

    r1 = residual(0.004)
    r2 = residual(0.002)
    ratio = r1 / r2
    assert 4.0 * 0.7 <= ratio <= 4.0 * 1.3


def test_redundant_zero_error_task_leaves_solution_unchanged(model, ready):
    # a task whose target is exactly what the current optimum already achieves
    # (in the linear model) must not move the optimum of the strictly convex QP
    params = wbik.IkParams()
    targets = stance_targets(model, ready)
    targets.com_position = targets.com_position + np.array([0.001, 0.0, 0.0])
    tasks = wbik.build_tasks(targets, "com", params)
    poses = rb.fk_all(model, ready)
    dq1 = wbik.solve_step(model, ready, tasks, params, poses=poses)

    jac_trunk = rb.frame_jacobian(model, ready, "trunk", poses)[0:3]
    consistent_target = poses["trunk"][1] + jac_trunk @ dq1
    extra = wbik.Task("position3", "trunk", consistent_target, weight=2.0)
    dq2 = wbik.solve_step(model, ready, tasks + [extra], params, poses=poses)
    assert np.max(np.abs(dq2 - dq1)) < 1e-9

    def weighted_soft_linear(dq):
        total = 0.0
        for task in tasks:
            if not task.hard:
                err, jac = wbik._task_error_jacobian(model, ready, task, poses)
                r = jac @ dq - err
                total += task.weight * float(r @ r)
        return total

    assert weighted_soft_linear(dq2) <= weighted_soft_linear(dq1) + 1e-12


def test_infeasible_hard_vs_limits(model, ready):
    params = wbik.IkParams()
    poses = rb.fk_all(model, ready)
    # two hard frame tasks demanding incompatible rigid motions: the base can
    # satisfy one, and the velocity-bounded joints cannot make up a meter
    sup = wbik.Task(
        "frame6", "left_foot_sole",
        (poses["left_foot_sole"][0].copy(), poses["left_foot_sole"][1].copy()), hard=True,
    )
    swing = wbik.Task(
        "frame6", "right_foot_sole",
        (poses["right_foot_sole"][0].copy(), poses["right_foot_sole"][1] + np.array([1.0, 0, 0])),
        hard=True,
    )
    with pytest.raises(wbik.IkInfeasibleError):
        wbik.solve_step(model, ready, [sup, swing], params, poses=poses)


def test_determinism(model, ready):
    params = wbik.IkParams()
    targets = stance_targets(model, ready)
    targets.com_position = targets.com_position + np.array([0.001, 0.0005, 0.0])
    tasks = wbik.build_tasks(targets, "com", params)
    dq1 = wbik.solve_step(model, ready, tasks, params)
    dq2 = wbik.solve_step(model, ready, tasks, params)
    assert np.array_equal(dq1, dq2)
