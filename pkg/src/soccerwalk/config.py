"""Suite configuration: one TOML file wiring the robot model and every planner."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from importlib import resources

from .footsteps import StepParams
from .geom import Pose2
from .ik import IkParams
from .kinematics import RobotModel, load_model
from .preview import PreviewParams
from .strategy import FieldModel, KickTemplate, StrategyParams, default_templates
from .walk import WalkParams


class ConfigError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RobotConfig:
    model: str = "bundled"
    trunk_frame: str = "trunk"
    left_sole: str = "left_foot_sole"
    right_sole: str = "right_foot_sole"
    crouch: float = 0.35

    @property
    def sole_frames(self) -> Dict[str, str]:
        return {"left": self.left_sole, "right": self.right_sole}


@dataclass
class SuiteConfig:
    robot: RobotConfig
    walk: WalkParams
    steps: StepParams
    preview: PreviewParams
    ik: IkParams
    field: FieldModel
    strategy: StrategyParams
    templates: List[KickTemplate]
    base_dir: Path = field(default_factory=Path.cwd)

    def load_robot(self) -> RobotModel:
        if self.robot.model == "bundled":
            text = (resources.files("soccerwalk") / "models" / "biped.urdf").read_text()
            return load_model(text)
        path = (self.base_dir / self.robot.model).resolve()
        if not path.exists():
            raise ConfigError("model_not_found", f"robot model file not found: {path}")
        return load_model(path.read_text())


def _take(data: dict, section: str, cls, **extra):
    table = dict(data.get(section, {}))
    table.update(extra)
    try:
        return cls(**table)
    except TypeError as exc:
        raise ConfigError("bad_config", f"[{section}] {exc}") from None
    except ValueError as exc:
        raise ConfigError("bad_config", f"[{section}] {exc}") from None


def _parse_templates(data: dict) -> List[KickTemplate]:
    rows = data.get("kick")
    if not rows:
        return default_templates()
    out = []
    deg = math.pi / 180.0
    for row in rows:
        try:
            out.append(
                KickTemplate(
                    name=row["name"],
                    placement_offset=Pose2(*row.get("placement", [-0.15, -0.05, 0.0])),
                    length_mean=float(row["length_mean"]),
                    length_std=float(row.get("length_std", 0.0)),
                    angle_std=float(row.get("angle_std_deg", 0.0)) * deg,
                    nominal_direction=float(row.get("direction_deg", 0.0)) * deg,
                )
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError("bad_config", f"[[kick]] {exc}") from None
    return out


def load_config(path) -> SuiteConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError("config_not_found", f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("bad_config", f"invalid TOML: {exc}") from None

    walk_table = dict(data.get("walk", {}))
    if "trunk_pitch_deg" in walk_table:
        walk_table["trunk_pitch"] = math.radians(walk_table.pop("trunk_pitch_deg"))
    try:
        walk = WalkParams(**walk_table)
    except (TypeError, ValueError) as exc:
        raise ConfigError("bad_config", f"[walk] {exc}") from None

    preview_table = dict(data.get("preview", {}))
    if "zmp_offset" in preview_table:
        preview_table["zmp_reference_offset"] = tuple(preview_table.pop("zmp_offset"))

    cfg = SuiteConfig(
        robot=_take(data, "robot", RobotConfig),
        walk=walk,
        steps=_take(data, "steps", StepParams),
        preview=_take({"preview": preview_table}, "preview", PreviewParams),
        ik=_take(data, "ik", IkParams, mode=walk.mode),
        field=_take(data, "field", FieldModel),
        strategy=_take(data, "strategy", StrategyParams),
        templates=_parse_templates(data),
        base_dir=path.parent.resolve(),
    )
    cfg.load_robot()  # fail fast on a missing/broken model
    return cfg
