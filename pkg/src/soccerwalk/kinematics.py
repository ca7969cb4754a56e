"""Floating-base kinematic tree: URDF loading, forward kinematics, Jacobians, CoM.

Tangent-space layout used by every Jacobian (n = 6 + revolute joints):
columns 0-2 base translation (world), 3-5 base rotation (world rotation vector,
applied on the left about the base origin), then one column per revolute joint
in model order.  Jacobians are world-aligned and taken at the frame origin,
rows: linear xyz then angular xyz.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .so3 import axis_angle_matrix, exp_so3, quat_normalize, quat_to_matrix, rpy_to_matrix, skew


class UrdfError(ValueError):
    """Malformed or unsupported robot description."""


class FrameLookupError(KeyError):
    """Requested frame does not exist in the model."""


@dataclass
class Joint:
    name: str
    kind: str  # "revolute" | "fixed"
    parent: str
    child: str
    origin_r: np.ndarray
    origin_p: np.ndarray
    axis: Optional[np.ndarray] = None
    lower: float = -np.inf
    upper: float = np.inf
    velocity_limit: float = np.inf
    index: int = -1  # position among revolute joints, -1 for fixed


@dataclass
class Link:
    name: str
    mass: float
    com: np.ndarray
    parent_joint: Optional[str] = None


@dataclass
class RobotModel:
    name: str
    root: str
    links: Dict[str, Link]
    joints: Dict[str, Joint]
    joint_order: List[str] = field(default_factory=list)  # revolute joints, model order

    @property
    def nj(self) -> int:
        return len(self.joint_order)

    @property
    def dof(self) -> int:
        return 6 + self.nj

    @property
    def total_mass(self) -> float:
        return sum(l.mass for l in self.links.values())

    def frames(self) -> List[str]:
        return list(self.links.keys())

    def joint_limits(self) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.array([self.joints[n].lower for n in self.joint_order])
        hi = np.array([self.joints[n].upper for n in self.joint_order])
        return lo, hi

    def velocity_limits(self) -> np.ndarray:
        return np.array([self.joints[n].velocity_limit for n in self.joint_order])

    def chain_to(self, frame: str) -> List[Joint]:
        """Joints from the root down to `frame` (fixed joints included)."""
        if frame not in self.links:
            raise FrameLookupError(frame)
        chain = []
        link = frame
        while link != self.root:
            j = self.joints[self.links[link].parent_joint]
            chain.append(j)
            link = j.parent
        chain.reverse()
        return chain


def _parse_vec(text: Optional[str], default: str) -> np.ndarray:
    return np.array([float(v) for v in (text or default).split()])


def load_model(model_text: str, name: str = "robot") -> RobotModel:
    """Build a RobotModel from URDF text (revolute and fixed joints only)."""
    try:
        xml_root = ET.fromstring(model_text)
    except ET.ParseError as exc:
        raise UrdfError(f"invalid XML: {exc}") from None
    if xml_root.tag != "robot":
        raise UrdfError("top-level element must be <robot>")

    links: Dict[str, Link] = {}
    for el in xml_root.findall("link"):
        lname = el.get("name")
        if lname is None:
            raise UrdfError("link without a name")
        inertial = el.find("inertial")
        if inertial is None:
            raise UrdfError(f"link '{lname}' has no inertial element")
        mass_el = inertial.find("mass")
        if mass_el is None:
            raise UrdfError(f"link '{lname}' inertial has no mass")
        mass = float(mass_el.get("value"))
        if mass < 0:
            raise UrdfError(f"link '{lname}' has negative mass")
        origin = inertial.find("origin")
        com = _parse_vec(origin.get("xyz") if origin is not None else None, "0 0 0")
        links[lname] = Link(lname, mass, com)

    joints: Dict[str, Joint] = {}
    joint_order: List[str] = []
    for el in xml_root.findall("joint"):
        jname = el.get("name")
        kind = el.get("type")
        if kind not in ("revolute", "fixed"):
            raise UrdfError(f"joint '{jname}' has unsupported type '{kind}'")
        parent = el.find("parent").get("link")
        child = el.find("child").get("link")
        for link_name in (parent, child):
            if link_name not in links:
                raise UrdfError(f"joint '{jname}' references unknown link '{link_name}'")
        origin = el.find("origin")
        xyz = _parse_vec(origin.get("xyz") if origin is not None else None, "0 0 0")
        rpy = _parse_vec(origin.get("rpy") if origin is not None else None, "0 0 0")
        joint = Joint(
            name=jname,
            kind=kind,
            parent=parent,
            child=child,
            origin_r=rpy_to_matrix(*rpy),
            origin_p=xyz,
        )
        if kind == "revolute":
            axis_el = el.find("axis")
            axis = _parse_vec(axis_el.get("xyz") if axis_el is not None else None, "1 0 0")
            norm = np.linalg.norm(axis)
            if norm < 1e-12:
                raise UrdfError(f"joint '{jname}' has a zero axis")
            joint.axis = axis / norm
            limit = el.find("limit")
            if limit is not None:
                joint.lower = float(limit.get("lower", -np.inf))
                joint.upper = float(limit.get("upper", np.inf))
                joint.velocity_limit = float(limit.get("velocity", np.inf))
            if not joint.lower < joint.upper:
                raise UrdfError(f"joint '{jname}' limits must satisfy lower < upper")
            joint.index = len(joint_order)
            joint_order.append(jname)
        if links[child].parent_joint is not None:
            raise UrdfError(f"link '{child}' has two parent joints (not a tree)")
        links[child].parent_joint = jname
        joints[jname] = joint

    roots = [l.name for l in links.values() if l.parent_joint is None]
    if len(roots) != 1:
        raise UrdfError(f"model must have exactly one root link, found {roots}")
    root = roots[0]
    # cycle check: walking up from every link must terminate at the root
    for lname in links:
        seen = set()
        cur = lname
        while cur != root:
            if cur in seen:
                raise UrdfError(f"cyclic structure through link '{cur}'")
            seen.add(cur)
            cur = joints[links[cur].parent_joint].parent
    model = RobotModel(xml_root.get("name", name), root, links, joints, joint_order)
    if model.total_mass <= 0:
        raise UrdfError("total mass must be positive")
    return model


def load_model_file(path) -> RobotModel:
    with open(path, "r", encoding="utf-8") as fh:
        return load_model(fh.read())


@dataclass
class Configuration:
    """Floating-base pose plus revolute joint angles."""

    base_pos: np.ndarray
    base_quat: np.ndarray  # (w, x, y, z), unit
    q: np.ndarray

    def __post_init__(self):
        self.base_pos = np.asarray(self.base_pos, dtype=float).copy()
        self.base_quat = quat_normalize(self.base_quat)
        self.q = np.asarray(self.q, dtype=float).copy()

    @classmethod
    def neutral(cls, model: RobotModel) -> "Configuration":
        return cls(np.zeros(3), np.array([1.0, 0, 0, 0]), np.zeros(model.nj))

    def copy(self) -> "Configuration":
        return Configuration(self.base_pos.copy(), self.base_quat.copy(), self.q.copy())

    def validate(self, model: RobotModel) -> "Configuration":
        lo, hi = model.joint_limits()
        if np.any(self.q < lo - 1e-12) or np.any(self.q > hi + 1e-12):
            bad = [model.joint_order[i] for i in np.where((self.q < lo) | (self.q > hi))[0]]
            raise ValueError(f"joint angles outside limits: {bad}")
        return self

    def perturbed(self, delta: np.ndarray) -> "Configuration":
        """Apply a tangent-space increment (see module docstring for layout)."""
        rot = exp_so3(delta[3:6]) @ quat_to_matrix(self.base_quat)
        from .so3 import matrix_to_quat

        return Configuration(self.base_pos + delta[:3], matrix_to_quat(rot), self.q + delta[6:])


def fk_all(model: RobotModel, config: Configuration) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
    """World pose (R, p) of every link in one pass down the tree."""
    poses: Dict[str, Tuple[np.ndarray, np.ndarray]] = {
        model.root: (quat_to_matrix(config.base_quat), config.base_pos.copy())
    }
    pending = [j for j in model.joints.values()]
    # children-first ordering is not guaranteed by the file: iterate until resolved
    while pending:
        progressed = False
        remaining = []
        for joint in pending:
            if joint.parent in poses:
                rp, pp = poses[joint.parent]
                r = rp @ joint.origin_r
                p = pp + rp @ joint.origin_p
                if joint.kind == "revolute":
                    r = r @ axis_angle_matrix(joint.axis, config.q[joint.index])
                poses[joint.child] = (r, p)
                progressed = True
            else:
                remaining.append(joint)
        if not progressed:
            raise UrdfError("unresolvable kinematic ordering")
        pending = remaining
    return poses


def forward_kinematics(model: RobotModel, config: Configuration, frame: str):
    if frame not in model.links:
        raise FrameLookupError(frame)
    return fk_all(model, config)[frame]


def frame_jacobian(model: RobotModel, config: Configuration, frame: str,
                   poses: Optional[Dict] = None) -> np.ndarray:
    """6 x dof world-aligned Jacobian at the frame origin (linear rows then angular)."""
    if frame not in model.links:
        raise FrameLookupError(frame)
    if poses is None:
        poses = fk_all(model, config)
    p_frame = poses[frame][1]
    jac = np.zeros((6, model.dof))
    jac[0:3, 0:3] = np.eye(3)
    jac[0:3, 3:6] = -skew(p_frame - config.base_pos)
    jac[3:6, 3:6] = np.eye(3)
    for joint in model.chain_to(frame):
        if joint.kind != "revolute":
            continue
        r_parent, p_parent = poses[joint.parent]
        axis_w = r_parent @ joint.origin_r @ joint.axis
        origin_w = p_parent + r_parent @ joint.origin_p
        col = 6 + joint.index
        jac[0:3, col] = np.cross(axis_w, p_frame - origin_w)
        jac[3:6, col] = axis_w
    return jac


def com(model: RobotModel, config: Configuration, poses: Optional[Dict] = None) -> np.ndarray:
    if poses is None:
        poses = fk_all(model, config)
    total = model.total_mass
    acc = np.zeros(3)
    for link in model.links.values():
        if link.mass == 0.0:
            continue
        r, p = poses[link.name]
        acc += link.mass * (p + r @ link.com)
    return acc / total


def com_jacobian(model: RobotModel, config: Configuration,
                 poses: Optional[Dict] = None) -> np.ndarray:
    """3 x dof Jacobian of the whole-body CoM (mass-weighted link CoM Jacobians)."""
    if poses is None:
        poses = fk_all(model, config)
    total = model.total_mass
    jac = np.zeros((3, model.dof))
    for link in model.links.values():
        if link.mass == 0.0:
            continue
        r, p = poses[link.name]
        point = p + r @ link.com
        jac[:, 0:3] += link.mass * np.eye(3)
        jac[:, 3:6] += link.mass * -skew(point - config.base_pos)
        for joint in model.chain_to(link.name):
            if joint.kind != "revolute":
                continue
            r_parent, p_parent = poses[joint.parent]
            axis_w = r_parent @ joint.origin_r @ joint.axis
            origin_w = p_parent + r_parent @ joint.origin_p
            jac[:, 6 + joint.index] += link.mass * np.cross(axis_w, point - origin_w)
    return jac / total
