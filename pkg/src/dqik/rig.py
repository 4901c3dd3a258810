"""Articulated rigs: joint trees, limits, end effectors, forward kinematics.

A rig is a tree of 1-DOF revolute joints. Each joint rotates about one
principal axis of its own frame and sits at a fixed translational offset
from its parent frame, so a pose is fully described by one scalar
coordinate per joint (the signed rotation angle in radians). Multi-axis
anatomical joints are represented by chaining 1-DOF joints through
zero-length links; `split_multi_dof` performs that expansion.

Forward kinematics concatenates unit dual quaternions: the world
transform of joint i is

    world[i] = world[parent(i)] * T(offset_i) * R(w_i about axis_i)

with the root chaining from the rig's base transform. Joints are stored
in topological order (parent index < joint index) so a single forward
pass suffices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import NamedTuple, Sequence

import numpy as np

from .dualquat import (
    Axis,
    DQ_IDENTITY,
    TransformOrder,
    dq_from_rot_trans,
    dq_mul,
    dq_pure_translation,
    dq_to_rot_trans,
    dq_translation,
    quat_from_vector,
    quat_mul,
)

ROOT = -1

HAND_DATA_RESOURCE = "data/hand22.rig.json"

# Artifact defaults for the hand model; radians.
FINGER_FLEX_LIMITS = (-0.1, np.pi / 2)
FINGER_ABDUCT_LIMITS = (-0.35, 0.35)
THUMB_ABDUCT_LIMITS = (-0.6, 0.6)
WRIST_LIMITS = (-1.0, 1.0)

_AXIS_NAMES = "xyz"


@dataclass(frozen=True)
class Joint:
    """One revolute DOF: rotation about `axis` after a fixed parent offset."""

    id: int
    parent: int
    offset: tuple[float, float, float]
    axis: Axis
    lower: float
    upper: float
    name: str = ""


@dataclass(frozen=True)
class EndEffector:
    """Point of interest: a local offset in the frame of `joint`."""

    joint: int
    offset: tuple[float, float, float]


class EndEffectorPose(NamedTuple):
    position: np.ndarray
    orientation: np.ndarray


class Rig:
    """Immutable joint tree with per-joint arrays cached for fast FK."""

    def __init__(self, joints: Sequence[Joint], end_effectors: Sequence[EndEffector],
                 base_transform: np.ndarray | None = None):
        self.joints = tuple(joints)
        self.end_effectors = tuple(end_effectors)
        if base_transform is None:
            base_transform = DQ_IDENTITY
        self.base_transform = np.asarray(base_transform, dtype=float).reshape(8).copy()
        n = len(self.joints)
        self.parents = np.array([j.parent for j in self.joints], dtype=int)
        self.offsets = np.array([j.offset for j in self.joints], dtype=float).reshape(n, 3)
        self.axes = np.array([int(j.axis) for j in self.joints], dtype=int)
        self.lower = np.array([j.lower for j in self.joints], dtype=float)
        self.upper = np.array([j.upper for j in self.joints], dtype=float)

    @property
    def dof(self) -> int:
        return len(self.joints)

    def joint_names(self) -> list[str]:
        return [j.name for j in self.joints]


def rig_validate(rig: Rig) -> list[str]:
    """Check every rig invariant; returns one message per violation.

    An empty report means the rig is valid.
    """
    report = []
    n = rig.dof
    if n == 0:
        report.append("rig has no joints")
    roots = 0
    for i, joint in enumerate(rig.joints):
        label = joint.name or f"joint {i}"
        if joint.id != i:
            report.append(f"{label}: id {joint.id} does not match position {i}")
        if joint.parent == ROOT:
            roots += 1
        elif not 0 <= joint.parent < n:
            report.append(f"{label}: parent {joint.parent} out of range")
        elif joint.parent >= i:
            report.append(f"{label}: parent {joint.parent} not before joint {i}")
        if joint.lower > joint.upper:
            report.append(f"{label}: lower {joint.lower} exceeds upper {joint.upper}")
        if joint.lower < -np.pi or joint.upper > np.pi:
            report.append(f"{label}: limits outside [-pi, pi]")
    if n > 0 and roots != 1:
        report.append(f"expected exactly one root joint, found {roots}")
    for i, joint in enumerate(rig.joints):
        seen = 0
        k = i
        while k != ROOT and 0 <= k < n:
            k = rig.joints[k].parent
            seen += 1
            if seen > n:
                report.append(f"cycle detected through joint {i}")
                break
    for e, eff in enumerate(rig.end_effectors):
        if not 0 <= eff.joint < n:
            report.append(f"end effector {e}: joint {eff.joint} out of range")
    return report


def joint_local_transform(offset: np.ndarray, axis: int, w: float) -> np.ndarray:
    """Unit dual quaternion T(offset) * R(w about axis), built directly."""
    half = 0.5 * w
    rot = np.zeros(4)
    rot[0] = np.cos(half)
    rot[1 + axis] = np.sin(half)
    out = np.empty(8)
    out[:4] = rot
    out[4:] = 0.5 * quat_mul(quat_from_vector(offset), rot)
    return out


def forward_kinematics(rig: Rig, pose: np.ndarray) -> np.ndarray:
    """World transform of every joint as an (n, 8) array of unit dqs."""
    w = np.asarray(pose, dtype=float)
    if w.shape != (rig.dof,):
        raise ValueError(f"pose length {w.shape} does not match rig DOF {rig.dof}")
    world = np.empty((rig.dof, 8))
    for i in range(rig.dof):
        local = joint_local_transform(rig.offsets[i], rig.axes[i], w[i])
        parent = rig.base_transform if rig.parents[i] == ROOT else world[rig.parents[i]]
        world[i] = dq_mul(parent, local)
    return world


def end_effector_transforms(rig: Rig, world: np.ndarray) -> np.ndarray:
    """World dq of each end effector given precomputed joint transforms."""
    out = np.empty((len(rig.end_effectors), 8))
    for e, eff in enumerate(rig.end_effectors):
        out[e] = dq_mul(world[eff.joint], dq_pure_translation(eff.offset))
    return out


def end_effector_poses(rig: Rig, pose: np.ndarray) -> list[EndEffectorPose]:
    """Position and orientation of each end effector at the given pose."""
    world = forward_kinematics(rig, pose)
    transforms = end_effector_transforms(rig, world)
    return [EndEffectorPose(dq_translation(t), t[:4].copy()) for t in transforms]


def split_multi_dof(name: str, parent: int, offset, axes: Sequence[Axis],
                    limits: Sequence[tuple[float, float]], first_id: int) -> list[Joint]:
    """Expand an n-axis rotation into n chained 1-DOF joints.

    The first joint carries the original offset; the rest connect through
    zero-length links, so the composed rotation applies the axes in the
    declared order. Every joint is named with its axis letter appended.
    """
    axes = [Axis(a) for a in axes]
    if not 1 <= len(axes) <= 3:
        raise ValueError("axis count must be 1, 2 or 3")
    if len(set(axes)) != len(axes):
        raise ValueError(f"{name}: duplicate axes {axes}")
    if len(limits) != len(axes):
        raise ValueError(f"{name}: need one (lower, upper) pair per axis")
    joints = []
    for k, (axis, (lo, hi)) in enumerate(zip(axes, limits)):
        joints.append(Joint(
            id=first_id + k,
            parent=parent if k == 0 else first_id + k - 1,
            offset=tuple(float(v) for v in offset) if k == 0 else (0.0, 0.0, 0.0),
            axis=axis,
            lower=float(lo),
            upper=float(hi),
            name=f"{name}_{_AXIS_NAMES[axis]}",
        ))
    return joints


def build_hand_model() -> Rig:
    """Reference 22-DOF hand: wrist plus four fingers and a thumb.

    Anatomical joints and the split into 1-DOF units:
      wrist      x, z        2 DOF
      finger MCP z, x        2 DOF (abduction then flexion), per finger
      finger PIP x           1 DOF, per finger
      finger DIP x           1 DOF, per finger
      thumb CMC  z, x        2 DOF
      thumb MCP  x           1 DOF
      thumb IP   x           1 DOF

    Total 2 + 4*(2+1+1) + (2+1+1) = 22. At the zero pose the hand lies
    flat in the xy plane with fingers along +y; flexion curls toward -z.
    Segment lengths and limits are artifact defaults in meters/radians,
    not measured anatomy.
    """
    joints: list[Joint] = []
    last: dict[str, int] = {}

    def add(name, parent, offset, axes, limits):
        parent_id = ROOT if parent is None else last[parent]
        new = split_multi_dof(name, parent_id, offset, axes, limits, len(joints))
        joints.extend(new)
        last[name] = new[-1].id

    add("wrist", None, (0.0, 0.0, 0.0), (Axis.X, Axis.Z), (WRIST_LIMITS, WRIST_LIMITS))

    fingers = (
        ("index", -0.033, 0.095, 1.00),
        ("middle", -0.011, 0.100, 1.08),
        ("ring", 0.011, 0.095, 1.00),
        ("pinky", 0.033, 0.085, 0.85),
    )
    tips: list[EndEffector] = []
    for name, x, y, scale in fingers:
        proximal, middle, distal = 0.045 * scale, 0.027 * scale, 0.020 * scale
        add(f"{name}_mcp", "wrist", (x, y, 0.0), (Axis.Z, Axis.X),
            (FINGER_ABDUCT_LIMITS, FINGER_FLEX_LIMITS))
        add(f"{name}_pip", f"{name}_mcp", (0.0, proximal, 0.0), (Axis.X,),
            (FINGER_FLEX_LIMITS,))
        add(f"{name}_dip", f"{name}_pip", (0.0, middle, 0.0), (Axis.X,),
            (FINGER_FLEX_LIMITS,))
        tips.append(EndEffector(last[f"{name}_dip"], (0.0, distal, 0.0)))

    add("thumb_cmc", "wrist", (-0.025, 0.020, 0.0), (Axis.Z, Axis.X),
        (THUMB_ABDUCT_LIMITS, FINGER_FLEX_LIMITS))
    add("thumb_mcp", "thumb_cmc", (0.0, 0.045, 0.0), (Axis.X,), (FINGER_FLEX_LIMITS,))
    add("thumb_ip", "thumb_mcp", (0.0, 0.035, 0.0), (Axis.X,), (FINGER_FLEX_LIMITS,))
    tips.append(EndEffector(last["thumb_ip"], (0.0, 0.028, 0.0)))

    effectors = tips + [EndEffector(last["wrist"], (0.0, 0.0, 0.0))]
    return Rig(joints, effectors)


def anatomical_joint_names(rig: Rig) -> list[str]:
    """Distinct joint names with the trailing axis letter stripped."""
    seen: list[str] = []
    for joint in rig.joints:
        base = joint.name.rsplit("_", 1)[0] if joint.name else f"joint{joint.id}"
        if base not in seen:
            seen.append(base)
    return seen


def rig_to_dict(rig: Rig) -> dict:
    base_rot, base_trans = dq_to_rot_trans(rig.base_transform, TransformOrder.TRANS_THEN_ROT)
    return {
        "joints": [
            {
                "id": j.id,
                "parent": j.parent,
                "name": j.name,
                "offset": list(j.offset),
                "axis": _AXIS_NAMES[j.axis],
                "lower": j.lower,
                "upper": j.upper,
            }
            for j in rig.joints
        ],
        "end_effectors": [
            {"joint": e.joint, "offset": list(e.offset)} for e in rig.end_effectors
        ],
        "base": {
            "rotation": base_rot.tolist(),
            "translation": base_trans.tolist(),
        },
    }


def _parse_field(item, key, convert, where):
    if not isinstance(item, dict) or key not in item:
        raise ValueError(f"malformed rig data: {where} is missing field '{key}'")
    try:
        return convert(item[key])
    except (TypeError, ValueError, IndexError, AttributeError) as exc:
        raise ValueError(
            f"malformed rig data: {where} field '{key}': {exc}") from exc


def _parse_axis(value) -> Axis:
    name = str(value).lower()
    if name not in _AXIS_NAMES:
        raise ValueError(f"{value!r} is not one of {_AXIS_NAMES}")
    return Axis(_AXIS_NAMES.index(name))


def _vec3(value) -> tuple:
    out = tuple(float(v) for v in value)
    if len(out) != 3:
        raise ValueError(f"expected 3 components, got {len(out)}")
    return out


def rig_from_dict(data: dict) -> Rig:
    if not isinstance(data, dict) or "joints" not in data:
        raise ValueError("malformed rig data: missing field 'joints'")
    if not isinstance(data["joints"], list):
        raise ValueError("malformed rig data: field 'joints' must be a list")
    if not isinstance(data.get("end_effectors", []), list):
        raise ValueError("malformed rig data: field 'end_effectors' must be a list")
    joints = []
    for i, item in enumerate(data["joints"]):
        where = f"joint {i}"
        joints.append(Joint(
            id=_parse_field(item, "id", int, where),
            parent=_parse_field(item, "parent", int, where),
            offset=_parse_field(item, "offset", _vec3, where),
            axis=_parse_field(item, "axis", _parse_axis, where),
            lower=_parse_field(item, "lower", float, where),
            upper=_parse_field(item, "upper", float, where),
            name=str(item.get("name", "")),
        ))
    effectors = []
    for i, item in enumerate(data.get("end_effectors", [])):
        where = f"end effector {i}"
        effectors.append(EndEffector(
            joint=_parse_field(item, "joint", int, where),
            offset=_parse_field(item, "offset", _vec3, where)))
    base = data.get("base")
    base_dq = None
    if base is not None:
        rotation = _parse_field(base, "rotation",
                                lambda v: np.array([float(x) for x in v]), "base")
        translation = _parse_field(base, "translation", _vec3, "base")
        try:
            base_dq = dq_from_rot_trans(rotation, translation,
                                        TransformOrder.TRANS_THEN_ROT)
        except ValueError as exc:
            raise ValueError(f"malformed rig data: base transform: {exc}") from exc
    return Rig(joints, effectors, base_dq)


def save_rig(path, rig: Rig) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(rig_to_dict(rig), handle, indent=2)
        handle.write("\n")


def load_rig(path) -> Rig:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: {exc}") from exc
    return rig_from_dict(data)


def load_hand_model() -> Rig:
    """Load the shipped hand model file (matches build_hand_model())."""
    text = resources.files("dqik").joinpath(HAND_DATA_RESOURCE).read_text("utf-8")
    return rig_from_dict(json.loads(text))
