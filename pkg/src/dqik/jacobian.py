"""Task-space error and Jacobian construction for end-effector goals.

The task map e(w) stacks, per targeted end effector, the world position
(3 rows) and the exponential-map log of the world orientation (3 rows),
each scaled by the goal's weight. Two independent constructions of
J = de/dw are provided:

  * jacobian_fd: forward differences of the task map, one FK per DOF.
  * jacobian_analytic: differentiates each joint's local rotation and
    sandwiches it between the accumulated prefix and suffix dual
    quaternions, so each column costs a handful of products instead of a
    full FK. Position rows come from differentiating t = 2 d r*, giving
    dt = (2 dd - t dr) r*; orientation rows apply the chart Jacobian of
    the quaternion log to the real-part derivative.

Both paths produce the same matrix to first order; the tests hold them
against each other and against a central-difference oracle. Columns for
joints that are not ancestors of an effector are exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dualquat import (
    dq_conjugate,
    dq_mul,
    dq_pure_translation,
    dq_translation,
    quat_conjugate,
    quat_from_vector,
    quat_mul,
    quat_to_expmap,
)
from .rig import ROOT, Rig, forward_kinematics

FD_DELTA = 1e-6
LOG_JACOBIAN_SMALL = 1e-4


@dataclass(frozen=True)
class Goal:
    """6-DOF target for one end effector, with per-part weights."""

    effector: int
    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    pos_weight: float = 1.0
    rot_weight: float = 1.0


GoalSet = Sequence[Goal]


def goals_validate(rig: Rig, goals: GoalSet) -> list[str]:
    """One message per violated goal invariant; empty iff usable."""
    report = []
    any_positive = False
    for g, goal in enumerate(goals):
        if not 0 <= goal.effector < len(rig.end_effectors):
            report.append(f"goal {g}: effector {goal.effector} out of range")
        if goal.pos_weight < 0 or goal.rot_weight < 0:
            report.append(f"goal {g}: negative weight")
        if abs(np.linalg.norm(goal.orientation) - 1.0) > 1e-6:
            report.append(f"goal {g}: orientation not unit")
        if goal.pos_weight > 0 or goal.rot_weight > 0:
            any_positive = True
    if goals and not any_positive:
        report.append("no goal has a positive weight")
    return report


def _effector_chain(rig: Rig, joint: int) -> list[int]:
    chain = []
    k = joint
    while k != ROOT:
        chain.append(k)
        k = rig.parents[k]
    chain.reverse()
    return chain


def _effector_transform(rig: Rig, world: np.ndarray, effector: int) -> np.ndarray:
    eff = rig.end_effectors[effector]
    return dq_mul(world[eff.joint], dq_pure_translation(eff.offset))


def pose_map(rig: Rig, pose: np.ndarray, goals: GoalSet) -> np.ndarray:
    """Stacked weighted (position, log orientation) rows for each goal."""
    world = forward_kinematics(rig, pose)
    out = np.empty(6 * len(goals))
    for g, goal in enumerate(goals):
        full = _effector_transform(rig, world, goal.effector)
        out[6 * g:6 * g + 3] = goal.pos_weight * dq_translation(full)
        out[6 * g + 3:6 * g + 6] = goal.rot_weight * quat_to_expmap(full[:4])
    return out


def compute_error(rig: Rig, pose: np.ndarray, goals: GoalSet) -> np.ndarray:
    """Weighted task-space residual: target minus current, per goal.

    Position rows are plain differences; orientation rows are the log of
    the relative rotation q_target * q_current^-1, so their magnitude
    never exceeds pi.
    """
    world = forward_kinematics(rig, pose)
    out = np.empty(6 * len(goals))
    for g, goal in enumerate(goals):
        full = _effector_transform(rig, world, goal.effector)
        target_p = np.asarray(goal.position, dtype=float)
        out[6 * g:6 * g + 3] = goal.pos_weight * (target_p - dq_translation(full))
        relative = quat_mul(np.asarray(goal.orientation, dtype=float),
                            quat_conjugate(full[:4]))
        out[6 * g + 3:6 * g + 6] = goal.rot_weight * quat_to_expmap(relative)
    return out


def jacobian_fd(rig: Rig, pose: np.ndarray, goals: GoalSet,
                delta: float = FD_DELTA) -> np.ndarray:
    """Forward-difference Jacobian of the task map, column per DOF."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    w = np.asarray(pose, dtype=float)
    f0 = pose_map(rig, w, goals)
    jac = np.zeros((f0.size, rig.dof))
    for j in range(rig.dof):
        bumped = w.copy()
        bumped[j] += delta
        jac[:, j] = (pose_map(rig, bumped, goals) - f0) / delta
    return jac


def quat_log_jacobian(q: np.ndarray) -> np.ndarray:
    """3x4 chart Jacobian of w = log(q) at a unit quaternion with s >= 0.

    Rows are d(w)/d(s, x, y, z) restricted to the unit sphere's tangent;
    callers must canonicalize the sign of q (and of its derivative)
    before applying it.
    """
    s = q[0]
    v = q[1:]
    tv = np.linalg.norm(v)
    if tv < LOG_JACOBIAN_SMALL:
        # theta -> 0 limits of f = theta/tv and g = (2 s tv - theta)/tv^3.
        f = 2.0 + tv * tv / 3.0
        g = -4.0 / 3.0 - 0.4 * tv * tv
    else:
        theta = 2.0 * np.arctan2(tv, s)
        f = theta / tv
        g = (2.0 * s * tv - theta) / tv ** 3
    jac = np.empty((3, 4))
    jac[:, 0] = -2.0 * v
    jac[:, 1:] = f * np.eye(3) + g * np.outer(v, v)
    return jac


def _local_rotation_derivative(axis: int, w: float) -> np.ndarray:
    """d/dw of the unit dual quaternion R(w about axis), as an 8-vector."""
    half = 0.5 * w
    out = np.zeros(8)
    out[0] = -0.5 * np.sin(half)
    out[1 + axis] = 0.5 * np.cos(half)
    return out


def jacobian_analytic(rig: Rig, pose: np.ndarray, goals: GoalSet) -> np.ndarray:
    """Closed-form Jacobian of the task map via dual-quaternion calculus."""
    w = np.asarray(pose, dtype=float)
    world = forward_kinematics(rig, w)
    jac = np.zeros((6 * len(goals), rig.dof))
    for g, goal in enumerate(goals):
        eff = rig.end_effectors[goal.effector]
        full = _effector_transform(rig, world, goal.effector)
        q_real = full[:4]
        t_quat = quat_from_vector(dq_translation(full))
        sign = -1.0 if q_real[0] < 0.0 else 1.0
        log_jac = quat_log_jacobian(sign * q_real)
        real_conj = quat_conjugate(q_real)
        for k in _effector_chain(rig, eff.joint):
            parent = rig.parents[k]
            parent_world = rig.base_transform if parent == ROOT else world[parent]
            prefix = dq_mul(parent_world, dq_pure_translation(rig.offsets[k]))
            suffix = dq_mul(dq_conjugate(world[k]), full)
            d_full = dq_mul(dq_mul(prefix, _local_rotation_derivative(rig.axes[k], w[k])),
                            suffix)
            d_real = d_full[:4]
            d_dual = d_full[4:]
            d_pos = quat_mul(2.0 * d_dual - quat_mul(t_quat, d_real), real_conj)
            jac[6 * g:6 * g + 3, k] = goal.pos_weight * d_pos[1:]
            jac[6 * g + 3:6 * g + 6, k] = goal.rot_weight * (log_jac @ (sign * d_real))
    return jac
