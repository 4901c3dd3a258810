"""Quaternion, dual-number and dual-quaternion algebra.

Quaternions are float64 arrays of shape (4,) in (s, x, y, z) order, scalar
first.  Dual-quaternions are arrays of shape (8,): real quaternion in [:4],
dual quaternion in [4:].  Rotations may also travel as exponential-map
vectors w = axis * angle, shape (3,), radians.

All operations are pure functions; nothing here mutates its inputs.  Signs
are left alone inside the algebra: the double cover (q vs -q) is only
canonicalized where a single representative is required, i.e. in the log
map and nowhere else.
"""

from __future__ import annotations

from enum import IntEnum
from typing import NamedTuple

import numpy as np

UNIT_TOL = 1e-6
# Below this angle the sin(t/2)/t factor switches to its series expansion.
SMALL_ANGLE = 1e-4
# Twist extraction divides by sqrt(s^2 + q_axis^2); under this the rotation
# is a pure half-turn swing and the twist is taken as identity.
TWIST_DEGENERACY = 1e-12

QUAT_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])
DQ_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])


class Axis(IntEnum):
    """Principal rotation axis, also used as an index into (x, y, z)."""

    X = 0
    Y = 1
    Z = 2


class TransformOrder(IntEnum):
    """Factor order of a rigid transform built from a rotation R and a
    translation T: ROT_THEN_TRANS is the product R*T, TRANS_THEN_ROT is T*R.
    """

    ROT_THEN_TRANS = 0
    TRANS_THEN_ROT = 1


class TwistSwingPair(NamedTuple):
    """Split of a rotation into twist about one principal axis and swing in
    the complementary plane.  ``swing * twist`` reconstructs the input.
    ``degenerate`` marks the pure half-turn-swing fallback (twist forced to
    identity)."""

    twist: np.ndarray
    swing: np.ndarray
    axis: Axis
    degenerate: bool = False


def quat(s: float, x: float, y: float, z: float) -> np.ndarray:
    return np.array([s, x, y, z], dtype=float)


def quat_from_vector(v) -> np.ndarray:
    """Embed a 3-vector as a pure quaternion (0, v)."""
    v = np.asarray(v, dtype=float)
    return np.array([0.0, v[0], v[1], v[2]])


def quat_norm(q) -> float:
    q = np.asarray(q, dtype=float)
    return float(np.sqrt(q @ q))


def is_unit_quat(q, tol: float = UNIT_TOL) -> bool:
    return abs(quat_norm(q) - 1.0) <= tol


def quat_mul(q0, q1) -> np.ndarray:
    """Hamilton product q0 * q1.

    (s0, v0)(s1, v1) = (s0 s1 - v0.v1,  s0 v1 + s1 v0 + v0 x v1)
    """
    s0, x0, y0, z0 = q0
    s1, x1, y1, z1 = q1
    return np.array([
        s0 * s1 - x0 * x1 - y0 * y1 - z0 * z1,
        s0 * x1 + s1 * x0 + y0 * z1 - z0 * y1,
        s0 * y1 + s1 * y0 + z0 * x1 - x0 * z1,
        s0 * z1 + s1 * z0 + x0 * y1 - y0 * x1,
    ])


def quat_conjugate(q) -> np.ndarray:
    """(s, v) -> (s, -v); equals the inverse for unit quaternions."""
    s, x, y, z = q
    return np.array([s, -x, -y, -z])


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    """Unit quaternion (cos(a/2), sin(a/2) * axis) for a unit axis."""
    axis = np.asarray(axis, dtype=float)
    if angle == 0.0:
        return QUAT_IDENTITY.copy()
    n = float(np.sqrt(axis @ axis))
    if abs(n - 1.0) > UNIT_TOL:
        raise ValueError(f"rotation axis must be unit length, got |axis|={n:.6g}")
    h = 0.5 * angle
    s = np.sin(h)
    return np.array([np.cos(h), s * axis[0], s * axis[1], s * axis[2]])


def quat_rotate(q, p) -> np.ndarray:
    """Rotate 3-vector p by unit quaternion q via q (0,p) q*."""
    if not is_unit_quat(q):
        raise ValueError("quat_rotate requires a unit quaternion")
    r = quat_mul(quat_mul(q, quat_from_vector(p)), quat_conjugate(q))
    return r[1:]


def quat_to_expmap(q) -> np.ndarray:
    """Logarithm of a unit quaternion as a rotation vector axis * angle.

    The sign is canonicalized (q and -q give the same answer), so the
    returned angle lies in [0, pi].  Near the identity the direct formula
    degrades; the small-angle limit w = 2v is used instead.
    """
    s, x, y, z = (float(c) for c in q)
    if s < 0.0:
        s, x, y, z = -s, -x, -y, -z
    vn = np.sqrt(x * x + y * y + z * z)
    if vn < 1e-12:
        return np.array([2.0 * x, 2.0 * y, 2.0 * z])
    angle = 2.0 * np.arctan2(vn, s)
    k = angle / vn
    return np.array([k * x, k * y, k * z])


def expmap_to_quat(w) -> np.ndarray:
    """Unit quaternion for a rotation vector w = axis * angle."""
    x, y, z = (float(c) for c in w)
    angle = np.sqrt(x * x + y * y + z * z)
    if angle < SMALL_ANGLE:
        # sin(t/2)/t = 1/2 - t^2/48 + O(t^4)
        k = 0.5 - angle * angle / 48.0
        return np.array([np.cos(0.5 * angle), k * x, k * y, k * z])
    k = np.sin(0.5 * angle) / angle
    return np.array([np.cos(0.5 * angle), k * x, k * y, k * z])


def expmap_regularize(w) -> np.ndarray:
    """Re-express a rotation vector away from the |w| = 2*pi singularity.

    For |w| > pi returns (1 - 2*pi/|w|) * w, the same rotation with the
    shorter (negated) arc; anything inside the closed pi-ball is returned
    unchanged.
    """
    w = np.asarray(w, dtype=float)
    angle = float(np.sqrt(w @ w))
    if angle <= np.pi:
        return w.copy()
    return (1.0 - 2.0 * np.pi / angle) * w


def dq(real, dual) -> np.ndarray:
    return np.concatenate([np.asarray(real, dtype=float), np.asarray(dual, dtype=float)])


def dq_real(a) -> np.ndarray:
    return np.asarray(a)[:4]


def dq_dual(a) -> np.ndarray:
    return np.asarray(a)[4:]


def dq_mul(a, b) -> np.ndarray:
    """Dual-quaternion product: (ar + e ad)(br + e bd) with e^2 = 0."""
    ar, ad = a[:4], a[4:]
    br, bd = b[:4], b[4:]
    real = quat_mul(ar, br)
    dual = quat_mul(ar, bd) + quat_mul(ad, br)
    return np.concatenate([real, dual])


def dq_add(a, b) -> np.ndarray:
    return np.asarray(a, dtype=float) + np.asarray(b, dtype=float)


def dq_scale(alpha: float, a) -> np.ndarray:
    return alpha * np.asarray(a, dtype=float)


def dq_conjugate(a) -> np.ndarray:
    """Componentwise quaternion conjugate (qr*, qd*)."""
    return np.concatenate([quat_conjugate(a[:4]), quat_conjugate(a[4:])])


def dq_norm(a) -> tuple[float, float]:
    """Squared norm a * a~ as a dual number (real part, dual part).

    The vector parts of the product cancel, leaving |qr|^2 + e * 2<qr, qd>.
    A unit rigid transform gives (1, 0).
    """
    ar, ad = np.asarray(a[:4], dtype=float), np.asarray(a[4:], dtype=float)
    return float(ar @ ar), float(2.0 * (ar @ ad))


def is_unit_dq(a, tol: float = UNIT_TOL) -> bool:
    real, dual = dq_norm(a)
    return abs(real - 1.0) <= tol and abs(dual) <= tol


def dq_pure_translation(t) -> np.ndarray:
    """1 + e * (0, t/2): rigid transform that only translates."""
    t = np.asarray(t, dtype=float)
    return np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.5 * t[0], 0.5 * t[1], 0.5 * t[2]])


def dq_pure_rotation(q) -> np.ndarray:
    """q + e * 0: rigid transform that only rotates."""
    if not is_unit_quat(q):
        raise ValueError("dq_pure_rotation requires a unit quaternion")
    return np.array([q[0], q[1], q[2], q[3], 0.0, 0.0, 0.0, 0.0])


def dq_from_rot_trans(rot, trans, order: TransformOrder = TransformOrder.ROT_THEN_TRANS) -> np.ndarray:
    """Unit dual-quaternion for rotation ``rot`` and translation ``trans``.

    ROT_THEN_TRANS stores dual = rot * (0, t) / 2, TRANS_THEN_ROT stores
    dual = (0, t) / 2 * rot; the two differ whenever rot is not identity.
    """
    if not is_unit_quat(rot):
        raise ValueError("dq_from_rot_trans requires a unit rotation quaternion")
    rot = np.asarray(rot, dtype=float)
    tq = quat_from_vector(trans)
    if order == TransformOrder.ROT_THEN_TRANS:
        dual = 0.5 * quat_mul(rot, tq)
    else:
        dual = 0.5 * quat_mul(tq, rot)
    return np.concatenate([rot, dual])


def dq_to_rot_trans(a, order: TransformOrder = TransformOrder.ROT_THEN_TRANS) -> tuple[np.ndarray, np.ndarray]:
    """Invert dq_from_rot_trans for the given factor order."""
    if not is_unit_dq(a):
        raise ValueError("dq_to_rot_trans requires a unit dual-quaternion")
    rot = np.asarray(a[:4], dtype=float).copy()
    if order == TransformOrder.ROT_THEN_TRANS:
        tq = 2.0 * quat_mul(quat_conjugate(rot), a[4:])
    else:
        tq = 2.0 * quat_mul(a[4:], quat_conjugate(rot))
    return rot, tq[1:]


def dq_translation(a) -> np.ndarray:
    """World-frame translation of a unit rigid transform, 2 * qd * qr*.

    This is the translation column of the equivalent homogeneous matrix:
    the point action is p -> R(p) + dq_translation(a).
    """
    tq = 2.0 * quat_mul(a[4:], quat_conjugate(a[:4]))
    return tq[1:]


def dq_transform_point(a, p) -> np.ndarray:
    """Apply a unit rigid transform to a point."""
    return quat_rotate(a[:4], p) + dq_translation(a)


_AXIS_CYCLE = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


def twist_swing_decompose(q, axis: Axis) -> TwistSwingPair:
    """Split unit quaternion q into twist about ``axis`` and swing across it.

    twist = (s, q_a) / sqrt(s^2 + q_a^2) placed on the chosen axis and
    swing = q * twist*, expanded in closed form so the swing component on
    the twist axis is exactly zero.  The ordered product swing * twist
    reproduces q.  When s^2 + q_a^2 vanishes (a half-turn entirely in the
    swing plane) the twist is not determined; the fallback returns identity
    twist, swing = q, flagged degenerate.
    """
    if not is_unit_quat(q):
        raise ValueError("twist_swing_decompose requires a unit quaternion")
    s = float(q[0])
    a, b, c = _AXIS_CYCLE[int(axis)]
    qa, qb, qc = float(q[1 + a]), float(q[1 + b]), float(q[1 + c])

    m2 = s * s + qa * qa
    if m2 < TWIST_DEGENERACY:
        return TwistSwingPair(QUAT_IDENTITY.copy(), np.asarray(q, dtype=float).copy(),
                              Axis(axis), degenerate=True)
    m = np.sqrt(m2)

    twist = np.zeros(4)
    twist[0] = s / m
    twist[1 + a] = qa / m

    swing = np.zeros(4)
    swing[0] = m
    swing[1 + b] = (s * qb - qa * qc) / m
    swing[1 + c] = (s * qc + qa * qb) / m
    return TwistSwingPair(twist, swing, Axis(axis), degenerate=False)
