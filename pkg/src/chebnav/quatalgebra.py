"""
Quaternion and small-vector algebra.

Quaternions are stored scalar-first, ``[s, x, y, z]``, and multiplied with the
Hamilton convention. Every function broadcasts over leading axes, so a stack
of quaternions with shape ``(K, 4)`` is handled in one call.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

UNIT_TOL = 1e-9

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])
IDENTITY.flags.writeable = False


def skew(a: ArrayLike) -> NDArray[np.float64]:
    """Cross-product matrix: ``skew(a) @ b == cross(a, b)``."""
    a = np.asarray(a, dtype=float)
    x, y, z = a[..., 0], a[..., 1], a[..., 2]
    out = np.zeros(a.shape[:-1] + (3, 3))
    out[..., 0, 1], out[..., 0, 2] = -z, y
    out[..., 1, 0], out[..., 1, 2] = z, -x
    out[..., 2, 0], out[..., 2, 1] = -y, x
    return out


def as_quat(v: ArrayLike) -> NDArray[np.float64]:
    """Embed 3-vectors as pure quaternions ``[0, v]``."""
    v = np.asarray(v, dtype=float)
    return np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)


def quat_mul(q1: ArrayLike, q2: ArrayLike) -> NDArray[np.float64]:
    """Hamilton product ``q1 o q2``."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    a0, a1, a2, a3 = q1[..., 0], q1[..., 1], q1[..., 2], q1[..., 3]
    b0, b1, b2, b3 = q2[..., 0], q2[..., 1], q2[..., 2], q2[..., 3]
    out = np.empty(np.broadcast_shapes(q1.shape, q2.shape))
    out[..., 0] = a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3
    out[..., 1] = a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2
    out[..., 2] = a0 * b2 + a2 * b0 + a3 * b1 - a1 * b3
    out[..., 3] = a0 * b3 + a3 * b0 + a1 * b2 - a2 * b1
    return out


def _bracket(q: ArrayLike, sign: float) -> NDArray[np.float64]:
    q = np.asarray(q, dtype=float)
    s, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    out = np.empty(q.shape[:-1] + (4, 4))
    out[..., 0, 0] = out[..., 1, 1] = out[..., 2, 2] = out[..., 3, 3] = s
    out[..., 0, 1], out[..., 0, 2], out[..., 0, 3] = -x, -y, -z
    out[..., 1, 0], out[..., 2, 0], out[..., 3, 0] = x, y, z
    # sign * skew(eta) in the lower-right block
    out[..., 1, 2], out[..., 2, 1] = -sign * z, sign * z
    out[..., 1, 3], out[..., 3, 1] = sign * y, -sign * y
    out[..., 2, 3], out[..., 3, 2] = -sign * x, sign * x
    return out


def qplus(q: ArrayLike) -> NDArray[np.float64]:
    """Left-multiplication matrix: ``qplus(q1) @ q2 == quat_mul(q1, q2)``."""
    return _bracket(q, 1.0)


def qminus(q: ArrayLike) -> NDArray[np.float64]:
    """Right-multiplication matrix: ``qminus(q2) @ q1 == quat_mul(q1, q2)``."""
    return _bracket(q, -1.0)


def conj(q: ArrayLike) -> NDArray[np.float64]:
    q = np.array(q, dtype=float)
    q[..., 1:] *= -1.0
    return q


def norm(q: ArrayLike) -> NDArray[np.float64]:
    return np.linalg.norm(np.asarray(q, dtype=float), axis=-1)


def normalize(q: ArrayLike) -> NDArray[np.float64]:
    q = np.asarray(q, dtype=float)
    return q / norm(q)[..., None]


def _require_unit(q: NDArray[np.float64]) -> None:
    if np.any(np.abs(norm(q) - 1.0) > UNIT_TOL):
        raise ValueError("quaternion is not unit-norm")


def quat_to_dcm(q: ArrayLike) -> NDArray[np.float64]:
    """
    Rotation matrix of a unit quaternion.

    The result maps a body vector to the reference frame, i.e.
    ``quat_to_dcm(q) @ v`` equals the vector part of ``q o [0, v] o q*``.
    """
    q = np.asarray(q, dtype=float)
    _require_unit(q)
    s, eta = q[..., 0], q[..., 1:]
    ss = (s * s - np.sum(eta * eta, axis=-1))[..., None, None]
    return (
        ss * np.eye(3)
        + 2.0 * eta[..., :, None] * eta[..., None, :]
        + 2.0 * s[..., None, None] * skew(eta)
    )


def dcm_to_quat(C: ArrayLike) -> NDArray[np.float64]:
    """Unit quaternion (scalar part >= 0) of a rotation matrix; inverse of quat_to_dcm."""
    C = np.asarray(C, dtype=float)
    tr = np.trace(C)
    # Shepperd: branch on the largest diagonal term of the 4x4 symmetric form
    cands = np.array([tr, C[0, 0], C[1, 1], C[2, 2]])
    k = int(np.argmax(cands))
    if k == 0:
        s = 0.5 * np.sqrt(1.0 + tr)
        q = [s, (C[2, 1] - C[1, 2]) / (4 * s), (C[0, 2] - C[2, 0]) / (4 * s), (C[1, 0] - C[0, 1]) / (4 * s)]
    elif k == 1:
        x = 0.5 * np.sqrt(1.0 + 2 * C[0, 0] - tr)
        q = [(C[2, 1] - C[1, 2]) / (4 * x), x, (C[0, 1] + C[1, 0]) / (4 * x), (C[0, 2] + C[2, 0]) / (4 * x)]
    elif k == 2:
        y = 0.5 * np.sqrt(1.0 + 2 * C[1, 1] - tr)
        q = [(C[0, 2] - C[2, 0]) / (4 * y), (C[0, 1] + C[1, 0]) / (4 * y), y, (C[1, 2] + C[2, 1]) / (4 * y)]
    else:
        z = 0.5 * np.sqrt(1.0 + 2 * C[2, 2] - tr)
        q = [(C[1, 0] - C[0, 1]) / (4 * z), (C[0, 2] + C[2, 0]) / (4 * z), (C[1, 2] + C[2, 1]) / (4 * z), z]
    q = np.array(q)
    return q if q[0] >= 0 else -q


def rotate(q: ArrayLike, v: ArrayLike) -> NDArray[np.float64]:
    """
    Vector part of ``q o [0, v] o q*``.

    Expanded as ``(s^2 - |eta|^2) v + 2 (eta . v) eta + 2 s eta x v``; no
    unit-norm assumption, so a non-unit ``q`` also scales by ``|q|^2``.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    s, ex, ey, ez = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    vx, vy, vz = v[..., 0], v[..., 1], v[..., 2]
    k = s * s - ex * ex - ey * ey - ez * ez
    d2 = 2.0 * (ex * vx + ey * vy + ez * vz)
    s2 = 2.0 * s
    out = np.empty(np.broadcast_shapes(q.shape[:-1], v.shape[:-1]) + (3,))
    out[..., 0] = k * vx + d2 * ex + s2 * (ey * vz - ez * vy)
    out[..., 1] = k * vy + d2 * ey + s2 * (ez * vx - ex * vz)
    out[..., 2] = k * vz + d2 * ez + s2 * (ex * vy - ey * vx)
    return out


def quat_from_rotvec(phi: ArrayLike) -> NDArray[np.float64]:
    """Unit quaternion ``[cos(|phi|/2), sin(|phi|/2) phi/|phi|]``."""
    phi = np.asarray(phi, dtype=float)
    angle = np.linalg.norm(phi, axis=-1, keepdims=True)
    half = 0.5 * angle
    # sin(x/2)/x via series below 1e-4 keeps full precision near zero
    small = angle < 1e-4
    safe = np.where(small, 1.0, angle)
    k = np.where(small, 0.5 - angle**2 / 48.0, np.sin(half) / safe)
    return np.concatenate([np.cos(half), k * phi], axis=-1)


def quat_from_axis_angle(axis: ArrayLike, angle: float) -> NDArray[np.float64]:
    axis = np.asarray(axis, dtype=float)
    return quat_from_rotvec(angle * axis / np.linalg.norm(axis))


def principal_angle(q_true: ArrayLike, q_est: ArrayLike) -> NDArray[np.float64]:
    """
    Rotation angle between two attitudes, in [0, pi].

    Written as ``2 atan2(|eta|, |s|)`` of ``q_true* o q_est``; this equals
    ``2 arccos(|s|)`` but keeps full relative precision for tiny angles.
    """
    dq = quat_mul(conj(q_true), q_est)
    return 2.0 * np.arctan2(np.linalg.norm(dq[..., 1:], axis=-1), np.abs(dq[..., 0]))
