"""Quaternion and rotation utilities.

Quaternions are numpy arrays in (w, x, y, z) order. Functions accept either a
single quaternion of shape (4,) or a batch of shape (..., 4) and broadcast the
way numpy users expect.
"""

from __future__ import annotations

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n == 0.0):
        raise ValueError("cannot normalize zero quaternion")
    return q / n


def multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a*b (apply b first, then a)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def conjugate(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector(s) v by quaternion(s) q.

    Uses the expanded sandwich product; broadcasts q (..., 4) against v (..., 3).
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    w = q[..., :1]
    u = q[..., 1:]
    uv = np.cross(u, v)
    return v + 2.0 * (w * uv + np.cross(u, uv))


def from_axis_angle(axis: np.ndarray, angle: float | np.ndarray) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    angle = np.asarray(angle, dtype=float)
    n = np.linalg.norm(axis, axis=-1, keepdims=True)
    if np.any(n == 0.0):
        raise ValueError("rotation axis must be non-zero")
    axis = axis / n
    half = angle / 2.0
    return np.concatenate(
        [np.cos(half)[..., None], np.sin(half)[..., None] * axis], axis=-1
    )


def angle_of(q: np.ndarray) -> np.ndarray:
    """Rotation angle in [0, pi] of quaternion(s)."""
    q = np.asarray(q, dtype=float)
    w = np.clip(np.abs(q[..., 0]) / np.linalg.norm(q, axis=-1), -1.0, 1.0)
    return 2.0 * np.arccos(w)


def to_matrix(q: np.ndarray) -> np.ndarray:
    """3x3 rotation matrix (or batch of them) from unit quaternion(s)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1 - 2 * (y * y + z * z)
    m[..., 0, 1] = 2 * (x * y - w * z)
    m[..., 0, 2] = 2 * (x * z + w * y)
    m[..., 1, 0] = 2 * (x * y + w * z)
    m[..., 1, 1] = 1 - 2 * (x * x + z * z)
    m[..., 1, 2] = 2 * (y * z - w * x)
    m[..., 2, 0] = 2 * (x * z - w * y)
    m[..., 2, 1] = 2 * (y * z + w * x)
    m[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def from_matrix(m: np.ndarray) -> np.ndarray:
    """Unit quaternion from a 3x3 rotation matrix (Shepperd's method)."""
    m = np.asarray(m, dtype=float)
    t = np.trace(m)
    if t > 0.0:
        s = np.sqrt(t + 1.0) * 2.0
        return normalize(
            np.array(
                [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
            )
        )
    i = int(np.argmax(np.diag(m)))
    j, k = (i + 1) % 3, (i + 2) % 3
    s = np.sqrt(max(m[i, i] - m[j, j] - m[k, k] + 1.0, 0.0)) * 2.0
    q = np.empty(4)
    q[0] = (m[k, j] - m[j, k]) / s
    q[1 + i] = 0.25 * s
    q[1 + j] = (m[j, i] + m[i, j]) / s
    q[1 + k] = (m[k, i] + m[i, k]) / s
    return normalize(q)


def between(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Minimal rotation taking direction u onto direction v (a pure swing)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("directions must be non-zero")
    u = u / nu
    v = v / nv
    d = float(np.dot(u, v))
    if d < -1.0 + 1e-12:
        # Antipodal: rotate pi about any axis perpendicular to u.
        axis = np.cross(u, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis) < 1e-8:
            axis = np.cross(u, [0.0, 1.0, 0.0])
        return from_axis_angle(axis, np.pi)
    q = np.empty(4)
    q[0] = 1.0 + d
    q[1:] = np.cross(u, v)
    return normalize(q)


# BVH-style Euler angles. Channel order ZXY means the matrix Rz @ Rx @ Ry,
# i.e. the first listed channel is the outermost rotation.

_AXES = {"X": np.array([1.0, 0, 0]), "Y": np.array([0, 1.0, 0]), "Z": np.array([0, 0, 1.0])}


def from_euler(order: str, angles: np.ndarray, degrees: bool = False) -> np.ndarray:
    """Compose rotations about the listed axes, first axis outermost.

    angles has shape (..., len(order)).
    """
    angles = np.asarray(angles, dtype=float)
    if degrees:
        angles = np.deg2rad(angles)
    q = None
    for i, ax in enumerate(order.upper()):
        qi = from_axis_angle(_AXES[ax], angles[..., i])
        q = qi if q is None else multiply(q, qi)
    return q


def to_euler_zxy(q: np.ndarray, degrees: bool = False) -> np.ndarray:
    """Extract (z, x, y) angles such that R = Rz @ Rx @ Ry.

    At the gimbal singularity (x = +-90 deg) the z angle is set to 0.
    """
    m = to_matrix(q)
    sx = np.clip(m[..., 2, 1], -1.0, 1.0)
    x = np.arcsin(sx)
    cx = np.cos(x)
    gimbal = np.abs(cx) < 1e-9
    y = np.where(
        gimbal,
        np.arctan2(m[..., 0, 2], m[..., 0, 0]),
        np.arctan2(-m[..., 2, 0], m[..., 2, 2]),
    )
    z = np.where(gimbal, 0.0, np.arctan2(-m[..., 0, 1], m[..., 1, 1]))
    out = np.stack([z, x, y], axis=-1)
    return np.rad2deg(out) if degrees else out
