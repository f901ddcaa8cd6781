"""Maps, operators and distances on SO(3).

Every function accepts a single object (a ``(3,)`` vector or ``(3, 3)``
matrix) or a stack of them (``(..., 3)`` / ``(..., 3, 3)``) and broadcasts
over the leading axes.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DegenerateMatrix,
    GimbalLock,
    NearPiRotation,
    NonUnitAxis,
    NotAntisymmetric,
    NotSymmetric,
)

# Tolerances. Tests may override them through monkeypatch.
ANTISYM_TOL = 1e-9
SYM_TOL = 1e-9
UNIT_AXIS_TOL = 1e-12
SMALL_ANGLE = 1e-8
NEAR_PI_MARGIN = 1e-6
GIMBAL_MARGIN = 1e-6
ORTHO_TOL = 1e-9

I3 = np.eye(3)


def _swap(m):
    return np.swapaxes(m, -1, -2)


def skew(v):
    """Map a 3-vector to its cross-product matrix, ``skew(v) @ w == v x w``."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    out[..., 0, 1] = -z
    out[..., 0, 2] = y
    out[..., 1, 0] = z
    out[..., 1, 2] = -x
    out[..., 2, 0] = -y
    out[..., 2, 1] = x
    return out


def vex(m):
    """Inverse of :func:`skew`.

    Raises
    ------
    NotAntisymmetric
        If ``m + m.T`` exceeds ``ANTISYM_TOL`` anywhere.
    """
    m = np.asarray(m, dtype=float)
    if m.size and np.max(np.abs(m + _swap(m))) > ANTISYM_TOL:
        raise NotAntisymmetric("matrix is not antisymmetric")
    # average the two copies of each entry so that skew(vex(m)) == pa(m)
    return 0.5 * np.stack(
        [m[..., 2, 1] - m[..., 1, 2], m[..., 0, 2] - m[..., 2, 0], m[..., 1, 0] - m[..., 0, 1]],
        axis=-1,
    )


def pa(a):
    """Anti-symmetric projection ``(a - a.T) / 2``."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a - _swap(a))


def phi(a):
    """Composition ``vex(pa(a))``."""
    return vex(pa(a))


def ecl_dist(r):
    """Normalized Euclidean distance ``Tr(I - R) / 4``, in ``[0, 1]``."""
    r = np.asarray(r, dtype=float)
    return 0.25 * (3.0 - np.trace(r, axis1=-2, axis2=-1))


def weighted_dist(m, r):
    """Weighted distance ``Tr(M (I - R)) / 4`` for symmetric ``M``."""
    m = np.asarray(m, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.max(np.abs(m - _swap(m))) > SYM_TOL:
        raise NotSymmetric("weighting matrix is not symmetric")
    return 0.25 * (np.trace(m, axis1=-2, axis2=-1) - np.einsum("...ij,...ji->...", m, r))


def from_angle_axis(alpha, u):
    """Rotation of ``alpha`` radians about the unit axis ``u``."""
    u = np.asarray(u, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if np.max(np.abs(np.linalg.norm(u, axis=-1) - 1.0)) > UNIT_AXIS_TOL:
        raise NonUnitAxis("rotation axis must have unit norm")
    k = skew(u)
    s = np.sin(alpha)[..., None, None]
    c = np.cos(alpha)[..., None, None]
    return I3 + s * k + (1.0 - c) * (k @ k)


def from_rodriguez(rho):
    """Rotation from a Rodriguez vector."""
    rho = np.asarray(rho, dtype=float)
    n2 = np.sum(rho * rho, axis=-1)[..., None, None]
    outer = rho[..., :, None] * rho[..., None, :]
    return ((1.0 - n2) * I3 + 2.0 * outer + 2.0 * skew(rho)) / (1.0 + n2)


def to_rodriguez(r):
    """Rodriguez vector of a rotation (closed-form Cayley transform).

    ``[rho]x = (R - I)(R + I)^-1`` reduces to
    ``rho = vex(R - R.T) / (1 + Tr R)``.

    Raises
    ------
    NearPiRotation
        If ``Tr R <= -1 + NEAR_PI_MARGIN``.
    """
    r = np.asarray(r, dtype=float)
    tr = np.trace(r, axis1=-2, axis2=-1)
    if np.any(tr <= -1.0 + NEAR_PI_MARGIN):
        raise NearPiRotation("rotation is too close to 180 degrees")
    return vex(r - _swap(r)) / (1.0 + tr)[..., None]


def exp_map(w):
    """Exponential map from a rotation vector to SO(3).

    Below ``SMALL_ANGLE`` the second-order series ``I + K + K^2 / 2`` is used.
    """
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w, axis=-1)
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    k = skew(w / safe[..., None])
    s = np.sin(theta)[..., None, None]
    c = np.cos(theta)[..., None, None]
    big = I3 + s * k + (1.0 - c) * (k @ k)
    kw = skew(w)
    series = I3 + kw + 0.5 * (kw @ kw)
    return np.where(small[..., None, None], series, big)


def reproject(m, tol: float = 1e-15, max_iter: int = 50):
    """Nearest rotation (orthonormal polar factor) of a matrix with ``det > 0``.

    Uses the Newton polar iteration ``X <- (X + X^-T) / 2``, which is
    invariant to positive scaling of the input.
    """
    x = np.array(m, dtype=float)
    if np.any(np.linalg.det(x) <= 0.0):
        raise DegenerateMatrix("determinant must be positive")
    for _ in range(max_iter):
        nxt = 0.5 * (x + _swap(np.linalg.inv(x)))
        done = np.max(np.abs(nxt - x)) <= tol
        x = nxt
        if done:
            break
    return x


def is_rotation(r, tol: float = ORTHO_TOL) -> bool:
    r = np.asarray(r, dtype=float)
    ortho = np.max(np.abs(_swap(r) @ r - I3))
    det = np.max(np.abs(np.linalg.det(r) - 1.0))
    return bool(ortho <= tol and det <= tol)


def rot_z(a):
    return from_angle_axis(a, np.array([0.0, 0.0, 1.0]))


def rot_y(a):
    return from_angle_axis(a, np.array([0.0, 1.0, 0.0]))


def rot_x(a):
    return from_angle_axis(a, np.array([1.0, 0.0, 0.0]))


def from_euler_zyx(angles):
    """Compose ``Rz(yaw) @ Ry(pitch) @ Rx(roll)`` from ``[yaw, pitch, roll]``."""
    angles = np.asarray(angles, dtype=float)
    return rot_z(angles[..., 0]) @ rot_y(angles[..., 1]) @ rot_x(angles[..., 2])


def euler_zyx(r):
    """ZYX angles ``[yaw, pitch, roll]`` without a gimbal-lock check.

    Used for logging, where a meaningless angle near the singularity is
    preferable to aborting a run.
    """
    r = np.asarray(r, dtype=float)
    pitch = -np.arcsin(np.clip(r[..., 2, 0], -1.0, 1.0))
    yaw = np.arctan2(r[..., 1, 0], r[..., 0, 0])
    roll = np.arctan2(r[..., 2, 1], r[..., 2, 2])
    return np.stack([yaw, pitch, roll], axis=-1)


def to_euler_zyx(r):
    """ZYX (yaw, pitch, roll) angles in radians.

    Raises
    ------
    GimbalLock
        If ``|pitch| >= pi/2 - GIMBAL_MARGIN``.
    """
    angles = euler_zyx(r)
    if np.any(np.abs(angles[..., 1]) >= np.pi / 2 - GIMBAL_MARGIN):
        raise GimbalLock("pitch too close to +-90 degrees")
    return angles
