"""Rotation and rigid-transform helpers.

Coordinate convention is LDraw: right-handed, up axis is -Y, 1 LDU = 0.4 mm.
All rotations are 3x3 numpy arrays in SO(3).
"""

import math

import numpy as np

AXES = ("X", "Y", "Z")
ANGLES = (90, 180, 270)

_AXIS_VEC = {
    "X": np.array([1.0, 0.0, 0.0]),
    "Y": np.array([0.0, 1.0, 0.0]),
    "Z": np.array([0.0, 0.0, 1.0]),
}

UP = np.array([0.0, -1.0, 0.0])  # LDraw up


def axis_vector(axis):
    return _AXIS_VEC[axis].copy()


def rotation_about(axis, angle_rad):
    """Right-handed rotation about a unit axis vector (Rodrigues)."""
    axis = np.asarray(axis, dtype=float)
    x, y, z = axis
    c = math.cos(angle_rad)
    s = math.sin(angle_rad)
    t = 1.0 - c
    return np.array(
        [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ]
    )


def axis_angle_rotation(axis, angle_deg):
    """Exact integer rotation matrix for axis in {X,Y,Z}, angle multiple of 90."""
    R = rotation_about(_AXIS_VEC[axis], math.radians(angle_deg))
    return np.round(R)


def geodesic_distance(R1, R2):
    """Rotation angle in [0, pi] between two orientations."""
    tr = float(np.trace(R1.T @ R2))
    return math.acos(max(-1.0, min(1.0, (tr - 1.0) / 2.0)))


def rotation_between(a, b):
    """Deterministic rotation taking unit vector a to unit vector b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = float(np.dot(a, b))
    if c > 1.0 - 1e-12:
        return np.eye(3)
    if c < -1.0 + 1e-12:
        # Antiparallel: 180 degrees about a deterministic perpendicular axis.
        k = int(np.argmin(np.abs(a)))
        e = np.zeros(3)
        e[k] = 1.0
        p = np.cross(a, e)
        p /= np.linalg.norm(p)
        return rotation_about(p, math.pi)
    v = np.cross(a, b)
    vx = np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
    )
    return np.eye(3) + vx + vx @ vx * (1.0 / (1.0 + c))


def orthonormalize(M):
    """Polar projection of M onto SO(3); returns (R, correction_frobenius)."""
    U, _, Vt = np.linalg.svd(M)
    R = U @ Vt
    if np.linalg.det(R) < 0:
        U = U.copy()
        U[:, -1] = -U[:, -1]
        R = U @ Vt
    return R, float(np.linalg.norm(R - M))


def is_rotation(R, tol=1e-6):
    return (
        np.allclose(R.T @ R, np.eye(3), atol=tol)
        and abs(np.linalg.det(R) - 1.0) < tol
    )


def snap_rotation(R, tol=1e-9):
    """Snap a near-integer rotation matrix to its exact form.

    Generated poses are compositions of 90-degree rotations; snapping keeps
    them bit-exact through serialization round trips.
    """
    Rr = np.round(R) + 0.0  # +0.0 canonicalizes any -0.0 entries
    if np.max(np.abs(R - Rr)) < tol and is_rotation(Rr, tol=1e-12):
        return Rr
    return R


def snap_translation(t, tol=1e-9):
    tr = np.round(t) + 0.0
    if np.max(np.abs(t - tr)) < tol:
        return tr
    return t


def random_rotation(rng):
    """Uniform random rotation via QR of a Gaussian matrix."""
    M = rng.normal(size=(3, 3))
    Q, R = np.linalg.qr(M)
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def mate_rotations(hand_axis_local, table_axis_world):
    """The four 90-degree-quantized rotations mating a connection point pair.

    Each returned rotation maps the hand point's local axis onto the negated
    world axis of the table point; the free yaw about the mated axis is
    quantized to 0/90/180/270 degrees relative to a deterministic base.
    """
    target = -np.asarray(table_axis_world, dtype=float)
    base = rotation_between(np.asarray(hand_axis_local, dtype=float), target)
    out = []
    for k in range(4):
        R = rotation_about(target, k * math.pi / 2.0) @ base
        out.append(snap_rotation(R))
    return out
