import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bricklab import geometry as geo


def quat_to_matrix(w, x, y, z):
    n = math.sqrt(w * w + x * x + y * y + z * z)
    w, x, y, z = w / n, x / n, y / n, z / n
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def test_axis_angle_rotation_exact_integers():
    R = geo.axis_angle_rotation("Y", 90)
    assert R.dtype == float
    assert np.array_equal(R, np.array([[0, 0, 1], [0, 1, 0], [-1, 0, 0]], dtype=float))
    for axis in geo.AXES:
        for angle in geo.ANGLES:
            R = geo.axis_angle_rotation(axis, angle)
            assert np.array_equal(R, np.round(R))
            assert geo.is_rotation(R)


def test_geodesic_distance_quaternion_oracle():
    # The geodesic distance equals the rotation angle of R1^T R2; build that
    # rotation from a unit quaternion with a known half-angle.
    rng = np.random.default_rng(0)
    for _ in range(200):
        angle = rng.uniform(0.0, math.pi)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        half = angle / 2.0
        R_rel = quat_to_matrix(math.cos(half), *(math.sin(half) * axis))
        R1 = geo.random_rotation(rng)
        R2 = R1 @ R_rel
        assert geo.geodesic_distance(R1, R2) == pytest.approx(angle, abs=1e-9)


def test_geodesic_distance_bounds_and_identity():
    rng = np.random.default_rng(1)
    for _ in range(50):
        R = geo.random_rotation(rng)
        assert geo.geodesic_distance(R, R) == pytest.approx(0.0, abs=1e-6)
        Q = geo.random_rotation(rng)
        d = geo.geodesic_distance(R, Q)
        assert 0.0 <= d <= math.pi + 1e-12


def test_rotation_between_properties():
    rng = np.random.default_rng(2)
    for _ in range(200):
        a = rng.normal(size=3)
        a /= np.linalg.norm(a)
        b = rng.normal(size=3)
        b /= np.linalg.norm(b)
        R = geo.rotation_between(a, b)
        assert geo.is_rotation(R)
        assert np.allclose(R @ a, b, atol=1e-9)


def test_rotation_between_antiparallel():
    for a in (np.array([0.0, -1.0, 0.0]), np.array([1.0, 0.0, 0.0]),
              np.array([0.0, 0.0, 1.0])):
        R = geo.rotation_between(a, -a)
        assert geo.is_rotation(R)
        assert np.allclose(R @ a, -a, atol=1e-9)


def test_orthonormalize_recovers_rotation():
    rng = np.random.default_rng(3)
    for _ in range(100):
        R = geo.random_rotation(rng)
        noisy = R + rng.normal(scale=1e-4, size=(3, 3))
        R2, corr = geo.orthonormalize(noisy)
        assert geo.is_rotation(R2)
        assert geo.geodesic_distance(R, R2) < 1e-3
        assert corr < 1e-2


def test_snap_rotation_and_translation():
    R = geo.axis_angle_rotation("Z", 180) + 1e-12
    snapped = geo.snap_rotation(R)
    assert np.array_equal(snapped, np.round(snapped))
    # A genuinely non-integer rotation is untouched.
    R45 = geo.rotation_about(np.array([0.0, 1.0, 0.0]), math.pi / 4)
    assert geo.snap_rotation(R45) is R45
    t = np.array([20.0 + 1e-12, -8.0, 0.0])
    assert np.array_equal(geo.snap_translation(t), [20.0, -8.0, 0.0])


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=50, deadline=None)
def test_random_rotation_is_rotation(seed):
    R = geo.random_rotation(np.random.default_rng(seed))
    assert geo.is_rotation(R)


def test_mate_rotations_properties():
    rng = np.random.default_rng(4)
    for _ in range(100):
        a = rng.normal(size=3)
        a /= np.linalg.norm(a)
        b = rng.normal(size=3)
        b /= np.linalg.norm(b)
        mates = geo.mate_rotations(a, b)
        assert len(mates) == 4
        for R in mates:
            assert geo.is_rotation(R)
            # Hand axis lands anti-parallel to the table axis.
            assert np.allclose(R @ a, -b, atol=1e-9)
        # The four options differ by 90-degree steps about the mated axis.
        for k in range(1, 4):
            d = geo.geodesic_distance(mates[0], mates[k])
            assert d == pytest.approx(min(k, 4 - k) * math.pi / 2, abs=1e-6)


def test_mate_rotations_vertical_are_exact():
    down = np.array([0.0, -1.0, 0.0])
    up = np.array([0.0, 1.0, 0.0])
    for R in geo.mate_rotations(down, up):
        assert np.array_equal(R, np.round(R))
