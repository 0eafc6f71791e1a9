"""Depth-map rotational symmetry detection for brick shapes.

A candidate rotation (90/180/270 degrees about X, Y or Z) is a symmetry when
the rotated mesh renders to approximately the same depth map as the original
from all six canonical orthographic view directions.
"""

import numpy as np

from .assembly import SymmetryTable
from .geometry import AXES, ANGLES, axis_angle_rotation
from .raster import render_depth_ortho

VIEW_DIRECTIONS = [
    np.array([1.0, 0.0, 0.0]),
    np.array([-1.0, 0.0, 0.0]),
    np.array([0.0, 1.0, 0.0]),
    np.array([0.0, -1.0, 0.0]),
    np.array([0.0, 0.0, 1.0]),
    np.array([0.0, 0.0, -1.0]),
]

DEPTH_TOL = 1.0  # LDU per pixel
MATCH_FRACTION = 0.995  # of pixels covered in both maps
COVERAGE_FRACTION = 0.005  # max fraction of pixels where coverage differs
MAP_SIZE = 64


class SymmetryError(Exception):
    pass


def _depth_maps(mesh, center, half_size, size):
    return [
        render_depth_ortho(mesh, d, center, half_size, size)
        for d in VIEW_DIRECTIONS
    ]


def _maps_match(a, b):
    cov_a = np.isfinite(a)
    cov_b = np.isfinite(b)
    total = a.size
    if np.count_nonzero(cov_a != cov_b) > COVERAGE_FRACTION * total:
        return False
    both = cov_a & cov_b
    n = np.count_nonzero(both)
    if n == 0:
        return True
    close = np.abs(a[both] - b[both]) <= DEPTH_TOL
    return np.count_nonzero(close) >= MATCH_FRACTION * n


def compute_symmetries(shape, size=MAP_SIZE):
    """Set of (axis, angle) under which the shape's depth maps are unchanged.

    Rotations pivot about the body bounding-box center; the orthographic
    window is fixed across candidates so maps are directly comparable.
    """
    mesh = shape.mesh
    if mesh.size == 0:
        raise SymmetryError(f"{shape.canonical_name}: empty mesh")
    bb = shape.bounding_box
    center = (bb[0] + bb[1]) / 2.0
    pts = mesh.reshape(-1, 3)
    half_size = 0.6 * float(np.max(np.linalg.norm(pts - center, axis=1))) * 2.0
    base = _depth_maps(mesh, center, half_size, size)
    found = set()
    for axis in AXES:
        for angle in ANGLES:
            R = axis_angle_rotation(axis, angle)
            rotated = (pts - center) @ R.T + center
            rmesh = rotated.reshape(mesh.shape)
            maps = _depth_maps(rmesh, center, half_size, size)
            if all(_maps_match(a, b) for a, b in zip(base, maps)):
                found.add((axis, angle))
    return found


def build_symmetry_table(library, size=MAP_SIZE):
    """Computes symmetries for every library shape; idempotent."""
    table = {}
    for sid in library.shape_ids():
        shape = library.shape(sid)
        syms = compute_symmetries(shape, size=size)
        shape.symmetries = syms
        table[sid] = syms
    return SymmetryTable(table)


def write_symmetry_table(path, table):
    with open(path, "w") as f:
        f.write(table.dump())


def load_symmetry_table(path):
    with open(path) as f:
        return SymmetryTable.parse(f.read())
