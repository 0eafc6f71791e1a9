import numpy as np
import pytest

from bricklab.assembly import Assembly
from bricklab.metrics import MetricConfig
from bricklab.shapes import load_shape_library
from bricklab.symmetry import build_symmetry_table


@pytest.fixture(scope="session")
def library():
    return load_shape_library()


@pytest.fixture(scope="session")
def symmetry_table(library):
    return build_symmetry_table(library)


@pytest.fixture(scope="session")
def metric_config(symmetry_table):
    return MetricConfig(symmetry=symmetry_table)


def build(specs):
    """Assembly from (shape_id, color_id, translation) or
    (shape_id, color_id, rotation, translation) tuples."""
    asm = Assembly()
    for spec in specs:
        if len(spec) == 3:
            sid, cid, t = spec
            R = np.eye(3)
        else:
            sid, cid, R, t = spec
        asm.add(sid, cid, np.array(R, dtype=float), np.array(t, dtype=float))
    return asm


def stack(shape_ids, library, color_id=4, x=0.0, z=0.0):
    """Vertical tower: each brick's studs mate the cavity field above it."""
    asm = Assembly()
    y = None
    for sid in shape_ids:
        h = library.shape(sid).bounding_box[1][1]
        y = 0.0 if y is None else y - h
        asm.add(sid, color_id, np.eye(3), np.array([x, y, z]))
    return asm
