"""Assembly state model: instances, connections, collision, removability."""

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import geodesic_distance, axis_angle_rotation, is_rotation
from .shapes import STUD_HEIGHT

# Connection detection tolerances: generated poses are exact and file poses
# near-exact, so these are tight.
CONNECT_DIST = 1.0  # LDU
CONNECT_ANGLE = math.radians(2.0)
TOUCH_TOL = 0.5  # LDU; overlaps this small count as touching
SWEEP_STEP = 4.0  # LDU, half a plate height


class AssemblyError(Exception):
    pass


@dataclass
class BrickInstance:
    instance_id: int
    shape_id: int
    color_id: int
    rotation: np.ndarray  # 3x3, SO(3)
    translation: np.ndarray  # 3-vector LDU

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.translation = np.asarray(self.translation, dtype=float)
        if not is_rotation(self.rotation):
            raise AssemblyError(
                f"instance {self.instance_id}: rotation not in SO(3)"
            )

    def copy(self):
        return BrickInstance(
            self.instance_id,
            self.shape_id,
            self.color_id,
            self.rotation.copy(),
            self.translation.copy(),
        )

    def world_point(self, local):
        return self.rotation @ np.asarray(local, dtype=float) + self.translation

    def world_axis(self, local):
        return self.rotation @ np.asarray(local, dtype=float)


class Assembly:
    """A set of placed brick instances keyed by id."""

    def __init__(self):
        self.instances = {}
        self.next_id = 1

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances.values())

    def ids(self):
        return sorted(self.instances)

    def add(self, shape_id, color_id, rotation, translation, instance_id=None):
        if instance_id is None:
            instance_id = self.next_id
        if instance_id in self.instances:
            raise AssemblyError(f"duplicate instance id {instance_id}")
        inst = BrickInstance(
            instance_id, shape_id, color_id,
            np.array(rotation, dtype=float), np.array(translation, dtype=float),
        )
        self.instances[instance_id] = inst
        self.next_id = max(self.next_id, instance_id + 1)
        return inst

    def remove(self, instance_id):
        return self.instances.pop(instance_id)

    def get(self, instance_id):
        return self.instances[instance_id]

    def copy(self):
        a = Assembly()
        for iid in sorted(self.instances):
            a.instances[iid] = self.instances[iid].copy()
        a.next_id = self.next_id
        return a

    def signature(self):
        """Hashable full-state digest; used for strict no-op checks."""
        parts = []
        for iid in sorted(self.instances):
            b = self.instances[iid]
            parts.append(
                (iid, b.shape_id, b.color_id,
                 b.rotation.tobytes(), b.translation.tobytes())
            )
        return tuple(parts)

    def world_points(self, library, polarity=None):
        """Yields (instance_id, point_index, world_pos, world_axis, kind, pol)."""
        for iid in sorted(self.instances):
            b = self.instances[iid]
            shape = library.shape(b.shape_id)
            for p in shape.connection_points:
                if polarity is not None and p.polarity != polarity:
                    continue
                yield (
                    iid, p.index,
                    b.world_point(p.position), b.world_axis(p.axis),
                    p.kind, p.polarity,
                )

    def world_aabb(self, library):
        """AABB over instance bounding boxes; None when empty."""
        if not self.instances:
            return None
        los, his = [], []
        for b in self.instances.values():
            lo, hi = instance_world_box(b, library.shape(b.shape_id).bounding_box)
            los.append(lo)
            his.append(hi)
        return np.min(los, axis=0), np.max(his, axis=0)


@dataclass(frozen=True)
class Connection:
    """Unordered mated pair; positive-polarity endpoint stored first."""

    a: tuple  # (instance_id, point_index), positive side
    b: tuple  # (instance_id, point_index), negative side

    def instances(self):
        return (self.a[0], self.b[0])


def _box_corners(lo, hi):
    return np.array(
        [
            [x, y, z]
            for x in (lo[0], hi[0])
            for y in (lo[1], hi[1])
            for z in (lo[2], hi[2])
        ]
    )


def instance_world_box(instance, local_box):
    """AABB of a transformed local box (exact for 90-degree poses)."""
    corners = _box_corners(local_box[0], local_box[1])
    w = corners @ instance.rotation.T + instance.translation
    return w.min(axis=0), w.max(axis=0)


def detect_connections(asm, library):
    """All mated point pairs: opposite polarity, same kind, coincident and
    anti-parallel within tolerance."""
    pos = list(asm.world_points(library, polarity="+"))
    neg = list(asm.world_points(library, polarity="-"))
    out = set()
    cos_thresh = -math.cos(CONNECT_ANGLE)
    for iid_p, idx_p, wp, wa, kind_p, _ in pos:
        for iid_n, idx_n, wq, wb, kind_n, _ in neg:
            if iid_p == iid_n or kind_p != kind_n:
                continue
            d = wp - wq
            if abs(d[0]) > CONNECT_DIST or abs(d[1]) > CONNECT_DIST or abs(d[2]) > CONNECT_DIST:
                continue
            if np.dot(d, d) >= CONNECT_DIST * CONNECT_DIST:
                continue
            if float(np.dot(wa, wb)) < cos_thresh:
                out.add(Connection((iid_p, idx_p), (iid_n, idx_n)))
    return out


def _world_boxes(instance, library):
    shape = library.shape(instance.shape_id)
    return [instance_world_box(instance, box) for box in shape.collision_boxes]


def collides(asm, candidate, library, ignore=()):
    """True iff a collision box of `candidate` overlaps one of a non-ignored
    instance by more than the touching tolerance on every axis."""
    cand_boxes = _world_boxes(candidate, library)
    for iid in sorted(asm.instances):
        if iid in ignore or iid == candidate.instance_id:
            continue
        other = asm.instances[iid]
        for lo2, hi2 in _world_boxes(other, library):
            for lo1, hi1 in cand_boxes:
                over = np.minimum(hi1, hi2) - np.maximum(lo1, lo2)
                if np.all(over > TOUCH_TOL):
                    return True
    return False


def sweep_direction(asm, instance_id, via_point, library, connections=None):
    """World direction a brick separates along when detached at `via_point`.

    A free point sweeps along its own outward axis; a mated point sweeps
    away from its mate, which is the mate's outward axis."""
    inst = asm.get(instance_id)
    shape = library.shape(inst.shape_id)
    p = shape.point(via_point)
    if connections is None:
        connections = detect_connections(asm, library)
    key = (instance_id, via_point)
    for c in connections:
        if c.a == key or c.b == key:
            mate = c.b if c.a == key else c.a
            mate_inst = asm.get(mate[0])
            mate_point = library.shape(mate_inst.shape_id).point(mate[1])
            return mate_inst.world_axis(mate_point.axis)
    return inst.world_axis(p.axis)


def removable(asm, instance_id, via_point, library):
    """True iff sweeping the instance along the detach direction never
    collides with the rest of the assembly."""
    if instance_id not in asm.instances:
        raise AssemblyError(f"unknown instance {instance_id}")
    inst = asm.get(instance_id)
    shape = library.shape(inst.shape_id)
    if via_point < 0 or via_point >= len(shape.connection_points):
        raise AssemblyError(f"unknown point index {via_point}")
    d = sweep_direction(asm, instance_id, via_point, library)
    bbox = asm.world_aabb(library)
    diag = float(np.linalg.norm(bbox[1] - bbox[0])) if bbox is not None else 0.0
    limit = 2.0 * diag
    probe = inst.copy()
    t = SWEEP_STEP
    while t <= limit:
        probe.translation = inst.translation + d * t
        if collides(asm, probe, library, ignore={instance_id}):
            return False
        t += SWEEP_STEP
    return True


def connected_components(asm, library, connections=None):
    """Partition by transitive closure of connections; components ordered by
    smallest contained instance id, ids preserved."""
    if connections is None:
        connections = detect_connections(asm, library)
    parent = {iid: iid for iid in asm.instances}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c in connections:
        a, b = c.instances()
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups = {}
    for iid in sorted(asm.instances):
        groups.setdefault(find(iid), []).append(iid)
    out = []
    for root in sorted(groups):
        sub = Assembly()
        for iid in groups[root]:
            b = asm.instances[iid]
            sub.add(b.shape_id, b.color_id, b.rotation, b.translation, iid)
        sub.next_id = asm.next_id
        out.append(sub)
    return out


class SymmetryTable:
    """shape_id -> set of (axis, angle) rotational self-symmetries."""

    def __init__(self, table=None):
        self.table = {k: set(v) for k, v in (table or {}).items()}

    def symmetries(self, shape_id):
        return self.table.get(shape_id, set())

    def rotations(self, shape_id):
        """Symmetry rotations including the implicit identity, in a stable
        order (identity first, then sorted by axis, angle)."""
        out = [np.eye(3)]
        for axis, angle in sorted(self.symmetries(shape_id)):
            out.append(axis_angle_rotation(axis, angle))
        return out

    @classmethod
    def parse(cls, text):
        """Line format: `sym <shape_id> <axis> <angle>`."""
        table = {}
        for ln, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] != "sym" or len(parts) != 4:
                raise AssemblyError(f"symmetry table line {ln}: bad record")
            sid = int(parts[1])
            axis = parts[2]
            angle = int(parts[3])
            if axis not in ("X", "Y", "Z") or angle not in (90, 180, 270):
                raise AssemblyError(f"symmetry table line {ln}: bad entry")
            table.setdefault(sid, set()).add((axis, angle))
        return cls(table)

    def dump(self):
        lines = []
        for sid in sorted(self.table):
            for axis, angle in sorted(self.table[sid]):
                lines.append(f"sym {sid} {axis} {angle}")
        return "\n".join(lines) + ("\n" if lines else "")


def oriented_aligned(R_i, R_j, shape_id, sym_table, theta_eps):
    """True iff the orientations agree within theta_eps up to the shape's
    rotational symmetry group."""
    for S in sym_table.rotations(shape_id):
        if geodesic_distance(R_i @ S, R_j) < theta_eps:
            return True
    return False
