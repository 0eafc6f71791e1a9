"""Brick shape library: procedural core shapes, colors, and metadata sidecars.

Shapes live in a local frame with the origin at the center of the top face:
the body extends from y=0 down to y=height (+Y is down in LDraw), studs
extrude upward into negative y.  Units are LDU (1 LDU = 0.4 mm).
"""

import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

STUD_PITCH = 20.0
BRICK_HEIGHT = 24.0
PLATE_HEIGHT = 8.0
STUD_HEIGHT = 4.0
STUD_RADIUS = 6.0
STUD_SIDES = 16


class LibraryError(Exception):
    pass


@dataclass(frozen=True)
class ConnectionPoint:
    index: int
    polarity: str  # "+" or "-"
    kind: str
    position: np.ndarray  # local, LDU
    axis: np.ndarray  # local unit vector, points out of the body

    def __post_init__(self):
        n = np.linalg.norm(self.axis)
        if abs(n - 1.0) > 1e-9:
            raise LibraryError(f"connection axis not unit length: {n}")


@dataclass
class BrickShape:
    shape_id: int
    canonical_name: str
    mesh: np.ndarray  # (T, 3, 3) triangles, local LDU
    connection_points: list
    collision_boxes: np.ndarray  # (B, 2, 3) min/max corners
    bounding_box: np.ndarray  # (2, 3) body AABB
    symmetries: set = field(default_factory=set)  # {(axis, angle)}

    @property
    def positive_points(self):
        return [p for p in self.connection_points if p.polarity == "+"]

    @property
    def negative_points(self):
        return [p for p in self.connection_points if p.polarity == "-"]

    def point(self, index):
        return self.connection_points[index]

    def validate(self):
        lo = self.bounding_box[0] - STUD_HEIGHT
        hi = self.bounding_box[1] + STUD_HEIGHT
        for i, p in enumerate(self.connection_points):
            if p.index != i:
                raise LibraryError(
                    f"{self.canonical_name}: point indices not dense"
                )
            if np.any(p.position < lo - 1e-9) or np.any(p.position > hi + 1e-9):
                raise LibraryError(
                    f"{self.canonical_name}: point {i} outside inflated bbox"
                )


class ColorTable:
    """Color id -> (name, rgb, edge_rgb) with a fallback for unknown ids."""

    FALLBACK = ("Unknown", (127, 127, 127), (51, 51, 51))

    def __init__(self, entries=None):
        self.entries = dict(entries or {})

    def ids(self):
        return sorted(self.entries)

    def resolve(self, color_id):
        """Returns (rgb, warned). Total: unknown ids map to the fallback."""
        e = self.entries.get(color_id)
        if e is None:
            return self.FALLBACK[1], True
        return e[1], False

    def name(self, color_id):
        e = self.entries.get(color_id)
        return e[0] if e else self.FALLBACK[0]

    @classmethod
    def parse(cls, text):
        """Line format: `color <id> <name> <rrggbb> <edge_rrggbb>`."""
        entries = {}
        for ln, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] != "color" or len(parts) != 5:
                raise LibraryError(f"color table line {ln}: bad record")
            cid = int(parts[1])
            if cid in entries:
                raise LibraryError(f"color table line {ln}: duplicate id {cid}")
            rgb = _parse_hex(parts[3], ln)
            edge = _parse_hex(parts[4], ln)
            entries[cid] = (parts[2], rgb, edge)
        return cls(entries)

    def dump(self):
        lines = []
        for cid in sorted(self.entries):
            name, rgb, edge = self.entries[cid]
            lines.append(
                "color %d %s %02x%02x%02x %02x%02x%02x" % (cid, name, *rgb, *edge)
            )
        return "\n".join(lines) + "\n"


def _parse_hex(s, ln):
    if len(s) != 6:
        raise LibraryError(f"color table line {ln}: bad hex {s!r}")
    try:
        return tuple(int(s[i : i + 2], 16) for i in (0, 2, 4))
    except ValueError as e:
        raise LibraryError(f"color table line {ln}: bad hex {s!r}") from e


def _box_triangles(lo, hi):
    """12 triangles of an axis-aligned box, outward winding."""
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    v = np.array(
        [
            [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
            [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
        ]
    )
    # Outward normals under +Y = down, right-handed frame.
    quads = [
        (0, 1, 2, 3),  # z = z0
        (5, 4, 7, 6),  # z = z1
        (4, 0, 3, 7),  # x = x0
        (1, 5, 6, 2),  # x = x1
        (4, 5, 1, 0),  # y = y0 (top)
        (3, 2, 6, 7),  # y = y1 (bottom)
    ]
    tris = []
    for a, b, c, d in quads:
        tris.append([v[a], v[b], v[c]])
        tris.append([v[a], v[c], v[d]])
    return tris


def _stud_triangles(cx, cz):
    """Open cylinder with a top cap, rising from y=0 to y=-STUD_HEIGHT."""
    tris = []
    top = -STUD_HEIGHT
    ring = []
    for k in range(STUD_SIDES):
        a = 2.0 * math.pi * k / STUD_SIDES
        ring.append((cx + STUD_RADIUS * math.cos(a), cz + STUD_RADIUS * math.sin(a)))
    for k in range(STUD_SIDES):
        x0, z0 = ring[k]
        x1, z1 = ring[(k + 1) % STUD_SIDES]
        tris.append([[x0, 0.0, z0], [x1, 0.0, z1], [x1, top, z1]])
        tris.append([[x0, 0.0, z0], [x1, top, z1], [x0, top, z0]])
        tris.append([[cx, top, cz], [x1, top, z1], [x0, top, z0]])
    return tris


def make_rect_shape(shape_id, name, nx, nz, height):
    """Parametric nx-by-nz studded rectangular shape (brick or plate)."""
    hx = nx * STUD_PITCH / 2.0
    hz = nz * STUD_PITCH / 2.0
    lo = np.array([-hx, 0.0, -hz])
    hi = np.array([hx, height, hz])
    tris = _box_triangles(lo, hi)
    points = []
    centers = []
    for iz in range(nz):
        for ix in range(nx):
            cx = -hx + STUD_PITCH * (ix + 0.5)
            cz = -hz + STUD_PITCH * (iz + 0.5)
            centers.append((cx, cz))
    for cx, cz in centers:
        tris.extend(_stud_triangles(cx, cz))
    for i, (cx, cz) in enumerate(centers):
        points.append(
            ConnectionPoint(
                index=i,
                polarity="+",
                kind="stud",
                position=np.array([cx, 0.0, cz]),
                axis=np.array([0.0, -1.0, 0.0]),
            )
        )
    n = len(centers)
    for i, (cx, cz) in enumerate(centers):
        points.append(
            ConnectionPoint(
                index=n + i,
                polarity="-",
                kind="stud",
                position=np.array([cx, height, cz]),
                axis=np.array([0.0, 1.0, 0.0]),
            )
        )
    shape = BrickShape(
        shape_id=shape_id,
        canonical_name=name,
        mesh=np.array(tris),
        connection_points=points,
        collision_boxes=np.array([[lo, hi]]),
        bounding_box=np.array([lo, hi]),
    )
    shape.validate()
    return shape


# The six default shapes: common rectangular bricks/plates covering
# multi-stud, single-stud and both heights.
CORE_SHAPE_SPECS = [
    (3001, "3001.dat", 4, 2, BRICK_HEIGHT),  # 2x4 brick
    (3003, "3003.dat", 2, 2, BRICK_HEIGHT),  # 2x2 brick
    (3004, "3004.dat", 2, 1, BRICK_HEIGHT),  # 1x2 brick
    (3005, "3005.dat", 1, 1, BRICK_HEIGHT),  # 1x1 brick
    (3020, "3020.dat", 4, 2, PLATE_HEIGHT),  # 2x4 plate
    (3022, "3022.dat", 2, 2, PLATE_HEIGHT),  # 2x2 plate
]


class ShapeLibrary:
    def __init__(self, shapes, aliases, colors):
        self.shapes = dict(shapes)
        self.aliases = {k.lower(): v for k, v in aliases.items()}
        self.colors = colors
        for name, sid in self.aliases.items():
            if sid not in self.shapes:
                raise LibraryError(f"alias {name!r} -> unknown shape {sid}")

    def shape_ids(self):
        return sorted(self.shapes)

    def resolve(self, name):
        """Alias-resolve a reference name to a shape id, or None."""
        return self.aliases.get(name.lower())

    def shape(self, shape_id):
        return self.shapes[shape_id]

    def canonical_name(self, shape_id):
        return self.shapes[shape_id].canonical_name


def default_color_table():
    text = resources.files("bricklab.data").joinpath("colors.txt").read_text()
    return ColorTable.parse(text)


def load_shape_library(mesh_files=None, snap_sidecar=None, colors=None):
    """Build the shape library: procedural core set plus optional mesh files.

    External meshes are LDraw-style triangle soup files and require a snap
    sidecar describing their connection points.
    """
    shapes = {}
    aliases = {}
    for sid, name, nx, nz, h in CORE_SHAPE_SPECS:
        shapes[sid] = make_rect_shape(sid, name, nx, nz, h)
        aliases[name] = sid
        aliases[name.rsplit(".", 1)[0]] = sid
    if mesh_files:
        if snap_sidecar is None:
            raise LibraryError("external mesh files require a snap sidecar")
        snap_records = parse_snap_sidecar(snap_sidecar)
        next_id = 1000000
        for path in mesh_files:
            name, mesh = _load_mesh_file(path)
            recs = snap_records.get(name.lower())
            if recs is None:
                raise LibraryError(f"no snap records for mesh {name!r}")
            points = [
                ConnectionPoint(i, pol, kind, np.array(pos), np.array(ax))
                for i, (kind, pol, pos, ax) in enumerate(recs)
            ]
            lo = mesh.reshape(-1, 3).min(axis=0)
            hi = mesh.reshape(-1, 3).max(axis=0)
            shapes[next_id] = BrickShape(
                shape_id=next_id,
                canonical_name=name,
                mesh=mesh,
                connection_points=points,
                collision_boxes=np.array([[lo, hi]]),
                bounding_box=np.array([lo, hi]),
            )
            aliases[name] = next_id
            next_id += 1
    table = colors if colors is not None else default_color_table()
    return ShapeLibrary(shapes, aliases, table)


def parse_snap_sidecar(text):
    """`snap <shape_name> <kind> <polarity:+|-> <px> <py> <pz> <ax> <ay> <az>`"""
    records = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] != "snap" or len(parts) != 10:
            raise LibraryError(f"snap sidecar line {ln}: bad record")
        name = parts[1].lower()
        kind = parts[2]
        pol = parts[3]
        if pol not in ("+", "-"):
            raise LibraryError(f"snap sidecar line {ln}: bad polarity {pol!r}")
        try:
            nums = [float(x) for x in parts[4:10]]
        except ValueError as e:
            raise LibraryError(f"snap sidecar line {ln}: bad number") from e
        ax = np.array(nums[3:6])
        n = np.linalg.norm(ax)
        if n < 1e-12:
            raise LibraryError(f"snap sidecar line {ln}: zero axis")
        records.setdefault(name, []).append((kind, pol, nums[0:3], list(ax / n)))
    return records


def _load_mesh_file(path):
    """Reads line-type 3/4 geometry from an LDraw-style mesh file."""
    import os

    name = os.path.basename(path)
    tris = []
    with open(path) as f:
        for raw in f:
            parts = raw.split()
            if not parts:
                continue
            if parts[0] == "3" and len(parts) >= 11:
                v = [float(x) for x in parts[2:11]]
                tris.append([v[0:3], v[3:6], v[6:9]])
            elif parts[0] == "4" and len(parts) >= 14:
                v = [float(x) for x in parts[2:14]]
                tris.append([v[0:3], v[3:6], v[6:9]])
                tris.append([v[0:3], v[6:9], v[9:12]])
    if not tris:
        raise LibraryError(f"mesh file {name!r} has no geometry")
    return name, np.array(tris)
