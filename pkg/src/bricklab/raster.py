"""Deterministic software rasterizer and orbit camera model.

Renders color / depth / instance-id buffers plus downsampled snap maps that
map cursor cells to visible connection points.  Output is a pure function of
the inputs: the triangle fill is a serial integer top-left-rule loop, so
repeated renders are bit-identical.
"""

import io
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .geometry import UP

BACKGROUND = (102, 102, 102)
FOV_Y = math.radians(60.0)
NEAR = 1.0
FAR = 10000.0
LIGHT_DIR = np.array([-1.0, -2.0, -1.0]) / math.sqrt(6.0)
AMBIENT = 0.4
# Splat radius wide enough that a stud's visible cap falls inside the disc
# under the 30-degree orbit camera at default framing distance.
SNAP_RADIUS = 5  # full-resolution pixels
SNAP_DEPTH_BIAS = 2.0  # LDU
ELEV = math.radians(30.0)
DEFAULT_DISTANCE = 200.0


@dataclass
class CameraState:
    azimuth_index: int = 0  # mod 8, 45-degree steps
    elevation_sign: int = 1  # +1 looking down from above, -1 from below
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    distance: float = DEFAULT_DISTANCE

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if self.distance <= 0:
            raise ValueError("camera distance must be positive")

    def copy(self):
        return CameraState(
            self.azimuth_index % 8, self.elevation_sign,
            self.center.copy(), self.distance,
        )

    def signature(self):
        return (
            self.azimuth_index % 8, self.elevation_sign,
            self.center.tobytes(), self.distance,
        )


def camera_pose(state):
    """Returns (eye, right, up_cam, forward) for the orbit camera."""
    theta = math.radians(45.0 * (state.azimuth_index % 8))
    phi = ELEV * state.elevation_sign
    # Above the center means along -Y (LDraw up).
    u = np.array(
        [
            math.cos(phi) * math.cos(theta),
            -math.sin(phi),
            math.cos(phi) * math.sin(theta),
        ]
    )
    eye = state.center + state.distance * u
    forward = -u
    right = np.cross(forward, UP)
    right /= np.linalg.norm(right)
    up_cam = np.cross(right, forward)
    return eye, right, up_cam, forward


@dataclass
class Frame:
    color: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) float64, +inf background (view-space LDU)
    instance_id: np.ndarray  # (H, W) int32, 0 background
    snap_pos: np.ndarray  # (H/4, W/4, 2) int32: (instance_id, point) or (0, -1)
    snap_neg: np.ndarray

    @property
    def width(self):
        return self.color.shape[1]

    @property
    def height(self):
        return self.color.shape[0]

    def snap(self, polarity):
        return self.snap_pos if polarity == "+" else self.snap_neg

    def snap_at(self, polarity, cx, cy):
        """Reference at a cursor cell, or None if empty / out of bounds."""
        grid = self.snap(polarity)
        if cx < 0 or cy < 0 or cy >= grid.shape[0] or cx >= grid.shape[1]:
            return None
        iid, pt = int(grid[cy, cx, 0]), int(grid[cy, cx, 1])
        if iid == 0:
            return None
        return iid, pt


@njit(cache=True)
def _fill_triangles(xy, invz, shade, inst, width, height,
                    color_buf, depth_buf, inst_buf, rgb):
    """Serial z-buffered fill, top-left rule, pixel centers at +0.5."""
    n = xy.shape[0]
    for t in range(n):
        x0, y0 = xy[t, 0, 0], xy[t, 0, 1]
        x1, y1 = xy[t, 1, 0], xy[t, 1, 1]
        x2, y2 = xy[t, 2, 0], xy[t, 2, 1]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        if area < 0.0:
            # Normalize winding so edge functions are positive inside.
            x1, y1, x2, y2 = x2, y2, x1, y1
            w1 = invz[t, 2]
            w2 = invz[t, 1]
            area = -area
        else:
            w1 = invz[t, 1]
            w2 = invz[t, 2]
        w0 = invz[t, 0]
        minx = int(math.floor(min(x0, x1, x2)))
        maxx = int(math.ceil(max(x0, x1, x2)))
        miny = int(math.floor(min(y0, y1, y2)))
        maxy = int(math.ceil(max(y0, y1, y2)))
        if minx < 0:
            minx = 0
        if miny < 0:
            miny = 0
        if maxx > width - 1:
            maxx = width - 1
        if maxy > height - 1:
            maxy = height - 1
        # Edge coefficients: e(p) = A*(px) + B*(py) + C
        a0 = y1 - y2
        b0 = x2 - x1
        c0 = x1 * y2 - x2 * y1
        a1 = y2 - y0
        b1 = x0 - x2
        c1 = x2 * y0 - x0 * y2
        a2 = y0 - y1
        b2 = x1 - x0
        c2 = x0 * y1 - x1 * y0
        # Top-left rule: an edge is top-left if it is horizontal going left
        # (b > 0 with a == 0) or generally "left" (a > 0).
        tl0 = (a0 > 0.0) or (a0 == 0.0 and b0 > 0.0)
        tl1 = (a1 > 0.0) or (a1 == 0.0 and b1 > 0.0)
        tl2 = (a2 > 0.0) or (a2 == 0.0 and b2 > 0.0)
        inv_area = 1.0 / area
        s = shade[t]
        r8 = rgb[t, 0]
        g8 = rgb[t, 1]
        b8 = rgb[t, 2]
        iid = inst[t]
        for py in range(miny, maxy + 1):
            cy = py + 0.5
            for px in range(minx, maxx + 1):
                cx = px + 0.5
                e0 = a0 * cx + b0 * cy + c0
                e1 = a1 * cx + b1 * cy + c1
                e2 = a2 * cx + b2 * cy + c2
                if (e0 > 0.0 or (e0 == 0.0 and tl0)) and \
                   (e1 > 0.0 or (e1 == 0.0 and tl1)) and \
                   (e2 > 0.0 or (e2 == 0.0 and tl2)):
                    l0 = e0 * inv_area
                    l1 = e1 * inv_area
                    l2 = 1.0 - l0 - l1
                    w = l0 * w0 + l1 * w1 + l2 * w2
                    if w <= 0.0:
                        continue
                    z = 1.0 / w
                    if z < depth_buf[py, px]:
                        depth_buf[py, px] = z
                        inst_buf[py, px] = iid
                        color_buf[py, px, 0] = np.uint8(min(255.0, r8 * s))
                        color_buf[py, px, 1] = np.uint8(min(255.0, g8 * s))
                        color_buf[py, px, 2] = np.uint8(min(255.0, b8 * s))


@njit(cache=True)
def _fill_depth_ortho(xy, z, width, height, depth_buf):
    """Orthographic depth-only fill (linear z), same fill rule."""
    n = xy.shape[0]
    for t in range(n):
        x0, y0 = xy[t, 0, 0], xy[t, 0, 1]
        x1, y1 = xy[t, 1, 0], xy[t, 1, 1]
        x2, y2 = xy[t, 2, 0], xy[t, 2, 1]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        if area < 0.0:
            x1, y1, x2, y2 = x2, y2, x1, y1
            z1 = z[t, 2]
            z2 = z[t, 1]
            area = -area
        else:
            z1 = z[t, 1]
            z2 = z[t, 2]
        z0 = z[t, 0]
        minx = max(0, int(math.floor(min(x0, x1, x2))))
        maxx = min(width - 1, int(math.ceil(max(x0, x1, x2))))
        miny = max(0, int(math.floor(min(y0, y1, y2))))
        maxy = min(height - 1, int(math.ceil(max(y0, y1, y2))))
        a0 = y1 - y2
        b0 = x2 - x1
        c0 = x1 * y2 - x2 * y1
        a1 = y2 - y0
        b1 = x0 - x2
        c1 = x2 * y0 - x0 * y2
        a2 = y0 - y1
        b2 = x1 - x0
        c2 = x0 * y1 - x1 * y0
        tl0 = (a0 > 0.0) or (a0 == 0.0 and b0 > 0.0)
        tl1 = (a1 > 0.0) or (a1 == 0.0 and b1 > 0.0)
        tl2 = (a2 > 0.0) or (a2 == 0.0 and b2 > 0.0)
        inv_area = 1.0 / area
        for py in range(miny, maxy + 1):
            cyy = py + 0.5
            for px in range(minx, maxx + 1):
                cxx = px + 0.5
                e0 = a0 * cxx + b0 * cyy + c0
                e1 = a1 * cxx + b1 * cyy + c1
                e2 = a2 * cxx + b2 * cyy + c2
                if (e0 > 0.0 or (e0 == 0.0 and tl0)) and \
                   (e1 > 0.0 or (e1 == 0.0 and tl1)) and \
                   (e2 > 0.0 or (e2 == 0.0 and tl2)):
                    l0 = e0 * inv_area
                    l1 = e1 * inv_area
                    zz = l0 * z0 + l1 * z1 + (1.0 - l0 - l1) * z2
                    if zz < depth_buf[py, px]:
                        depth_buf[py, px] = zz


@njit(cache=True)
def _splat_points(xy, z, z_origin, refs, scene_depth, grid, best,
                  width, height):
    """Sequential splat: each cell keeps the reference nearest its center,
    ties on (instance_id, point_index)."""
    n = xy.shape[0]
    r2 = SNAP_RADIUS * SNAP_RADIUS
    for k in range(n):
        if z_origin[k] <= NEAR:
            continue
        if z[k] <= NEAR or z[k] >= FAR:
            continue
        px = xy[k, 0]
        py = xy[k, 1]
        x0 = int(math.floor(px - SNAP_RADIUS))
        x1 = int(math.ceil(px + SNAP_RADIUS))
        y0 = int(math.floor(py - SNAP_RADIUS))
        y1 = int(math.ceil(py + SNAP_RADIUS))
        if x0 < 0:
            x0 = 0
        if y0 < 0:
            y0 = 0
        if x1 > width - 1:
            x1 = width - 1
        if y1 > height - 1:
            y1 = height - 1
        iid = refs[k, 0]
        idx = refs[k, 1]
        for yy in range(y0, y1 + 1):
            dy = yy + 0.5 - py
            for xx in range(x0, x1 + 1):
                dx = xx + 0.5 - px
                if dx * dx + dy * dy > r2:
                    continue
                if z[k] > scene_depth[yy, xx] + SNAP_DEPTH_BIAS:
                    continue  # occluded at this pixel
                cx = xx // 4
                cy = yy // 4
                ccx = cx * 4 + 2.0
                ccy = cy * 4 + 2.0
                d = (px - ccx) ** 2 + (py - ccy) ** 2
                cur = best[cy, cx]
                if d < cur or (
                    d == cur
                    and (iid < grid[cy, cx, 0]
                         or (iid == grid[cy, cx, 0] and idx < grid[cy, cx, 1]))
                ):
                    best[cy, cx] = d
                    grid[cy, cx, 0] = iid
                    grid[cy, cx, 1] = idx


def _project(points, eye, right, up_cam, forward, width, height):
    """World points -> (screen xy, view depth).  Screen y grows downward."""
    rel = points - eye
    vx = rel @ right
    vy = rel @ up_cam
    vz = rel @ forward
    f = 1.0 / math.tan(FOV_Y / 2.0)
    aspect = width / height
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = (vx / vz) * (f / aspect) * (width / 2.0) + width / 2.0
        sy = height / 2.0 - (vy / vz) * f * (height / 2.0)
    return np.stack([sx, sy], axis=-1), vz


def render(asm, library, camera, width, height, colors=None):
    """Full frame render: color, depth, instance-id, and both snap grids."""
    if width % 4 or height % 4:
        raise ValueError("frame dimensions must be multiples of 4")
    color_buf = np.empty((height, width, 3), dtype=np.uint8)
    color_buf[:, :] = BACKGROUND
    depth_buf = np.full((height, width), np.inf)
    inst_buf = np.zeros((height, width), dtype=np.int32)
    eye, right, up_cam, forward = camera_pose(camera)
    table = colors if colors is not None else library.colors

    tri_list = []
    shade_list = []
    inst_list = []
    rgb_list = []
    for iid in sorted(asm.instances):
        b = asm.instances[iid]
        shape = library.shape(b.shape_id)
        world = shape.mesh @ b.rotation.T + b.translation
        rgb, _ = table.resolve(b.color_id)
        e1 = world[:, 1] - world[:, 0]
        e2 = world[:, 2] - world[:, 0]
        normals = np.cross(e1, e2)
        norms = np.linalg.norm(normals, axis=1)
        ok = norms > 1e-12
        normals[ok] = normals[ok] / norms[ok][:, None]
        lam = np.maximum(0.0, normals @ (-LIGHT_DIR))
        shade = AMBIENT + (1.0 - AMBIENT) * lam
        tri_list.append(world)
        shade_list.append(shade)
        inst_list.append(np.full(len(world), iid, dtype=np.int32))
        rgb_list.append(np.tile(np.array(rgb, dtype=np.float64), (len(world), 1)))

    if tri_list:
        world = np.concatenate(tri_list)
        shade = np.concatenate(shade_list)
        inst = np.concatenate(inst_list)
        rgb = np.concatenate(rgb_list)
        xy, vz = _project(world.reshape(-1, 3), eye, right, up_cam, forward,
                          width, height)
        xy = xy.reshape(-1, 3, 2)
        vz = vz.reshape(-1, 3)
        # Near-plane: drop triangles with any vertex closer than NEAR, and
        # far-plane beyond FAR.  Framed scenes stay fully inside.
        keep = np.all(vz > NEAR, axis=1) & np.any(vz < FAR, axis=1)
        if np.any(keep):
            invz = 1.0 / vz[keep]
            _fill_triangles(
                np.ascontiguousarray(xy[keep]),
                np.ascontiguousarray(invz),
                np.ascontiguousarray(shade[keep]),
                np.ascontiguousarray(inst[keep]),
                width, height, color_buf, depth_buf, inst_buf,
                np.ascontiguousarray(rgb[keep]),
            )

    snap_pos = render_snaps(asm, library, camera, depth_buf, "+", width, height)
    snap_neg = render_snaps(asm, library, camera, depth_buf, "-", width, height)
    return Frame(color_buf, depth_buf, inst_buf, snap_pos, snap_neg)


def render_snaps(asm, library, camera, scene_depth, polarity, width, height):
    """Splat visible connection points of one polarity into the 4x-downsampled
    cursor grid.  Each cell keeps the reference whose projected origin is
    nearest the cell center; ties break on (instance_id, point_index)."""
    gw, gh = width // 4, height // 4
    grid = np.zeros((gh, gw, 2), dtype=np.int32)
    grid[:, :, 1] = -1
    best = np.full((gh, gw), np.inf)
    if not asm.instances:
        return grid
    eye, right, up_cam, forward = camera_pose(camera)
    pts = list(asm.world_points(library, polarity=polarity))
    if not pts:
        return grid
    world = np.array([p[2] for p in pts])
    # The visibility probe sits at the tip of the point's extrusion (one stud
    # height along its outward axis); the origin itself is always buried
    # just behind the surface it mates through.
    tips = world + np.array([p[3] for p in pts]) * 4.0
    xy, vz_origin = _project(world, eye, right, up_cam, forward, width, height)
    _, vz = _project(tips, eye, right, up_cam, forward, width, height)
    refs = np.array([[p[0], p[1]] for p in pts], dtype=np.int32)
    _splat_points(np.ascontiguousarray(xy), np.ascontiguousarray(vz),
                  np.ascontiguousarray(vz_origin), refs, scene_depth,
                  grid, best, width, height)
    return grid


def frame_scene(asm, camera, library=None):
    """Camera re-centered on the assembly centroid, pulled back far enough to
    contain the bounding sphere."""
    cam = camera.copy()
    if not asm.instances:
        return cam
    centers = np.array([b.translation for b in asm])
    centroid = centers.mean(axis=0)
    radius = 0.0
    for b in asm:
        extent = 0.0
        if library is not None:
            bb = library.shape(b.shape_id).bounding_box
            extent = float(np.linalg.norm(bb[1] - bb[0])) / 2.0
        radius = max(radius, float(np.linalg.norm(b.translation - centroid)) + extent)
    cam.center = centroid
    cam.distance = max(DEFAULT_DISTANCE, 1.5 * radius / math.tan(ELEV))
    return cam


def render_depth_ortho(mesh, direction, window_center, half_size, size=64):
    """Orthographic depth map of a raw triangle mesh along a view direction.

    Used by the depth-map symmetry detector.  Depth increases along
    `direction`; background is +inf.
    """
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    # Deterministic basis: pick the world axis least aligned with direction.
    k = int(np.argmin(np.abs(direction)))
    e = np.zeros(3)
    e[k] = 1.0
    right = np.cross(direction, e)
    right /= np.linalg.norm(right)
    up = np.cross(right, direction)
    rel = mesh.reshape(-1, 3) - window_center
    sx = (rel @ right) / half_size * (size / 2.0) + size / 2.0
    sy = (rel @ up) / half_size * (size / 2.0) + size / 2.0
    z = rel @ direction
    xy = np.stack([sx, sy], axis=-1).reshape(-1, 3, 2)
    z = z.reshape(-1, 3)
    depth = np.full((size, size), np.inf)
    _fill_depth_ortho(
        np.ascontiguousarray(xy), np.ascontiguousarray(z), size, size, depth
    )
    return depth


def frame_to_png(frame):
    from PIL import Image

    img = Image.fromarray(frame.color, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def dump_raw_grid(array):
    """Portable grid dump: text header + C-order binary payload."""
    a = np.ascontiguousarray(array)
    shape = " ".join(str(d) for d in a.shape)
    header = f"rawgrid {a.dtype.str} {shape}\n".encode()
    return header + a.tobytes()


def load_raw_grid(data):
    nl = data.index(b"\n")
    parts = data[:nl].decode().split()
    if parts[0] != "rawgrid":
        raise ValueError("not a rawgrid dump")
    dtype = np.dtype(parts[1])
    shape = tuple(int(x) for x in parts[2:])
    return np.frombuffer(data[nl + 1:], dtype=dtype).reshape(shape).copy()
