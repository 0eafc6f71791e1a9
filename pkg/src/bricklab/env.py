"""Break-and-Make episode state machine.

Two workspaces (table, hand), orbit cameras, pixel-cursor actions resolved
through the rendered snap maps, and terminal scoring against the hidden
target.  Failed actions are strict no-ops; every step re-renders both
frames.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .assembly import (
    Assembly,
    collides,
    removable,
)
from .geometry import geodesic_distance, mate_rotations, rotation_about, \
    snap_rotation, snap_translation
from .metrics import MetricConfig, score_all
from .raster import CameraState, Frame, frame_scene, render

TABLE_SIZE = 256
HAND_SIZE = 96

PHASE_BREAK = "break"
PHASE_MAKE = "make"
PHASE_DONE = "done"

CAMERA_DIRECTIONS = ("left", "right", "up", "down", "frame")
WORKSPACES = ("table", "hand")
ROTATE_ANGLES = (90, 180, 270)


class EnvError(Exception):
    pass


# ---------------------------------------------------------------------------
# Actions

@dataclass(frozen=True)
class Disassemble:
    x: int
    y: int
    polarity: str


@dataclass(frozen=True)
class Assemble:
    hand_x: int
    hand_y: int
    hand_polarity: str
    table_x: int
    table_y: int
    table_polarity: str


@dataclass(frozen=True)
class AssembleOrigin:
    hand_x: int
    hand_y: int
    polarity: str


@dataclass(frozen=True)
class Pick:
    shape_id: int
    color_id: int


@dataclass(frozen=True)
class RotateBrick:
    x: int
    y: int
    polarity: str
    angle: int


@dataclass(frozen=True)
class RotateCamera:
    workspace: str
    direction: str


@dataclass(frozen=True)
class SwitchPhase:
    pass


@dataclass(frozen=True)
class End:
    pass


class ActionCodec:
    """Stable integer encoding of the action space.

    Layout (cell = y * grid_width + x, polarity 0 for '+', 1 for '-'):
      0                       End
      1                       SwitchPhase
      2 + ws*5 + dir          RotateCamera (ws: 0 table, 1 hand;
                              dir: left right up down frame)
      12 + pol*T + cell       Disassemble            (T = 64*64 table cells)
      A + (hpol*H + hcell)*2T + tpol*T + tcell
                              Assemble               (H = 24*24 hand cells)
      B + pol*H + cell        AssembleOrigin
      C + shape_idx*NC + color_idx
                              Pick (indices into the sorted id lists)
      D + (pol*T + cell)*3 + angle_idx
                              RotateBrick (angles 90, 180, 270)
    """

    def __init__(self, shape_ids, color_ids,
                 table_grid=(TABLE_SIZE // 4, TABLE_SIZE // 4),
                 hand_grid=(HAND_SIZE // 4, HAND_SIZE // 4)):
        self.table_w, self.table_h = table_grid
        self.hand_w, self.hand_h = hand_grid
        self.shape_ids = sorted(shape_ids)
        self.color_ids = sorted(color_ids)
        self.T = self.table_w * self.table_h
        self.H = self.hand_w * self.hand_h
        self.off_dis = 12
        self.off_asm = self.off_dis + 2 * self.T
        self.off_origin = self.off_asm + 2 * self.H * 2 * self.T
        self.off_pick = self.off_origin + 2 * self.H
        self.off_rot = self.off_pick + len(self.shape_ids) * len(self.color_ids)
        self.total = self.off_rot + 2 * self.T * 3

    def encode(self, a):
        pol = {"+": 0, "-": 1}
        if isinstance(a, End):
            return 0
        if isinstance(a, SwitchPhase):
            return 1
        if isinstance(a, RotateCamera):
            return (2 + WORKSPACES.index(a.workspace) * 5
                    + CAMERA_DIRECTIONS.index(a.direction))
        if isinstance(a, Disassemble):
            return self.off_dis + pol[a.polarity] * self.T + a.y * self.table_w + a.x
        if isinstance(a, Assemble):
            h = pol[a.hand_polarity] * self.H + a.hand_y * self.hand_w + a.hand_x
            t = pol[a.table_polarity] * self.T + a.table_y * self.table_w + a.table_x
            return self.off_asm + h * 2 * self.T + t
        if isinstance(a, AssembleOrigin):
            return self.off_origin + pol[a.polarity] * self.H + a.hand_y * self.hand_w + a.hand_x
        if isinstance(a, Pick):
            si = self.shape_ids.index(a.shape_id)
            ci = self.color_ids.index(a.color_id)
            return self.off_pick + si * len(self.color_ids) + ci
        if isinstance(a, RotateBrick):
            cell = pol[a.polarity] * self.T + a.y * self.table_w + a.x
            return self.off_rot + cell * 3 + ROTATE_ANGLES.index(a.angle)
        raise EnvError(f"unencodable action {a!r}")

    def decode(self, code):
        pol = ("+", "-")
        if not (0 <= code < self.total):
            raise EnvError(f"action code {code} out of range")
        if code == 0:
            return End()
        if code == 1:
            return SwitchPhase()
        if code < 12:
            c = code - 2
            return RotateCamera(WORKSPACES[c // 5], CAMERA_DIRECTIONS[c % 5])
        if code < self.off_asm:
            c = code - self.off_dis
            p, cell = divmod(c, self.T)
            return Disassemble(cell % self.table_w, cell // self.table_w, pol[p])
        if code < self.off_origin:
            c = code - self.off_asm
            h, t = divmod(c, 2 * self.T)
            hp, hcell = divmod(h, self.H)
            tp, tcell = divmod(t, self.T)
            return Assemble(
                hcell % self.hand_w, hcell // self.hand_w, pol[hp],
                tcell % self.table_w, tcell // self.table_w, pol[tp],
            )
        if code < self.off_pick:
            c = code - self.off_origin
            p, cell = divmod(c, self.H)
            return AssembleOrigin(cell % self.hand_w, cell // self.hand_w, pol[p])
        if code < self.off_rot:
            c = code - self.off_pick
            si, ci = divmod(c, len(self.color_ids))
            return Pick(self.shape_ids[si], self.color_ids[ci])
        c = code - self.off_rot
        cell, ai = divmod(c, 3)
        p, cell = divmod(cell, self.T)
        return RotateBrick(
            cell % self.table_w, cell // self.table_w, pol[p], ROTATE_ANGLES[ai]
        )

    @staticmethod
    def to_record(a):
        d = {"type": type(a).__name__}
        d.update({k: getattr(a, k) for k in getattr(a, "__dataclass_fields__", {})})
        return d

    @staticmethod
    def from_record(d):
        kinds = {
            c.__name__: c
            for c in (Disassemble, Assemble, AssembleOrigin, Pick,
                      RotateBrick, RotateCamera, SwitchPhase, End)
        }
        d = dict(d)
        t = d.pop("type", None)
        if t not in kinds:
            raise EnvError(f"unknown action type {t!r}")
        try:
            return kinds[t](**d)
        except TypeError as e:
            raise EnvError(f"bad action record: {e}") from e


# ---------------------------------------------------------------------------
# Environment

@dataclass
class EnvConfig:
    max_steps: int = 0  # 0: auto, 32 + 16 * target size
    table_size: int = TABLE_SIZE
    hand_size: int = HAND_SIZE
    metrics: MetricConfig = field(default_factory=MetricConfig)


@dataclass
class Observation:
    table_frame: Frame
    hand_frame: Frame
    phase: str
    last_action_success: bool
    step_count: int


@dataclass
class StepResult:
    observation: Observation
    terminal: bool
    score: object = None  # ScoreReport iff terminal


def default_camera():
    return CameraState(azimuth_index=0, elevation_sign=1,
                       center=np.zeros(3), distance=200.0)


class BreakAndMakeEnv:
    """One episode actor: callers serialize reset/step on an instance."""

    def __init__(self, library, config=None):
        self.library = library
        self.config = config or EnvConfig()
        self.codec = ActionCodec(library.shape_ids(), library.colors.ids())
        self.phase = PHASE_DONE
        self.table = Assembly()
        self.hand = Assembly()
        self.target = Assembly()
        self.table_camera = default_camera()
        self.hand_camera = default_camera()
        self.step_count = 0
        self.max_steps = 0
        self.last_success = True
        self.table_frame = None
        self.hand_frame = None

    # -- lifecycle ---------------------------------------------------------

    def reset(self, target):
        if len(target) == 0:
            raise EnvError("target assembly is empty")
        for b in target:
            if b.shape_id not in self.library.shapes:
                raise EnvError(f"target uses unknown shape {b.shape_id}")
        self.target = target.copy()
        self.table = target.copy()
        self.hand = Assembly()
        self.phase = PHASE_BREAK
        self.step_count = 0
        self.max_steps = self.config.max_steps or (32 + 16 * len(target))
        self.last_success = True
        self.table_camera = frame_scene(self.table, default_camera(), self.library)
        self.hand_camera = frame_scene(self.hand, default_camera(), self.library)
        self._render()
        return self._observation()

    def step(self, action):
        if self.phase == PHASE_DONE:
            raise EnvError("step after episode end")
        if isinstance(action, int):
            action = self.codec.decode(action)
        try:
            success = self._apply(action)
        except EnvError:
            raise
        self.step_count += 1
        self.last_success = success
        if self.phase != PHASE_DONE and self.step_count >= self.max_steps:
            self.phase = PHASE_DONE
        self._render()
        terminal = self.phase == PHASE_DONE
        score = None
        if terminal:
            score = score_all(self.table, self.target, self.library,
                              self.config.metrics)
        return StepResult(self._observation(), terminal, score)

    # -- helpers -----------------------------------------------------------

    def _render(self):
        self.table_frame = render(self.table, self.library, self.table_camera,
                                  self.config.table_size, self.config.table_size)
        self.hand_frame = render(self.hand, self.library, self.hand_camera,
                                 self.config.hand_size, self.config.hand_size)

    def _observation(self):
        return Observation(self.table_frame, self.hand_frame, self.phase,
                           self.last_success, self.step_count)

    def state_signature(self):
        return (
            self.phase,
            self.table.signature(),
            self.hand.signature(),
            self.table_camera.signature(),
            self.hand_camera.signature(),
            self.step_count,
        )

    def _hand_brick(self):
        if len(self.hand) != 1:
            return None
        return next(iter(self.hand))

    def _give_to_hand(self, shape_id, color_id):
        self.hand = Assembly()
        self.hand.add(shape_id, color_id, np.eye(3), np.zeros(3))
        self.hand_camera = frame_scene(self.hand, default_camera(), self.library)

    # -- action semantics ----------------------------------------------------

    def _apply(self, a):
        if isinstance(a, Disassemble):
            return self._do_disassemble(a)
        if isinstance(a, Assemble):
            return self._do_assemble(a)
        if isinstance(a, AssembleOrigin):
            return self._do_assemble_origin(a)
        if isinstance(a, Pick):
            return self._do_pick(a)
        if isinstance(a, RotateBrick):
            return self._do_rotate_brick(a)
        if isinstance(a, RotateCamera):
            return self._do_rotate_camera(a)
        if isinstance(a, SwitchPhase):
            if self.phase != PHASE_BREAK:
                return False
            self.table = Assembly()
            self.hand = Assembly()
            self.phase = PHASE_MAKE
            self.table_camera = default_camera()
            self.hand_camera = default_camera()
            return True
        if isinstance(a, End):
            if self.phase != PHASE_MAKE:
                return False
            self.phase = PHASE_DONE
            return True
        raise EnvError(f"unknown action {a!r}")

    def _do_disassemble(self, a):
        if a.polarity not in ("+", "-"):
            return False
        ref = self.table_frame.snap_at(a.polarity, a.x, a.y)
        if ref is None:
            return False
        iid, pt = ref
        if not removable(self.table, iid, pt, self.library):
            return False
        inst = self.table.remove(iid)
        self._give_to_hand(inst.shape_id, inst.color_id)
        return True

    def _do_assemble(self, a):
        if self.phase != PHASE_MAKE:
            return False
        if a.hand_polarity not in ("+", "-") or a.table_polarity not in ("+", "-"):
            return False
        hand = self._hand_brick()
        if hand is None:
            return False
        href = self.hand_frame.snap_at(a.hand_polarity, a.hand_x, a.hand_y)
        tref = self.table_frame.snap_at(a.table_polarity, a.table_x, a.table_y)
        if href is None or tref is None:
            return False
        hp = self.library.shape(hand.shape_id).point(href[1])
        tinst = self.table.get(tref[0])
        tp = self.library.shape(tinst.shape_id).point(tref[1])
        if hp.polarity == tp.polarity or hp.kind != tp.kind:
            return False
        pos_t = tinst.world_point(tp.position)
        axis_t = tinst.world_axis(tp.axis)
        R, t = self._mate(hand, hp, pos_t, axis_t)
        candidate = hand.copy()
        candidate.instance_id = self.table.next_id
        candidate.rotation = R
        candidate.translation = t
        if collides(self.table, candidate, self.library):
            return False
        self.table.add(hand.shape_id, hand.color_id, R, t)
        self.hand = Assembly()
        self.hand_camera = frame_scene(self.hand, default_camera(), self.library)
        return True

    def _mate(self, hand, hand_point, pos_t, axis_t):
        """Mated pose: positions coincident, axes anti-parallel, residual yaw
        the 90-degree increment nearest the hand brick's current rotation."""
        best = None
        best_key = None
        for k, R in enumerate(mate_rotations(hand_point.axis, axis_t)):
            d = geodesic_distance(R, hand.rotation)
            if best_key is None or d < best_key - 1e-12:
                best_key = d
                best = R
        t = snap_translation(pos_t - best @ hand_point.position)
        return best, t

    def _do_assemble_origin(self, a):
        if self.phase != PHASE_MAKE:
            return False
        if len(self.table) != 0:
            return False
        hand = self._hand_brick()
        if hand is None or a.polarity not in ("+", "-"):
            return False
        ref = self.hand_frame.snap_at(a.polarity, a.hand_x, a.hand_y)
        if ref is None:
            return False
        p = self.library.shape(hand.shape_id).point(ref[1])
        self.table.add(hand.shape_id, hand.color_id, np.eye(3), -p.position)
        self.hand = Assembly()
        self.hand_camera = frame_scene(self.hand, default_camera(), self.library)
        return True

    def _do_pick(self, a):
        if self.phase != PHASE_MAKE:
            return False
        if a.shape_id not in self.library.shapes:
            return False
        if a.color_id not in self.library.colors.entries:
            return False
        self._give_to_hand(a.shape_id, a.color_id)
        return True

    def _do_rotate_brick(self, a):
        if a.polarity not in ("+", "-") or a.angle not in ROTATE_ANGLES:
            return False
        ref = self.table_frame.snap_at(a.polarity, a.x, a.y)
        if ref is None:
            return False
        iid, pt = ref
        inst = self.table.get(iid)
        p = self.library.shape(inst.shape_id).point(pt)
        pos = inst.world_point(p.position)
        axis = inst.world_axis(p.axis)
        Rd = rotation_about(axis, math.radians(a.angle))
        R = snap_rotation(Rd @ inst.rotation)
        t = snap_translation(pos + Rd @ (inst.translation - pos))
        candidate = inst.copy()
        candidate.rotation = R
        candidate.translation = t
        if collides(self.table, candidate, self.library, ignore={iid}):
            return False
        inst.rotation = R
        inst.translation = t
        return True

    def _do_rotate_camera(self, a):
        if a.workspace not in WORKSPACES or a.direction not in CAMERA_DIRECTIONS:
            return False
        cam = self.table_camera if a.workspace == "table" else self.hand_camera
        ws = self.table if a.workspace == "table" else self.hand
        before = cam.signature()
        if a.direction == "left":
            cam.azimuth_index = (cam.azimuth_index - 1) % 8
        elif a.direction == "right":
            cam.azimuth_index = (cam.azimuth_index + 1) % 8
        elif a.direction == "up":
            cam.elevation_sign = 1
        elif a.direction == "down":
            cam.elevation_sign = -1
        else:
            cam = frame_scene(ws, cam, self.library)
            if a.workspace == "table":
                self.table_camera = cam
            else:
                self.hand_camera = cam
        return cam.signature() != before
