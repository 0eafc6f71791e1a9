"""Expert visual planner: feasible Break and Make action sequences.

The planner drives a live environment with privileged target access but only
acts through cursor cells that are actually present in the rendered snap
maps, searching camera viewpoints when a needed point is hidden.  Emitted
demonstrations are validated by replay and scored; failures are reported as
data, not raised.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    collides,
    connected_components,
    removable,
)
from .env import (
    Assemble,
    AssembleOrigin,
    Disassemble,
    End,
    Pick,
    RotateBrick,
    RotateCamera,
    SwitchPhase,
)
from .geometry import rotation_about

MAX_CAMERA_SEARCH = 16
POSE_POS_TOL = 0.5  # LDU
POSE_ROT_TOL = math.radians(1.0)


class PlanningFailure(Exception):
    pass


@dataclass
class PlanStep:
    action: object
    expected_ref: tuple = None  # (instance_id, point_index, polarity)
    annotation: str = ""


@dataclass
class Demonstration:
    target: object
    steps: list
    score: object
    removal_order: list
    validated: bool = False
    meta: dict = field(default_factory=dict)


def _grid_refs(frame, polarity):
    """(instance, point) -> list of cells holding that reference."""
    g = frame.snap(polarity)
    out = {}
    ys, xs = np.nonzero(g[:, :, 0])
    for y, x in zip(ys.tolist(), xs.tolist()):
        out.setdefault((int(g[y, x, 0]), int(g[y, x, 1])), []).append((x, y))
    return out


class Planner:
    """Plans one episode on a live env; records every step it takes."""

    def __init__(self, env, visibility_cells=1, writer=None):
        self.env = env
        self.library = env.library
        self.steps = []
        self.visibility_cells = visibility_cells
        self.writer = writer

    # -- shared machinery ---------------------------------------------------

    def _frame(self, workspace):
        return self.env.table_frame if workspace == "table" else self.env.hand_frame

    def _act(self, action, expected_ref=None, annotation=""):
        result = self.env.step(action)
        self.steps.append(PlanStep(action, expected_ref, annotation))
        if self.writer is not None:
            self.writer.record(action, result)
        return result

    def _camera_sweep(self, workspace, find):
        """Try `find(frame) -> result or None` across camera motions.

        Emits at most MAX_CAMERA_SEARCH camera actions; raises on failure."""
        hit = find(self._frame(workspace))
        if hit is not None:
            return hit
        moves = [RotateCamera(workspace, "frame")]
        for flip in ("down", "up"):
            moves.append(RotateCamera(workspace, flip))
            moves.extend(RotateCamera(workspace, "right") for _ in range(7))
        for move in moves[:MAX_CAMERA_SEARCH]:
            self._act(move, annotation="camera search")
            hit = find(self._frame(workspace))
            if hit is not None:
                return hit
        raise PlanningFailure(f"no visible point after {workspace} camera sweep")

    def _find_cell(self, workspace, instance_id, point_index, polarity):
        def find(frame):
            cells = _grid_refs(frame, polarity).get((instance_id, point_index))
            if cells and len(cells) >= self.visibility_cells:
                return cells[0]
            return None

        return self._camera_sweep(workspace, find)

    # -- break phase ---------------------------------------------------------

    def plan_break(self):
        """Disassemble the table completely; returns the removal order as
        (instance_id, shape_id, color_id) in removal sequence."""
        removal_order = []
        while len(self.env.table) > 0:
            try:
                # Prefer removals that keep the remainder connected so the
                # reversed order is always buildable.
                pick = self._camera_sweep(
                    "table", lambda f: self._removable_visible(f, strict=True)
                )
            except PlanningFailure:
                pick = self._camera_sweep("table", self._removable_visible)
            (iid, pt, pol), (x, y) = pick
            inst = self.env.table.get(iid)
            removal_order.append((iid, inst.shape_id, inst.color_id))
            result = self._act(
                Disassemble(x, y, pol),
                expected_ref=(iid, pt, pol),
                annotation=f"remove instance {iid}",
            )
            if not result.observation.last_action_success:
                raise PlanningFailure(f"disassemble of {iid} failed on replay")
        return removal_order

    def _removable_visible(self, frame, strict=False):
        """Best removable brick with a visible detach point.

        Preference: removals that keep the remainder connected, then the
        physically highest brick, then lowest instance id.  With `strict`,
        disconnecting removals are not candidates at all."""
        table = self.env.table
        candidates = []
        for pol in ("+", "-"):
            for (iid, pt), cells in _grid_refs(frame, pol).items():
                if len(cells) < self.visibility_cells:
                    continue
                if not removable(table, iid, pt, self.library):
                    continue
                rest_connected = True
                if len(table) > 2:
                    rest = table.copy()
                    rest.remove(iid)
                    rest_connected = len(
                        connected_components(rest, self.library)) <= 1
                if strict and not rest_connected:
                    continue
                height = float(table.get(iid).translation[1])  # up is -Y
                candidates.append(
                    ((not rest_connected, height, iid), (iid, pt, pol), cells[0])
                )
        if not candidates:
            return None
        candidates.sort(key=lambda c: c[0])
        _, ref, cell = candidates[0]
        return ref, cell

    # -- make phase ----------------------------------------------------------

    def plan_make(self, target, removal_order):
        """Rebuild the target in reverse removal order, then end."""
        order = [iid for iid, _, _ in reversed(removal_order)]
        if set(order) != set(target.instances):
            raise PlanningFailure("removal order does not cover the target")
        result = self._act(SwitchPhase(), annotation="switch to make")
        if not result.observation.last_action_success:
            raise PlanningFailure("phase switch rejected")
        placed = {}  # target id -> live table id
        M = None  # (R, t): target world -> build world
        for k, tid in enumerate(order):
            tb = target.instances[tid]
            self._act(Pick(tb.shape_id, tb.color_id),
                      annotation=f"pick for target {tid}")
            if k == 0:
                M = self._place_first(tb)
                placed[tid] = self.env.table.ids()[-1]
            else:
                placed[tid] = self._place_next(target, tid, placed, M)
        result = self._act(End(), annotation="end episode")
        return result

    def _goal_pose(self, M, tb):
        R0, t0 = M
        return R0 @ tb.rotation, R0 @ tb.translation + t0

    def _place_first(self, tb):
        """Hand-only placement of the lowest connection point at the origin;
        establishes the rigid map from target frame to build frame."""
        shape = self.library.shape(tb.shape_id)
        hand = self.env._hand_brick()
        # Lowest in the build (canonical) hand frame: largest local y.
        point = max(shape.connection_points, key=lambda p: (p.position[1], -p.index))
        x, y = self._find_cell("hand", hand.instance_id, point.index, point.polarity)
        result = self._act(
            AssembleOrigin(x, y, point.polarity),
            expected_ref=(hand.instance_id, point.index, point.polarity),
            annotation="anchor first brick at origin",
        )
        if not result.observation.last_action_success:
            raise PlanningFailure("hand-only placement failed")
        live = self.env.table.get(self.env.table.ids()[-1])
        R0 = live.rotation @ tb.rotation.T
        t0 = live.translation - R0 @ tb.translation
        return (R0, t0)

    def _place_next(self, target, tid, placed, M):
        """Attach the picked brick to any placed brick so that the goal pose
        is reached directly or after one rotate step.

        Candidates are predicted locally (mated pose and collision) before
        spending camera moves, then tried in order of predicted effort."""
        tb = target.instances[tid]
        R_goal, t_goal = self._goal_pose(M, tb)
        hand = self.env._hand_brick()
        hand_shape = self.library.shape(hand.shape_id)
        candidates = []
        for live_id in self.env.table.ids():
            live = self.env.table.get(live_id)
            live_shape = self.library.shape(live.shape_id)
            for tp in live_shape.connection_points:
                pos_t = live.world_point(tp.position)
                axis_t = live.world_axis(tp.axis)
                for hp in hand_shape.connection_points:
                    if hp.polarity == tp.polarity or hp.kind != tp.kind:
                        continue
                    R, t = self.env._mate(hand, hp, pos_t, axis_t)
                    probe = hand.copy()
                    probe.instance_id = self.env.table.next_id
                    probe.rotation = R
                    probe.translation = t
                    if collides(self.env.table, probe, self.library):
                        continue
                    if self._pose_ok(probe, R_goal, t_goal):
                        rank = 0
                    elif self._rotation_options(probe, R_goal, t_goal):
                        rank = 1
                    else:
                        continue
                    candidates.append(
                        ((rank, hp.index, live_id, tp.index),
                         hp, live_id, tp)
                    )
        if not candidates:
            raise PlanningFailure(f"target {tid}: no feasible attachment")
        candidates.sort(key=lambda c: c[0])
        last_error = None
        for _, hp, live_id, tp in candidates:
            try:
                return self._attempt_connection(tid, hp, live_id, tp,
                                                R_goal, t_goal)
            except PlanningFailure as e:
                last_error = e
                if self.env._hand_brick() is None:
                    # Brick left the hand but landed wrong; no recovery path.
                    raise
                continue
        raise PlanningFailure(
            f"target {tid}: all attachments failed ({last_error})"
        )

    def _attempt_connection(self, tid, hand_point, live_id, table_point,
                            R_goal, t_goal):
        hand = self.env._hand_brick()
        hx, hy = self._find_cell("hand", hand.instance_id, hand_point.index,
                                 hand_point.polarity)
        tx, ty = self._find_cell("table", live_id, table_point.index,
                                 table_point.polarity)
        result = self._act(
            Assemble(hx, hy, hand_point.polarity, tx, ty, table_point.polarity),
            expected_ref=(live_id, table_point.index, table_point.polarity),
            annotation=f"attach target {tid}",
        )
        if not result.observation.last_action_success:
            raise PlanningFailure(f"assemble rejected for target {tid}")
        new_id = self.env.table.ids()[-1]
        self._fix_orientation(new_id, R_goal, t_goal)
        return new_id

    def _pose_ok(self, inst, R_goal, t_goal):
        if float(np.linalg.norm(inst.translation - t_goal)) > POSE_POS_TOL:
            return False
        sym = self.env.config.metrics.symmetry
        from .geometry import geodesic_distance

        for S in sym.rotations(inst.shape_id):
            if geodesic_distance(inst.rotation @ S, R_goal) < POSE_ROT_TOL:
                return True
        return False

    def _rotation_options(self, inst, R_goal, t_goal, table=None):
        """(point, angle) pairs whose single rotate step reaches the goal
        pose without colliding."""
        shape = self.library.shape(inst.shape_id)
        options = []
        for p in shape.connection_points:
            for angle in (90, 180, 270):
                axis = inst.world_axis(p.axis)
                pos = inst.world_point(p.position)
                Rd = rotation_about(axis, math.radians(angle))
                probe = inst.copy()
                probe.rotation = Rd @ inst.rotation
                probe.translation = pos + Rd @ (inst.translation - pos)
                if not self._pose_ok(probe, R_goal, t_goal):
                    continue
                asm = table if table is not None else self.env.table
                if collides(asm, probe, self.library,
                            ignore={inst.instance_id}):
                    continue
                options.append((p, angle))
        return options

    def _fix_orientation(self, live_id, R_goal, t_goal):
        """Up to one rotate step correcting the quantized residual yaw."""
        inst = self.env.table.get(live_id)
        if self._pose_ok(inst, R_goal, t_goal):
            return
        options = self._rotation_options(inst, R_goal, t_goal)
        if not options:
            raise PlanningFailure(
                f"no single rotation reaches goal pose for {live_id}"
            )

        def find(frame):
            for pol in ("+", "-"):
                refs = _grid_refs(frame, pol)
                for p, angle in options:
                    if p.polarity != pol:
                        continue
                    cells = refs.get((live_id, p.index))
                    if cells:
                        return cells[0], p, angle
            return None

        (x, y), p, angle = self._camera_sweep("table", find)
        result = self._act(
            RotateBrick(x, y, p.polarity, angle),
            expected_ref=(live_id, p.index, p.polarity),
            annotation=f"orient instance {live_id}",
        )
        if not result.observation.last_action_success:
            raise PlanningFailure(f"rotate rejected for {live_id}")
        if not self._pose_ok(self.env.table.get(live_id), R_goal, t_goal):
            raise PlanningFailure(f"orientation fix missed goal for {live_id}")


def run_episode(env, target):
    """Plan and execute a full Break-and-Make episode; returns the planner
    (with its recorded steps) and the terminal result."""
    env.reset(target)
    planner = Planner(env)
    removal_order = planner.plan_break()
    result = planner.plan_make(target, removal_order)
    if not result.terminal:
        raise PlanningFailure("episode did not terminate")
    return planner, removal_order, result


def generate_demonstration(target, library, env_config, out_dir=None, meta=None):
    """Plan, execute, record, and validate one demonstration.

    Returns a Demonstration; `validated` is False (and no log directory is
    kept) when planning fails or the final score is imperfect.  The
    demonstration is marked noisy: visual sufficiency of the recorded
    frames is not guaranteed.
    """
    import os
    import shutil

    from .env import BreakAndMakeEnv
    from .episodes import EpisodeWriter

    env = BreakAndMakeEnv(library, env_config)
    env.reset(target)
    writer = None
    if out_dir is not None:
        writer = EpisodeWriter(out_dir, env, target,
                               meta={"noisy": True, **(meta or {})})
    planner = Planner(env, writer=writer)
    try:
        removal_order = planner.plan_break()
        result = planner.plan_make(target, removal_order)
    except PlanningFailure as e:
        if writer is not None:
            writer.close()
            shutil.rmtree(out_dir)
        return Demonstration(target, planner.steps, None, [],
                             validated=False, meta={"error": str(e)})
    score = result.score
    ok = score is not None and score.aed == 0.0 and score.f1_a == 1.0
    if writer is not None:
        if ok:
            writer.close(extra={
                "demo_meta.json": {
                    "planner_version": 1,
                    "visibility_cells": planner.visibility_cells,
                    "validated": True,
                    "noisy": True,
                    "score": {"f1_b": score.f1_b, "f1_e": score.f1_e,
                              "f1_a": score.f1_a, "aed": score.aed},
                },
            })
        else:
            writer.close()
            shutil.rmtree(out_dir)
    return Demonstration(target, planner.steps, score, removal_order,
                         validated=ok)
