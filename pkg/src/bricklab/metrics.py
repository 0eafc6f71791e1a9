"""The four assembly-comparison metrics.

F1 over bricks ignores pose; F1 over assemblies matches bricks one-to-one
under the single best rigid transform with distance/orientation thresholds
(symmetry aware); the assembly edit distance iterates that alignment,
removing matched bricks each round; F1 over edges reuses the accumulated
matching to compare connection graphs.
"""

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .assembly import SymmetryTable, detect_connections, oriented_aligned
from .geometry import geodesic_distance


@dataclass
class MetricConfig:
    theta_eps: float = math.radians(30.0)
    dist_eps: float = 20.0  # LDU (= 8 mm)
    symmetry: SymmetryTable = field(default_factory=SymmetryTable)

    def __post_init__(self):
        if not (0.0 < self.theta_eps < math.pi):
            raise ValueError("theta_eps must be in (0, pi)")
        if self.dist_eps <= 0:
            raise ValueError("dist_eps must be positive")


@dataclass
class AlignmentResult:
    rounds: list  # [(R0, t0, [(pred_id, tgt_id), ...]), ...]
    leftover_predicted: set
    leftover_target: set
    matching: dict  # predicted id -> target id, accumulated over rounds


@dataclass
class ScoreReport:
    f1_b: float
    f1_e: float
    f1_a: float
    aed: float
    counts: dict  # metric -> (tp, fp, fn)
    alignment: AlignmentResult

    def records(self):
        """Line-record serialization with bit-stable ordering."""
        lines = [
            f"score f1_b {self.f1_b!r}",
            f"score f1_e {self.f1_e!r}",
            f"score f1_a {self.f1_a!r}",
            f"score aed {self.aed!r}",
        ]
        for key in ("bricks", "edges", "assembly"):
            tp, fp, fn = self.counts[key]
            lines.append(f"counts {key} tp {tp} fp {fp} fn {fn}")
        for i, (R0, t0, pairs) in enumerate(self.alignment.rounds):
            for p, t in pairs:
                lines.append(f"match round {i} predicted {p} target {t}")
        for p in sorted(self.alignment.leftover_predicted):
            lines.append(f"leftover predicted {p}")
        for t in sorted(self.alignment.leftover_target):
            lines.append(f"leftover target {t}")
        return "\n".join(lines) + "\n"


def _f1(tp, fp, fn):
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def f1_bricks(predicted, target):
    """Multiset F1 over (shape, color) pairs, pose ignored."""
    mp = Counter((b.shape_id, b.color_id) for b in predicted)
    mt = Counter((b.shape_id, b.color_id) for b in target)
    tp = sum((mp & mt).values())
    fp = sum((mp - mt).values())
    fn = sum((mt - mp).values())
    return _f1(tp, fp, fn), (tp, fp, fn)


def _aligned_pairs(pred, tgt, R0, t0, config):
    """Greedy one-to-one matching by ascending position residual among pairs
    aligned under the transform (target mapped into predicted frame)."""
    cands = []
    for ti in sorted(tgt.instances):
        bi = tgt.instances[ti]
        pos = R0 @ bi.translation + t0
        rot = R0 @ bi.rotation
        for pj in sorted(pred.instances):
            bj = pred.instances[pj]
            if bj.shape_id != bi.shape_id or bj.color_id != bi.color_id:
                continue
            resid = float(np.linalg.norm(pos - bj.translation))
            if resid >= config.dist_eps:
                continue
            if not oriented_aligned(
                rot, bj.rotation, bi.shape_id, config.symmetry, config.theta_eps
            ):
                continue
            cands.append((resid, ti, pj))
    cands.sort(key=lambda c: (c[0], c[1], c[2]))
    used_t, used_p = set(), set()
    pairs = []
    total = 0.0
    for resid, ti, pj in cands:
        if ti in used_t or pj in used_p:
            continue
        used_t.add(ti)
        used_p.add(pj)
        pairs.append((pj, ti))
        total += resid
    return pairs, total


def candidate_transforms(predicted, target, config):
    """Pair-induced rigid transforms: for every cross pair with equal shape
    and color and every shape symmetry S, R0 = Rj S Ri^-1, t0 = tj - R0 ti.

    Enumeration order is (target id, predicted id, symmetry index)."""
    out = []
    for ti in sorted(target.instances):
        bi = target.instances[ti]
        for pj in sorted(predicted.instances):
            bj = predicted.instances[pj]
            if bj.shape_id != bi.shape_id or bj.color_id != bi.color_id:
                continue
            for si, S in enumerate(config.symmetry.rotations(bi.shape_id)):
                R0 = bj.rotation @ S @ bi.rotation.T
                t0 = bj.translation - R0 @ bi.translation
                out.append((R0, t0, (ti, pj, si)))
    return out


def align_once(predicted, target, config):
    """Single best rigid alignment: the candidate transform matching the most
    bricks; ties by smaller total residual, then enumeration order.

    Returns (R0, t0, pairs) with pairs as (predicted_id, target_id)."""
    best = (np.eye(3), np.zeros(3), [])
    best_key = None
    for R0, t0, order in candidate_transforms(predicted, target, config):
        pairs, total = _aligned_pairs(predicted, target, R0, t0, config)
        key = (-len(pairs), total, order)
        if best_key is None or key < best_key:
            best_key = key
            best = (R0, t0, pairs)
    return best


def f1_assembly(predicted, target, config):
    """Pose-aware F1: matched pairs under the single best alignment."""
    _, _, pairs = align_once(predicted, target, config)
    tp = len(pairs)
    fp = len(predicted) - tp
    fn = len(target) - tp
    return _f1(tp, fp, fn), (tp, fp, fn)


def _subset(asm, ids):
    from .assembly import Assembly

    out = Assembly()
    for iid in sorted(ids):
        b = asm.instances[iid]
        out.add(b.shape_id, b.color_id, b.rotation, b.translation, iid)
    return out


def aed(predicted, target, config):
    """Assembly edit distance.

    Iterates the single-transform alignment, removing matched bricks, until
    a side empties or nothing aligns.  Cost is (rounds - 1) plus 1 per
    leftover predicted brick and 2 per leftover target brick."""
    rem_p = set(predicted.instances)
    rem_t = set(target.instances)
    rounds = []
    matching = {}
    while rem_p and rem_t:
        R0, t0, pairs = align_once(_subset(predicted, rem_p),
                                   _subset(target, rem_t), config)
        if not pairs:
            break
        rounds.append((R0, t0, pairs))
        for pj, ti in pairs:
            matching[pj] = ti
            rem_p.discard(pj)
            rem_t.discard(ti)
    value = float(max(len(rounds) - 1, 0) + len(rem_p) + 2 * len(rem_t))
    return value, AlignmentResult(rounds, rem_p, rem_t, matching)


def f1_edges(predicted, target, library, matching):
    """F1 over unordered connected instance pairs, mapped through the
    accumulated AED matching."""
    pred_edges = {
        tuple(sorted(c.instances())) for c in detect_connections(predicted, library)
    }
    pred_edges = {e for e in pred_edges if e[0] != e[1]}
    tgt_edges = {
        tuple(sorted(c.instances())) for c in detect_connections(target, library)
    }
    tgt_edges = {e for e in tgt_edges if e[0] != e[1]}
    tp = 0
    fp = 0
    hit = set()
    for i, j in sorted(pred_edges):
        mi = matching.get(i)
        mj = matching.get(j)
        if mi is not None and mj is not None:
            e = tuple(sorted((mi, mj)))
            if e in tgt_edges:
                tp += 1
                hit.add(e)
                continue
        fp += 1
    fn = len(tgt_edges - hit)
    return _f1(tp, fp, fn), (tp, fp, fn)


def score_all(predicted, target, library, config):
    """All four metrics; AED supplies the alignment and matching."""
    fb, cb = f1_bricks(predicted, target)
    value, alignment = aed(predicted, target, config)
    fa, ca = f1_assembly(predicted, target, config)
    fe, ce = f1_edges(predicted, target, library, alignment.matching)
    return ScoreReport(
        f1_b=fb,
        f1_e=fe,
        f1_a=fa,
        aed=value,
        counts={"bricks": cb, "edges": ce, "assembly": ca},
        alignment=alignment,
    )
