"""Random construction generator, greedy slicer, and dataset manifests."""

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    Assembly,
    collides,
    connected_components,
    detect_connections,
    instance_world_box,
)
from .geometry import mate_rotations, snap_translation
from .ldraw import write_ldraw


class GeneratorError(Exception):
    pass


@dataclass
class GeneratorConfig:
    brick_count: int
    shape_pool: list = field(default_factory=list)  # empty: whole library
    color_pool: list = field(default_factory=list)
    seed: int = 0
    max_retries: int = 100

    def __post_init__(self):
        if self.brick_count < 1:
            raise GeneratorError("brick_count must be >= 1")


def random_assembly(config, library):
    """Grow a connected assembly by mating random bricks onto random
    compatible connection points; deterministic per seed."""
    rng = np.random.default_rng(config.seed)
    shapes = list(config.shape_pool) or library.shape_ids()
    colors = list(config.color_pool) or library.colors.ids()
    if not shapes or not colors:
        raise GeneratorError("empty shape or color pool")
    asm = Assembly()
    first_shape = shapes[rng.integers(len(shapes))]
    first_color = colors[rng.integers(len(colors))]
    asm.add(first_shape, first_color, np.eye(3), np.zeros(3))
    while len(asm) < config.brick_count:
        placed = False
        for _ in range(config.max_retries):
            shape_id = shapes[rng.integers(len(shapes))]
            color_id = colors[rng.integers(len(colors))]
            shape = library.shape(shape_id)
            p = shape.connection_points[rng.integers(len(shape.connection_points))]
            want = "-" if p.polarity == "+" else "+"
            scene_pts = [
                sp for sp in asm.world_points(library, polarity=want)
                if sp[4] == p.kind
            ]
            if not scene_pts:
                continue
            target = scene_pts[rng.integers(len(scene_pts))]
            yaw = int(rng.integers(4))
            R = mate_rotations(p.axis, target[3])[yaw]
            t = snap_translation(target[2] - R @ p.position)
            from .assembly import BrickInstance

            candidate = BrickInstance(asm.next_id, shape_id, color_id, R, t)
            if collides(asm, candidate, library):
                continue
            asm.add(shape_id, color_id, R, t)
            placed = True
            break
        if not placed:
            raise GeneratorError(
                f"seed {config.seed}: retries exhausted at brick {len(asm) + 1}"
            )
    return asm


def slice_assembly(asm, library, k):
    """Greedy bounding-box slicing into connected pieces of at most k bricks.

    Per connected component: seed each slice with the lowest remaining
    instance id, then repeatedly add the connected brick minimizing the
    largest axis of the grown slice's world AABB (ties by lowest id)."""
    if k < 1:
        raise GeneratorError("slice size must be >= 1")
    connections = detect_connections(asm, library)
    neighbors = {iid: set() for iid in asm.instances}
    for c in connections:
        a, b = c.instances()
        neighbors[a].add(b)
        neighbors[b].add(a)
    slices = []
    for comp in connected_components(asm, library, connections):
        remaining = set(comp.instances)
        while remaining:
            seed = min(remaining)
            members = [seed]
            remaining.discard(seed)
            boxes = {seed: instance_world_box(
                asm.instances[seed],
                library.shape(asm.instances[seed].shape_id).bounding_box)}
            while len(members) < k:
                frontier = set()
                for m in members:
                    frontier |= neighbors[m] & remaining
                if not frontier:
                    break
                lo = np.min([boxes[m][0] for m in members], axis=0)
                hi = np.max([boxes[m][1] for m in members], axis=0)
                best = None
                best_key = None
                for cand in sorted(frontier):
                    b = asm.instances[cand]
                    clo, chi = instance_world_box(
                        b, library.shape(b.shape_id).bounding_box)
                    ext = np.maximum(hi, chi) - np.minimum(lo, clo)
                    key = (float(np.max(ext)), cand)
                    if best_key is None or key < best_key:
                        best_key = key
                        best = (cand, (clo, chi))
                members.append(best[0])
                boxes[best[0]] = best[1]
                remaining.discard(best[0])
            piece = Assembly()
            for iid in sorted(members):
                b = asm.instances[iid]
                piece.add(b.shape_id, b.color_id, b.rotation, b.translation, iid)
            slices.append(piece)
    return slices


def _config_hash(payload):
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode()
    ).hexdigest()[:16]


def make_dataset(out_dir, library, name, size, counts, seed,
                 source_files=None, source_splits=None, max_failures=1000):
    """Write scene files plus a manifest.

    Generator mode (default): `counts` maps split -> number of random scenes
    of `size` bricks; per-scene seeds derive from the master seed, failed
    seeds are skipped and recorded.  File mode: each source file is sliced
    to `size`, slices inherit the source file's split assignment.

    Cross-split duplicate contents are resampled (generator mode) so no
    content hash appears in both train and test.
    """
    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "name": name,
        "size": size,
        "seed": seed,
        "splits": {},
        "failures": [],
        "config_hash": _config_hash(
            {"name": name, "size": size, "seed": seed, "counts": counts}
        ),
    }
    hashes = {}
    if source_files:
        from .ldraw import load_assembly

        for path in source_files:
            split = source_splits[path]
            asm = load_assembly(path, library)
            base = os.path.splitext(os.path.basename(path))[0]
            for i, piece in enumerate(slice_assembly(asm, library, size)):
                fname = f"{base}_slice{i:04d}.ldr"
                text = write_ldraw(piece, library)
                with open(os.path.join(out_dir, fname), "w") as f:
                    f.write(text)
                manifest["splits"].setdefault(split, []).append(fname)
                hashes.setdefault(hashlib.sha256(text.encode()).hexdigest(),
                                  set()).add(split)
    else:
        stream = np.random.SeedSequence(seed).generate_state(2**20, dtype=np.uint64)
        cursor = 0
        failures = 0
        for split in sorted(counts):
            files = []
            while len(files) < counts[split]:
                if cursor >= len(stream):
                    raise GeneratorError("seed stream exhausted")
                scene_seed = int(stream[cursor])
                cursor += 1
                cfg = GeneratorConfig(brick_count=size, seed=scene_seed)
                try:
                    asm = random_assembly(cfg, library)
                except GeneratorError:
                    failures += 1
                    manifest["failures"].append(scene_seed)
                    if failures > max_failures:
                        raise
                    continue
                text = write_ldraw(asm, library)
                h = hashlib.sha256(text.encode()).hexdigest()
                if h in hashes and split not in hashes[h]:
                    continue  # would leak content across splits; resample
                hashes.setdefault(h, set()).add(split)
                fname = f"{name}_{split}_{len(files):06d}.ldr"
                with open(os.path.join(out_dir, fname), "w") as f:
                    f.write(text)
                files.append({"file": fname, "seed": scene_seed})
            manifest["splits"][split] = files
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, sort_keys=True, indent=1)
        f.write("\n")
    return manifest


def load_manifest(path):
    with open(path) as f:
        return json.load(f)


def manifest_files(manifest, split=None):
    out = []
    for sp in sorted(manifest["splits"]):
        if split is not None and sp != split:
            continue
        for entry in manifest["splits"][sp]:
            out.append(entry["file"] if isinstance(entry, dict) else entry)
    return out
