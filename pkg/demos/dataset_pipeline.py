"""Full data pipeline: generate scenes, record validated demonstrations,
then verify one by byte-exact replay.

Run:  python3 demos/dataset_pipeline.py
"""

import os
import tempfile

from bricklab.datagen import load_manifest, make_dataset, manifest_files
from bricklab.env import BreakAndMakeEnv, EnvConfig
from bricklab.episodes import read_steps, replay
from bricklab.ldraw import load_assembly
from bricklab.metrics import MetricConfig
from bricklab.planner import generate_demonstration
from bricklab.shapes import load_shape_library
from bricklab.symmetry import build_symmetry_table

library = load_shape_library()
metrics = MetricConfig(symmetry=build_symmetry_table(library))
work = tempfile.mkdtemp(prefix="bricklab_pipeline_")

ds = os.path.join(work, "scenes")
manifest = make_dataset(ds, library, "demo", size=3,
                        counts={"train": 3, "test": 1}, seed=42)
print(f"dataset: {sum(len(v) for v in manifest['splits'].values())} scenes "
      f"in {ds}")

demo_root = os.path.join(work, "demos")
for fname in manifest_files(load_manifest(os.path.join(ds, "manifest.json")),
                            split="train"):
    target = load_assembly(os.path.join(ds, fname), library)
    out = os.path.join(demo_root, os.path.splitext(fname)[0])
    demo = generate_demonstration(target, library, EnvConfig(metrics=metrics),
                                  out_dir=out)
    status = "validated" if demo.validated else "failed"
    steps = len(read_steps(out)) if demo.validated else 0
    print(f"  {fname}: {status} ({steps} logged steps)")

episode = next(os.path.join(demo_root, d) for d in sorted(os.listdir(demo_root)))
result = replay(episode, lambda meta: BreakAndMakeEnv(library, EnvConfig(
    max_steps=meta["max_steps"], table_size=meta["table_size"],
    hand_size=meta["hand_size"], metrics=metrics)))
print(f"replayed {episode}: terminal={result.terminal} "
      f"AED={result.score.aed}")
print(f"artifacts kept under {work}")
