"""Watch the expert planner solve one Break-and-Make episode.

Run:  python3 demos/expert_episode.py [seed]
"""

import sys

from bricklab.datagen import GeneratorConfig, random_assembly
from bricklab.env import BreakAndMakeEnv, EnvConfig
from bricklab.metrics import MetricConfig
from bricklab.planner import run_episode
from bricklab.shapes import load_shape_library
from bricklab.symmetry import build_symmetry_table

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
library = load_shape_library()
config = EnvConfig(metrics=MetricConfig(symmetry=build_symmetry_table(library)))

target = random_assembly(GeneratorConfig(brick_count=4, seed=seed), library)
print(f"target (seed {seed}):")
for b in target:
    print(f"  instance {b.instance_id}: shape {b.shape_id} "
          f"color {b.color_id} at {b.translation.tolist()}")

env = BreakAndMakeEnv(library, config)
planner, removal_order, result = run_episode(env, target)

print(f"\nremoval order: {[iid for iid, _, _ in removal_order]}")
print(f"actions taken ({len(planner.steps)}):")
for step in planner.steps:
    note = f"  # {step.annotation}" if step.annotation else ""
    print(f"  {step.action}{note}")

score = result.score
print(f"\nfinal score: F1_b {score.f1_b}  F1_a {score.f1_a}  "
      f"F1_e {score.f1_e}  AED {score.aed}")
