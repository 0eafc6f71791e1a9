"""Build a small model, render it, and score an imperfect reconstruction.

Run:  python3 demos/quickstart.py
"""

import numpy as np

from bricklab.assembly import Assembly, detect_connections
from bricklab.metrics import MetricConfig, score_all
from bricklab.raster import CameraState, frame_scene, frame_to_png, render
from bricklab.shapes import load_shape_library
from bricklab.symmetry import build_symmetry_table

library = load_shape_library()

# A red 2x4 brick with a blue 2x2 on top.  Up is -Y; stacking a brick on
# another subtracts the new brick's height from the support's y.
target = Assembly()
target.add(3001, 4, np.eye(3), [0.0, 0.0, 0.0])
target.add(3003, 1, np.eye(3), [20.0, -24.0, 0.0])

connections = detect_connections(target, library)
print(f"target: {len(target)} bricks, {len(connections)} stud connections")

camera = frame_scene(target, CameraState(), library)
frame = render(target, library, camera, 256, 256)
with open("/tmp/quickstart.png", "wb") as f:
    f.write(frame_to_png(frame))
print("wrote /tmp/quickstart.png")

# Score a reconstruction with the top brick shifted by one stud.
predicted = Assembly()
predicted.add(3001, 4, np.eye(3), [0.0, 0.0, 0.0])
predicted.add(3003, 1, np.eye(3), [0.0, -24.0, 0.0])

config = MetricConfig(symmetry=build_symmetry_table(library))
report = score_all(predicted, target, library, config)
print(f"F1_b {report.f1_b}  F1_a {report.f1_a}  "
      f"F1_e {report.f1_e}  AED {report.aed}")
