"""Episode log directories: recording, loading, and verified replay.

Layout (one directory per episode):
  meta.json    seed, config summary, target file name
  target.ldr   the target assembly
  steps.jsonl  one record per step:
               {"step", "action", "action_record", "success",
                "table_png", "hand_png"}
  frames/      step_NNNN_{table,hand}.png

Logs contain no timestamps so repeated runs of the same seed are
byte-identical.
"""

import json
import os

from .env import ActionCodec
from .ldraw import load_assembly, save_assembly
from .raster import frame_to_png


class EpisodeLogError(Exception):
    pass


class EpisodeWriter:
    def __init__(self, directory, env, target, meta=None):
        self.dir = directory
        self.env = env
        os.makedirs(os.path.join(directory, "frames"), exist_ok=True)
        save_assembly(os.path.join(directory, "target.ldr"), target, env.library)
        m = {
            "target_file": "target.ldr",
            "max_steps": env.max_steps,
            "table_size": env.config.table_size,
            "hand_size": env.config.hand_size,
            "action_space": env.codec.total,
        }
        m.update(meta or {})
        with open(os.path.join(directory, "meta.json"), "w") as f:
            json.dump(m, f, sort_keys=True, indent=1)
            f.write("\n")
        self._steps = open(os.path.join(directory, "steps.jsonl"), "w")
        self._n = 0
        self._write_frames(0, env.table_frame, env.hand_frame)

    def _write_frames(self, step, table_frame, hand_frame):
        tname = f"frames/step_{step:04d}_table.png"
        hname = f"frames/step_{step:04d}_hand.png"
        with open(os.path.join(self.dir, tname), "wb") as f:
            f.write(frame_to_png(table_frame))
        with open(os.path.join(self.dir, hname), "wb") as f:
            f.write(frame_to_png(hand_frame))
        return tname, hname

    def record(self, action, result):
        self._n += 1
        obs = result.observation
        tname, hname = self._write_frames(self._n, obs.table_frame, obs.hand_frame)
        rec = {
            "step": self._n,
            "action": self.env.codec.encode(action),
            "action_record": ActionCodec.to_record(action),
            "success": obs.last_action_success,
            "table_png": tname,
            "hand_png": hname,
        }
        self._steps.write(json.dumps(rec, sort_keys=True) + "\n")

    def close(self, extra=None):
        self._steps.close()
        if extra:
            for name, payload in extra.items():
                with open(os.path.join(self.dir, name), "w") as f:
                    json.dump(payload, f, sort_keys=True, indent=1)
                    f.write("\n")


def read_steps(directory):
    out = []
    with open(os.path.join(directory, "steps.jsonl")) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def replay(directory, env_factory):
    """Re-execute a logged episode; verifies frames and success flags.

    Returns the final StepResult.  Raises EpisodeLogError on divergence.
    """
    with open(os.path.join(directory, "meta.json")) as f:
        meta = json.load(f)
    env = env_factory(meta)
    target = load_assembly(os.path.join(directory, meta["target_file"]), env.library)
    env.reset(target)
    _check_frames(directory, 0, env.table_frame, env.hand_frame)
    result = None
    for rec in read_steps(directory):
        action = env.codec.decode(rec["action"])
        result = env.step(action)
        if result.observation.last_action_success != rec["success"]:
            raise EpisodeLogError(
                f"step {rec['step']}: success flag diverged"
            )
        _check_frames(directory, rec["step"],
                      result.observation.table_frame,
                      result.observation.hand_frame)
    return result


def _check_frames(directory, step, table_frame, hand_frame):
    for name, frame in (
        (f"frames/step_{step:04d}_table.png", table_frame),
        (f"frames/step_{step:04d}_hand.png", hand_frame),
    ):
        with open(os.path.join(directory, name), "rb") as f:
            if f.read() != frame_to_png(frame):
                raise EpisodeLogError(f"step {step}: frame {name} diverged")
