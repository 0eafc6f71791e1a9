import json
import os

import pytest

from bricklab.env import (
    BreakAndMakeEnv,
    Disassemble,
    End,
    EnvConfig,
    SwitchPhase,
)
from bricklab.episodes import (
    EpisodeLogError,
    EpisodeWriter,
    read_steps,
    replay,
)

from conftest import stack

import numpy as np


def snap_cell(frame, polarity):
    g = frame.snap(polarity)
    ys, xs = np.nonzero(g[:, :, 0])
    return int(xs[0]), int(ys[0])


def record_small_episode(library, out_dir, extra_meta=None):
    """Break a two-brick stack, switch phase, end; log everything."""
    env = BreakAndMakeEnv(library, EnvConfig())
    target = stack([3003, 3003], library)
    env.reset(target)
    writer = EpisodeWriter(out_dir, env, target, meta=extra_meta)

    def act(a):
        result = env.step(a)
        writer.record(a, result)
        return result

    for _ in range(2):
        x, y = snap_cell(env.table_frame, "+")
        act(Disassemble(x, y, "+"))
    act(SwitchPhase())
    result = act(End())
    writer.close()
    return env, result


def test_layout_and_contents(library, tmp_path):
    d = tmp_path / "ep"
    record_small_episode(library, str(d), extra_meta={"seed": 7})
    assert sorted(os.listdir(d)) == ["frames", "meta.json", "steps.jsonl",
                                     "target.ldr"]
    with open(d / "meta.json") as f:
        meta = json.load(f)
    assert meta["seed"] == 7
    assert meta["target_file"] == "target.ldr"
    assert meta["table_size"] == 256 and meta["hand_size"] == 96
    assert meta["max_steps"] == 32 + 16 * 2
    steps = read_steps(str(d))
    assert [r["step"] for r in steps] == [1, 2, 3, 4]
    for r in steps:
        assert r["success"] is True
        assert os.path.exists(d / r["table_png"])
        assert os.path.exists(d / r["hand_png"])
        assert isinstance(r["action"], int)
        assert "type" in r["action_record"]
    # Step 0 frames (the reset observation) exist too.
    assert os.path.exists(d / "frames" / "step_0000_table.png")
    assert os.path.exists(d / "frames" / "step_0000_hand.png")


def test_no_timestamps_and_deterministic_bytes(library, tmp_path):
    contents = []
    for name in ("a", "b"):
        d = tmp_path / name
        record_small_episode(library, str(d))
        blob = {}
        for root, _, files in os.walk(d):
            for fn in files:
                p = os.path.join(root, fn)
                with open(p, "rb") as f:
                    blob[os.path.relpath(p, d)] = f.read()
        contents.append(blob)
    assert contents[0] == contents[1]


def test_replay_reproduces_episode(library, tmp_path):
    d = tmp_path / "ep"
    _, result = record_small_episode(library, str(d))
    replayed = replay(str(d), lambda meta: BreakAndMakeEnv(
        library, EnvConfig(max_steps=meta["max_steps"],
                           table_size=meta["table_size"],
                           hand_size=meta["hand_size"])))
    assert replayed.terminal
    assert replayed.score is not None
    assert replayed.score.aed == result.score.aed


def test_replay_detects_frame_divergence(library, tmp_path):
    d = tmp_path / "ep"
    record_small_episode(library, str(d))
    # Corrupt one logged frame.
    victim = d / "frames" / "step_0001_table.png"
    with open(victim, "rb") as f:
        data = f.read()
    with open(victim, "wb") as f:
        f.write(data[:-8] + b"x" * 8)
    with pytest.raises(EpisodeLogError, match="diverged"):
        replay(str(d), lambda meta: BreakAndMakeEnv(library, EnvConfig()))


def test_replay_detects_success_divergence(library, tmp_path):
    d = tmp_path / "ep"
    record_small_episode(library, str(d))
    steps_path = d / "steps.jsonl"
    recs = read_steps(str(d))
    recs[0]["success"] = False
    with open(steps_path, "w") as f:
        for r in recs:
            f.write(json.dumps(r, sort_keys=True) + "\n")
    with pytest.raises(EpisodeLogError, match="success flag"):
        replay(str(d), lambda meta: BreakAndMakeEnv(library, EnvConfig()))


def test_close_writes_extra_files(library, tmp_path):
    d = tmp_path / "ep"
    env = BreakAndMakeEnv(library, EnvConfig())
    target = stack([3005], library)
    env.reset(target)
    writer = EpisodeWriter(str(d), env, target)
    writer.close(extra={"demo_meta.json": {"validated": True}})
    with open(d / "demo_meta.json") as f:
        assert json.load(f) == {"validated": True}
