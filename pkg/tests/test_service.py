import io

import numpy as np
import pytest
from fastapi.testclient import TestClient

from bricklab.datagen import GeneratorConfig, make_dataset, random_assembly
from bricklab.env import (
    ActionCodec,
    BreakAndMakeEnv,
    Disassemble,
    End,
    EnvConfig,
    SwitchPhase,
)
from bricklab.metrics import score_all
from bricklab.service import create_app


@pytest.fixture()
def client(library):
    return TestClient(create_app(library))


def new_session(client, seed=0, size=2, **extra):
    r = client.post("/sessions", json={"seed": seed, "size": size, **extra})
    assert r.status_code == 200, r.text
    return r.json()


def parse_snaps(text):
    cells = {}
    for line in text.splitlines():
        tag, x, y, iid, pt = line.split()
        assert tag == "snap"
        cells[(int(x), int(y))] = (int(iid), int(pt))
    return cells


def test_session_lifecycle_and_score(client, library, metric_config):
    obs = new_session(client, seed=3, size=2)
    sid = obs["session_id"]
    assert obs["phase"] == "break"
    assert obs["action_space"] == 9471152
    assert obs["max_steps"] == 32 + 16 * 2
    # Score before terminal: conflict.
    assert client.get(f"/sessions/{sid}/score").status_code == 409
    # Give up immediately: switch then end.
    for record in ({"type": "SwitchPhase"}, {"type": "End"}):
        r = client.post(f"/sessions/{sid}/action", json={"record": record})
        assert r.status_code == 200, r.text
    final = r.json()
    assert final["terminal"] is True
    score = client.get(f"/sessions/{sid}/score").json()
    assert set(score) == {"f1_b", "f1_e", "f1_a", "aed"}
    # An empty build against a 2-brick target.
    target = random_assembly(GeneratorConfig(brick_count=2, seed=3), library)
    from bricklab.assembly import Assembly

    want = score_all(Assembly(), target, library, metric_config)
    assert score == {"f1_b": want.f1_b, "f1_e": want.f1_e,
                     "f1_a": want.f1_a, "aed": want.aed}
    # Acting on a finished episode: conflict.
    r = client.post(f"/sessions/{sid}/action", json={"action": 0})
    assert r.status_code == 409
    assert client.delete(f"/sessions/{sid}").status_code == 200
    assert client.delete(f"/sessions/{sid}").status_code == 404
    assert client.get(f"/sessions/{sid}/frames/table.png").status_code == 404


def test_frames_are_lossless_png(client, library):
    from PIL import Image

    obs = new_session(client, seed=1, size=2)
    sid = obs["session_id"]
    r = client.get(f"/sessions/{sid}/frames/table.png")
    assert r.status_code == 200
    assert r.headers["content-type"] == "image/png"
    img = np.asarray(Image.open(io.BytesIO(r.content)).convert("RGB"))
    # Compare against a locally rendered copy of the same scene.
    env = BreakAndMakeEnv(library, EnvConfig())
    env.reset(random_assembly(GeneratorConfig(brick_count=2, seed=1), library))
    assert np.array_equal(img, env.table_frame.color)
    assert client.get(f"/sessions/{sid}/frames/floor.png").status_code == 404


def test_snaps_text_format_and_aliases(client, library):
    obs = new_session(client, seed=1, size=2)
    sid = obs["session_id"]
    r = client.get(f"/sessions/{sid}/snaps",
                   params={"workspace": "table", "polarity": "+"})
    assert r.status_code == 200
    assert r.headers["content-type"].startswith("text/plain")
    cells = parse_snaps(r.text)
    assert cells
    env = BreakAndMakeEnv(library, EnvConfig())
    env.reset(random_assembly(GeneratorConfig(brick_count=2, seed=1), library))
    g = env.table_frame.snap("+")
    for (x, y), (iid, pt) in cells.items():
        assert (g[y, x, 0], g[y, x, 1]) == (iid, pt)
    assert len(cells) == int(np.count_nonzero(g[:, :, 0]))
    # Polarity alias and bad values.
    alias = client.get(f"/sessions/{sid}/snaps", params={"polarity": "pos"})
    assert alias.text == r.text
    assert client.get(f"/sessions/{sid}/snaps",
                      params={"polarity": "x"}).status_code == 400
    assert client.get(f"/sessions/{sid}/snaps",
                      params={"workspace": "floor"}).status_code == 400


def test_integer_and_record_actions_agree(client, library):
    codec = ActionCodec(library.shape_ids(), library.colors.ids())
    sids = [new_session(client, seed=4, size=2)["session_id"]
            for _ in range(2)]
    action = codec.encode(SwitchPhase())
    a = client.post(f"/sessions/{sids[0]}/action", json={"action": action})
    b = client.post(f"/sessions/{sids[1]}/action",
                    json={"record": ActionCodec.to_record(SwitchPhase())})
    assert a.json() == b.json()


def test_malformed_action_leaves_state_unchanged(client, library):
    sid = new_session(client, seed=2, size=2)["session_id"]
    before = client.get(f"/sessions/{sid}/frames/table.png").content
    for payload in ({}, {"action": "nope"}, {"action": 10**9},
                    {"record": {"type": "no_such"}}, {"record": 3}):
        r = client.post(f"/sessions/{sid}/action", json=payload)
        assert r.status_code == 400, payload
    r = client.post(f"/sessions/{sid}/action", content=b"not json",
                    headers={"content-type": "application/json"})
    assert r.status_code == 400
    assert client.get(f"/sessions/{sid}/frames/table.png").content == before


def test_interleaved_sessions_match_serial_runs(client, library):
    # Two sessions stepped alternately behave exactly like two serial envs.
    codec = ActionCodec(library.shape_ids(), library.colors.ids())
    seeds = [5, 6]
    sids = [new_session(client, seed=s, size=2)["session_id"] for s in seeds]
    envs = []
    for s in seeds:
        env = BreakAndMakeEnv(library, EnvConfig())
        env.reset(random_assembly(GeneratorConfig(brick_count=2, seed=s),
                                  library))
        envs.append(env)

    def top_cell(env):
        g = env.table_frame.snap("+")
        ys, xs = np.nonzero(g[:, :, 0])
        return int(xs[0]), int(ys[0])

    for _ in range(2):  # two bricks each
        for i in (0, 1):
            x, y = top_cell(envs[i])
            action = codec.encode(Disassemble(x, y, "+"))
            r = client.post(f"/sessions/{sids[i]}/action",
                            json={"action": action})
            local = envs[i].step(Disassemble(x, y, "+"))
            assert r.json()["success"] == local.observation.last_action_success
            png = client.get(f"/sessions/{sids[i]}/frames/table.png").content
            from bricklab.raster import frame_to_png

            assert png == frame_to_png(envs[i].table_frame)
    for i in (0, 1):
        for a in (SwitchPhase(), End()):
            r = client.post(f"/sessions/{sids[i]}/action",
                            json={"action": codec.encode(a)})
            local = envs[i].step(a)
        assert r.json()["score"] == {
            "f1_b": local.score.f1_b, "f1_e": local.score.f1_e,
            "f1_a": local.score.f1_a, "aed": local.score.aed}


def test_create_session_validation(client):
    for payload in ({}, {"seed": 1}, {"size": 2}, {"seed": 1, "size": 0},
                    {"seed": 1, "size": 2, "config": {"bogus": 1}},
                    {"seed": 1, "size": 2, "config": {"max_steps": "x"}},
                    {"dataset": "none"}, [1, 2]):
        r = client.post("/sessions", json=payload)
        assert r.status_code == 400, payload
    r = client.post("/sessions", json={"dataset": "missing", "scene": "a.ldr"})
    assert r.status_code == 404


def test_dataset_sessions(library, tmp_path):
    root = tmp_path / "ds"
    manifest = make_dataset(str(root), library, "toy", 2, {"train": 2}, seed=8)
    scene = manifest["splits"]["train"][0]["file"]
    client = TestClient(create_app(library, dataset_roots={"toy": str(root)}))
    r = client.post("/sessions", json={"dataset": "toy", "scene": scene})
    assert r.status_code == 200
    assert r.json()["phase"] == "break"
    r = client.post("/sessions", json={"dataset": "toy", "scene": "nope.ldr"})
    assert r.status_code == 404


def test_config_overrides(client):
    obs = new_session(client, seed=0, size=2,
                      config={"max_steps": 10, "table_size": 128,
                              "hand_size": 64})
    assert obs["max_steps"] == 10
    assert obs["table_size"] == 128 and obs["hand_size"] == 64
    sid = obs["session_id"]
    r = client.get(f"/sessions/{sid}/frames/table.png")
    from PIL import Image

    img = Image.open(io.BytesIO(r.content))
    assert img.size == (128, 128)


def test_idle_sessions_expire(library):
    client = TestClient(create_app(library, idle_timeout=0.0))
    sid = new_session(client, seed=0, size=2)["session_id"]
    import time

    time.sleep(0.01)
    assert client.get(f"/sessions/{sid}/frames/table.png").status_code == 404


def test_shape_and_color_listings(client):
    shapes = client.get("/shapes").json()
    assert [s["id"] for s in shapes] == [3001, 3003, 3004, 3005, 3020, 3022]
    assert shapes[0]["name"].endswith(".dat")
    colors = client.get("/colors").json()
    byid = {c["id"]: c for c in colors}
    assert byid[4]["rgb"] == [201, 26, 9]
    assert byid[15]["name"].lower() == "white"
