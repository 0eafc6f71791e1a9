import os

import pytest

from bricklab.datagen import GeneratorConfig, random_assembly
from bricklab.env import BreakAndMakeEnv, EnvConfig
from bricklab.episodes import read_steps, replay
from bricklab.planner import (
    Planner,
    PlanningFailure,
    generate_demonstration,
    run_episode,
)

from conftest import build, stack


def make_env(library, metric_config):
    return BreakAndMakeEnv(library, EnvConfig(metrics=metric_config))


def test_single_brick_episode(library, metric_config):
    env = make_env(library, metric_config)
    planner, order, result = run_episode(env, stack([3005], library))
    assert [o[1] for o in order] == [3005]
    assert result.terminal
    assert result.score.aed == 0.0
    assert result.score.f1_a == 1.0


@pytest.mark.parametrize("seed", range(6))
def test_two_brick_episodes_score_perfect(library, metric_config, seed):
    target = random_assembly(GeneratorConfig(brick_count=2, seed=seed), library)
    env = make_env(library, metric_config)
    _, order, result = run_episode(env, target)
    assert len(order) == 2
    assert result.score.aed == 0.0
    assert result.score.f1_a == 1.0
    assert result.score.f1_b == 1.0


@pytest.mark.parametrize("seed", [0, 3, 7])
def test_four_brick_episodes_score_perfect(library, metric_config, seed):
    target = random_assembly(GeneratorConfig(brick_count=4, seed=seed), library)
    env = make_env(library, metric_config)
    _, _, result = run_episode(env, target)
    assert result.score.aed == 0.0
    assert result.score.f1_a == 1.0


def test_break_removal_order_is_buildable(library, metric_config):
    # A 2x4 carrying two 1x1s: removing the 2x4 first would strand them.
    target = build([
        (3001, 4, [0, 0, 0]),
        (3005, 1, [-30, -24, -10]),
        (3005, 2, [30, -24, 10]),
    ])
    env = make_env(library, metric_config)
    _, order, result = run_episode(env, target)
    # The base is removed last so reversed order starts from it.
    assert order[-1][1] == 3001
    assert result.score.aed == 0.0


def test_planner_records_steps(library, metric_config):
    env = make_env(library, metric_config)
    planner, _, _ = run_episode(env, stack([3003, 3003], library))
    assert planner.steps
    assert len(planner.steps) == env.step_count
    # Every non-camera step carries the reference it aimed at.
    acted = [s for s in planner.steps if s.expected_ref is not None]
    assert acted


def test_generate_demonstration_validated(library, metric_config, tmp_path):
    target = stack([3001, 3003], library)
    d = tmp_path / "demo"
    demo = generate_demonstration(target, library,
                                  EnvConfig(metrics=metric_config),
                                  out_dir=str(d), meta={"seed": 5})
    assert demo.validated
    assert demo.score.aed == 0.0 and demo.score.f1_a == 1.0
    assert os.path.isdir(d)
    steps = read_steps(str(d))
    assert len(steps) == len(demo.steps)
    import json

    with open(d / "demo_meta.json") as f:
        dm = json.load(f)
    assert dm["validated"] is True and dm["noisy"] is True
    with open(d / "meta.json") as f:
        assert json.load(f)["seed"] == 5
    # The log replays cleanly.
    result = replay(str(d), lambda meta: BreakAndMakeEnv(
        library, EnvConfig(metrics=metric_config)))
    assert result.terminal and result.score.aed == 0.0


def test_generate_demonstration_failure_removes_dir(library, metric_config,
                                                    tmp_path, monkeypatch):
    # Force planning to fail mid-episode; the log directory must not remain.
    def boom(self):
        raise PlanningFailure("forced")

    monkeypatch.setattr(Planner, "plan_break", boom)
    d = tmp_path / "demo"
    demo = generate_demonstration(stack([3005], library), library,
                                  EnvConfig(metrics=metric_config),
                                  out_dir=str(d))
    assert not demo.validated
    assert demo.meta["error"] == "forced"
    assert not os.path.exists(d)


def test_generate_demonstration_without_logging(library, metric_config):
    demo = generate_demonstration(stack([3005, 3005], library), library,
                                  EnvConfig(metrics=metric_config))
    assert demo.validated
    assert demo.removal_order
