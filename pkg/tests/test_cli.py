import json
import os

import pytest

from bricklab.cli import main

from conftest import stack


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_scene(path, asm, library):
    from bricklab.ldraw import write_ldraw

    with open(path, "w") as f:
        f.write(write_ldraw(asm, library))


def test_gen_and_stats(tmp_path, capsys):
    out = tmp_path / "ds"
    code, stdout, _ = run(capsys, "gen", "--out", str(out), "--size", "2",
                          "--count", "train=3,test=2", "--seed", "7")
    assert code == 0
    assert "wrote 5 scenes" in stdout
    with open(out / "manifest.json") as f:
        manifest = json.load(f)
    assert len(manifest["splits"]["train"]) == 3

    code, stdout, _ = run(capsys, "stats", str(out / "manifest.json"),
                          "--format", "records")
    assert code == 0
    shape_counts = []
    for line in stdout.splitlines():
        parts = line.split()
        assert parts[0] == "stat" and parts[1] in ("shape", "color")
        if parts[1] == "shape":
            shape_counts.append(int(parts[3]))
    assert sum(shape_counts) == 10  # 5 scenes x 2 bricks
    assert shape_counts == sorted(shape_counts, reverse=True)

    code, stdout, _ = run(capsys, "stats", str(out / "manifest.json"))
    assert code == 0
    assert "shape frequencies:" in stdout


def test_slice(tmp_path, capsys, library):
    from bricklab.datagen import GeneratorConfig, random_assembly

    scene = tmp_path / "big.ldr"
    write_scene(scene, random_assembly(
        GeneratorConfig(brick_count=6, seed=1), library), library)
    out = tmp_path / "sliced"
    code, stdout, _ = run(capsys, "slice", str(scene), "--out", str(out),
                          "--size", "2")
    assert code == 0
    assert "slices" in stdout
    with open(out / "manifest.json") as f:
        manifest = json.load(f)
    assert manifest["splits"]["train"]


def test_symtable(tmp_path, capsys):
    out = tmp_path / "sym.txt"
    code, stdout, _ = run(capsys, "symtable", "--out", str(out))
    assert code == 0
    text = out.read_text()
    assert "3003 Y 90" in text


def test_eval_perfect_and_records(tmp_path, capsys, library):
    scene = tmp_path / "scene.ldr"
    write_scene(scene, stack([3001, 3003], library), library)
    code, stdout, _ = run(capsys, "eval", str(scene), str(scene))
    assert code == 0
    assert "F1_b 1.000000" in stdout
    assert "AED  0.000000" in stdout

    code, stdout, _ = run(capsys, "eval", str(scene), str(scene),
                          "--format", "records")
    assert code == 0
    assert stdout.startswith("score f1_b 1.0\n")

    # A precomputed symmetry table must give the same result.
    sym = tmp_path / "sym.txt"
    run(capsys, "symtable", "--out", str(sym))
    code, stdout, _ = run(capsys, "eval", str(scene), str(scene),
                          "--symtable", str(sym))
    assert code == 0
    assert "F1_a 1.000000" in stdout


def test_demo_and_replay(tmp_path, capsys):
    ds = tmp_path / "ds"
    run(capsys, "gen", "--out", str(ds), "--size", "2", "--count", "2",
        "--seed", "3")
    demos = tmp_path / "demos"
    code, stdout, _ = run(capsys, "demo", str(ds / "manifest.json"),
                          "--out", str(demos))
    assert code == 0
    assert "validated 2/2" in stdout
    episode_dirs = [d for d in sorted(os.listdir(demos))
                    if os.path.isdir(demos / d)]
    assert len(episode_dirs) == 2

    code, stdout, _ = run(capsys, "replay", str(demos / episode_dirs[0]))
    assert code == 0
    assert "replay ok" in stdout
    assert "AED 0.0000" in stdout


def test_replay_divergence_fails(tmp_path, capsys):
    ds = tmp_path / "ds"
    run(capsys, "gen", "--out", str(ds), "--size", "2", "--count", "1",
        "--seed", "3")
    demos = tmp_path / "demos"
    run(capsys, "demo", str(ds / "manifest.json"), "--out", str(demos))
    ep = demos / sorted(os.listdir(demos))[0]
    victim = ep / "frames" / "step_0001_table.png"
    victim.write_bytes(victim.read_bytes()[:-4] + b"zzzz")
    code, _, stderr = run(capsys, "replay", str(ep))
    assert code == 1
    assert "diverged" in stderr


def test_missing_file_exits_nonzero(tmp_path, capsys):
    code, _, stderr = run(capsys, "eval", str(tmp_path / "a.ldr"),
                          str(tmp_path / "b.ldr"))
    assert code == 1
    assert "error:" in stderr

    code, _, stderr = run(capsys, "stats", str(tmp_path / "manifest.json"))
    assert code == 1

    code, _, stderr = run(capsys, "gen", "--out", str(tmp_path / "x"),
                          "--size", "0", "--count", "1")
    assert code == 1


def test_library_flag_rejects_files(tmp_path, capsys):
    f = tmp_path / "not_a_dir"
    f.write_text("x")
    code, _, stderr = run(capsys, "--library", str(f), "symtable",
                          "--out", str(tmp_path / "sym.txt"))
    assert code == 1
    assert "not a directory" in stderr


def test_console_script_entry_point():
    import shutil
    import subprocess

    exe = shutil.which("bricklab")
    assert exe is not None
    out = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "gen" in out.stdout and "serve" in out.stdout
