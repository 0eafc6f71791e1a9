"""Command line interface: generation, evaluation, demonstrations, replay,
dataset statistics, and the HTTP service."""

import argparse
import json
import os
import sys
from collections import Counter

from .assembly import SymmetryTable
from .datagen import (
    GeneratorError,
    load_manifest,
    make_dataset,
    manifest_files,
)
from .env import EnvConfig
from .ldraw import FlattenError, ParseError, load_assembly
from .metrics import MetricConfig, score_all
from .shapes import ColorTable, LibraryError, load_shape_library
from .symmetry import build_symmetry_table, load_symmetry_table, write_symmetry_table


class CliError(Exception):
    pass


def _load_library(path):
    """Default procedural library, or one extended from a directory holding
    mesh files plus `snaps.txt` (and optionally `colors.txt`)."""
    if path is None:
        return load_shape_library()
    if not os.path.isdir(path):
        raise CliError(f"library path {path!r} is not a directory")
    meshes = sorted(
        os.path.join(path, f) for f in os.listdir(path)
        if f.lower().endswith(".dat")
    )
    sidecar = None
    side_path = os.path.join(path, "snaps.txt")
    if os.path.exists(side_path):
        with open(side_path) as f:
            sidecar = f.read()
    colors = None
    color_path = os.path.join(path, "colors.txt")
    if os.path.exists(color_path):
        with open(color_path) as f:
            colors = ColorTable.parse(f.read())
    return load_shape_library(meshes or None, sidecar, colors)


def _parse_counts(text):
    """`100` means train=100; `train=80,test=20` sets named splits."""
    if "=" not in text:
        return {"train": int(text)}
    out = {}
    for part in text.split(","):
        split, _, n = part.partition("=")
        if not split or not n:
            raise CliError(f"bad count spec {text!r}")
        out[split.strip()] = int(n)
    return out


def _metric_config(args, library):
    if getattr(args, "symtable", None):
        sym = load_symmetry_table(args.symtable)
    else:
        sym = build_symmetry_table(library)
    return MetricConfig(symmetry=sym)


def cmd_gen(args):
    library = _load_library(args.library)
    counts = _parse_counts(args.count)
    manifest = make_dataset(args.out, library, args.name, args.size,
                            counts, args.seed)
    total = sum(len(v) for v in manifest["splits"].values())
    print(f"wrote {total} scenes to {args.out}")
    return 0


def cmd_slice(args):
    library = _load_library(args.library)
    splits = {path: args.split for path in args.files}
    manifest = make_dataset(args.out, library, args.name, args.size,
                            counts={}, seed=args.seed,
                            source_files=args.files, source_splits=splits)
    total = sum(len(v) for v in manifest["splits"].values())
    print(f"wrote {total} slices to {args.out}")
    return 0


def cmd_symtable(args):
    library = _load_library(args.library)
    table = build_symmetry_table(library)
    write_symmetry_table(args.out, table)
    print(f"wrote symmetry table for {len(library.shape_ids())} shapes to {args.out}")
    return 0


def cmd_eval(args):
    library = _load_library(args.library)
    config = _metric_config(args, library)
    predicted = load_assembly(args.predicted, library)
    target = load_assembly(args.target, library)
    report = score_all(predicted, target, library, config)
    if args.format == "records":
        sys.stdout.write(report.records())
    else:
        print(f"F1_b {report.f1_b:.6f}")
        print(f"F1_a {report.f1_a:.6f}")
        print(f"F1_e {report.f1_e:.6f}")
        print(f"AED  {report.aed:.6f}")
    return 0


def cmd_demo(args):
    from .planner import generate_demonstration

    library = _load_library(args.library)
    config = EnvConfig(metrics=_metric_config(args, library))
    manifest = load_manifest(args.manifest)
    root = os.path.dirname(os.path.abspath(args.manifest))
    files = manifest_files(manifest)
    if args.count:
        files = files[:args.count]
    os.makedirs(args.out, exist_ok=True)
    ok = 0
    for fname in files:
        target = load_assembly(os.path.join(root, fname), library)
        out_dir = os.path.join(args.out, os.path.splitext(fname)[0])
        demo = generate_demonstration(target, library, config, out_dir=out_dir,
                                      meta={"scene": fname})
        status = "validated" if demo.validated else \
            f"failed ({demo.meta.get('error', 'imperfect score')})"
        print(f"{fname}: {status}")
        ok += demo.validated
    print(f"validated {ok}/{len(files)} demonstrations in {args.out}")
    return 0 if ok == len(files) else 1


def cmd_replay(args):
    from .env import BreakAndMakeEnv
    from .episodes import EpisodeLogError, replay

    library = _load_library(args.library)
    metrics = _metric_config(args, library)

    def env_factory(meta):
        return BreakAndMakeEnv(library, EnvConfig(
            max_steps=meta["max_steps"],
            table_size=meta["table_size"],
            hand_size=meta["hand_size"],
            metrics=metrics,
        ))

    try:
        result = replay(args.episode, env_factory)
    except EpisodeLogError as e:
        raise CliError(f"replay diverged: {e}")
    if result is not None and result.score is not None:
        s = result.score
        print(f"replay ok: F1_b {s.f1_b:.4f} F1_a {s.f1_a:.4f} "
              f"F1_e {s.f1_e:.4f} AED {s.aed:.4f}")
    else:
        print("replay ok (episode not terminal)")
    return 0


def cmd_stats(args):
    library = _load_library(args.library)
    manifest = load_manifest(args.manifest)
    root = os.path.dirname(os.path.abspath(args.manifest))
    shapes = Counter()
    colors = Counter()
    for fname in manifest_files(manifest):
        asm = load_assembly(os.path.join(root, fname), library)
        for b in asm:
            shapes[b.shape_id] += 1
            colors[b.color_id] += 1
    if args.format == "records":
        for sid, n in shapes.most_common():
            print(f"stat shape {sid} {n}")
        for cid, n in colors.most_common():
            print(f"stat color {cid} {n}")
    else:
        print("shape frequencies:")
        for sid, n in shapes.most_common():
            print(f"  {library.canonical_name(sid):12s} {n}")
        print("color frequencies:")
        for cid, n in colors.most_common():
            print(f"  {library.colors.name(cid):12s} {n}")
    return 0


def cmd_serve(args):
    from .service import serve

    library = _load_library(args.library)
    roots = {}
    for spec in args.data or []:
        name, _, path = spec.partition("=")
        if not name or not path:
            raise CliError(f"bad dataset spec {spec!r}; use name=dir")
        roots[name] = path
    serve(library, bind=args.bind, dataset_roots=roots)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="bricklab")
    p.add_argument("--library", help="directory with mesh files and snaps.txt")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random scene dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--name", default="scenes")
    g.add_argument("--size", type=int, required=True, help="bricks per scene")
    g.add_argument("--count", required=True,
                   help="scene count, or split=count pairs")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("slice", help="slice scene files into sub-assemblies")
    s.add_argument("files", nargs="+")
    s.add_argument("--out", required=True)
    s.add_argument("--name", default="slices")
    s.add_argument("--size", type=int, required=True, help="max bricks per slice")
    s.add_argument("--split", default="train")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_slice)

    t = sub.add_parser("symtable", help="compute the shape symmetry table")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_symtable)

    e = sub.add_parser("eval", help="score a predicted assembly against a target")
    e.add_argument("predicted")
    e.add_argument("target")
    e.add_argument("--format", choices=("text", "records"), default="text")
    e.add_argument("--symtable")
    e.set_defaults(func=cmd_eval)

    d = sub.add_parser("demo", help="generate validated demonstrations")
    d.add_argument("manifest")
    d.add_argument("--out", required=True)
    d.add_argument("--count", type=int, default=0, help="limit scene count")
    d.add_argument("--symtable")
    d.set_defaults(func=cmd_demo)

    r = sub.add_parser("replay", help="re-execute and verify an episode log")
    r.add_argument("episode")
    r.add_argument("--symtable")
    r.set_defaults(func=cmd_replay)

    st = sub.add_parser("stats", help="shape and color frequencies of a dataset")
    st.add_argument("manifest")
    st.add_argument("--format", choices=("text", "records"), default="text")
    st.set_defaults(func=cmd_stats)

    sv = sub.add_parser("serve", help="run the HTTP session service")
    sv.add_argument("--bind", default="127.0.0.1:8000")
    sv.add_argument("--data", action="append",
                    help="dataset root as name=dir (repeatable)")
    sv.set_defaults(func=cmd_serve)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, GeneratorError, LibraryError, ParseError, FlattenError,
            OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
