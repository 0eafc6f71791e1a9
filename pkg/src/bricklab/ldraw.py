"""LDraw-dialect assembly files: parsing, flattening, writing.

Supported line types: 0 (comments, `0 FILE <name>` sub-model delimiters) and
1 (sub-file references).  Line types 2-5 are preserved verbatim but ignored
when flattening; real community files embed geometry this way.
"""

from dataclasses import dataclass, field

import numpy as np

from .assembly import Assembly
from .geometry import orthonormalize, snap_rotation, snap_translation


class ParseError(Exception):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FlattenError(Exception):
    pass


@dataclass
class Reference:
    color_id: int
    rotation: np.ndarray  # 3x3 row-major [a b c; d e f; g h i]
    translation: np.ndarray  # (x, y, z)
    target: str
    line: int = 0


@dataclass
class SubModel:
    name: str
    references: list = field(default_factory=list)
    comments: list = field(default_factory=list)  # (line, text) non-FILE 0-lines
    raw_geometry: list = field(default_factory=list)  # verbatim type 2-5 lines


@dataclass
class LdrawDocument:
    models: list = field(default_factory=list)  # ordered SubModels

    def model_names(self):
        return [m.name for m in self.models]

    def model(self, name):
        for m in self.models:
            if m.name.lower() == name.lower():
                return m
        raise KeyError(name)

    @property
    def main(self):
        return self.models[0]


def _parse_float(tok, line):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"unreadable number {tok!r}", line) from None


def parse_ldraw(text):
    """Parse an LDraw/MPD document.

    A file with no `0 FILE` lines yields a single anonymous model.  Raises
    ParseError (with line number) on malformed references, duplicate
    sub-model names, or sub-model reference cycles.
    """
    if hasattr(text, "read"):
        text = text.read()
    doc = LdrawDocument()
    current = None
    seen = set()

    def ensure_model():
        nonlocal current
        if current is None:
            current = SubModel(name="")
            doc.models.append(current)
        return current

    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        lt = parts[0]
        if lt == "0":
            if len(parts) >= 3 and parts[1].upper() == "FILE":
                name = " ".join(parts[2:])
                key = name.lower()
                if key in seen:
                    raise ParseError(f"duplicate sub-model name {name!r}", ln)
                seen.add(key)
                current = SubModel(name=name)
                doc.models.append(current)
            else:
                ensure_model().comments.append((ln, line))
        elif lt == "1":
            if len(parts) < 15:
                raise ParseError(
                    f"reference line has {len(parts) - 1} fields, expected >= 14",
                    ln,
                )
            m = ensure_model()
            try:
                color = int(parts[1])
            except ValueError:
                raise ParseError(f"unreadable color id {parts[1]!r}", ln) from None
            nums = [_parse_float(t, ln) for t in parts[2:14]]
            x, y, z = nums[0:3]
            rot = np.array(nums[3:12]).reshape(3, 3)
            target = " ".join(parts[14:])
            m.references.append(
                Reference(color, rot, np.array([x, y, z]), target, ln)
            )
        elif lt in ("2", "3", "4", "5"):
            ensure_model().raw_geometry.append((ln, line))
        else:
            # Unknown line types are treated as comments, never fatal.
            ensure_model().comments.append((ln, line))
    if not doc.models:
        doc.models.append(SubModel(name=""))
    _check_cycles(doc)
    return doc


def _check_cycles(doc):
    names = {m.name.lower(): m for m in doc.models if m.name}
    WHITE, GRAY, BLACK = 0, 1, 2
    state = {k: WHITE for k in names}

    def visit(key, stack):
        state[key] = GRAY
        for ref in names[key].references:
            tk = ref.target.lower()
            if tk in names:
                if state[tk] == GRAY:
                    raise ParseError(
                        f"sub-model reference cycle through {ref.target!r}",
                        ref.line,
                    )
                if state[tk] == WHITE:
                    visit(tk, stack + [tk])
        state[key] = BLACK

    for k in names:
        if state[k] == WHITE:
            visit(k, [k])


def flatten(doc, library):
    """Depth-first expansion of the document's main model into an Assembly.

    Sub-model references recurse with composed transforms; leaf references
    resolve through the library alias table.  Rotation parts are polar
    re-orthonormalized; instances numbered in traversal order from 1.
    """
    asm = Assembly()
    submodels = {m.name.lower(): m for m in doc.models if m.name}

    def expand(model, R, t):
        for ref in model.references:
            det = np.linalg.det(ref.rotation)
            if abs(det) < 1e-12:
                raise FlattenError(
                    f"line {ref.line}: non-invertible transform (det={det})"
                )
            R2 = R @ ref.rotation
            t2 = R @ ref.translation + t
            key = ref.target.lower()
            if key in submodels:
                expand(submodels[key], R2, t2)
                continue
            sid = library.resolve(ref.target)
            if sid is None:
                raise FlattenError(
                    f"line {ref.line}: unresolvable reference {ref.target!r}"
                )
            # Keep already-orthonormal matrices bit-exact; only project
            # genuinely skewed ones.
            if np.max(np.abs(R2.T @ R2 - np.eye(3))) < 1e-9 and np.linalg.det(R2) > 0:
                Ro, corr = R2, 0.0
            else:
                Ro, corr = orthonormalize(R2)
            inst = asm.add(
                sid, ref.color_id,
                snap_rotation(Ro), snap_translation(t2),
            )
            inst.orthonormalized = corr > 1e-3
        return

    expand(doc.main, np.eye(3), np.zeros(3))
    return asm


def _fmt(x):
    """Shortest round-trip decimal; integers without trailing '.0'."""
    f = float(x)
    if f == int(f) and abs(f) < 1e16:
        return str(int(f))
    return repr(f)


def write_ldraw(asm, library, name=None):
    """One reference line per instance in id order; parse+flatten of the
    output reproduces the assembly bit-exactly."""
    lines = ["0 bricklab assembly"]
    if name:
        lines.insert(0, f"0 FILE {name}")
    for iid in sorted(asm.instances):
        b = asm.instances[iid]
        R = b.rotation
        t = b.translation
        fields = (
            [str(b.color_id)]
            + [_fmt(v) for v in t]
            + [_fmt(v) for v in R.reshape(-1)]
            + [library.canonical_name(b.shape_id)]
        )
        lines.append("1 " + " ".join(fields))
    return "\n".join(lines) + "\n"


def load_assembly(path, library):
    with open(path) as f:
        return flatten(parse_ldraw(f.read()), library)


def save_assembly(path, asm, library):
    with open(path, "w") as f:
        f.write(write_ldraw(asm, library))
