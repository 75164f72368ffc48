"""Text file formats: meshes, factor files, networks, EL problems and JSON lines.

Mesh files hold ``v <x> <y>`` lines (vertex ids are implicit, starting at 0)
and ``f <i> <j> <k>`` lines with counterclockwise faces.  ``#`` starts a
comment and blank lines are ignored.  Writers use 17 significant digits, so
reading and rewriting a canonically written file reproduces it exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import MeshError
from .geometry import Embedding
from .mesh import Triangulation
from .network import Network

__all__ = [
    "format_float",
    "parse_mesh",
    "format_mesh",
    "read_mesh",
    "write_mesh",
    "parse_factor",
    "read_factor",
    "write_factor",
    "read_network",
    "write_network",
    "read_problem",
    "append_jsonl",
]


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line.split()


def _real(tok: str, no: int) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise MeshError(f"line {no}: {tok!r} is not a number") from None
    if not math.isfinite(x):
        raise MeshError(f"line {no}: non-finite value {tok!r}")
    return x


def _index(tok: str, no: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise MeshError(f"line {no}: {tok!r} is not an integer index") from None


def parse_mesh(text: str) -> Embedding:
    """Parse mesh text into an :class:`Embedding`."""
    pts, faces = [], []
    for no, tok in _lines(text):
        if tok[0] == "v":
            if len(tok) != 3:
                raise MeshError(f"line {no}: expected 'v x y'")
            pts.append(complex(_real(tok[1], no), _real(tok[2], no)))
        elif tok[0] == "f":
            if len(tok) != 4:
                raise MeshError(f"line {no}: expected 'f i j k'")
            faces.append([_index(t, no) for t in tok[1:]])
        else:
            raise MeshError(f"line {no}: unknown record {tok[0]!r}")
    return Embedding(Triangulation(len(pts), np.array(faces, dtype=np.int64).reshape(-1, 3)), np.array(pts, dtype=complex))


def format_mesh(emb: Embedding) -> str:
    out = [f"v {format_float(z.real)} {format_float(z.imag)}" for z in emb.z]
    out += [f"f {i} {j} {k}" for i, j, k in emb.tri.faces.tolist()]
    return "\n".join(out) + "\n"


def read_mesh(path) -> Embedding:
    return parse_mesh(Path(path).read_text(encoding="utf-8"))


def write_mesh(emb: Embedding, path) -> None:
    Path(path).write_text(format_mesh(emb), encoding="utf-8")


def parse_factor(text: str, n: int | None = None) -> np.ndarray:
    """One real per line; the count must equal ``n`` when given."""
    vals = []
    for no, tok in _lines(text):
        if len(tok) != 1:
            raise MeshError(f"line {no}: expected a single number")
        vals.append(_real(tok[0], no))
    if n is not None and len(vals) != n:
        raise MeshError(f"factor file has {len(vals)} values, mesh has {n} vertices")
    return np.array(vals, dtype=float)


def read_factor(path, n: int | None = None) -> np.ndarray:
    return parse_factor(Path(path).read_text(encoding="utf-8"), n)


def write_factor(u, path) -> None:
    Path(path).write_text("".join(format_float(x) + "\n" for x in np.asarray(u, float)), encoding="utf-8")


def read_network(path) -> Network:
    """Network file with lines ``e <i> <j> <conductance>``; vertices are ``0..max index``."""
    edges, cond = [], []
    for no, tok in _lines(Path(path).read_text(encoding="utf-8")):
        if tok[0] != "e" or len(tok) != 4:
            raise MeshError(f"line {no}: expected 'e i j conductance'")
        edges.append((_index(tok[1], no), _index(tok[2], no)))
        cond.append(_real(tok[3], no))
    if not edges:
        raise MeshError("network file has no edges")
    e = np.array(edges, dtype=np.int64)
    if e.min() < 0:
        raise MeshError("negative vertex index")
    return Network.from_edges(int(e.max()) + 1, e, conductance=cond)


def write_network(net: Network, path) -> None:
    lines = [f"e {i} {j} {format_float(c)}" for (i, j), c in zip(net.tri.edges.tolist(), net.conductance)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_problem(path) -> dict:
    """EL problem JSON ``{"v1": [...], "v2": [...]}`` (optional ``"direct_edges"``)."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MeshError(f"problem file is not valid JSON: {exc}") from None
    if not isinstance(data, dict) or "v1" not in data or "v2" not in data:
        raise MeshError("problem file needs keys 'v1' and 'v2'")
    for key in ("v1", "v2"):
        if not isinstance(data[key], list) or not all(isinstance(v, int) for v in data[key]):
            raise MeshError(f"'{key}' must be a list of vertex indices")
    return {"v1": data["v1"], "v2": data["v2"], "direct_edges": bool(data.get("direct_edges", False))}


def append_jsonl(record: dict, path) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record) + "\n")
