"""Combinatorial triangulations and the vertex-set calculus.

A :class:`Triangulation` is a finite simplicial complex with oriented faces.
Finite patches stand in for infinite triangulations of the plane: vertices on
edges that have only one incident face form the *rim*, and every rim vertex is
treated as adjacent to vertices beyond the truncation.  A :class:`VertexSet`
may be *cofinite*, meaning it also contains all of those unseen vertices; the
complement of a finite set is cofinite and vice versa.

Face-local conventions: for a face ``(a, b, c)`` corner ``k`` is the vertex
``face[k]`` and local edge ``k`` is the edge opposite that corner, i.e.
``(face[k+1], face[k+2])`` taken cyclically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
import scipy.sparse as sp

from .errors import MeshError

__all__ = [
    "Triangulation",
    "VertexSet",
    "OneRing",
    "boundary",
    "interior",
    "closure",
    "edge_set_E",
    "one_ring",
    "generated_subcomplex",
]


def _csr_groups(keys: np.ndarray, values: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(keys, kind="stable")
    counts = np.bincount(keys, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, values[order]


class Triangulation:
    """Finite oriented simplicial 2-complex on vertices ``0..n-1``.

    Parameters
    ----------
    n_vertices:
        Number of vertices.  Vertices in no edge are allowed.
    faces:
        ``(F, 3)`` integer array of counterclockwise vertex triples.
    edges:
        Optional extra edges, e.g. for face-less graphs.  Edges implied by
        faces may be repeated here; repeats within this list are rejected.

    Construction validates simpliciality, edge multiplicity and orientation
    consistency and raises :class:`MeshError` instead of repairing input.
    Instances are treated as immutable.
    """

    def __init__(self, n_vertices: int, faces, edges=None):
        n = int(n_vertices)
        if n < 0:
            raise MeshError("vertex count must be nonnegative")
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        self.n = n
        self.faces = faces
        self.faces.setflags(write=False)
        if faces.size and (faces.min() < 0 or faces.max() >= n):
            raise MeshError("face vertex index out of range")
        bad = (faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])
        if bad.any():
            raise MeshError(f"face {int(np.flatnonzero(bad)[0])} repeats a vertex")
        if len(faces):
            tri_keys = np.sort(faces, axis=1)
            _, first, counts = np.unique(tri_keys, axis=0, return_index=True, return_counts=True)
            if (counts > 1).any():
                raise MeshError(f"face {int(first[counts > 1][0])} duplicates another face")

        # half-edges: local edge k of face f runs faces[f, k+1] -> faces[f, k+2]
        F = len(faces)
        tails = np.concatenate([faces[:, 1], faces[:, 2], faces[:, 0]])
        heads = np.concatenate([faces[:, 2], faces[:, 0], faces[:, 1]])
        he_face = np.tile(np.arange(F, dtype=np.int64), 3)
        he_local = np.repeat(np.arange(3, dtype=np.int64), F)

        lo = np.minimum(tails, heads)
        hi = np.maximum(tails, heads)
        keys = lo * n + hi
        extra_keys = np.empty(0, dtype=np.int64)
        if edges is not None:
            extra = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
            if extra.size and (extra.min() < 0 or extra.max() >= n):
                raise MeshError("edge vertex index out of range")
            if (extra[:, 0] == extra[:, 1]).any():
                raise MeshError("edge joins a vertex to itself")
            extra_keys = np.minimum(extra[:, 0], extra[:, 1]) * n + np.maximum(extra[:, 0], extra[:, 1])
            if len(np.unique(extra_keys)) != len(extra_keys):
                raise MeshError("duplicate edge in edge list")

        all_keys, inverse = np.unique(np.concatenate([keys, extra_keys]), return_inverse=True)
        he_edge = inverse[: len(keys)]
        self.edges = np.stack([all_keys // n, all_keys % n], axis=1) if n else np.zeros((0, 2), np.int64)
        self.edges.setflags(write=False)
        self._edge_keys = all_keys
        E = len(all_keys)

        face_count = np.bincount(he_edge, minlength=E)
        if (face_count > 2).any():
            e = int(np.flatnonzero(face_count > 2)[0])
            raise MeshError(f"edge {tuple(int(v) for v in self.edges[e])} lies in more than two faces")
        forward = tails < heads
        edge_faces = np.full((E, 2), -1, dtype=np.int64)
        for side, sel in ((0, forward), (1, ~forward)):
            ids = he_edge[sel]
            if len(np.unique(ids)) != len(ids):
                dup = ids[np.flatnonzero(np.bincount(ids, minlength=E) > 1)[0]]
                raise MeshError(
                    f"inconsistent face orientation along edge {tuple(int(v) for v in self.edges[dup])}"
                )
            edge_faces[ids, side] = he_face[sel]
        self.edge_faces = edge_faces
        self.edge_face_count = face_count
        face_edges = np.empty((F, 3), dtype=np.int64)
        face_edges[he_face, he_local] = he_edge
        self.face_edges = face_edges

        self.boundary_edges = face_count == 1
        rim = np.zeros(n, dtype=bool)
        rim[self.edges[self.boundary_edges].ravel()] = True
        self.rim = rim

        a, b = self.edges[:, 0], self.edges[:, 1]
        self._nbr_ptr, self._nbr = _csr_groups(
            np.concatenate([a, b]), np.concatenate([b, a]), n
        )
        self._vf_ptr, self._vf = _csr_groups(
            faces.ravel(), np.repeat(np.arange(F, dtype=np.int64), 3), n
        )

    # -- basic queries -------------------------------------------------------
    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def neighbors(self, i: int) -> np.ndarray:
        return self._nbr[self._nbr_ptr[i] : self._nbr_ptr[i + 1]]

    def vertex_faces(self, i: int) -> np.ndarray:
        return self._vf[self._vf_ptr[i] : self._vf_ptr[i + 1]]

    def degree(self) -> np.ndarray:
        return np.diff(self._nbr_ptr)

    def edge_id(self, i, j):
        """Edge index of ``ij`` (scalars or arrays); ``-1`` where absent."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        keys = np.minimum(i, j) * self.n + np.maximum(i, j)
        pos = np.searchsorted(self._edge_keys, keys)
        pos_c = np.minimum(pos, max(len(self._edge_keys) - 1, 0))
        found = (pos < len(self._edge_keys)) & (self._edge_keys[pos_c] == keys) if len(self._edge_keys) else np.zeros(keys.shape, bool)
        out = np.where(found, pos_c, -1)
        return int(out) if out.ndim == 0 else out

    def interior_vertices(self) -> np.ndarray:
        """Vertices with a closed cycle of faces (not on the rim, in some face)."""
        has_face = np.diff(self._vf_ptr) > 0
        return np.flatnonzero(has_face & ~self.rim)

    def adjacency(self, weights=None) -> sp.csr_matrix:
        w = np.ones(self.n_edges) if weights is None else np.asarray(weights, float)
        a, b = self.edges[:, 0], self.edges[:, 1]
        return sp.csr_matrix(
            (np.concatenate([w, w]), (np.concatenate([a, b]), np.concatenate([b, a]))),
            shape=(self.n, self.n),
        )

    def all_vertices(self) -> "VertexSet":
        return VertexSet(self, np.ones(self.n, dtype=bool))

    def vertex_set(self, ids: Iterable[int] = (), cofinite: bool = False) -> "VertexSet":
        mask = np.zeros(self.n, dtype=bool)
        mask[np.asarray(list(ids) if not isinstance(ids, np.ndarray) else ids, dtype=np.int64)] = True
        return VertexSet(self, mask, cofinite)

    def one_ring(self, i: int) -> "OneRing":
        return one_ring(self, i)

    def __repr__(self) -> str:
        return f"Triangulation(n={self.n}, edges={self.n_edges}, faces={self.n_faces})"


@dataclass(frozen=True)
class OneRing:
    """1-ring of an interior vertex.

    ``neighbors[k]``, ``neighbors[k+1]`` and ``center`` span ``faces[k]``;
    neighbors run counterclockwise.
    """

    center: int
    neighbors: np.ndarray
    faces: np.ndarray
    complex: Triangulation


def one_ring(tri: Triangulation, i: int) -> OneRing:
    """Ordered neighbor cycle and generated subcomplex of vertex ``i``.

    Raises :class:`MeshError` ("open link") if ``i`` is on the rim or in no face.
    """
    i = int(i)
    fids = tri.vertex_faces(i)
    if tri.rim[i] or len(fids) == 0:
        raise MeshError(f"vertex {i} has an open link")
    nxt: dict[int, tuple[int, int]] = {}
    for f in fids:
        face = tri.faces[f]
        k = int(np.flatnonzero(face == i)[0])
        a, b = int(face[(k + 1) % 3]), int(face[(k + 2) % 3])
        if a in nxt:
            raise MeshError(f"vertex {i} has a non-manifold link")
        nxt[a] = (b, int(f))
    start = min(nxt)
    order, ring_faces = [start], []
    cur = start
    while True:
        b, f = nxt[cur]
        ring_faces.append(f)
        if b == start:
            break
        if b not in nxt or len(order) > len(nxt):
            raise MeshError(f"vertex {i} has an open link")
        order.append(b)
        cur = b
    if len(order) != len(nxt):
        raise MeshError(f"vertex {i} has a disconnected link")
    nbrs = np.array(order, dtype=np.int64)
    sub = generated_subcomplex(tri.vertex_set(np.concatenate([[i], nbrs])))
    return OneRing(i, nbrs, np.array(ring_faces, dtype=np.int64), sub)


class VertexSet:
    """Subset of a triangulation's vertices.

    ``cofinite=True`` marks a set that also contains every vertex beyond the
    truncation (for example the complement of a finite set); rim vertices of
    a finite set therefore count as boundary vertices.
    """

    __slots__ = ("tri", "mask", "cofinite")

    def __init__(self, tri: Triangulation, mask, cofinite: bool = False):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (tri.n,):
            raise MeshError("vertex mask has wrong length")
        self.tri = tri
        self.mask = mask
        self.cofinite = bool(cofinite)

    # set algebra
    def _check(self, other: "VertexSet") -> None:
        if other.tri is not self.tri:
            raise MeshError("vertex sets live on different triangulations")

    def complement(self) -> "VertexSet":
        return VertexSet(self.tri, ~self.mask, not self.cofinite)

    def __or__(self, other: "VertexSet") -> "VertexSet":
        self._check(other)
        return VertexSet(self.tri, self.mask | other.mask, self.cofinite or other.cofinite)

    def __and__(self, other: "VertexSet") -> "VertexSet":
        self._check(other)
        return VertexSet(self.tri, self.mask & other.mask, self.cofinite and other.cofinite)

    def __sub__(self, other: "VertexSet") -> "VertexSet":
        return self & other.complement()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, VertexSet)
            and other.tri is self.tri
            and self.cofinite == other.cofinite
            and bool(np.array_equal(self.mask, other.mask))
        )

    def __hash__(self):
        return hash((id(self.tri), self.cofinite, self.mask.tobytes()))

    def __le__(self, other: "VertexSet") -> bool:
        self._check(other)
        return bool(not (self.mask & ~other.mask).any()) and (other.cofinite or not self.cofinite)

    def __contains__(self, i) -> bool:
        return bool(self.mask[int(i)])

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __iter__(self) -> Iterator[int]:
        return iter(self.ids().tolist())

    def ids(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def is_empty(self) -> bool:
        return not self.cofinite and not self.mask.any()

    def __repr__(self) -> str:
        tag = ", cofinite" if self.cofinite else ""
        return f"VertexSet({len(self)} of {self.tri.n}{tag})"

    # calculus
    def boundary(self) -> "VertexSet":
        return boundary(self)

    def interior(self) -> "VertexSet":
        return interior(self)

    def closure(self) -> "VertexSet":
        return closure(self)

    def edge_set_E(self) -> np.ndarray:
        return edge_set_E(self)

    def generated_subcomplex(self) -> Triangulation:
        return generated_subcomplex(self)


def boundary(s: VertexSet) -> VertexSet:
    """Vertices of ``s`` with a neighbor outside ``s``.

    Rim vertices of a finite set count, since their unseen neighbors lie
    outside it.
    """
    tri, m = s.tri, s.mask
    a, b = tri.edges[:, 0], tri.edges[:, 1]
    out = np.zeros(tri.n, dtype=bool)
    out[a[m[a] & ~m[b]]] = True
    out[b[m[b] & ~m[a]]] = True
    if not s.cofinite:
        out |= m & tri.rim
    return VertexSet(tri, out, False)


def interior(s: VertexSet) -> VertexSet:
    return VertexSet(s.tri, s.mask & ~boundary(s).mask, s.cofinite)


def closure(s: VertexSet) -> VertexSet:
    return interior(s.complement()).complement()


def edge_set_E(s: VertexSet) -> np.ndarray:
    """Ids of edges with at least one endpoint in ``interior(s)``.

    This generally differs from the edge set of the generated subcomplex.
    """
    inner = interior(s).mask
    e = s.tri.edges
    return np.flatnonzero(inner[e[:, 0]] | inner[e[:, 1]])


def generated_subcomplex(s: VertexSet) -> Triangulation:
    """Faces and edges with all vertices in ``s``, on the same vertex indices."""
    tri, m = s.tri, s.mask
    fsel = m[tri.faces].all(axis=1) if tri.n_faces else np.zeros(0, bool)
    esel = m[tri.edges].all(axis=1) if tri.n_edges else np.zeros(0, bool)
    return Triangulation(tri.n, tri.faces[fsel], tri.edges[esel])
