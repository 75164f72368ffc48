"""Embeddings, PL metrics, inner angles and the Delaunay/acuteness predicates."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import MeshError, NonMetricError, PreconditionError
from .mesh import Triangulation

__all__ = [
    "Embedding",
    "PLMetric",
    "Classification",
    "Circumdisk",
    "CoveringConstants",
    "induced_metric",
    "face_angles",
    "inner_angle",
    "classify",
    "circumdisk",
    "incircle_distance",
    "delaunay_circumdisk_form",
    "covering_constants",
    "develop",
    "segment_distance",
]

DELAUNAY_TOL = 1e-9


def _signed_area2(a, b, c):
    """Twice the signed area of triangles ``abc`` (complex inputs)."""
    u, v = b - a, c - a
    return u.real * v.imag - u.imag * v.real


class Embedding:
    """Vertex positions (complex numbers) of a geodesic embedding.

    Every face must be positively oriented with nonzero area.
    """

    def __init__(self, tri: Triangulation, z, check: bool = True):
        z = np.asarray(z)
        if z.ndim == 2 and z.shape[1] == 2:
            z = z[:, 0] + 1j * z[:, 1]
        z = z.astype(complex)
        if z.shape != (tri.n,):
            raise MeshError(f"expected {tri.n} positions, got {z.shape}")
        if not np.isfinite(z).all():
            raise MeshError("non-finite vertex position")
        self.tri = tri
        self.z = z
        if check and tri.n_faces:
            area = self.signed_areas()
            scale = np.abs(z[tri.faces] - z[tri.faces[:, [1, 2, 0]]]).max(axis=1) ** 2
            bad = area <= 1e-14 * scale
            if bad.any():
                f = int(np.flatnonzero(bad)[0])
                raise MeshError(f"face {f} is degenerate or negatively oriented")

    def signed_areas(self) -> np.ndarray:
        f = self.tri.faces
        return 0.5 * _signed_area2(self.z[f[:, 0]], self.z[f[:, 1]], self.z[f[:, 2]])

    def metric(self) -> "PLMetric":
        return induced_metric(self)

    def angle_sums(self) -> np.ndarray:
        """Sum of inner angles at every vertex (0 where a vertex has no face)."""
        ang = face_angles(self.metric().face_lengths())
        return np.bincount(self.tri.faces.ravel(), weights=ang.ravel(), minlength=self.tri.n)

    def local_injectivity_defect(self) -> float:
        """Largest ``|angle sum - 2*pi|`` over interior vertices (0 if none)."""
        inner = self.tri.interior_vertices()
        if len(inner) == 0:
            return 0.0
        return float(np.abs(self.angle_sums()[inner] - 2 * np.pi).max())

    def transformed(self, fn) -> "Embedding":
        return Embedding(self.tri, fn(self.z))


class PLMetric:
    """Positive edge lengths on a triangulation."""

    def __init__(self, tri: Triangulation, lengths):
        lengths = np.asarray(lengths, dtype=float)
        if lengths.shape != (tri.n_edges,):
            raise MeshError(f"expected {tri.n_edges} edge lengths, got {lengths.shape}")
        if not (np.isfinite(lengths).all() and (lengths > 0).all()):
            raise MeshError("edge lengths must be positive and finite")
        self.tri = tri
        self.lengths = lengths

    def face_lengths(self) -> np.ndarray:
        """``(F, 3)`` lengths; column ``k`` is the edge opposite corner ``k``."""
        return self.lengths[self.tri.face_edges]

    def violations(self, faces=None) -> np.ndarray:
        """Faces on which the strict triangle inequality fails."""
        fl = self.face_lengths() if faces is None else self.lengths[self.tri.face_edges[faces]]
        a, b, c = fl[:, 0], fl[:, 1], fl[:, 2]
        bad = (a >= b + c) | (b >= a + c) | (c >= a + b)
        ids = np.flatnonzero(bad)
        return ids if faces is None else np.asarray(faces)[ids]

    @property
    def is_metric(self) -> bool:
        return len(self.violations()) == 0

    def require_metric(self, faces=None) -> None:
        bad = self.violations(faces)
        if len(bad):
            raise NonMetricError(f"face {int(bad[0])} violates the triangle inequality", bad)

    def angles(self) -> np.ndarray:
        """``(F, 3)`` inner angles (NaN on non-metric faces)."""
        return face_angles(self.face_lengths())


def induced_metric(emb: Embedding) -> PLMetric:
    """Euclidean edge lengths of an embedding."""
    e = emb.tri.edges
    return PLMetric(emb.tri, np.abs(emb.z[e[:, 0]] - emb.z[e[:, 1]]))


def face_angles(fl: np.ndarray) -> np.ndarray:
    """Inner angles from opposite side lengths via the half-angle formula.

    Column ``k`` of the result is the angle opposite ``fl[:, k]``.  Rows that
    violate the triangle inequality yield NaN.
    """
    fl = np.asarray(fl, dtype=float)
    out = np.empty_like(fl)
    with np.errstate(invalid="ignore"):
        for k in range(3):
            a = fl[:, k]
            b = fl[:, (k + 1) % 3]
            c = fl[:, (k + 2) % 3]
            num = (a - b + c) * (a + b - c)
            den = (a + b + c) * (b + c - a)
            bad = (num <= 0) | (den <= 0)
            out[:, k] = np.where(bad, np.nan, 2.0 * np.arctan2(np.sqrt(np.abs(num)), np.sqrt(np.abs(den))))
    return out


def face_cotangents(fl: np.ndarray) -> np.ndarray:
    """Cotangents of the inner angles, ``(b^2 + c^2 - a^2) / (4 area)``."""
    fl = np.asarray(fl, dtype=float)
    a, b, c = fl[:, 0], fl[:, 1], fl[:, 2]
    with np.errstate(invalid="ignore"):
        area4 = np.sqrt((a + b + c) * (-a + b + c) * (a - b + c) * (a + b - c))
    sq = fl**2
    out = np.empty_like(fl)
    for k in range(3):
        out[:, k] = (sq[:, (k + 1) % 3] + sq[:, (k + 2) % 3] - sq[:, k]) / area4
    return out


def inner_angle(metric: PLMetric, face: int, apex: int) -> float:
    """Angle of ``face`` at vertex ``apex`` (law of cosines)."""
    f = metric.tri.faces[face]
    hits = np.flatnonzero(f == apex)
    if len(hits) == 0:
        raise MeshError(f"vertex {apex} is not a corner of face {face}")
    metric.require_metric([face])
    return float(face_angles(metric.face_lengths()[[face]])[0, hits[0]])


@dataclass(frozen=True)
class Classification:
    uniformly_nondegenerate: bool
    uniformly_acute: bool
    delaunay: bool
    epsilon: float
    min_angle: float
    min_angle_face: int
    min_angle_vertex: int
    max_angle: float
    max_angle_face: int
    max_angle_vertex: int
    max_opposite_sum: float | None
    max_opposite_edge: int | None


def opposite_angle_sums(metric: PLMetric, angles: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Sum of the two angles opposite each edge with two faces.

    Returns ``(edge_ids, sums)``.
    """
    tri = metric.tri
    ang = metric.angles() if angles is None else angles
    inner = np.flatnonzero(tri.edge_face_count == 2)
    total = np.zeros(tri.n_edges)
    np.add.at(total, tri.face_edges.ravel(), ang.ravel())
    return inner, total[inner]


def classify(metric: PLMetric, epsilon: float, tol: float = DELAUNAY_TOL) -> Classification:
    """Uniform nondegeneracy, uniform acuteness and angle-form Delaunay test.

    Delaunay allows opposite-angle sums up to ``pi + tol``; boundary edges
    impose no condition.
    """
    if epsilon < 0:
        raise PreconditionError("epsilon must be nonnegative")
    metric.require_metric()
    tri = metric.tri
    ang = metric.angles()
    flat = ang.ravel()
    imin, imax = int(np.argmin(flat)), int(np.argmax(flat))
    fmin, kmin = divmod(imin, 3)
    fmax, kmax = divmod(imax, 3)
    edges, sums = opposite_angle_sums(metric, ang)
    if len(edges):
        j = int(np.argmax(sums))
        smax, emax = float(sums[j]), int(edges[j])
        delaunay = bool(smax <= np.pi + tol)
    else:
        smax, emax, delaunay = None, None, True
    return Classification(
        uniformly_nondegenerate=bool(flat[imin] >= epsilon),
        uniformly_acute=bool(flat[imax] <= np.pi / 2 - epsilon),
        delaunay=delaunay,
        epsilon=float(epsilon),
        min_angle=float(flat[imin]),
        min_angle_face=fmin,
        min_angle_vertex=int(tri.faces[fmin, kmin]),
        max_angle=float(flat[imax]),
        max_angle_face=fmax,
        max_angle_vertex=int(tri.faces[fmax, kmax]),
        max_opposite_sum=smax,
        max_opposite_edge=emax,
    )


@dataclass(frozen=True)
class Circumdisk:
    """Closed disk bounded by a circumcircle.

    ``kind`` is ``"disk"`` for the bounded disk and ``"complement"`` for the
    closure of its exterior on the Riemann sphere (the disk through infinity).
    """

    center: complex
    radius: float
    kind: str = "disk"

    def signed_distance(self, z) -> np.ndarray:
        """Normalized distance ``(|z - c| - R) / R``, negative inside."""
        s = (np.abs(np.asarray(z) - self.center) - self.radius) / self.radius
        return s if self.kind == "disk" else -s

    def contains(self, z, tol: float = 0.0):
        return self.signed_distance(z) <= tol

    def contains_interior(self, z, tol: float = 0.0):
        return self.signed_distance(z) < -tol


def _circumcenter(a, b, c):
    u, v = b - a, c - a
    d = 2.0 * (u.real * v.imag - u.imag * v.real)
    uu, vv = np.abs(u) ** 2, np.abs(v) ** 2
    ox = (v.imag * uu - u.imag * vv) / d
    oy = (u.real * vv - v.real * uu) / d
    return a + ox + 1j * oy, d


def circumdisk(emb: Embedding, face: int) -> Circumdisk:
    """Circumdisk of an embedded face."""
    a, b, c = emb.z[emb.tri.faces[face]]
    scale = max(abs(b - a), abs(c - a), abs(c - b))
    if scale == 0 or abs(_signed_area2(a, b, c)) <= 1e-14 * scale**2:
        raise MeshError(f"face {face} has collinear vertices")
    o, _ = _circumcenter(a, b, c)
    r = float(np.mean([abs(a - o), abs(b - o), abs(c - o)]))
    return Circumdisk(complex(o), r)


def incircle_distance(a, b, c, d) -> np.ndarray:
    """Normalized in-circle value of ``d`` against counterclockwise ``abc``.

    Returns ``(|d - o|^2 - R^2) / (2 R^2)``, which is approximately
    ``(|d - o| - R) / R``: positive outside the circumcircle, negative inside.
    The lifted determinant is accumulated in extended precision.
    """
    L = np.longdouble
    a, b, c, d = (np.asarray(x, dtype=complex) for x in (a, b, c, d))
    ax, ay = (a.real - d.real).astype(L), (a.imag - d.imag).astype(L)
    bx, by = (b.real - d.real).astype(L), (b.imag - d.imag).astype(L)
    cx, cy = (c.real - d.real).astype(L), (c.imag - d.imag).astype(L)
    al, bl, cl = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
    det = ax * (by * cl - bl * cy) - ay * (bx * cl - bl * cx) + al * (bx * cy - by * cx)
    ux, uy = (b.real - a.real).astype(L), (b.imag - a.imag).astype(L)
    vx, vy = (c.real - a.real).astype(L), (c.imag - a.imag).astype(L)
    orient = ux * vy - uy * vx
    o, _ = _circumcenter(a, b, c)
    r2 = np.abs(a - o) ** 2
    return np.asarray(-det / (orient * L(2) * r2.astype(L)), dtype=float)


@dataclass(frozen=True)
class DelaunayCheck:
    delaunay: bool
    min_distance: float | None
    witness_edge: int | None


def delaunay_circumdisk_form(emb: Embedding, tol: float = DELAUNAY_TOL) -> DelaunayCheck:
    """Circumdisk Delaunay test: no opposite vertex strictly inside a circumdisk.

    Each interior edge is tested from both of its faces; the witness is the
    edge with the most negative normalized in-circle value.
    """
    tri = emb.tri
    inner = np.flatnonzero(tri.edge_face_count == 2)
    if len(inner) == 0:
        return DelaunayCheck(True, None, None)
    vals = []
    for side in (0, 1):
        f = tri.edge_faces[inner, side]
        g = tri.edge_faces[inner, 1 - side]
        k_opp = _opposite_vertex(tri, g, inner)
        fz = emb.z[tri.faces[f]]
        vals.append(incircle_distance(fz[:, 0], fz[:, 1], fz[:, 2], emb.z[k_opp]))
    s = np.minimum(vals[0], vals[1])
    j = int(np.argmin(s))
    return DelaunayCheck(bool(s[j] >= -tol), float(s[j]), int(inner[j]))


def _opposite_vertex(tri: Triangulation, faces: np.ndarray, edges: np.ndarray) -> np.ndarray:
    local = np.argmax(tri.face_edges[faces] == edges[:, None], axis=1)
    return tri.faces[faces, local]


def segment_distance(p1, p2, q1, q2) -> np.ndarray:
    """Euclidean distance between segments ``[p1, p2]`` and ``[q1, q2]``."""
    p1, p2, q1, q2 = np.broadcast_arrays(*(np.asarray(x, dtype=complex) for x in (p1, p2, q1, q2)))

    def point_seg(x, a, b):
        ab = b - a
        denom = np.abs(ab) ** 2
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(denom > 0, ((x - a) * np.conj(ab)).real / denom, 0.0)
        t = np.clip(t, 0.0, 1.0)
        return np.abs(x - (a + t * ab))

    d = np.minimum.reduce(
        [point_seg(p1, q1, q2), point_seg(p2, q1, q2), point_seg(q1, p1, p2), point_seg(q2, p1, p2)]
    )
    o1 = _signed_area2(p1, p2, q1)
    o2 = _signed_area2(p1, p2, q2)
    o3 = _signed_area2(q1, q2, p1)
    o4 = _signed_area2(q1, q2, p2)
    crossing = (o1 * o2 < 0) & (o3 * o4 < 0)
    return np.where(crossing, 0.0, d)


@dataclass(frozen=True)
class CoveringConstants:
    delta: float
    C: float
    face_deltas: dict


def covering_constants(emb: Embedding) -> CoveringConstants:
    """Per-mesh covering constants ``delta`` and ``C = 1 + 2/delta``.

    For each face whose three vertices are interior, ``U`` is the union of the
    three open stars.  The part of its complement near the face is exactly the
    union of edges of those stars that avoid all three face vertices, so the
    distance ``d(U^c, face)`` is a minimum of segment-segment distances.
    """
    tri = emb.tri
    inner = np.zeros(tri.n, dtype=bool)
    inner[tri.interior_vertices()] = True
    eligible = np.flatnonzero(inner[tri.faces].all(axis=1))
    if len(eligible) == 0:
        raise PreconditionError("patch too small: no face has three interior vertices")
    z = emb.z
    out: dict[int, float] = {}
    for f in eligible:
        verts = tri.faces[f]
        star = np.unique(np.concatenate([tri.vertex_faces(v) for v in verts]))
        cand = np.unique(tri.face_edges[star].ravel())
        ends = tri.edges[cand]
        keep = ~np.isin(ends, verts).any(axis=1)
        ends = ends[keep]
        tz = z[verts]
        dist = np.inf
        for k in range(3):
            d = segment_distance(tz[k], tz[(k + 1) % 3], z[ends[:, 0]], z[ends[:, 1]])
            dist = min(dist, float(d.min()))
        diam = float(max(abs(tz[0] - tz[1]), abs(tz[1] - tz[2]), abs(tz[2] - tz[0])))
        out[int(f)] = dist / diam
    delta = min(out.values())
    return CoveringConstants(delta=delta, C=1.0 + 2.0 / delta, face_deltas=out)


def develop(metric: PLMetric, root_face: int = 0, tol: float = 1e-8) -> Embedding:
    """Lay out a flat metric in the plane face by face.

    The root face gets its first vertex at 0 and its first edge along the
    positive real axis.  Raises :class:`MeshError` if the layout closes up
    inconsistently (nonzero curvature) or the faces are disconnected.
    """
    tri = metric.tri
    metric.require_metric()
    if tri.n_faces == 0:
        raise MeshError("nothing to develop")
    fl = metric.face_lengths()
    ang = face_angles(fl)
    z = np.full(tri.n, np.nan + 0j)
    placed = np.zeros(tri.n, dtype=bool)
    f0 = tri.faces[root_face]
    z[f0[0]] = 0.0
    z[f0[1]] = fl[root_face, 2]
    z[f0[2]] = fl[root_face, 1] * np.exp(1j * ang[root_face, 0])
    placed[f0] = True
    seen = np.zeros(tri.n_faces, dtype=bool)
    seen[root_face] = True
    queue = deque([root_face])
    scale = float(metric.lengths.max())
    while queue:
        f = queue.popleft()
        for e in tri.face_edges[f]:
            for g in tri.edge_faces[e]:
                if g < 0 or seen[g]:
                    continue
                seen[g] = True
                queue.append(g)
                face = tri.faces[g]
                known = placed[face]
                if known.all():
                    continue
                k = int(np.flatnonzero(~known)[0])
                i, j = face[(k + 1) % 3], face[(k + 2) % 3]
                # corner (k+1) sits at i; the new vertex lies counterclockwise from j about i
                d = z[j] - z[i]
                z[face[k]] = z[i] + fl[g, (k + 2) % 3] * np.exp(1j * ang[g, (k + 1) % 3]) * d / abs(d)
                placed[face[k]] = True
    if not seen.all():
        raise MeshError("faces are not edge-connected")
    used = np.zeros(tri.n, dtype=bool)
    used[tri.faces.ravel()] = True
    z = np.where(used, z, 0.0)
    lens = np.abs(z[tri.edges[:, 0]] - z[tri.edges[:, 1]])
    face_edge = np.zeros(tri.n_edges, dtype=bool)
    face_edge[tri.face_edges.ravel()] = True
    gap = np.abs(lens - metric.lengths)[face_edge]
    if gap.size and gap.max() > tol * scale:
        raise MeshError(f"metric does not develop consistently (edge gap {gap.max():.3e})")
    return Embedding(tri, z)
