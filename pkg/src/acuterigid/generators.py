"""Test-instance generators: lattice patches, annuli, fans and small configurations."""

from __future__ import annotations

import math

import numpy as np

from .errors import BudgetExceededError, PreconditionError
from .geometry import Embedding, PLMetric, face_angles
from .mesh import Triangulation

__all__ = [
    "OMEGA",
    "hex_patch",
    "hex_disk",
    "generate_perturbed_acute",
    "square_grid",
    "closed_fan",
    "annulus_mesh",
    "two_triangles",
    "random_two_triangles",
    "AnnulusMesh",
]

OMEGA = complex(0.5, math.sqrt(3) / 2)


def _lattice_faces(index: dict) -> np.ndarray:
    faces = []
    anchors = sorted({(a - dx, b - dy) for a, b in index for dx in (0, 1) for dy in (0, 1)})
    for a, b in anchors:
        up = (index.get((a, b)), index.get((a + 1, b)), index.get((a, b + 1)))
        if None not in up:
            faces.append(up)
        down = (index.get((a + 1, b)), index.get((a + 1, b + 1)), index.get((a, b + 1)))
        if None not in down:
            faces.append(down)
    return np.array(faces, dtype=np.int64).reshape(-1, 3)


def _lattice_embedding(points: list, scale: float = 1.0) -> Embedding:
    index = {p: k for k, p in enumerate(points)}
    faces = _lattice_faces(index)
    z = np.array([a + b * OMEGA for a, b in points]) * scale
    return Embedding(Triangulation(len(points), faces), z)


def hex_patch(rings: int, scale: float = 1.0) -> Embedding:
    """Hexagonal patch of equilateral triangles with ``rings`` rings around vertex 0.

    Vertex 0 is the center; ``rings = 1`` gives 7 vertices and 6 faces.
    """
    if rings < 0:
        raise PreconditionError("rings must be nonnegative")
    pts = [(a, b) for a in range(-rings, rings + 1) for b in range(-rings, rings + 1) if abs(a + b) <= rings]
    pts.sort(key=lambda p: (max(abs(p[0]), abs(p[1]), abs(p[0] + p[1])), p))
    return _lattice_embedding(pts, scale)


def hex_disk(radius: float) -> Embedding:
    """Unit triangular lattice restricted to faces inside the closed disk ``|z| <= radius``.

    Vertex 0 is the origin.
    """
    m = int(math.ceil(2 * radius / math.sqrt(3))) + 1
    pts = []
    for a in range(-m - 1, m + 2):
        for b in range(-m - 1, m + 2):
            if abs(a + b * OMEGA) <= radius + 1e-12:
                pts.append((a, b))
    pts.sort(key=lambda p: (abs(p[0] + p[1] * OMEGA), p))
    index = {p: k for k, p in enumerate(pts)}
    faces = _lattice_faces(index)
    used = np.unique(faces)
    keep = [pts[k] for k in used]
    return _lattice_embedding(keep)


def _faces_acute(z: np.ndarray, faces: np.ndarray, limit: float) -> bool:
    if len(faces) == 0:
        return True
    p = z[faces]
    area2 = ((p[:, 1] - p[:, 0]) * np.conj(p[:, 2] - p[:, 0])).imag
    if (area2 >= 0).any():  # conj flips sign: positive orientation gives negative value
        return False
    fl = np.abs(p[:, [1, 2, 0]] - p[:, [2, 0, 1]])
    ang = face_angles(fl)
    return not np.isnan(ang).any() and float(ang.max()) <= limit and float(ang.min()) >= 0


def generate_perturbed_acute(
    rings: int, jitter: float, seed: int | None = 0, epsilon: float = 0.2, budget: int = 1000
) -> Embedding:
    """Hexagonal patch with Gaussian vertex jitter, uniformly acute at ``epsilon``.

    Every vertex is displaced by an independent complex Gaussian of standard
    deviation ``jitter``; the whole patch is resampled until every face is
    positively oriented with all angles at most ``pi/2 - epsilon``.  Raises
    :class:`BudgetExceededError` after ``budget`` rejected patches.
    Deterministic for a given seed.
    """
    base = hex_patch(rings)
    if jitter == 0:
        return base
    if not jitter > 0:
        raise PreconditionError("jitter must be nonnegative")
    if np.pi / 3 > np.pi / 2 - epsilon:
        raise PreconditionError("epsilon too large for an equilateral base")
    rng = np.random.default_rng(seed)
    tri = base.tri
    limit = np.pi / 2 - epsilon
    for _ in range(budget):
        z = base.z + jitter * (rng.standard_normal(tri.n) + 1j * rng.standard_normal(tri.n))
        if _faces_acute(z, tri.faces, limit):
            return Embedding(tri, z)
    raise BudgetExceededError(f"no uniformly acute sample in {budget} attempts (jitter {jitter})")


def square_grid(n: int, scale: float = 1.0) -> Embedding:
    """``n x n`` unit squares, each split by its ``(0,0)-(1,1)`` diagonal."""
    idx = lambda x, y: y * (n + 1) + x  # noqa: E731
    faces = []
    for y in range(n):
        for x in range(n):
            a, b, c, d = idx(x, y), idx(x + 1, y), idx(x + 1, y + 1), idx(x, y + 1)
            faces += [(a, b, c), (a, c, d)]
    z = np.array([complex(x, y) for y in range(n + 1) for x in range(n + 1)]) * scale
    return Embedding(Triangulation((n + 1) ** 2, faces), z)


def closed_fan(m: int, length: float = 1.0) -> PLMetric:
    """Equilateral cone metric: ``m`` unit triangles around vertex 0, closed into a cycle."""
    if m < 3:
        raise PreconditionError("a closed fan needs at least 3 triangles")
    faces = [(0, 1 + k, 1 + (k + 1) % m) for k in range(m)]
    tri = Triangulation(m + 1, faces)
    return PLMetric(tri, np.full(tri.n_edges, float(length)))


class AnnulusMesh:
    """Triangulated round annulus with labeled boundary loops."""

    def __init__(self, emb: Embedding, inner: np.ndarray, outer: np.ndarray, level: int):
        self.emb = emb
        self.inner = inner
        self.outer = outer
        self.level = level


def annulus_mesh(r: float, R: float, level: int, center: complex = 0j) -> AnnulusMesh:
    """Staggered triangulation of ``r <= |z - center| <= R``.

    ``N = 8 * 2**level`` points per circle (more for thin annuli); circle
    radii grow geometrically so that faces are close to equilateral.  At
    least three circles are used.
    """
    if not 0 < r < R:
        raise PreconditionError("need 0 < r < R")
    N = 8 * 2**level
    M = max(2, int(math.ceil(N * math.log(R / r) / (2 * math.pi * math.sqrt(3) / 2))))
    # thin annuli: refine angularly so the two layers still give near-equilateral faces
    N = max(N, int(math.ceil(M * math.pi * math.sqrt(3) / math.log(R / r))))
    radii = r * (R / r) ** (np.arange(M + 1) / M)
    z = []
    for k, rho in enumerate(radii):
        th = 2 * np.pi * (np.arange(N) + 0.5 * k) / N
        z.append(rho * np.exp(1j * th))
    z = np.concatenate(z) + center
    faces = []
    for k in range(M):
        for j in range(N):
            a0, a1 = k * N + j, k * N + (j + 1) % N
            b0, b1 = (k + 1) * N + j, (k + 1) * N + (j + 1) % N
            faces += [(a0, b0, a1), (a1, b0, b1)]
    tri = Triangulation(len(z), faces)
    return AnnulusMesh(Embedding(tri, z), np.arange(N), np.arange(M * N, (M + 1) * N), level)


def two_triangles(z) -> Embedding:
    """Two faces ``(0,1,2)`` and ``(0,2,3)`` sharing the edge ``0-2``."""
    return Embedding(Triangulation(4, [(0, 1, 2), (0, 2, 3)]), np.asarray(z, dtype=complex))


def random_two_triangles(rng: np.random.Generator, cocircular: bool = False) -> Embedding:
    """Random convex-position quadrilateral split by a diagonal.

    With ``cocircular=True`` the four points lie on one circle.
    """
    while True:
        th = np.sort(rng.uniform(0, 2 * np.pi, 4))
        if np.diff(np.append(th, th[0] + 2 * np.pi)).min() < 0.2:
            continue
        z = np.exp(1j * th)
        if not cocircular:
            z = z * rng.uniform(0.6, 1.4, 4)
        z = z * rng.uniform(0.5, 3) + complex(*rng.normal(size=2))
        try:
            return two_triangles(z)
        except ValueError:
            continue
