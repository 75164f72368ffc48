"""Annulus moduli, the thick-annulus criterion and dilatation of piecewise-linear maps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conformal import cotan_weights
from .errors import MeshError, PreconditionError
from .geometry import Embedding, segment_distance
from .mesh import VertexSet
from .network import ELProblem, Network, extremal_length

__all__ = [
    "RoundAnnulus",
    "PLMap",
    "Dilatation",
    "ModulusEstimate",
    "OscillationBound",
    "modulus_round",
    "modulus_estimate",
    "annulus_modulus_estimate",
    "contains_round_annulus",
    "dilatation",
    "edge_constant",
    "oscillation_bound",
    "oscillation_constants",
]


@dataclass(frozen=True)
class RoundAnnulus:
    """``{z : r < |z - center| < r_outer}``."""

    r: float
    r_outer: float
    center: complex = 0j

    def __post_init__(self):
        if not (0 < self.r < self.r_outer and math.isfinite(self.r_outer)):
            raise PreconditionError("round annulus needs 0 < r < r_outer < inf")

    def contains(self, z) -> np.ndarray:
        d = np.abs(np.asarray(z) - self.center)
        return (d > self.r) & (d < self.r_outer)


def modulus_round(a: RoundAnnulus) -> float:
    """``log(r_outer / r) / (2 pi)``."""
    return math.log(a.r_outer / a.r) / (2.0 * math.pi)


@dataclass(frozen=True)
class ModulusEstimate:
    value: float
    level: int | None
    n_vertices: int


def _loop_set(emb: Embedding, ids, name: str) -> np.ndarray:
    ids = np.unique(np.asarray(ids, dtype=np.int64))
    if len(ids) == 0:
        raise MeshError(f"{name} boundary loop is empty")
    if ids.min() < 0 or ids.max() >= emb.tri.n:
        raise MeshError(f"{name} boundary loop index out of range")
    return ids


def modulus_estimate(emb: Embedding, inner_loop, outer_loop, level: int | None = None) -> ModulusEstimate:
    """Discrete modulus of a triangulated annulus.

    The estimate is the extremal length between the two boundary loops of the
    network with cotangent conductances, which discretizes the Dirichlet
    energy of the harmonic measure of the annulus.  The loops must partition
    the rim of the triangulation.
    """
    tri = emb.tri
    inner = _loop_set(emb, inner_loop, "inner")
    outer = _loop_set(emb, outer_loop, "outer")
    if np.intersect1d(inner, outer).size:
        raise MeshError("boundary loops overlap")
    rim = np.flatnonzero(tri.rim)
    labeled = np.union1d(inner, outer)
    if not np.array_equal(np.sort(rim), labeled):
        raise MeshError("boundary loops must be exactly the rim vertices")
    eta = cotan_weights(emb.metric())
    v1 = tri.vertex_set(inner)
    v2 = VertexSet(tri, tri.vertex_set(outer).mask, cofinite=True)
    pool = ELProblem(Network(tri), v1, v2).edge_pool()
    if (eta[pool] <= 0).any():
        raise PreconditionError("cotangent conductances must be positive (use a non-obtuse triangulation)")
    # edges along the loops never enter the edge pool; give them a placeholder
    used = np.ones(tri.n_edges)
    used[pool] = eta[pool]
    res = extremal_length(ELProblem(Network(tri, conductance=used), v1, v2))
    return ModulusEstimate(res.EL, level, tri.n)


def annulus_modulus_estimate(r: float, R: float, level: int) -> ModulusEstimate:
    """:func:`modulus_estimate` on the generated triangulation of ``A_{r,R}``."""
    from .generators import annulus_mesh

    mesh = annulus_mesh(r, R, level)
    return modulus_estimate(mesh.emb, mesh.inner, mesh.outer, level)


def _polygon_or_disk(obj):
    """Normalize a region to ``("disk", radius)`` or ``("polygon", vertices)``."""
    if np.isscalar(obj):
        r = float(obj)
        if not r > 0:
            raise PreconditionError("radius must be positive")
        return "disk", r
    pts = np.asarray(obj)
    if pts.ndim == 2 and pts.shape[1] == 2:
        pts = pts[:, 0] + 1j * pts[:, 1]
    pts = pts.astype(complex).ravel()
    if len(pts) == 0 or not np.isfinite(pts).all():
        raise PreconditionError("region must be a positive radius or a nonempty finite point list")
    return "polygon", pts


def contains_round_annulus(
    inner, outer, threshold_ratio: float = 2.0, modulus: float | None = None, threshold: float = 100.0
):
    """Constructive thick-annulus test for ``A = C minus (B union outer)``.

    ``inner`` describes the bounded complementary component ``B`` (a radius
    for the disk ``|z| <= radius`` or the vertices of a polygon containing
    0); ``outer`` describes the unbounded one (a radius ``R`` for
    ``|z| >= R`` or the vertices of the polygon whose exterior it is).
    Returns the witness :class:`RoundAnnulus` ``A_{r,R}`` with
    ``r = max |z|`` over ``B`` and ``R = min |z|`` over the outer component
    when ``R >= threshold_ratio * r``, and ``None`` otherwise.

    When a known ``modulus`` of ``A`` is passed and it is at least
    ``threshold`` (default 100), a witness must exist; failing to find one
    means the component data are inconsistent and raises
    :class:`PreconditionError`.
    """
    kind_b, b = _polygon_or_disk(inner)
    r = b if kind_b == "disk" else float(np.abs(b).max())
    kind_o, o = _polygon_or_disk(outer)
    if kind_o == "disk":
        R = o
    else:
        if len(o) < 3:
            raise PreconditionError("outer polygon needs at least 3 vertices")
        R = float(segment_distance(o, np.roll(o, -1), 0j, 0j).min())
    if r <= 0:
        raise PreconditionError("inner component must contain points away from 0")
    if R <= r:
        raise PreconditionError("outer component must lie outside the inner one")
    witness = RoundAnnulus(r, R) if R >= threshold_ratio * r else None
    if witness is None and modulus is not None and modulus >= threshold:
        raise PreconditionError(f"modulus {modulus:.6g} >= {threshold:.6g} but no round annulus A_(r,{threshold_ratio}r) fits")
    return witness


# -- piecewise-linear maps ---------------------------------------------------------

class PLMap:
    """Face-wise affine map between two embeddings of one triangulation."""

    def __init__(self, source: Embedding, target: Embedding):
        if source.tri is not target.tri and not np.array_equal(source.tri.faces, target.tri.faces):
            raise MeshError("source and target must share a triangulation")
        self.source = source
        self.target = target
        self.tri = source.tri

    def linear_parts(self) -> np.ndarray:
        """``(F, 2, 2)`` matrices ``A`` with ``A (p_k - p_0) = q_k - p'_0``."""
        f = self.tri.faces
        z, w = self.source.z, self.target.z
        def mat(x, y):
            return np.stack([np.stack([x.real, y.real], -1), np.stack([x.imag, y.imag], -1)], -2)
        P = mat(z[f[:, 1]] - z[f[:, 0]], z[f[:, 2]] - z[f[:, 0]])
        Q = mat(w[f[:, 1]] - w[f[:, 0]], w[f[:, 2]] - w[f[:, 0]])
        return Q @ np.linalg.inv(P)

    def compose(self, other: "PLMap") -> "PLMap":
        """``other`` after ``self`` (requires ``self.target`` to be ``other.source``)."""
        if not np.allclose(self.target.z, other.source.z):
            raise MeshError("maps are not composable")
        return PLMap(self.source, other.target)


@dataclass(frozen=True)
class Dilatation:
    per_face: np.ndarray
    sup: float


def dilatation(m: PLMap) -> Dilatation:
    """Per-face ``sigma_max / sigma_min`` of the affine linear parts and its supremum."""
    A = m.linear_parts()
    det = np.linalg.det(A)
    if (det <= 0).any():
        raise PreconditionError(f"face {int(np.flatnonzero(det <= 0)[0])} is mapped with reversed orientation")
    s = np.linalg.svd(A, compute_uv=False)
    K = s[:, 0] / s[:, 1]
    return Dilatation(K, float(K.max()) if len(K) else 1.0)


# -- oscillation bound --------------------------------------------------------------

def edge_constant(epsilon: float) -> float:
    """``2 log(1 / sin eps)``: half the largest factor jump across an edge."""
    return 2.0 * math.log(1.0 / math.sin(epsilon))


@dataclass(frozen=True)
class OscillationBound:
    value: float
    M: float
    C_edge: float
    log_C_prime: float
    C_prime: float | None


def oscillation_constants(epsilon: float, K_sup: float, C_cover: float) -> OscillationBound:
    """All constants of ``2M + 2 log C + log C' - log 2``.

    ``C' = exp(200 pi K_sup)`` overflows doubles for ``K_sup >= 1.13``; it is
    then reported as ``None`` while ``log_C_prime`` stays exact.
    """
    if not 0 < epsilon < math.pi / 2:
        raise PreconditionError("epsilon must lie in (0, pi/2)")
    if not K_sup >= 1 or not math.isfinite(K_sup):
        raise PreconditionError("K_sup must be a finite number >= 1")
    if not C_cover >= 1 or not math.isfinite(C_cover):
        raise PreconditionError("C_cover must be a finite number >= 1")
    c_edge = edge_constant(epsilon)
    M = c_edge + 3.0
    log_cp = 200.0 * math.pi * K_sup
    try:
        cp = math.exp(log_cp)
    except OverflowError:
        cp = None
    value = 2.0 * M + 2.0 * math.log(C_cover) + log_cp - math.log(2.0)
    return OscillationBound(value, M, c_edge, log_cp, cp)


def oscillation_bound(epsilon: float, K_sup: float, C_cover: float) -> float:
    """``2M + 2 log C + log C' - log 2`` with ``M = 2 log(1/sin eps) + 3`` and ``C' = exp(200 pi K_sup)``."""
    return oscillation_constants(epsilon, K_sup, C_cover).value
