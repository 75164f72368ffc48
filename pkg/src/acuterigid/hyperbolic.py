"""Poincare-disk geometry and the Euclidean/hyperbolic conformal-factor correspondence.

All isometries are built from the normalizing Moebius map
``f_a(z) = (z - a) / (1 - conj(a) z)``, which sends ``a`` to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError, PreconditionError
from .geometry import Embedding, classify, delaunay_circumdisk_form, incircle_distance, induced_metric
from .mesh import VertexSet, boundary, interior, one_ring

__all__ = [
    "DISK_MARGIN",
    "check_disk",
    "mobius",
    "mobius_inverse",
    "hyp_distance",
    "sinh_half_identity",
    "point_at_distance",
    "geodesic_midpoint",
    "hyperbolic_log_map",
    "to_hyperbolic_factor",
    "from_hyperbolic_factor",
    "euclidean_relation_gap",
    "hyperbolic_relation_gap",
    "HyperbolicMaxPrinciple",
    "check_hyperbolic_max_principle",
    "RingEmbedding",
    "one_ring_hyperbolic_embed",
]

DISK_MARGIN = 1e-12


def check_disk(z, name: str = "point") -> np.ndarray:
    """Return ``z`` as a complex array, rejecting points with ``|z| >= 1 - 1e-12``."""
    z = np.asarray(z, dtype=complex)
    if not np.isfinite(z).all() or (np.abs(z) >= 1.0 - DISK_MARGIN).any():
        raise PreconditionError(f"{name} must lie strictly inside the unit disk")
    return z


def mobius(a, theta: float = 0.0):
    """Disk automorphism ``z -> exp(i theta) (z - a) / (1 - conj(a) z)``."""
    a = complex(check_disk(a, "Moebius center"))
    rot = complex(math.cos(theta), math.sin(theta))
    return lambda z: rot * (np.asarray(z) - a) / (1.0 - a.conjugate() * np.asarray(z))


def mobius_inverse(a, theta: float = 0.0):
    """Inverse of :func:`mobius` with the same parameters."""
    a = complex(check_disk(a, "Moebius center"))
    rot = complex(math.cos(theta), -math.sin(theta))
    return lambda w: (rot * np.asarray(w) + a) / (1.0 + a.conjugate() * rot * np.asarray(w))


def _normalized(z1, z2) -> np.ndarray:
    return (z2 - z1) / (1.0 - np.conj(z1) * z2)


def hyp_distance(z1, z2):
    """Hyperbolic distance ``2 artanh |f_{z1}(z2)|`` in the Poincare disk."""
    z1 = check_disk(z1)
    z2 = check_disk(z2)
    d = 2.0 * np.arctanh(np.abs(_normalized(z1, z2)))
    return float(d) if d.ndim == 0 else d


def sinh_half_identity(z1, z2):
    """Both sides of ``sinh(d/2) = |z1 - z2| / sqrt((1 - |z1|^2)(1 - |z2|^2))``."""
    z1 = check_disk(z1)
    z2 = check_disk(z2)
    lhs = np.sinh(0.5 * 2.0 * np.arctanh(np.abs(_normalized(z1, z2))))
    rhs = np.abs(z1 - z2) / np.sqrt((1.0 - np.abs(z1) ** 2) * (1.0 - np.abs(z2) ** 2))
    if lhs.ndim == 0:
        return float(lhs), float(rhs)
    return lhs, rhs


def point_at_distance(z0, d: float, direction: complex) -> complex:
    """Point at hyperbolic distance ``d`` from ``z0`` along the geodesic leaving in ``direction``."""
    z0 = complex(check_disk(z0))
    u = complex(direction) / abs(direction)
    return complex(mobius_inverse(z0)(math.tanh(d / 2.0) * u))


def geodesic_midpoint(a, b) -> complex:
    """Hyperbolic midpoint of the geodesic segment ``[a, b]``."""
    w = complex(_normalized(complex(check_disk(a)), complex(check_disk(b))))
    if w == 0:
        return complex(a)
    d = 2.0 * math.atanh(abs(w))
    return complex(mobius_inverse(a)(math.tanh(d / 4.0) * w / abs(w)))


def hyperbolic_log_map(z0, z):
    """Inverse exponential map at ``z0``.

    The tangent plane at ``z0`` is identified with the complex numbers through
    the disk coordinate.  The returned vector points along the initial
    direction of the geodesic from ``z0`` to ``z`` and has modulus
    ``d_h(z0, z)``.
    """
    z0 = complex(check_disk(z0))
    z = check_disk(z)
    w = _normalized(z0, z)
    # f_{z0} has positive real derivative at z0, so directions are preserved
    r = np.abs(w)
    with np.errstate(invalid="ignore", divide="ignore"):
        v = np.where(r > 0, 2.0 * np.arctanh(r) * w / np.where(r > 0, r, 1.0), 0.0)
    return complex(v) if np.ndim(v) == 0 else v


# -- conformal factors -----------------------------------------------------------

def euclidean_relation_gap(u, z, zp, edges) -> np.ndarray:
    """Relative gap of ``|z'_i - z'_j| = exp((u_i + u_j)/2) |z_i - z_j|`` per edge."""
    u, z, zp = np.asarray(u, float), np.asarray(z, complex), np.asarray(zp, complex)
    i, j = np.asarray(edges).T
    lhs = np.abs(zp[i] - zp[j])
    rhs = np.exp(0.5 * (u[i] + u[j])) * np.abs(z[i] - z[j])
    return np.abs(lhs - rhs) / rhs


def hyperbolic_relation_gap(uh, z, zp, edges) -> np.ndarray:
    """Relative gap of ``sinh(d'_ij/2) = exp((uh_i + uh_j)/2) sinh(d_ij/2)`` per edge."""
    uh = np.asarray(uh, float)
    z, zp = check_disk(z), check_disk(zp)
    i, j = np.asarray(edges).T
    lhs, _ = sinh_half_identity(zp[i], zp[j])
    s, _ = sinh_half_identity(z[i], z[j])
    rhs = np.exp(0.5 * (uh[i] + uh[j])) * np.asarray(s)
    return np.abs(np.asarray(lhs) - rhs) / rhs


def _disk_correction(z, zp) -> np.ndarray:
    return np.log((1.0 - np.abs(z) ** 2) / (1.0 - np.abs(zp) ** 2))


def to_hyperbolic_factor(u, emb_src: Embedding, emb_dst: Embedding, tol: float = 1e-9) -> np.ndarray:
    """Hyperbolic factor ``uh_i = u_i + log((1 - |z_i|^2) / (1 - |z'_i|^2))``.

    Requires both embeddings inside the unit disk and ``l(dst) = u * l(src)``
    to relative tolerance ``tol`` on every edge.
    """
    if emb_src.tri is not emb_dst.tri and not np.array_equal(emb_src.tri.edges, emb_dst.tri.edges):
        raise MeshError("embeddings must share a triangulation")
    u = np.asarray(u, dtype=float)
    if u.shape != (emb_src.tri.n,):
        raise MeshError("conformal factor has the wrong length")
    z = check_disk(emb_src.z, "source embedding")
    zp = check_disk(emb_dst.z, "target embedding")
    gap = euclidean_relation_gap(u, z, zp, emb_src.tri.edges)
    bad = np.flatnonzero(gap > tol)
    if len(bad):
        e = emb_src.tri.edges[bad[0]]
        raise PreconditionError(
            f"{len(bad)} edges violate l(dst) = u * l(src); first ({int(e[0])}, {int(e[1])}) gap {gap[bad[0]]:.3e}"
        )
    return u + _disk_correction(z, zp)


def from_hyperbolic_factor(uh, z, zp) -> np.ndarray:
    """Invert :func:`to_hyperbolic_factor`: ``u_i = uh_i - log((1 - |z_i|^2) / (1 - |z'_i|^2))``."""
    return np.asarray(uh, float) - _disk_correction(check_disk(z), check_disk(zp))


@dataclass(frozen=True)
class HyperbolicMaxPrinciple:
    min_interior: float
    min_boundary: float
    ok: bool
    part_a_ok: bool
    part_a_failures: tuple = ()


def check_hyperbolic_max_principle(uh, region: VertexSet, tol: float = 1e-9) -> HyperbolicMaxPrinciple:
    """Diagnostic for the hyperbolic maximum principle on ``region``.

    ``ok`` states that nonnegative boundary values force nonnegative values on
    the whole region (to ``-tol``).  ``part_a_ok`` states that every interior
    vertex with a negative value has a neighbor with a strictly smaller one.
    """
    tri = region.tri
    uh = np.asarray(uh, dtype=float)
    bnd = boundary(region).ids()
    inner = interior(region).ids()
    min_b = float(uh[bnd].min()) if len(bnd) else math.inf
    min_i = float(uh[inner].min()) if len(inner) else math.inf
    ok = not (min_b >= 0) or min(min_i, min_b) >= -tol
    failures = []
    for i in inner:
        if uh[i] < 0 and not (uh[tri.neighbors(i)] < uh[i]).any():
            failures.append(int(i))
    return HyperbolicMaxPrinciple(min_i, min_b, bool(ok), not failures, tuple(failures))


# -- 1-ring hyperbolic embedding ----------------------------------------------------

@dataclass
class RingEmbedding:
    """Outcome of the 1-ring hyperbolic embedding construction.

    ``status`` is ``"ok"`` or ``"inconclusive"`` (acuteness precondition
    failed); in the latter case the boolean fields are ``None``.
    """

    status: str
    embeds: bool | None = None
    wrap_angles: np.ndarray = field(default_factory=lambda: np.zeros(0))
    wrap_sum: float | None = None
    identity_gap: float | None = None
    circumdisks_match: bool | None = None
    delaunay_euclidean: bool | None = None
    delaunay_hyperbolic: bool | None = None
    delaunay_match: bool | None = None
    reason: str = ""


def _hyperbolic_disk_kind(a: complex, b: complex, c: complex) -> str:
    """Which side of the circle through ``a, b, c`` holds their geodesic triangle."""
    inside = geodesic_midpoint(geodesic_midpoint(a, b), c)
    s = float(incircle_distance(a, b, c, inside))
    return "disk" if s < 0 else "complement"


def one_ring_hyperbolic_embed(emb: Embedding, i: int, epsilon: float = 1e-9, tol: float = 1e-9) -> RingEmbedding:
    """Check that the 1-ring of ``i`` re-embeds with hyperbolic geodesic edges.

    With ``z0`` the center and ``z_k`` the counterclockwise neighbors,
    ``v_k = log_{z0}(z_k)``.  The ring embeds when every ``arg(v_{k+1}/v_k)``
    lies in ``(0, pi)`` and these angles sum to ``2 pi``.  The per-step
    identity
    ``arg(v_{k+1}/v_k) + arg(v_k/(z_k - z0)) = arg((z_{k+1}-z0)/(z_k-z0)) + arg(v_{k+1}/(z_{k+1}-z0))``
    is checked with principal arguments, both sides lying in ``(-pi/2, 3pi/2)``.
    Each face's hyperbolic circumdisk is compared with its Euclidean one, and
    Delaunay status on the ring is compared between the two geometries.
    """
    ring = one_ring(emb.tri, i)
    sub = Embedding(ring.complex, emb.z, check=False)
    z = check_disk(emb.z[np.concatenate([[i], ring.neighbors])], "ring vertex")
    metric = induced_metric(sub)
    cls = classify(metric, epsilon)
    if not cls.uniformly_acute:
        return RingEmbedding("inconclusive", reason=f"max angle {cls.max_angle:.12g} not below pi/2 - {epsilon}")
    z0, zk = z[0], z[1:]
    v = hyperbolic_log_map(z0, zk)
    v_next = np.roll(v, -1)
    zk_next = np.roll(zk, -1)
    alpha = np.angle(v_next / v)
    beta = np.angle(v / (zk - z0))
    beta_next = np.roll(beta, -1)
    gamma = np.angle((zk_next - z0) / (zk - z0))
    lhs, rhs = alpha + beta, gamma + beta_next
    identity_gap = float(np.abs(lhs - rhs).max())
    wrap_sum = float(alpha.sum())
    embeds = bool((alpha > 0).all() and (alpha < np.pi).all() and abs(wrap_sum - 2 * np.pi) <= tol)

    kinds = [_hyperbolic_disk_kind(z0, a, b) for a, b in zip(zk, zk_next)]
    circ_match = all(k == "disk" for k in kinds)
    # spoke i-j_k is shared by faces (z0, z_{k-1}, z_k) and (z0, z_k, z_{k+1})
    m = len(zk)
    hyp_ok = True
    for k in range(m):
        a, b, opp = zk[k], zk[(k + 1) % m], zk[(k - 1) % m]
        s = float(incircle_distance(z0, a, b, opp))
        if kinds[k] == "complement":
            s = -s
        hyp_ok &= s >= -tol
        a2, b2, opp2 = zk[(k - 1) % m], zk[k], zk[(k + 1) % m]
        s2 = float(incircle_distance(z0, a2, b2, opp2))
        if kinds[(k - 1) % m] == "complement":
            s2 = -s2
        hyp_ok &= s2 >= -tol
    euc_ok = delaunay_circumdisk_form(sub, tol).delaunay
    return RingEmbedding(
        "ok",
        embeds=embeds,
        wrap_angles=alpha,
        wrap_sum=wrap_sum,
        identity_gap=identity_gap,
        circumdisks_match=circ_match,
        delaunay_euclidean=bool(euc_ok),
        delaunay_hyperbolic=bool(hyp_ok),
        delaunay_match=bool(euc_ok) == bool(hyp_ok),
    )
