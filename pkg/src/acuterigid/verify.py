"""Invariant suite run by ``acuterigid verify`` on a mesh."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conformal import (
    conformal_change,
    cotan_weights,
    curvature,
    curvature_differential,
    solve_zero_curvature,
)
from .errors import AcuteRigidError
from .experiments import recover_factor
from .geometry import Embedding, classify, delaunay_circumdisk_form, develop
from .hyperbolic import sinh_half_identity
from .mesh import VertexSet, boundary, closure, interior
from .network import Network, harmonic_residual, solve_dirichlet

__all__ = ["CheckResult", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return {"check": self.name, "passed": self.passed, "detail": self.detail}


def _vertex_calculus(emb, rng, trials):
    tri = emb.tri
    for _ in range(trials):
        s = VertexSet(tri, rng.random(tri.n) < rng.random())
        i, c, b = interior(s), closure(s), boundary(s)
        if not (i <= s and s <= c and b == s - i):
            return False, "interior/closure/boundary nesting failed"
        if not c == interior(s.complement()).complement():
            return False, "closure identity failed"
    return True, f"{trials} random subsets"


def _angle_sums(emb, rng):
    ang = emb.metric().angles()
    gap = float(np.abs(ang.sum(axis=1) - np.pi).max()) if len(ang) else 0.0
    return gap <= 1e-12, f"max face angle-sum gap {gap:.2e}"


def _injectivity(emb, rng):
    d = emb.local_injectivity_defect()
    return d <= 1e-9, f"max |angle sum - 2pi| at interior vertices {d:.2e}"


def _delaunay_forms(emb, rng):
    a = classify(emb.metric(), 0.0).delaunay
    b = delaunay_circumdisk_form(emb).delaunay
    return a == b, f"angle form {a}, circumdisk form {b}"


def _cotan_positive(emb, rng):
    m = emb.metric()
    cls = classify(m, 0.0)
    if cls.max_angle >= np.pi / 2:
        return True, "skipped: metric is not acute"
    eta = cotan_weights(m)
    inner = emb.tri.edge_face_count == 2
    return bool((eta[inner] > 0).all()), f"min interior weight {eta[inner].min() if inner.any() else math.nan:.3e}"


def _dk_rows(emb, rng, count=5):
    m = emb.metric()
    inner = emb.tri.interior_vertices()
    if len(inner) == 0:
        return True, "skipped: no interior vertex"
    u = 0.05 * rng.standard_normal(emb.tri.n)
    worst_sum, worst_fd = 0.0, 0.0
    h = 1e-5
    for i in rng.choice(inner, size=min(count, len(inner)), replace=False):
        row = curvature_differential(m, u, int(i))
        worst_sum = max(worst_sum, abs(sum(row.values())))
        for j, coef in row.items():
            e = np.zeros(emb.tri.n)
            e[j] = h
            fd = (curvature(m, u + e, [i])[0] - curvature(m, u - e, [i])[0]) / (2 * h)
            worst_fd = max(worst_fd, abs(fd - coef))
    ok = worst_sum <= 1e-10 and worst_fd <= 1e-7
    return ok, f"row-sum {worst_sum:.2e}, finite-difference gap {worst_fd:.2e}"


def _group_action(emb, rng):
    m = emb.metric()
    u, v = 0.1 * rng.standard_normal((2, emb.tri.n))
    a = conformal_change(m, u + v).lengths
    b = conformal_change(conformal_change(m, v), u).lengths
    gap = float(np.abs(a - b).max() / np.abs(a).max())
    return gap <= 1e-12, f"relative gap {gap:.2e}"


def _dirichlet(emb, rng):
    tri = emb.tri
    eta = cotan_weights(emb.metric())
    net = Network(tri, conductance=np.where(eta > 0, eta, 1.0))
    region = tri.all_vertices()
    bnd = boundary(region).ids()
    if len(interior(region).ids()) == 0:
        return True, "skipped: no interior vertex"
    g = np.zeros(tri.n)
    g[bnd] = rng.uniform(-1, 1, len(bnd))
    f = solve_dirichlet(net, region, g)
    res = harmonic_residual(net, region, f)
    sup_ok = np.nanmax(np.abs(f)) <= np.abs(g[bnd]).max() + 1e-12
    return bool(res <= 1e-10 and sup_ok), f"residual {res:.2e}, sup bound {'ok' if sup_ok else 'violated'}"


def _round_trip(emb, rng):
    tri = emb.tri
    m = emb.metric()
    if classify(m, 0.0).max_angle >= np.pi / 2 - 0.05:
        return True, "skipped: acuteness margin too small"
    region = tri.all_vertices()
    g = np.zeros(tri.n)
    bnd = boundary(region).ids()
    g[bnd] = 0.02 * rng.standard_normal(len(bnd))
    u = solve_zero_curvature(m, region, g)
    psi = develop(conformal_change(m, u))
    back = recover_factor(emb, psi)
    gap = float(np.abs(back - u)[np.isin(np.arange(tri.n), tri.faces)].max())
    return gap <= 1e-9, f"factor round-trip gap {gap:.2e}"


def _sinh_half(emb, rng):
    z = emb.z - emb.z.mean()
    z = 0.9 * z / max(np.abs(z).max(), 1e-300)
    e = emb.tri.edges
    lhs, rhs = sinh_half_identity(z[e[:, 0]], z[e[:, 1]])
    gap = float(np.max(np.abs(lhs - rhs) / np.maximum(rhs, 1e-300))) if len(e) else 0.0
    return gap <= 1e-10, f"max relative gap {gap:.2e} on the mesh scaled into the disk"


CHECKS = [
    ("vertex-set calculus", lambda e, r: _vertex_calculus(e, r, 100)),
    ("face angle sums", _angle_sums),
    ("local injectivity", _injectivity),
    ("Delaunay forms agree", _delaunay_forms),
    ("cotangent weights positive when acute", _cotan_positive),
    ("curvature differential", _dk_rows),
    ("conformal group action", _group_action),
    ("Dirichlet maximum principle", _dirichlet),
    ("factor recovery round trip", _round_trip),
    ("sinh half-distance identity", _sinh_half),
]


def run_checks(emb: Embedding, seed: int = 0) -> list[CheckResult]:
    """Run every invariant check; library errors count as failures."""
    rng = np.random.default_rng(seed)
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn(emb, rng)
        except AcuteRigidError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out
