"""Discrete conformal change, curvature, cotangent weights and the conformal flow.

A conformal factor ``u`` acts on edge lengths by
``l'_ij = exp((u_i + u_j) / 2) * l_ij``.  At an interior vertex the curvature
is ``K_i = 2 pi - (sum of incident inner angles)`` and its differential is the
cotangent Laplacian ``dK_i = sum_j eta_ij (du_i - du_j)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import MeshError, NonMetricError, PreconditionError, SolverError
from .geometry import PLMetric, face_angles, face_cotangents
from .mesh import Triangulation, VertexSet, boundary, interior, one_ring
from .network import dirichlet_interior, spd_solve

__all__ = [
    "conformal_change",
    "curvature",
    "curvature_all",
    "cotan_weights",
    "curvature_differential",
    "curvature_jacobian",
    "acuteness_box",
    "FlowTrajectory",
    "flow_integrate",
    "solve_zero_curvature",
    "check_local_max_principle",
    "restrict_metric",
]


def _factor(tri: Triangulation, u) -> np.ndarray:
    if u is None:
        return np.zeros(tri.n)
    u = np.asarray(u, dtype=float)
    if u.shape != (tri.n,):
        raise MeshError(f"conformal factor must have length {tri.n}, got {u.shape}")
    return u


def _scaled_lengths(metric: PLMetric, u) -> np.ndarray:
    u = _factor(metric.tri, u)
    e = metric.tri.edges
    return metric.lengths * np.exp(0.5 * (u[e[:, 0]] + u[e[:, 1]]))


def conformal_change(metric: PLMetric, u) -> PLMetric:
    """The metric ``u * l``.

    The result may violate triangle inequalities; query
    :attr:`PLMetric.is_metric` or :meth:`PLMetric.violations`.
    """
    return PLMetric(metric.tri, _scaled_lengths(metric, u))


def _checked_angles(metric: PLMetric, u, faces: np.ndarray) -> np.ndarray:
    """Angles of ``u * l`` on ``faces``; raises naming a non-metric face."""
    lengths = _scaled_lengths(metric, u)
    fl = lengths[metric.tri.face_edges[faces]]
    ang = face_angles(fl)
    bad = np.isnan(ang).any(axis=1)
    if bad.any():
        ids = faces[bad]
        raise NonMetricError(f"face {int(ids[0])} violates the triangle inequality under u", ids)
    return ang


def _interior_ids(tri: Triangulation, at) -> np.ndarray:
    if at is None:
        return tri.interior_vertices()
    ids = at.ids() if isinstance(at, VertexSet) else np.atleast_1d(np.asarray(at, dtype=np.int64))
    open_link = tri.rim[ids] | (np.diff(tri._vf_ptr)[ids] == 0)
    if open_link.any():
        raise MeshError(f"vertex {int(ids[open_link][0])} has no full face cycle")
    return ids


def curvature_all(metric: PLMetric, u=None) -> np.ndarray:
    """``2 pi - angle sum`` at every vertex; NaN at rim vertices and isolated ones."""
    tri = metric.tri
    ang = _checked_angles(metric, u, np.arange(tri.n_faces))
    sums = np.bincount(tri.faces.ravel(), weights=ang.ravel(), minlength=tri.n)
    K = 2.0 * np.pi - sums
    K[tri.rim | (np.diff(tri._vf_ptr) == 0)] = np.nan
    return K


def curvature(metric: PLMetric, u=None, at=None) -> np.ndarray:
    """Curvature ``K_i(u)`` at the vertices ``at`` (default: all interior vertices).

    Returns values in the order of ``at``.  Only faces touching the queried
    vertices need to stay metric.
    """
    tri = metric.tri
    ids = _interior_ids(tri, at)
    if len(ids) == 0:
        return np.zeros(0)
    touch = np.zeros(tri.n, dtype=bool)
    touch[ids] = True
    faces = np.flatnonzero(touch[tri.faces].any(axis=1))
    ang = _checked_angles(metric, u, faces)
    sums = np.bincount(tri.faces[faces].ravel(), weights=ang.ravel(), minlength=tri.n)
    return 2.0 * np.pi - sums[ids]


def _weights_on(metric: PLMetric, u, faces: np.ndarray) -> np.ndarray:
    """Half-sums of opposite cotangents, accumulated over ``faces`` only."""
    tri = metric.tri
    lengths = _scaled_lengths(metric, u)
    fl = lengths[tri.face_edges[faces]]
    _checked_angles(metric, u, faces)
    cot = face_cotangents(fl)
    eta = np.zeros(tri.n_edges)
    np.add.at(eta, tri.face_edges[faces].ravel(), 0.5 * cot.ravel())
    return eta


def cotan_weights(metric: PLMetric, u=None) -> np.ndarray:
    """Cotangent weights ``eta_ij = (cot theta_k + cot theta_k') / 2`` per edge.

    Boundary edges (``metric.tri.boundary_edges``) carry the single half
    cotangent; edges in no face get 0.
    """
    return _weights_on(metric, u, np.arange(metric.tri.n_faces))


def curvature_differential(metric: PLMetric, u, i: int) -> dict[int, float]:
    """Row ``i`` of ``dK``: ``{i: sum_j eta_ij, j: -eta_ij}``."""
    tri = metric.tri
    _interior_ids(tri, [i])
    faces = tri.vertex_faces(i)
    eta = _weights_on(metric, u, faces)
    row = {int(i): 0.0}
    for j in tri.neighbors(i):
        w = float(eta[tri.edge_id(i, j)])
        row[int(j)] = -w
        row[int(i)] += w
    return row


def curvature_jacobian(metric: PLMetric, u=None, rows=None) -> sp.csr_matrix:
    """Sparse ``dK`` with rows at ``rows`` (default: interior vertices) and all columns."""
    tri = metric.tri
    ids = _interior_ids(tri, rows)
    touch = np.zeros(tri.n, dtype=bool)
    touch[ids] = True
    faces = np.flatnonzero(touch[tri.faces].any(axis=1))
    eta = _weights_on(metric, u, faces)
    pos = np.full(tri.n, -1)
    pos[ids] = np.arange(len(ids))
    r, c, v = [], [], []
    for x, y in ((tri.edges[:, 0], tri.edges[:, 1]), (tri.edges[:, 1], tri.edges[:, 0])):
        m = pos[x] >= 0
        r += [pos[x[m]], pos[x[m]]]
        c += [x[m], y[m]]
        v += [eta[m], -eta[m]]
    return sp.csr_matrix(
        (np.concatenate(v), (np.concatenate(r), np.concatenate(c))), shape=(len(ids), tri.n)
    )


def restrict_metric(metric: PLMetric, sub: Triangulation) -> PLMetric:
    """Lengths of ``metric`` on a subcomplex sharing its vertex indices."""
    ids = metric.tri.edge_id(sub.edges[:, 0], sub.edges[:, 1])
    if (ids < 0).any():
        raise MeshError("subcomplex edge missing from the metric's triangulation")
    return PLMetric(sub, metric.lengths[ids])


def _region_faces(tri: Triangulation, region: VertexSet) -> np.ndarray:
    return np.flatnonzero(region.mask[tri.faces].all(axis=1))


def _max_angle_under_box(fl: np.ndarray, b: float) -> float:
    """Largest angle over all corner sign patterns of ``u`` in ``[-b, b]^3``."""
    worst = 0.0
    for s in np.array(np.meshgrid([-1, 1], [-1, 1], [-1, 1])).T.reshape(-1, 3):
        # side opposite corner k joins corners k+1, k+2
        scale = np.exp(0.5 * b * np.stack([s[1] + s[2], s[2] + s[0], s[0] + s[1]]))
        ang = face_angles(fl * scale)
        if np.isnan(ang).any():
            return math.inf
        worst = max(worst, float(ang.max()))
    return worst


def acuteness_box(metric: PLMetric, epsilon: float, faces=None, max_iter: int = 60) -> float:
    """Width ``2 delta`` of the factor box that keeps faces uniformly acute.

    Finds by bisection the largest ``b`` such that every ``u`` with
    ``|u|_inf <= b`` keeps all angles of ``faces`` at most ``pi/2 - eps/2``
    (checked on the 8 corner patterns of each face, where the extreme angles
    occur since each angle is monotone in each coordinate), and returns ``2b``.
    Returns 0 if the metric itself misses the target.
    """
    tri = metric.tri
    faces = np.arange(tri.n_faces) if faces is None else np.asarray(faces)
    if len(faces) == 0:
        return math.inf
    fl = metric.lengths[tri.face_edges[faces]]
    target = np.pi / 2 - epsilon / 2
    if _max_angle_under_box(fl, 0.0) > target:
        return 0.0
    lo, hi = 0.0, 1.0
    while _max_angle_under_box(fl, hi) <= target:
        lo, hi = hi, 2 * hi
        if hi > 1e6:
            return math.inf
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if _max_angle_under_box(fl, mid) <= target:
            lo = mid
        else:
            hi = mid
    return 2.0 * lo


# -- conformal flow ------------------------------------------------------------

@dataclass
class FlowTrajectory:
    """Recorded samples of a conformal-flow run.

    ``status`` is ``"complete"`` or ``"box_exit"`` (the factor reached the
    acuteness box; ``exit_time`` records when).
    """

    times: list = field(default_factory=list)
    u: list = field(default_factory=list)
    max_abs_K: list = field(default_factory=list)
    min_angle_margin: list = field(default_factory=list)
    max_abs_velocity: list = field(default_factory=list)
    status: str = "complete"
    exit_time: float | None = None

    @property
    def final(self) -> np.ndarray:
        return self.u[-1]

    def records(self):
        for t, u, k, m in zip(self.times, self.u, self.max_abs_K, self.min_angle_margin):
            yield {"t": float(t), "u": [float(x) for x in u], "max_abs_K": float(k), "min_angle_margin": float(m)}

    def write_jsonl(self, stream) -> None:
        for rec in self.records():
            stream.write(json.dumps(rec) + "\n")


def _boundary_values(tri: Triangulation, values, bnd: np.ndarray, name: str) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim == 0:
        v = np.full(tri.n, float(v))
    if v.shape != (tri.n,):
        raise MeshError(f"{name} must have length {tri.n}")
    if not np.isfinite(v[bnd]).all():
        raise PreconditionError(f"{name} must be finite on the boundary")
    out = np.zeros(tri.n)
    out[bnd] = v[bnd]
    return out


def flow_integrate(
    metric: PLMetric,
    region: VertexSet,
    boundary_velocity,
    t_end: float,
    dt: float = 1e-3,
    box: float | None = None,
    record_every: int = 1,
) -> FlowTrajectory:
    """Integrate the curvature-preserving conformal flow with classical RK4.

    Starting from ``u = 0``, boundary vertices of ``region`` move with the
    given constant velocity and interior velocities solve the cotangent
    harmonic system ``sum_j eta_ij(u) (du_i - du_j) = 0``.  Vertices outside
    ``region`` stay fixed.  If ``box`` is given the run stops once
    ``|u|_inf >= box`` with status ``"box_exit"``.
    """
    if region.cofinite:
        raise PreconditionError("region must be finite")
    if dt <= 0 or t_end < 0:
        raise PreconditionError("need dt > 0 and t_end >= 0")
    tri = metric.tri
    bnd = boundary(region).ids()
    inner = interior(region).ids()
    vb = _boundary_values(tri, boundary_velocity, bnd, "boundary velocity")
    faces = _region_faces(tri, region)
    inner_mask = np.zeros(tri.n, dtype=bool)
    inner_mask[inner] = True
    touch_faces = np.flatnonzero(inner_mask[tri.faces].any(axis=1))

    def velocity(u: np.ndarray) -> np.ndarray:
        eta = _weights_on(metric, u, touch_faces)
        v = vb.copy()
        try:
            v[inner] = dirichlet_interior(tri, eta, inner, vb)
        except PreconditionError as exc:
            raise SolverError(f"flow velocity solve failed: {exc}") from exc
        return v

    def observe(u: np.ndarray):
        K = curvature(metric, u, inner) if len(inner) else np.zeros(0)
        if len(faces):
            ang = _checked_angles(metric, u, faces)
            margin = float(np.pi / 2 - ang.max())
        else:
            margin = math.inf
        return float(np.abs(K).max(initial=0.0)), margin

    traj = FlowTrajectory()
    u = np.zeros(tri.n)
    n_steps = int(round(t_end / dt))
    k0, m0 = observe(u)
    traj.times.append(0.0); traj.u.append(u.copy()); traj.max_abs_K.append(k0); traj.min_angle_margin.append(m0)
    for step in range(1, n_steps + 1):
        k1 = velocity(u)
        k2 = velocity(u + 0.5 * dt * k1)
        k3 = velocity(u + 0.5 * dt * k2)
        k4 = velocity(u + dt * k3)
        u = u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = step * dt
        exited = box is not None and np.abs(u).max() >= box
        if step % record_every == 0 or step == n_steps or exited:
            kk, mm = observe(u)
            traj.times.append(t); traj.u.append(u.copy()); traj.max_abs_K.append(kk); traj.min_angle_margin.append(mm)
            traj.max_abs_velocity.append(float(np.abs(k1).max(initial=0.0)))
        if exited:
            traj.status, traj.exit_time = "box_exit", t
            break
    return traj


# -- boundary-value solver -----------------------------------------------------

def solve_zero_curvature(
    metric: PLMetric,
    region: VertexSet,
    boundary_u,
    tol: float = 1e-11,
    max_iter: int = 50,
    max_angle: float = np.pi / 2,
    u0=None,
) -> np.ndarray:
    """Newton's method for ``K_i(u) = 0`` on ``interior(region)`` with ``u`` fixed on its boundary.

    The Jacobian is the cotangent Laplacian.  A step is accepted only if it
    decreases ``|K|_inf`` and keeps every face of the generated subcomplex
    metric with angles below ``max_angle``; otherwise it is halved.  The
    result is a full-length array equal to ``boundary_u`` off the interior.
    """
    if region.cofinite:
        raise PreconditionError("region must be finite")
    tri = metric.tri
    bu = np.asarray(boundary_u, dtype=float)
    if bu.ndim == 0:
        bu = np.full(tri.n, float(bu))
    if bu.shape != (tri.n,):
        raise MeshError(f"boundary data must have length {tri.n}")
    bnd = boundary(region).ids()
    inner = interior(region).ids()
    if not np.isfinite(bu[bnd]).all():
        raise PreconditionError("boundary data must be finite")
    u = np.where(np.isfinite(bu), bu, 0.0)
    if len(inner) == 0:
        return u
    faces = _region_faces(tri, region)
    gb = np.zeros(tri.n)
    gb[bnd] = bu[bnd]

    def admissible(v: np.ndarray) -> bool:
        ang = face_angles(_scaled_lengths(metric, v)[tri.face_edges[faces]])
        return not np.isnan(ang).any() and float(ang.max()) < max_angle

    if u0 is not None:
        u[inner] = np.asarray(u0, dtype=float)[inner]
    else:
        # harmonic extension with the initial cotangent weights is a good start
        eta0 = _weights_on(metric, None, faces)
        try:
            u[inner] = dirichlet_interior(tri, eta0, inner, gb)
        except PreconditionError:
            u[inner] = 0.0
        if not admissible(u):
            u[inner] = 0.0
    if not admissible(u):
        raise SolverError("initial factor is not acute on the region")
    K = curvature(metric, u, inner)
    res = float(np.abs(K).max())
    for _ in range(max_iter):
        if res <= tol:
            return u
        J = curvature_jacobian(metric, u, inner).tocsc()[:, inner]
        step = spd_solve(J, -K)
        s, accepted = 1.0, False
        while s > 1e-10:
            trial = u.copy()
            trial[inner] += s * step
            if admissible(trial):
                Kt = curvature(metric, trial, inner)
                rt = float(np.abs(Kt).max())
                if rt < res:
                    u, K, res, accepted = trial, Kt, rt, True
                    break
            s *= 0.5
        if not accepted:
            break
    if res <= max(tol, 1e-10):
        return u
    raise SolverError(f"zero-curvature solve did not converge (|K|_inf = {res:.3e})")


# -- local maximum principle ----------------------------------------------------

def check_local_max_principle(metric: PLMetric, u, u2, i: int, tol: float = 1e-9, curvature_tol: float = 1e-8):
    """Check ``u2_i - u_i <= max_j (u2_j - u_j)`` over neighbors ``j`` of ``i``.

    Returns ``True``/``False``, or ``None`` (inconclusive) when either factor
    fails to be Delaunay on the 1-ring or to be flat at ``i``.
    """
    from .geometry import classify

    tri = metric.tri
    u = _factor(tri, u)
    u2 = _factor(tri, u2)
    ring = one_ring(tri, i)
    sub = restrict_metric(metric, ring.complex)
    for v in (u, u2):
        m = conformal_change(sub, v)
        if not m.is_metric or not classify(m, 0.0).delaunay:
            return None
        if abs(float(curvature(m, None, [i])[0])) > curvature_tol:
            return None
    d = u2 - u
    return bool(d[i] <= d[ring.neighbors].max() + tol)
