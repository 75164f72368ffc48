"""End-to-end experiments on finite patches.

Each experiment is a pure function of its inputs and returns a report whose
``to_dict`` output is written as one JSON line.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .conformal import acuteness_box, flow_integrate, solve_zero_curvature
from .errors import MeshError, PreconditionError, SolverError
from .geometry import Embedding, PLMetric, classify, covering_constants, segment_distance
from .mesh import VertexSet, boundary, interior
from .modulus import PLMap, dilatation, oscillation_constants
from .network import radial_exhaustion, spd_solve

__all__ = [
    "ExperimentReport",
    "TruncationCheck",
    "FlowToConstantReport",
    "recover_factor",
    "normalize_factor",
    "alternating_factor",
    "oscillation_experiment",
    "flow_to_constant_experiment",
]


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def recover_factor(emb_phi: Embedding, emb_psi: Embedding, tol: float = 1e-9) -> np.ndarray:
    """Least-squares conformal factor ``u`` with ``l(psi) = u * l(phi)``.

    Solves ``(u_i + u_j)/2 = log(l'_ij / l_ij)`` over all edges and raises
    :class:`PreconditionError` if the largest residual exceeds ``tol``.
    """
    tri = emb_phi.tri
    if not np.array_equal(tri.edges, emb_psi.tri.edges):
        raise MeshError("embeddings must share a triangulation")
    e = tri.edges
    l0 = np.abs(emb_phi.z[e[:, 0]] - emb_phi.z[e[:, 1]])
    l1 = np.abs(emb_psi.z[e[:, 0]] - emb_psi.z[e[:, 1]])
    b = np.log(l1 / l0)
    m = len(e)
    A = sp.csr_matrix((np.full(2 * m, 0.5), (np.repeat(np.arange(m), 2), e.ravel())), shape=(m, tri.n))
    used = np.zeros(tri.n, dtype=bool)
    used[e.ravel()] = True
    cols = np.flatnonzero(used)
    Au = A[:, cols]
    try:
        u_used = spd_solve((Au.T @ Au).tocsc(), Au.T @ b)
    except SolverError as exc:
        raise PreconditionError(f"edge system does not determine a factor: {exc}") from exc
    u = np.zeros(tri.n)
    u[cols] = u_used
    resid = float(np.abs(A @ u - b).max()) if m else 0.0
    if not resid <= tol:
        raise PreconditionError(f"no conformal factor relates the embeddings (residual {resid:.3e})")
    return u


def normalize_factor(u, region: VertexSet | None = None) -> np.ndarray:
    """Shift ``u`` by a constant so that ``-min u = max u`` (over ``region``)."""
    u = np.asarray(u, dtype=float)
    vals = u if region is None else u[region.ids()]
    return u - 0.5 * (vals.max() + vals.min())


def alternating_factor(metric: PLMetric, region: VertexSet, amplitude: float) -> np.ndarray:
    """Flat factor on ``region`` whose boundary values alternate ``+amplitude, -amplitude``.

    The sign alternates along increasing vertex index.  The result is
    normalized so that ``-min = max`` over ``region`` and is zero elsewhere.
    """
    bnd = boundary(region).ids()
    g = np.zeros(metric.tri.n)
    g[bnd] = amplitude * np.where(np.arange(len(bnd)) % 2 == 0, 1.0, -1.0)
    u = solve_zero_curvature(metric, region, g)
    out = normalize_factor(u, region)
    out[~region.mask] = 0.0
    return out


@dataclass
class ExperimentReport:
    """Result record of one experiment (one JSON line)."""

    experiment_id: str
    mesh: dict
    epsilon: float
    delta: float | None = None
    C: float | None = None
    K_sup: float | None = None
    C_prime: float | None = None
    log_C_prime: float | None = None
    M: float | None = None
    C_edge: float | None = None
    oscillation: float | None = None
    oscillation_applicable_pairs: float | None = None
    bound: float | None = None
    applicable: bool = False
    tolerances: dict = field(default_factory=dict)
    passed: bool = False
    runtimes: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _rim_distance(emb: Embedding) -> np.ndarray:
    """Distance from each vertex image to the nearest boundary edge."""
    tri = emb.tri
    be = tri.edges[tri.boundary_edges]
    if len(be) == 0:
        return np.full(tri.n, np.inf)
    p, q = emb.z[be[:, 0]], emb.z[be[:, 1]]
    return np.array([float(segment_distance(p, q, z, z).min()) for z in emb.z])


def oscillation_experiment(
    emb_phi: Embedding, emb_psi: Embedding, epsilon: float, experiment_id: str = "oscillation", tol: float = 1e-9
) -> ExperimentReport:
    """Factor oscillation against ``2M + 2 log C + log C' - log 2``.

    A pair ``(j, j')`` is admissible at this truncation when, with ``r`` the
    smallest radius satisfying ``|phi(j') - phi(j)| < r/(2C)`` and
    ``phi(R_j)`` inside ``D_r``, the disk of radius ``C C' r`` about
    ``phi(j)`` fits inside ``phi`` of the patch.  The report gives the
    oscillation over all vertex pairs and over admissible pairs; when no pair
    is admissible the bound is flagged as not applicable at this scale.
    """
    t0 = time.perf_counter()
    tri = emb_phi.tri
    for name, emb in (("phi", emb_phi), ("psi", emb_psi)):
        c = classify(emb.metric(), epsilon)
        if not c.uniformly_acute:
            raise PreconditionError(f"{name} is not uniformly acute at epsilon={epsilon} (max angle {c.max_angle:.6g})")
    u = recover_factor(emb_phi, emb_psi, tol)
    t1 = time.perf_counter()
    cover = covering_constants(emb_phi)
    K = dilatation(PLMap(emb_phi, emb_psi)).sup
    consts = oscillation_constants(epsilon, max(K, 1.0), cover.C)
    t2 = time.perf_counter()
    used = np.zeros(tri.n, dtype=bool)
    used[tri.faces.ravel()] = True
    vals = u[used]
    osc = float(vals.max() - vals.min())
    # admissible pairs: log(C C' r) <= log(inradius about phi(j))
    inner = tri.interior_vertices()
    rim_d = _rim_distance(emb_phi)
    log_cc = math.log(cover.C) + consts.log_C_prime
    best = None
    for j in inner:
        ring_r = float(np.abs(emb_phi.z[tri.neighbors(j)] - emb_phi.z[j]).max())
        budget = math.log(rim_d[j]) - log_cc if rim_d[j] > 0 else -math.inf
        if math.log(ring_r) > budget:
            continue
        # partners j' with 2C|phi(j') - phi(j)| <= exp(budget)
        dist = np.abs(emb_phi.z - emb_phi.z[j])
        ok = used & (np.log(np.maximum(2 * cover.C * dist, 1e-300)) < budget)
        if ok.any():
            spread = float(np.abs(u[ok] - u[j]).max())
            best = spread if best is None else max(best, spread)
    applicable = best is not None
    rep = ExperimentReport(
        experiment_id=experiment_id,
        mesh={"n_vertices": tri.n, "n_faces": tri.n_faces},
        epsilon=float(epsilon),
        delta=cover.delta,
        C=cover.C,
        K_sup=K,
        C_prime=consts.C_prime,
        log_C_prime=consts.log_C_prime,
        M=consts.M,
        C_edge=consts.C_edge,
        oscillation=osc,
        oscillation_applicable_pairs=best,
        bound=consts.value,
        applicable=applicable,
        tolerances={"recover_factor_residual": tol, "bound": tol},
        passed=bool(osc <= consts.value + tol),
        runtimes={"recover": t1 - t0, "constants": t2 - t1, "total": time.perf_counter() - t0},
    )
    if not applicable:
        rep.notes.append("bound not applicable at this scale: no pair fits the required radius C*C'*r")
    rep.notes.append("covering constant certified only over faces with three interior vertices")
    return rep


@dataclass
class TruncationCheck:
    n_vertices: int
    n_interior: int
    max_excess: float
    max_abs_K: float
    status: str
    exit_time: float | None
    passed: bool


@dataclass
class FlowToConstantReport:
    experiment_id: str
    u_bar_sup: float
    delta: float
    box: float
    dt: float
    tolerance: float
    truncations: list
    passed: bool
    runtime: float
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def flow_to_constant_experiment(
    emb: Embedding,
    u_bar,
    delta: float | None = None,
    truncations=None,
    epsilon: float = 0.1,
    dt: float = 1e-3,
    tol: float = 1e-6,
    n_truncations: int = 3,
    r0: float | None = None,
    experiment_id: str = "flow_to_constant",
) -> FlowToConstantReport:
    """Flow each truncation with boundary velocity ``u_bar / |u_bar|_inf`` up to ``t = delta``.

    Verifies ``|u_bar_i - u_i(delta)| <= |u_bar|_inf - delta + tol`` on every
    vertex of every truncation.  ``u_bar`` must be normalized
    (``-min = max``) and flat at the interior vertices of each truncation.
    Truncations default to ``n_truncations`` sets of the radial exhaustion
    about vertex 0 with ratio ``2C``, starting from ``r0`` (default: 1.5 times the longest edge at
    vertex 0).
    """
    t0 = time.perf_counter()
    tri = emb.tri
    metric = emb.metric()
    ub = np.asarray(u_bar, dtype=float)
    if ub.shape != (tri.n,):
        raise MeshError("u_bar has the wrong length")
    if truncations is None:
        C = covering_constants(emb).C
        if r0 is None:
            r0 = 1.5 * float(np.abs(emb.z[tri.neighbors(0)] - emb.z[0]).max())
        ex = radial_exhaustion(emb, 0, C, n_truncations - 1, r0)
        truncations = list(ex.sets)
    truncations = list(truncations)
    vals = ub[np.isfinite(ub)]
    sup = float(np.abs(vals).max())
    if sup == 0 or not math.isclose(-vals.min(), vals.max(), rel_tol=1e-9, abs_tol=1e-12):
        raise PreconditionError("u_bar must be nonzero and normalized so that -min = max")
    box = acuteness_box(metric, epsilon)
    if delta is None:
        delta = min(box / 2, sup / 2)
    if not 0 < delta < sup:
        raise PreconditionError("delta must lie in (0, |u_bar|_inf)")
    if delta > box / 2:
        raise PreconditionError(f"delta {delta:.4g} exceeds half the acuteness box {box:.4g}")
    checks = []
    for region in truncations:
        traj = flow_integrate(metric, region, ub / sup, delta, dt=dt, box=box, record_every=max(1, int(round(delta / dt))))
        u_end = traj.final
        ids = region.ids()
        excess = float((np.abs(ub[ids] - u_end[ids]) - (sup - delta)).max())
        inner = interior(region).ids()
        kmax = float(np.max(traj.max_abs_K)) if traj.max_abs_K else 0.0
        ok = traj.status == "complete" and excess <= tol
        checks.append(TruncationCheck(len(ids), len(inner), excess, kmax, traj.status, traj.exit_time, bool(ok)))
    return FlowToConstantReport(
        experiment_id, sup, float(delta), float(box), dt, tol, checks, all(c.passed for c in checks), time.perf_counter() - t0
    )
