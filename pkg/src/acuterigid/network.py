"""Electrical networks: discrete harmonic functions, extremal length and width.

Conductances ``eta`` and resistances ``mu = 1/eta`` live on the edges of a
:class:`~acuterigid.mesh.Triangulation` (which may be a face-less graph).

For disjoint vertex sets ``V1``, ``V2`` with finite ``V0 = (V1 | V2)^c`` the
edge pool is ``E0 = {ij : i in V0 or j in V0}``.  Extremal length ``EL`` is the
least ``sum mu w^2`` over densities whose sum over every cut is at least 1;
extremal width ``EW`` asks instead that ``sum mu w`` over every path be at
least 1.  ``EL`` is the effective resistance across ``E0`` and ``EL * EW = 1``.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla
from scipy.sparse.csgraph import connected_components

from .errors import BudgetExceededError, MeshError, PreconditionError, SingularSystemError, SolverError
from .mesh import Triangulation, VertexSet, boundary, closure, interior

__all__ = [
    "Network",
    "ELProblem",
    "ELResult",
    "EWResult",
    "RadialExhaustion",
    "RecurrenceProfile",
    "AreaBound",
    "solve_dirichlet",
    "harmonic_residual",
    "extremal_length",
    "extremal_width",
    "extremal_length_by_cuts",
    "radial_exhaustion",
    "recurrence_profile",
    "ring_bound",
    "area_sum_bound_check",
    "sine_law_area_check",
]

PATH_BUDGET = 1_000_000


class Network:
    """Positive conductances on the edges of a triangulation or graph.

    Exactly one of ``conductance`` / ``resistance`` is canonical; the other is
    derived on access, so ``mu * eta == 1`` as stored.  With neither given all
    conductances are 1.
    """

    def __init__(self, tri: Triangulation, conductance=None, resistance=None):
        if conductance is not None and resistance is not None:
            raise ValueError("give conductance or resistance, not both")
        self.tri = tri
        self._canonical = "resistance" if resistance is not None else "conductance"
        raw = resistance if resistance is not None else conductance
        values = np.ones(tri.n_edges) if raw is None else np.asarray(raw, dtype=float)
        if values.shape != (tri.n_edges,):
            raise MeshError(f"expected {tri.n_edges} edge values, got {values.shape}")
        if not (np.isfinite(values).all() and (values > 0).all()):
            raise MeshError("edge conductances/resistances must be positive and finite")
        self._values = values

    @classmethod
    def from_edges(cls, n: int, edges, conductance=None, resistance=None) -> "Network":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        tri = Triangulation(n, np.zeros((0, 3), np.int64), edges)
        # Triangulation sorts edges; carry values along
        order = tri.edge_id(edges[:, 0], edges[:, 1])
        def remap(v):
            if v is None:
                return None
            out = np.empty(tri.n_edges)
            out[order] = np.asarray(v, dtype=float)
            return out
        return cls(tri, remap(conductance), remap(resistance))

    @property
    def conductance(self) -> np.ndarray:
        return self._values if self._canonical == "conductance" else 1.0 / self._values

    @property
    def resistance(self) -> np.ndarray:
        return self._values if self._canonical == "resistance" else 1.0 / self._values

    def scaled_resistance(self, s: float) -> "Network":
        return Network(self.tri, resistance=self.resistance * s)


# -- Dirichlet problem ---------------------------------------------------------

def _laplacian_blocks(tri: Triangulation, eta: np.ndarray, inner: np.ndarray):
    """Rows of the weighted Laplacian at ``inner`` split into inner/other columns."""
    n = tri.n
    pos = np.full(n, -1, dtype=np.int64)
    pos[inner] = np.arange(len(inner))
    a, b = tri.edges[:, 0], tri.edges[:, 1]
    sel = (pos[a] >= 0) | (pos[b] >= 0)
    a, b, w = a[sel], b[sel], eta[sel]
    rows, cols, vals = [], [], []
    orows, ocols, ovals = [], [], []
    for x, y in ((a, b), (b, a)):
        m = pos[x] >= 0
        rows.append(pos[x[m]]); cols.append(pos[x[m]]); vals.append(w[m])
        mi = m & (pos[y] >= 0)
        rows.append(pos[x[mi]]); cols.append(pos[y[mi]]); vals.append(-w[mi])
        mo = m & (pos[y] < 0)
        orows.append(pos[x[mo]]); ocols.append(y[mo]); ovals.append(-w[mo])
    k = len(inner)
    A = sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(k, k)
    )
    B = sp.csr_matrix(
        (np.concatenate(ovals), (np.concatenate(orows), np.concatenate(ocols))), shape=(k, n)
    )
    return A, B, (a, b, w, pos)


def _check_components(tri: Triangulation, inner: np.ndarray, parts) -> None:
    a, b, _, pos = parts
    k = len(inner)
    both = (pos[a] >= 0) & (pos[b] >= 0)
    g = sp.csr_matrix((np.ones(both.sum()), (pos[a[both]], pos[b[both]])), shape=(k, k))
    ncomp, labels = connected_components(g, directed=False)
    touched = np.zeros(ncomp, dtype=bool)
    one = (pos[a] >= 0) ^ (pos[b] >= 0)
    ends = np.where(pos[a[one]] >= 0, pos[a[one]], pos[b[one]])
    touched[labels[ends]] = True
    if not touched.all():
        lonely = inner[labels == np.flatnonzero(~touched)[0]]
        raise SingularSystemError(
            f"interior component containing vertex {int(lonely[0])} has no boundary contact"
        )


def spd_solve(A: sp.spmatrix, rhs: np.ndarray) -> np.ndarray:
    """Direct sparse solve of a symmetric positive definite system."""
    try:
        lu = sla.splu(sp.csc_matrix(A), permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise SolverError(f"factorization failed: {exc}") from exc
    x = lu.solve(np.asarray(rhs, dtype=float))
    if not np.isfinite(x).all():
        raise SolverError("linear solve produced non-finite values")
    return x


def dirichlet_interior(tri: Triangulation, eta: np.ndarray, inner: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Values at ``inner`` of the ``eta``-harmonic extension of ``g``.

    Only rows at ``inner`` are assembled, so ``eta`` needs to be meaningful
    (and positive) just on edges incident to ``inner``.
    """
    inner = np.asarray(inner, dtype=np.int64)
    if len(inner) == 0:
        return np.zeros(0)
    A, B, parts = _laplacian_blocks(tri, eta, inner)
    if (parts[2] <= 0).any():
        raise PreconditionError("conductances must be positive on edges at interior vertices")
    _check_components(tri, inner, parts)
    g_full = np.nan_to_num(np.asarray(g, dtype=float))
    return spd_solve(A, -(B @ g_full))


def solve_dirichlet(net: Network, region: VertexSet, g) -> np.ndarray:
    """Unique function on ``region`` equal to ``g`` on its boundary and harmonic inside.

    ``g`` is a full-length vertex array (only boundary entries are read).
    The result is a full-length array with NaN outside ``region``.
    """
    if region.cofinite:
        raise PreconditionError("region must be finite")
    tri = net.tri
    g = np.asarray(g, dtype=float)
    if g.shape != (tri.n,):
        raise MeshError(f"boundary data must have length {tri.n}")
    bnd = boundary(region).ids()
    inner = interior(region).ids()
    if not np.isfinite(g[bnd]).all():
        raise PreconditionError("boundary data must be finite")
    f = np.full(tri.n, np.nan)
    f[bnd] = g[bnd]
    gb = np.zeros(tri.n)
    gb[bnd] = g[bnd]
    f[inner] = dirichlet_interior(tri, net.conductance, inner, gb)
    return f


def harmonic_residual(net: Network, region: VertexSet, f) -> float:
    """Largest ``|sum_j eta_ij (f_j - f_i)|`` over interior vertices of ``region``."""
    inner = interior(region).ids()
    if len(inner) == 0:
        return 0.0
    L = net.tri.adjacency(net.conductance)
    deg = np.asarray(L.sum(axis=1)).ravel()
    fv = np.nan_to_num(np.asarray(f, dtype=float))
    r = (L @ fv - deg * fv)[inner]
    return float(np.abs(r).max())


# -- extremal length and width -------------------------------------------------

@dataclass(frozen=True)
class ELProblem:
    """Extremal-length problem between disjoint ``v1`` and ``v2``.

    ``direct_edges=True`` also admits edges joining ``v1`` to ``v2`` (which
    the edge pool ``E0`` otherwise excludes), giving the plain effective
    resistance of the network.
    """

    net: Network
    v1: VertexSet
    v2: VertexSet
    direct_edges: bool = False

    def __post_init__(self):
        if self.v1.is_empty() or self.v2.is_empty():
            raise PreconditionError("V1 and V2 must be nonempty")
        if (self.v1.mask & self.v2.mask).any() or (self.v1.cofinite and self.v2.cofinite):
            raise PreconditionError("V1 and V2 must be disjoint")
        v0 = (self.v1 | self.v2).complement()
        if v0.cofinite and self.net.tri.rim.any():
            raise PreconditionError("V0 = (V1 | V2)^c must be finite")

    @property
    def v0(self) -> VertexSet:
        return (self.v1 | self.v2).complement()

    def edge_pool(self) -> np.ndarray:
        """Ids of edges in ``E0``."""
        e = self.net.tri.edges
        m0 = self.v0.mask
        sel = m0[e[:, 0]] | m0[e[:, 1]]
        if self.direct_edges:
            m1, m2 = self.v1.mask, self.v2.mask
            sel |= (m1[e[:, 0]] & m2[e[:, 1]]) | (m2[e[:, 0]] & m1[e[:, 1]])
        return np.flatnonzero(sel)


@dataclass
class ELResult:
    EL: float
    edges: np.ndarray
    w: np.ndarray
    potential: np.ndarray
    connected: bool = True


def extremal_length(p: ELProblem) -> ELResult:
    """Extremal length via the harmonic potential.

    ``f`` is harmonic on ``V0`` with ``f = 0`` on ``V1`` and ``1`` on ``V2``;
    the optimal density is the unit current ``w = eta |df| / C_eff`` and
    ``EL = 1 / C_eff`` is the effective resistance.  ``EL = inf`` when no
    path joins ``V1`` and ``V2``.
    """
    tri = p.net.tri
    pool = p.edge_pool()
    eta = p.net.conductance[pool]
    e = tri.edges[pool]
    m1, m2 = p.v1.mask, p.v2.mask
    n = tri.n
    # contract V1 -> node n, V2 -> node n + 1
    node = np.arange(n + 2)
    node[:n][m1] = n
    node[:n][m2] = n + 1
    a, b = node[e[:, 0]], node[e[:, 1]]
    potential = np.full(n, np.nan)
    potential[m1] = 0.0
    potential[m2] = 1.0
    g = sp.csr_matrix((np.ones(len(a)), (a, b)), shape=(n + 2, n + 2))
    _, labels = connected_components(g, directed=False)
    v0 = np.flatnonzero(p.v0.mask)
    if labels[n] != labels[n + 1]:
        potential[v0] = np.where(labels[v0] == labels[n + 1], 1.0, 0.0)
        return ELResult(math.inf, pool, np.zeros(len(pool)), potential, connected=False)
    live = v0[labels[v0] == labels[n]]
    dead = v0[labels[v0] != labels[n]]
    potential[dead] = 0.0
    gfull = np.zeros(n + 2)
    gfull[n + 1] = 1.0
    pos = np.full(n + 2, -1)
    pos[live] = np.arange(len(live))
    k = len(live)
    if k:
        rows, cols, vals, rhs = [], [], [], np.zeros(k)
        for x, y in ((a, b), (b, a)):
            m = pos[x] >= 0
            rows.append(pos[x[m]]); cols.append(pos[x[m]]); vals.append(eta[m])
            mi = m & (pos[y] >= 0)
            rows.append(pos[x[mi]]); cols.append(pos[y[mi]]); vals.append(-eta[mi])
            mo = m & (pos[y] < 0)
            np.add.at(rhs, pos[x[mo]], eta[mo] * gfull[y[mo]])
        A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(k, k))
        potential[live] = spd_solve(A, rhs)
    fn = np.concatenate([np.nan_to_num(potential), [0.0, 1.0]])
    df = fn[b] - fn[a]
    c_eff = float(np.sum(eta * df * df))
    if c_eff <= 0:
        raise SolverError("effective conductance is not positive")
    w = eta * np.abs(df) / c_eff
    return ELResult(1.0 / c_eff, pool, w, potential)


def _active_set_qp(d: np.ndarray, A: np.ndarray, x0: np.ndarray, tol: float = 1e-12, max_iter: int = 100_000):
    """Minimize ``sum d x^2`` subject to ``A x >= 1`` from a feasible ``x0``.

    Primal active-set method; each working-set subproblem is an
    equality-constrained least-squares problem with a closed-form solution.
    """
    hinv = 1.0 / (2.0 * d)
    x = x0.astype(float).copy()
    work: list[int] = []
    for _ in range(max_iter):
        if work:
            Aw = A[work]
            G = (Aw * hinv) @ Aw.T
            nu = np.linalg.solve(G, np.ones(len(work)))
            y = hinv * (Aw.T @ nu)
        else:
            nu = np.zeros(0)
            y = np.zeros_like(x)
        step = y - x
        if np.abs(step).max(initial=0.0) <= tol * (1.0 + np.abs(x).max(initial=0.0)):
            if len(nu) == 0 or nu.min() >= -tol:
                return y, work, nu
            work.pop(int(np.argmin(nu)))
            x = y
            continue
        Ap = A @ step
        slack = A @ x - 1.0
        alpha, block = 1.0, -1
        inactive = np.setdiff1d(np.arange(len(A)), work)
        for i in inactive:
            if Ap[i] < -1e-15:
                ai = -slack[i] / Ap[i]
                if ai < alpha:
                    alpha, block = ai, int(i)
        x = x + max(alpha, 0.0) * step
        if block >= 0:
            work.append(block)
    raise SolverError("active-set QP did not converge")


@dataclass
class EWResult:
    EW: float
    edges: np.ndarray
    w: np.ndarray
    paths: list = field(default_factory=list)


def _shortest_path(adj: dict, sources: set, targets: set, length: dict):
    dist = {s: 0.0 for s in sources}
    prev: dict = {}
    heap = [(0.0, s) for s in sources]
    heapq.heapify(heap)
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist.get(v, math.inf):
            continue
        if v in targets:
            path, cur = [], v
            while cur not in sources:
                cur, eid = prev[cur]
                path.append(eid)
            return d, path
        for u, eid in adj.get(v, ()):
            nd = d + length[eid]
            if nd < dist.get(u, math.inf):
                dist[u] = nd
                prev[u] = (v, eid)
                heapq.heappush(heap, (nd, u))
    return math.inf, None


def extremal_width(p: ELProblem, max_paths: int = PATH_BUDGET, max_edges: int = 5000, tol: float = 1e-10) -> EWResult:
    """Extremal width by constraint generation over paths.

    With ``x = mu w`` the problem is ``min sum eta x^2`` subject to every path
    having ``x``-length at least 1.  Violated paths are separated with a
    shortest-path search and the QP is re-solved on the growing path set.
    """
    tri = p.net.tri
    pool = p.edge_pool()
    if len(pool) > max_edges:
        raise BudgetExceededError(f"edge pool of {len(pool)} exceeds enumeration budget {max_edges}")
    eta = p.net.conductance[pool]
    local = {int(e): k for k, e in enumerate(pool)}
    m1, m2 = p.v1.mask, p.v2.mask
    adj: dict[int, list] = {}
    for e in pool:
        i, j = (int(v) for v in tri.edges[e])
        k = local[int(e)]
        if not m2[i] and not (m1[j] and not m1[i]):
            adj.setdefault(i, []).append((j, k))
        if not m2[j] and not (m1[i] and not m1[j]):
            adj.setdefault(j, []).append((i, k))
    sources = set(np.flatnonzero(m1).tolist())
    targets = set(np.flatnonzero(m2).tolist())
    x = np.zeros(len(pool))
    rows: list[np.ndarray] = []
    seen: set = set()
    while True:
        d, path = _shortest_path(adj, sources, targets, {k: max(v, 0.0) for k, v in enumerate(x)})
        if path is None:
            if not rows:
                return EWResult(0.0, pool, np.zeros(len(pool)), [])
            break
        if d >= 1.0 - tol:
            break
        key = frozenset(path)
        if key in seen:
            break
        seen.add(key)
        row = np.zeros(len(pool))
        row[path] = 1.0
        rows.append(row)
        if len(rows) > max_paths:
            raise BudgetExceededError("path budget exceeded")
        A = np.array(rows)
        start = x / max(float(np.min(A @ x)), 1e-300) if (A @ x).min() > 0 else np.ones(len(pool))
        x, _, _ = _active_set_qp(eta, A, start)
    paths = [pool[np.flatnonzero(r)] for r in rows]
    return EWResult(float(np.sum(eta * x * x)), pool, eta * x, paths)


def extremal_length_by_cuts(p: ELProblem, max_edges: int = 16) -> float:
    """Extremal length by exhaustive cut enumeration (small instances only).

    Solves ``min sum mu w^2`` subject to ``sum_{e in q} w_e >= 1`` for every
    minimal cut ``q`` of ``E0``.
    """
    tri = p.net.tri
    pool = p.edge_pool()
    if len(pool) > max_edges:
        raise BudgetExceededError(f"{len(pool)} edges exceed the cut-enumeration budget {max_edges}")
    mu = p.net.resistance[pool]
    m1, m2 = p.v1.mask, p.v2.mask
    ends = tri.edges[pool]

    def separates(removed: set) -> bool:
        adj: dict[int, list] = {}
        for k, (i, j) in enumerate(ends.tolist()):
            if k in removed:
                continue
            adj.setdefault(i, []).append(j)
            adj.setdefault(j, []).append(i)
        stack = list(np.flatnonzero(m1).tolist())
        seen = set(stack)
        while stack:
            v = stack.pop()
            if m2[v]:
                return False
            for u in adj.get(v, ()):
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return True

    if separates(set()):
        return math.inf
    cuts: list[frozenset] = []
    for size in range(1, len(pool) + 1):
        for combo in itertools.combinations(range(len(pool)), size):
            s = frozenset(combo)
            if any(c <= s for c in cuts):
                continue
            if separates(set(s)):
                cuts.append(s)
    A = np.zeros((len(cuts), len(pool)))
    for r, c in enumerate(cuts):
        A[r, list(c)] = 1.0
    w, _, _ = _active_set_qp(mu, A, np.ones(len(pool)))
    return float(np.sum(mu * w * w))


# -- recurrence diagnostics ----------------------------------------------------

@dataclass(frozen=True)
class RadialExhaustion:
    """Nested sets ``V_k = {i : |z_i - z_center| < r_k}`` with ``r_k = (2C)^k r0``."""

    center: int
    C: float
    radii: tuple
    sets: tuple


def radial_exhaustion(emb, center: int, C: float, n: int, r0: float | None = None, rel_tol: float = 1e-9) -> RadialExhaustion:
    """Exhaustion by disks of radii ``(2C)^k r0`` around ``center``.

    ``r0`` defaults to the largest distance from ``center`` to a neighbor.
    Radii are shrunk by ``rel_tol`` so lattice points at exactly ``r_k`` fall
    outside.  Raises :class:`PreconditionError` if ``V_n`` reaches the rim.
    """
    tri = emb.tri
    dist = np.abs(emb.z - emb.z[center])
    if r0 is None:
        r0 = float(dist[tri.neighbors(center)].max())
    radii = tuple(r0 * (2.0 * C) ** k for k in range(n + 1))
    sets = tuple(VertexSet(tri, dist < r * (1.0 - rel_tol)) for r in radii)
    if (sets[-1].mask & tri.rim).any():
        raise PreconditionError(f"patch too small for {n} rings (radius {radii[-1]:.6g})")
    return RadialExhaustion(center, float(C), radii, sets)


@dataclass
class RecurrenceProfile:
    ring_el: list
    cumulative: list
    bound: float | None
    radii: tuple = ()

    @property
    def all_above_bound(self) -> bool:
        return self.bound is not None and all(v >= self.bound for v in self.ring_el)


def ring_bound(epsilon: float, C: float) -> float:
    """Per-ring lower bound ``sin^2(eps) / (12 pi C^2)``."""
    return math.sin(epsilon) ** 2 / (12.0 * math.pi * C * C)


def recurrence_profile(net: Network, rings, epsilon: float | None = None, C: float | None = None) -> RecurrenceProfile:
    """Per-ring ``EL(V_{k-1}, closure(V_k^c))`` and their running sums.

    ``rings`` is a sequence ``V_0, V_1, ..., V_n`` of nested finite sets (or a
    :class:`RadialExhaustion`).  The running sum is a lower bound for
    ``EL(V_0, V_n^c)``; it is reported as a trend, not a proof of recurrence.
    """
    radii = ()
    if isinstance(rings, RadialExhaustion):
        radii, C = rings.radii, rings.C if C is None else C
        rings = rings.sets
    rings = list(rings)
    values = []
    for k in range(1, len(rings)):
        inner, outer = rings[k - 1], rings[k]
        if not inner <= outer or inner == outer:
            raise PreconditionError(f"rings {k - 1} and {k} are not strictly nested")
        far = closure(outer.complement())
        if (inner.mask & far.mask).any():
            raise PreconditionError(f"ring {k - 1} meets the closure of the complement of ring {k}")
        values.append(extremal_length(ELProblem(net, inner, far)).EL)
    bound = ring_bound(epsilon, C) if epsilon is not None and C is not None else None
    return RecurrenceProfile(values, list(np.cumsum(values)), bound, radii)


@dataclass(frozen=True)
class AreaBound:
    lhs: float
    area_term: float
    rhs: float
    ok: bool


def area_sum_bound_check(emb, exhaustion: RadialExhaustion, k: int, epsilon: float) -> AreaBound:
    """Compare ``sum_{E0} l_e^2`` with ``(12 pi C^2 / sin^2 eps) r_{k-1}^2``.

    ``E0 = E0(V_{k-1}, closure(V_k^c))``.  ``area_term`` is the middle link
    ``(1/sin^2 eps) sum_{e in E0} (|face_e| + |face_e'|)`` of the chain, and
    ``ok`` requires ``lhs <= area_term <= rhs``.
    """
    if not 1 <= k < len(exhaustion.sets):
        raise PreconditionError("ring index out of range")
    tri = emb.tri
    inner = exhaustion.sets[k - 1]
    far = closure(exhaustion.sets[k].complement())
    pool = ELProblem(Network(tri), inner, far).edge_pool()
    e = tri.edges[pool]
    lhs = float(np.sum(np.abs(emb.z[e[:, 0]] - emb.z[e[:, 1]]) ** 2))
    s2 = math.sin(epsilon) ** 2
    if s2 == 0:
        return AreaBound(lhs, math.inf, math.inf, True)
    areas = emb.signed_areas()
    ef = tri.edge_faces[pool]
    area_term = float(np.where(ef >= 0, areas[np.maximum(ef, 0)], 0.0).sum()) / s2
    C = exhaustion.C
    rhs = 12.0 * math.pi * C * C / s2 * exhaustion.radii[k - 1] ** 2
    ok = lhs <= area_term * (1.0 + 1e-12) and area_term <= rhs * (1.0 + 1e-12)
    return AreaBound(lhs, area_term, rhs, bool(ok))


def sine_law_area_check(emb, epsilon: float) -> tuple[np.ndarray, np.ndarray, bool]:
    """Face areas against ``l^2 sin^2(eps) / 2`` for the longest edge of each face."""
    fl = emb.metric().face_lengths()
    areas = emb.signed_areas()
    bound = fl.max(axis=1) ** 2 * math.sin(epsilon) ** 2 / 2.0
    return areas, bound, bool((areas >= bound).all())
