from __future__ import annotations

import math

import cvxpy as cp
import numpy as np
import pytest

from acuterigid.conformal import cotan_weights
from acuterigid.errors import BudgetExceededError, PreconditionError, SingularSystemError
from acuterigid.generators import hex_disk, hex_patch
from acuterigid.geometry import covering_constants, induced_metric
from acuterigid.mesh import Triangulation, VertexSet, boundary, closure
from acuterigid.network import (
    ELProblem,
    Network,
    area_sum_bound_check,
    extremal_length,
    extremal_length_by_cuts,
    extremal_width,
    harmonic_residual,
    radial_exhaustion,
    recurrence_profile,
    ring_bound,
    sine_law_area_check,
    solve_dirichlet,
)


def random_network(rng, max_edges=20):
    """Random connected network with small V1, V2 joined by at least one pool path."""
    while True:
        p = _random_network(rng, max_edges)
        if extremal_length(p).connected:
            return p


def _random_network(rng, max_edges):
    n = int(rng.integers(4, 10))
    edges = set()
    perm = rng.permutation(n)
    for k in range(1, n):
        a, b = perm[k], perm[rng.integers(0, k)]
        edges.add((min(a, b), max(a, b)))
    target = int(rng.integers(len(edges), max_edges + 1))
    while len(edges) < min(target, n * (n - 1) // 2):
        a, b = rng.choice(n, 2, replace=False)
        edges.add((min(a, b), max(a, b)))
    e = np.array(sorted(edges))
    net = Network.from_edges(n, e, conductance=rng.uniform(0.1, 3.0, len(e)))
    k1 = int(rng.integers(1, 3))
    k2 = int(rng.integers(1, 3))
    ids = rng.permutation(n)
    v1 = net.tri.vertex_set(ids[:k1])
    v2 = net.tri.vertex_set(ids[k1 : k1 + k2])
    return ELProblem(net, v1, v2, direct_edges=bool(rng.integers(0, 2)))


def thomson_el(p: ELProblem) -> float:
    """Effective resistance as the least energy of a unit flow (Thomson principle)."""
    pool = p.edge_pool()
    e = p.net.tri.edges[pool]
    mu = p.net.resistance[pool]
    n = p.net.tri.n
    node = np.arange(n)
    node[p.v1.mask] = n
    node[p.v2.mask] = n + 1
    flow = cp.Variable(len(pool))
    inc = np.zeros((n + 2, len(pool)))
    inc[node[e[:, 0]], np.arange(len(pool))] += 1
    inc[node[e[:, 1]], np.arange(len(pool))] -= 1
    b = np.zeros(n + 2)
    b[n], b[n + 1] = 1.0, -1.0
    keep = [k for k in range(n + 2) if k == n or k == n + 1 or (k < n and p.v0.mask[k])]
    prob = cp.Problem(cp.Minimize(cp.sum(cp.multiply(mu, cp.square(flow)))), [inc[keep] @ flow == b[keep]])
    prob.solve()
    return float(prob.value)


def potential_ew(p: ELProblem) -> float:
    """Extremal width as a QP over edge lengths x with a distance potential."""
    pool = p.edge_pool()
    e = p.net.tri.edges[pool]
    eta = p.net.conductance[pool]
    n = p.net.tri.n
    x = cp.Variable(len(pool), nonneg=True)
    d = cp.Variable(n)
    cons = [d[p.v1.ids()] == 0, d[p.v2.ids()] >= 1]
    cons += [d[e[:, 1]] <= d[e[:, 0]] + x, d[e[:, 0]] <= d[e[:, 1]] + x]
    prob = cp.Problem(cp.Minimize(cp.sum(cp.multiply(eta, cp.square(x)))), cons)
    prob.solve()
    return float(prob.value)


def test_network_conductance_resistance_roundtrip():
    tri = hex_patch(1).tri
    net = Network(tri, resistance=np.arange(1, tri.n_edges + 1, dtype=float))
    assert np.allclose(net.conductance * net.resistance, 1.0)
    assert np.allclose(net.scaled_resistance(3).resistance, 3 * net.resistance)
    with pytest.raises(ValueError):
        Network(tri, conductance=np.ones(tri.n_edges), resistance=np.ones(tri.n_edges))


def test_dirichlet_path_and_star():
    # path 0-1-2-3-4, region {1, 2, 3}: the ends 1 and 3 are boundary (neighbors outside)
    net = Network.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    region = net.tri.vertex_set([1, 2, 3])
    assert boundary(region).ids().tolist() == [1, 3]
    f = solve_dirichlet(net, region, np.array([9.0, 0.0, 7.0, 1.0, 9.0]))
    assert f[2] == pytest.approx(0.5)
    assert np.isnan(f[[0, 4]]).all()
    # star with center 0 and leaves 1..m, each leaf tied to an outside vertex
    m = 5
    cond = np.array([1.0, 2.0, 0.5, 3.0, 1.5])
    edges = [(0, j) for j in range(1, m + 1)] + [(j, m + j) for j in range(1, m + 1)]
    star = Network.from_edges(2 * m + 1, edges, conductance=np.concatenate([cond, np.ones(m)]))
    g = np.zeros(2 * m + 1)
    g[1 : m + 1] = [1.0, -2.0, 4.0, 0.5, 3.0]
    f = solve_dirichlet(star, star.tri.vertex_set(range(m + 1)), g)
    assert f[0] == pytest.approx(float(cond @ g[1 : m + 1] / cond.sum()))


def test_dirichlet_constant_and_max_principle(rng):
    emb = hex_patch(4)
    net = Network(emb.tri, conductance=cotan_weights(induced_metric(emb)))
    region = emb.tri.all_vertices()
    f = solve_dirichlet(net, region, np.full(emb.tri.n, 2.5))
    assert np.allclose(f, 2.5)
    bnd = boundary(region).ids()
    for _ in range(20):
        g = np.zeros(emb.tri.n)
        g[bnd] = rng.uniform(-1, 1, len(bnd))
        f = solve_dirichlet(net, region, g)
        assert harmonic_residual(net, region, f) <= 1e-12
        assert np.abs(f).max() <= np.abs(g[bnd]).max() + 1e-12


def test_dirichlet_outside_region_is_nan(hex3):
    net = Network(hex3.tri)
    region = hex3.tri.vertex_set(np.flatnonzero(np.abs(hex3.z) < 1.5))
    f = solve_dirichlet(net, region, np.ones(hex3.tri.n))
    assert np.isnan(f[~region.mask]).all() and np.allclose(f[region.mask], 1.0)


def test_dirichlet_isolated_component():
    net = Network.from_edges(4, [(0, 1), (2, 3)])
    tri = net.tri
    # region {0,1,2,3} of a graph without rim: no boundary at all
    with pytest.raises((SingularSystemError, PreconditionError)):
        solve_dirichlet(net, VertexSet(tri, np.ones(4, bool), cofinite=True), np.zeros(4))


def test_el_examples(tmp_path):
    single = Network.from_edges(2, [(0, 1)])
    p = ELProblem(single, single.tri.vertex_set([0]), single.tri.vertex_set([1]), direct_edges=True)
    assert extremal_length(p).EL == pytest.approx(1.0)
    assert extremal_width(p).EW == pytest.approx(1.0)
    par = Network.from_edges(4, [(0, 1), (1, 3), (0, 2), (2, 3)])
    p = ELProblem(par, par.tri.vertex_set([0]), par.tri.vertex_set([3]))
    res = extremal_length(p)
    assert res.EL == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(res.w, 0.5)
    assert extremal_length_by_cuts(p) == pytest.approx(1.0, abs=1e-9)
    assert extremal_width(p).EW == pytest.approx(1.0, abs=1e-12)
    for s in (0.5, 3.0):
        q = ELProblem(par.scaled_resistance(s), p.v1, p.v2)
        assert extremal_length(q).EL == pytest.approx(s)


def test_el_density_is_admissible(rng):
    for _ in range(20):
        p = random_network(rng, 12)
        res = extremal_length(p)
        if not res.connected:
            continue
        # energy of the density equals EL
        mu = p.net.resistance[res.edges]
        assert float(np.sum(mu * res.w**2)) == pytest.approx(res.EL, rel=1e-10)


def test_el_density_meets_every_sampled_cut(rng):
    for _ in range(20):
        p = random_network(rng, 16)
        res = extremal_length(p)
        tri = p.net.tri
        w = np.zeros(tri.n_edges)
        w[res.edges] = res.w
        pool = np.zeros(tri.n_edges, bool)
        pool[res.edges] = True
        v0 = p.v0.ids()
        for _ in range(50):
            side = p.v1.mask.copy()
            side[v0] = rng.random(len(v0)) < 0.5
            cut = pool & (side[tri.edges[:, 0]] != side[tri.edges[:, 1]])
            assert w[cut].sum() >= 1 - 1e-9


def test_el_disconnected():
    net = Network.from_edges(4, [(0, 1), (2, 3)])
    p = ELProblem(net, net.tri.vertex_set([0]), net.tri.vertex_set([3]))
    assert extremal_length(p).EL == math.inf
    assert extremal_width(p).EW == 0.0


def test_el_problem_validation():
    net = Network.from_edges(3, [(0, 1), (1, 2)])
    t = net.tri
    with pytest.raises(PreconditionError):
        ELProblem(net, t.vertex_set([]), t.vertex_set([1]))
    with pytest.raises(PreconditionError):
        ELProblem(net, t.vertex_set([0, 1]), t.vertex_set([1]))
    emb = hex_patch(2)
    with pytest.raises(PreconditionError):
        ELProblem(Network(emb.tri), emb.tri.vertex_set([0]), emb.tri.vertex_set([1]))


def test_el_against_independent_oracles(rng):
    for _ in range(25):
        p = random_network(rng)
        el = extremal_length(p).EL
        assert thomson_el(p) == pytest.approx(el, rel=1e-5)
        assert potential_ew(p) == pytest.approx(1.0 / el, rel=1e-5)
        if len(p.edge_pool()) <= 12:
            assert extremal_length_by_cuts(p) == pytest.approx(el, rel=1e-8)


def test_length_width_reciprocity(rng):
    for _ in range(50):
        p = random_network(rng)
        assert extremal_length(p).EL * extremal_width(p).EW == pytest.approx(1.0, abs=1e-9)


def test_ew_budget():
    emb = hex_patch(4)
    p = ELProblem(Network(emb.tri), emb.tri.vertex_set([0]), VertexSet(emb.tri, emb.tri.rim, cofinite=True))
    with pytest.raises(BudgetExceededError):
        extremal_width(p, max_edges=10)


def test_ring_with_single_separating_edge():
    rho = 2.5
    net = Network.from_edges(2, [(0, 1)], resistance=[rho])
    p = ELProblem(net, net.tri.vertex_set([0]), net.tri.vertex_set([1]), direct_edges=True)
    assert extremal_length(p).EL == pytest.approx(rho)


def test_recurrence_profile_hex_lattice():
    emb = hex_disk(150)
    C = covering_constants(hex_patch(3)).C
    ex = radial_exhaustion(emb, 0, C, 2)
    prof = recurrence_profile(Network(emb.tri), ex, math.pi / 3 - 1e-9)
    assert prof.bound == pytest.approx(math.sin(math.pi / 3 - 1e-9) ** 2 / (12 * math.pi * C * C))
    assert prof.all_above_bound
    assert all(b >= a for a, b in zip(prof.cumulative, prof.cumulative[1:]))
    for k in (1, 2):
        chk = area_sum_bound_check(emb, ex, k, math.pi / 3 - 1e-9)
        assert chk.ok and chk.lhs <= chk.area_term <= chk.rhs


def test_recurrence_profile_rejects_unnested(hex3):
    t = hex3.tri
    a, b = t.vertex_set([0, 1]), t.vertex_set([0, 2])
    with pytest.raises(PreconditionError):
        recurrence_profile(Network(t), [a, b])


def test_radial_exhaustion_patch_too_small(hex3):
    with pytest.raises(PreconditionError, match="too small"):
        radial_exhaustion(hex3, 0, 3.3, 2)


def test_area_bound_degenerate_eps():
    emb = hex_disk(30)
    ex = radial_exhaustion(emb, 0, 3.3, 1)
    chk = area_sum_bound_check(emb, ex, 1, 0.0)
    assert chk.ok and chk.rhs == math.inf


def test_sine_law_area_single_triangle():
    from acuterigid.geometry import Embedding

    emb = Embedding(Triangulation(3, [(0, 1, 2)]), np.array([0, 1, 0.5 + 0.5j * math.sqrt(3)]))
    areas, bound, ok = sine_law_area_check(emb, math.pi / 3)
    assert ok and areas[0] == pytest.approx(math.sqrt(3) / 4) and bound[0] == pytest.approx(3 / 8)
    assert ring_bound(math.pi / 3, 1.0) == pytest.approx(0.75 / (12 * math.pi))


def test_closure_of_complement_used_as_far_set(hex3):
    t = hex3.tri
    inner = t.vertex_set([0])
    far = closure(t.vertex_set(np.flatnonzero(np.abs(hex3.z) < 2.1)).complement())
    assert far.cofinite and not (inner.mask & far.mask).any()
