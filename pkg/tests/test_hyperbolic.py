from __future__ import annotations

import math

import numpy as np
import pytest

from acuterigid.conformal import conformal_change, solve_zero_curvature
from acuterigid.errors import PreconditionError
from acuterigid.generators import hex_patch, random_two_triangles, square_grid
from acuterigid.geometry import Embedding, classify, develop, induced_metric
from acuterigid.hyperbolic import (
    check_hyperbolic_max_principle,
    euclidean_relation_gap,
    from_hyperbolic_factor,
    geodesic_midpoint,
    hyp_distance,
    hyperbolic_log_map,
    hyperbolic_relation_gap,
    mobius,
    mobius_inverse,
    one_ring_hyperbolic_embed,
    point_at_distance,
    sinh_half_identity,
    to_hyperbolic_factor,
)


def random_disk_points(rng, n, rmax=0.95):
    return np.sqrt(rng.uniform(0, rmax**2, n)) * np.exp(1j * rng.uniform(0, 2 * np.pi, n))


def fit_into_disk(z, radius):
    """Similarity sending ``z`` into the disk of the given radius about 0."""
    c = z.mean()
    s = radius / np.abs(z - c).max()
    return s * (z - c), s


def test_distance_examples(rng):
    assert hyp_distance(0, 0.5) == pytest.approx(math.log(3), rel=1e-15)
    z = random_disk_points(rng, 50)
    assert np.all(hyp_distance(z, z) == 0)
    a, b = random_disk_points(rng, 200), random_disk_points(rng, 200)
    d = hyp_distance(a, b)
    assert np.allclose(d, hyp_distance(b, a), rtol=1e-12)
    for k in range(20):
        f = mobius(random_disk_points(rng, 1, 0.8)[0], rng.uniform(0, 2 * np.pi))
        assert np.allclose(hyp_distance(f(a), f(b)), d, rtol=1e-10, atol=1e-12)


def test_disk_boundary_rejected():
    for bad in (1.0, 1j, 2.0, 1 - 1e-13, complex("nan")):
        with pytest.raises(PreconditionError):
            hyp_distance(0, bad)


def test_mobius_inverse(rng):
    a = 0.3 - 0.4j
    z = random_disk_points(rng, 100)
    assert np.allclose(mobius_inverse(a, 0.7)(mobius(a, 0.7)(z)), z, atol=1e-14)
    assert abs(mobius(a)(a)) == 0


def test_sinh_half_examples(rng):
    lhs, rhs = sinh_half_identity(0, 0.5)
    assert lhs == pytest.approx(1 / math.sqrt(3), rel=1e-14) and rhs == pytest.approx(1 / math.sqrt(3), rel=1e-14)
    assert sinh_half_identity(0.2j, 0.2j) == (0.0, 0.0)
    a, b = random_disk_points(rng, 1000), random_disk_points(rng, 1000)
    lhs, rhs = sinh_half_identity(a, b)
    assert (np.abs(lhs - rhs) / rhs).max() < 1e-10


def test_point_at_distance_and_midpoint(rng):
    for _ in range(20):
        z0 = random_disk_points(rng, 1, 0.7)[0]
        d = rng.uniform(0.1, 3)
        p = point_at_distance(z0, d, np.exp(1j * rng.uniform(0, 6.3)))
        assert hyp_distance(z0, p) == pytest.approx(d, rel=1e-10)
        m = geodesic_midpoint(z0, p)
        assert hyp_distance(z0, m) == pytest.approx(d / 2, rel=1e-9)
        assert hyp_distance(m, p) == pytest.approx(d / 2, rel=1e-9)


def test_log_map_examples(rng):
    z = random_disk_points(rng, 50)
    v = hyperbolic_log_map(0, z)
    assert np.allclose(v, z / np.abs(z) * hyp_distance(0, z), rtol=1e-13)
    assert hyperbolic_log_map(0.3 + 0.1j, 0.3 + 0.1j) == 0
    # direction against the numerically differentiated geodesic z0 -> z
    h = 1e-7
    for _ in range(50):
        z0, z1 = random_disk_points(rng, 2, 0.9)
        f, finv = mobius(z0), mobius_inverse(z0)
        w = f(z1)
        tangent = (finv(h * w / abs(w)) - z0) / h
        v = hyperbolic_log_map(z0, z1)
        assert abs(np.angle(v / tangent)) < 1e-6
        assert abs(v) == pytest.approx(hyp_distance(z0, z1), rel=1e-12)


def _disk_pair(rng, emb, sigma=0.05, radius=0.6):
    """Acute source in the disk and a conformally equivalent target, with the factor."""
    m = induced_metric(emb)
    region = emb.tri.all_vertices()
    g = np.where(emb.tri.rim, sigma * rng.standard_normal(emb.tri.n), 0.0)
    u = solve_zero_curvature(m, region, g) if emb.tri.interior_vertices().size else g
    z, s = fit_into_disk(emb.z, radius)
    src = Embedding(emb.tri, z)
    dev = develop(conformal_change(m, u))
    zp, sp = fit_into_disk(dev.z, radius * rng.uniform(0.5, 1.4))
    return src, Embedding(emb.tri, zp), u + math.log(sp / s)


def test_to_hyperbolic_factor_examples():
    emb = hex_patch(2)
    z, _ = fit_into_disk(emb.z, 0.5)
    src = Embedding(emb.tri, z)
    assert np.allclose(to_hyperbolic_factor(np.zeros(emb.tri.n), src, src), 0.0)
    s = 1.6
    dst = Embedding(emb.tri, s * z)
    # scaling lengths by s is the constant factor log s
    uh = to_hyperbolic_factor(np.full(emb.tri.n, math.log(s)), src, dst)
    expect = math.log(s) + np.log((1 - np.abs(z) ** 2) / (1 - s * s * np.abs(z) ** 2))
    assert np.allclose(uh, expect, rtol=1e-13)
    with pytest.raises(PreconditionError):
        to_hyperbolic_factor(np.zeros(emb.tri.n), src, dst)


def test_relation_equivalence_two_triangles(rng):
    tested = 0
    while tested < 100:
        emb = random_two_triangles(rng)
        c = classify(induced_metric(emb), 0.05)
        if not c.uniformly_acute or c.min_angle < 0.2:
            continue
        tested += 1
        src, dst, u = _disk_pair(rng, emb, sigma=0.05)
        e = emb.tri.edges
        assert euclidean_relation_gap(u, src.z, dst.z, e).max() < 1e-9
        uh = to_hyperbolic_factor(u, src, dst)
        assert hyperbolic_relation_gap(uh, src.z, dst.z, e).max() < 1e-9
        assert np.allclose(from_hyperbolic_factor(uh, src.z, dst.z), u, atol=1e-12)


def test_hyperbolic_max_principle(rng):
    emb = hex_patch(3)
    region = emb.tri.all_vertices()
    r = check_hyperbolic_max_principle(np.zeros(emb.tri.n), region)
    assert r.ok and r.part_a_ok
    assert check_hyperbolic_max_principle(np.full(emb.tri.n, 0.4), region).ok
    for _ in range(10):
        src, dst, u = _disk_pair(rng, emb)
        # scale the target so the smallest boundary value of uh is exactly 0
        rim = emb.tri.rim
        lo, hi = 1e-3, 0.99 / np.abs(dst.z).max()
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            uh = to_hyperbolic_factor(u + math.log(mid), src, Embedding(emb.tri, mid * dst.z))
            lo, hi = (mid, hi) if uh[rim].min() < 0 else (lo, mid)
        uh = to_hyperbolic_factor(u + math.log(hi), src, Embedding(emb.tri, hi * dst.z))
        res = check_hyperbolic_max_principle(uh, region)
        assert res.min_boundary >= 0 and res.ok and res.part_a_ok


def test_one_ring_regular_hexagon():
    emb = hex_patch(1)
    ring = Embedding(emb.tri, 0.1 * emb.z)
    r = one_ring_hyperbolic_embed(ring, 0)
    assert r.status == "ok" and r.embeds
    assert np.allclose(r.wrap_angles, np.pi / 3, atol=1e-12)
    assert r.wrap_sum == pytest.approx(2 * np.pi, abs=1e-12)
    assert r.identity_gap < 1e-12 and r.circumdisks_match and r.delaunay_match


def test_one_ring_after_mobius(rng):
    emb = hex_patch(1)
    for _ in range(20):
        f = mobius(random_disk_points(rng, 1, 0.6)[0], rng.uniform(0, 6.3))
        moved = Embedding(emb.tri, f(0.15 * emb.z))
        if not classify(induced_metric(moved), 1e-9).uniformly_acute:
            continue
        r = one_ring_hyperbolic_embed(moved, 0)
        assert r.status == "ok" and r.embeds and r.delaunay_match and r.identity_gap < 1e-9


def test_one_ring_right_angle_inconclusive():
    sq = square_grid(2)
    r = one_ring_hyperbolic_embed(Embedding(sq.tri, 0.1 * (sq.z - (1 + 1j))), 4)
    assert r.status == "inconclusive" and r.embeds is None
