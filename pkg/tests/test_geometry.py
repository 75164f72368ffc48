from __future__ import annotations

import math

import numpy as np
import pytest
import shapely
from shapely.geometry import Polygon

from acuterigid.errors import MeshError, NonMetricError, PreconditionError
from acuterigid.generators import hex_patch, random_two_triangles, square_grid, two_triangles
from acuterigid.geometry import (
    Embedding,
    PLMetric,
    circumdisk,
    classify,
    covering_constants,
    delaunay_circumdisk_form,
    develop,
    face_angles,
    induced_metric,
    inner_angle,
)
from acuterigid.mesh import Triangulation

ONE_FACE = Triangulation(3, [(0, 1, 2)])


def face(z):
    return Embedding(ONE_FACE, np.asarray(z, dtype=complex))


def test_induced_metric_examples():
    assert np.allclose(induced_metric(face([0, 1, 0.5 + 1j * math.sqrt(3) / 2])).lengths, 1.0)
    assert sorted(induced_metric(face([0, 3, 4j])).lengths.tolist()) == [3.0, 4.0, 5.0]
    emb = hex_patch(2)
    doubled = Embedding(emb.tri, 2 * emb.z)
    assert np.allclose(induced_metric(doubled).lengths, 2 * induced_metric(emb).lengths)


def test_induced_metric_commutes_with_similarity(rng):
    emb = hex_patch(2)
    base = induced_metric(emb).lengths
    for _ in range(100):
        s = complex(*rng.normal(size=2))
        b = complex(*rng.normal(size=2)) * 10
        moved = Embedding(emb.tri, s * emb.z + b, check=False)
        assert np.allclose(induced_metric(moved).lengths, abs(s) * base, rtol=1e-12)


def test_face_angles_examples():
    ang = face_angles(np.array([[1.0, 1, 1], [3, 4, 5], [2, 2, 3]]))
    assert np.allclose(ang[0], np.pi / 3, atol=1e-15)
    assert ang[1, 2] == pytest.approx(np.pi / 2, abs=1e-15)
    assert ang[2, 2] == pytest.approx(math.acos(-1 / 8), abs=1e-15)
    assert np.isnan(face_angles(np.array([[1.0, 1, 3]]))).all()


def test_angle_sum_random_metrics(rng):
    x = rng.uniform(0.01, 1, (2000, 3))
    fl = np.stack([x[:, 1] + x[:, 2], x[:, 0] + x[:, 2], x[:, 0] + x[:, 1]], axis=1)
    ang = face_angles(fl)
    assert np.abs(ang.sum(axis=1) - np.pi).max() <= 1e-12


def test_inner_angle_scale_invariant(rng):
    m = induced_metric(hex_patch(1))
    for s in rng.uniform(0.01, 100, 20):
        scaled = PLMetric(m.tri, s * m.lengths)
        assert inner_angle(scaled, 2, m.tri.faces[2][1]) == pytest.approx(inner_angle(m, 2, m.tri.faces[2][1]), rel=1e-13)
    with pytest.raises(MeshError):
        inner_angle(m, 0, 6)


def test_non_metric_names_face():
    m = PLMetric(ONE_FACE, [1.0, 1.0, 3.0])
    assert not m.is_metric
    with pytest.raises(NonMetricError) as info:
        m.require_metric()
    assert list(info.value.faces) == [0]


def test_classify_examples():
    c = classify(induced_metric(hex_patch(3)), 0.1)
    assert c.uniformly_nondegenerate and c.uniformly_acute and c.delaunay
    sq = classify(induced_metric(square_grid(1)), 0.0)
    assert sq.delaunay and sq.max_opposite_sum == pytest.approx(np.pi, abs=1e-15)
    right = classify(induced_metric(face([0, 3, 4j])), 0.01)
    assert not right.uniformly_acute
    assert right.max_angle == pytest.approx(np.pi / 2, abs=1e-15)
    assert right.max_angle_vertex == 0 and right.max_angle_face == 0
    with pytest.raises(PreconditionError):
        classify(induced_metric(face([0, 3, 4j])), -1)


def test_circumdisk_examples():
    d = circumdisk(face([0, 1, 1j]), 0)
    assert d.center == pytest.approx(0.5 + 0.5j) and d.radius == pytest.approx(math.sqrt(2) / 2)
    d = circumdisk(face([0, 1, 0.5 + 1j * math.sqrt(3) / 2]), 0)
    assert d.center == pytest.approx(0.5 + 1j * math.sqrt(3) / 6) and d.radius == pytest.approx(1 / math.sqrt(3))
    t = 3 - 2j
    d2 = circumdisk(face(np.array([0, 1, 1j]) + t), 0)
    assert d2.center == pytest.approx(0.5 + 0.5j + t) and d2.radius == pytest.approx(math.sqrt(2) / 2)


def test_delaunay_circumdisk_examples():
    assert delaunay_circumdisk_form(hex_patch(2)).delaunay
    sq = delaunay_circumdisk_form(square_grid(1))
    assert sq.delaunay and abs(sq.min_distance) <= 1e-12
    # kite: pull the fourth vertex radially inward into the circumdisk of (0,1,2)
    z = np.exp(1j * np.array([0.0, 1.7, np.pi, 4.4]))
    z[3] *= 0.8
    kite = two_triangles(z)
    assert not delaunay_circumdisk_form(kite).delaunay
    assert not classify(induced_metric(kite), 0.0).delaunay


def test_delaunay_forms_agree_random(rng):
    for k in range(400):
        emb = random_two_triangles(rng, cocircular=k < 40)
        a = classify(induced_metric(emb), 0.0).delaunay
        b = delaunay_circumdisk_form(emb).delaunay
        assert a == b


def _shapely_delta(emb):
    """d(U^c, face)/diam over eligible faces via polygon unions."""
    tri = emb.tri
    inner = np.zeros(tri.n, bool)
    inner[tri.interior_vertices()] = True
    out = {}
    pts = np.column_stack([emb.z.real, emb.z.imag])
    for f in np.flatnonzero(inner[tri.faces].all(axis=1)):
        stars = [Polygon(pts[tri.faces[g]]) for v in tri.faces[f] for g in tri.vertex_faces(v)]
        union = shapely.union_all(stars)
        tpoly = Polygon(pts[tri.faces[f]])
        diam = max(np.linalg.norm(pts[a] - pts[b]) for a in tri.faces[f] for b in tri.faces[f])
        out[int(f)] = union.boundary.distance(tpoly) / diam
    return out


def test_covering_constants_hex_lattice():
    emb = hex_patch(3)
    cc = covering_constants(emb)
    vals = np.array(list(cc.face_deltas.values()))
    assert len(vals) > 0 and vals.min() > 0
    assert np.allclose(vals, vals[0], rtol=1e-12)
    oracle = _shapely_delta(emb)
    assert oracle.keys() == cc.face_deltas.keys()
    for f, d in oracle.items():
        assert cc.face_deltas[f] == pytest.approx(d, rel=1e-9)
    assert cc.delta == pytest.approx(math.sqrt(3) / 2, rel=1e-12)
    assert cc.C == pytest.approx(1 + 2 / cc.delta)


def test_covering_constants_perturbed_against_oracle(perturbed3):
    cc = covering_constants(perturbed3)
    oracle = _shapely_delta(perturbed3)
    for f, d in oracle.items():
        assert cc.face_deltas[f] == pytest.approx(d, rel=1e-9)


def test_covering_constants_single_interior_vertex():
    with pytest.raises(PreconditionError, match="patch too small"):
        covering_constants(hex_patch(1))


def test_develop_reproduces_embedding_up_to_motion(perturbed3):
    m = induced_metric(perturbed3)
    dev = develop(m)
    assert np.allclose(induced_metric(dev).lengths, m.lengths, rtol=1e-12)
    assert (dev.signed_areas() > 0).all()
