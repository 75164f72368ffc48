from __future__ import annotations

import math

import numpy as np
import pytest

from acuterigid.generators import hex_disk, hex_patch
from acuterigid.geometry import covering_constants
from acuterigid.lattice import canonical_rep, hex_lattice_recurrence, hex_lattice_ring, orbit_size
from acuterigid.network import Network, area_sum_bound_check, radial_exhaustion, recurrence_profile

OMEGA = np.exp(1j * np.pi / 3)


def _orbit(a, b):
    """The 12 images of a + b w under rotations by pi/3 and conjugation, as (a, b) pairs."""
    z = a + b * OMEGA
    pts = set()
    for k in range(6):
        for w in (z * OMEGA**k, np.conj(z) * OMEGA**k):
            bb = w.imag / OMEGA.imag
            aa = w.real - bb * OMEGA.real
            pts.add((int(round(aa)), int(round(bb))))
    return pts


def test_canonical_rep_and_orbit_size(rng):
    a = rng.integers(-30, 31, 500)
    b = rng.integers(-30, 31, 500)
    ca, cb = canonical_rep(a, b)
    assert ((0 <= cb) & (cb <= ca)).all()
    sizes = orbit_size(ca, cb)
    for x, y, cx, cy, m in zip(a, b, ca, cb, sizes):
        orb = _orbit(int(x), int(y))
        assert (int(cx), int(cy)) in orb
        assert len(orb) == m
        assert abs(cx + cy * OMEGA) == pytest.approx(abs(x + y * OMEGA))


def test_orbit_sizes_special_points():
    assert orbit_size(np.array([0]), np.array([0]))[0] == 1
    assert orbit_size(np.array([3]), np.array([0]))[0] == 6
    assert orbit_size(np.array([2]), np.array([2]))[0] == 6
    assert orbit_size(np.array([3]), np.array([1]))[0] == 12


@pytest.fixture(scope="module")
def lattice_setup():
    C = covering_constants(hex_patch(3)).C
    eps = math.pi / 3 - 1e-9
    return C, eps


def test_quotient_matches_full_lattice(lattice_setup):
    C, eps = lattice_setup
    rings = hex_lattice_recurrence(C, 2, eps)
    emb = hex_disk((2 * C) ** 2 + 4)
    ex = radial_exhaustion(emb, 0, C, 2, r0=1.0)
    prof = recurrence_profile(Network(emb.tri), ex, eps)
    for k, ring in enumerate(rings, start=1):
        assert ring.EL == pytest.approx(prof.ring_el[k - 1], rel=1e-10)
        chk = area_sum_bound_check(emb, ex, k, eps)
        assert ring.lhs == pytest.approx(chk.lhs, rel=1e-12)
        assert ring.area_term == pytest.approx(chk.area_term, rel=1e-10)
        assert ring.rhs == pytest.approx(chk.rhs, rel=1e-12)
        assert ring.el_ok and ring.area_ok


def test_ring_validation():
    from acuterigid.errors import PreconditionError

    with pytest.raises(PreconditionError):
        hex_lattice_ring(0, 3.0, 1.0)
