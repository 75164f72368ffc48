"""Ring extremal lengths on the unit triangular lattice via its 12-fold symmetry.

The lattice points are ``a + b*w`` with ``w = exp(i pi/3)``.  Disks centered
at the origin are invariant under the dihedral group of order 12, and so is
the harmonic potential of the ring problem.  Solving on orbit representatives
in the wedge ``0 <= b <= a`` cuts the unknowns twelvefold, which makes rings
of radius in the thousands tractable with a direct solver.

On the quotient, the orbit of ``v`` (size ``m_v``) is joined to the orbit of
``r`` by ``c(v, r) = m_v * #{w ~ v : rep(w) = r}`` lattice edges.  This count
is symmetric in ``v`` and ``r``, so the quotient Laplacian is symmetric and
its effective conductance equals that of the full lattice problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import PreconditionError
from .network import ring_bound, spd_solve

__all__ = ["LatticeRing", "canonical_rep", "orbit_size", "hex_lattice_ring", "hex_lattice_recurrence"]

_SQRT3 = math.sqrt(3.0)
NEIGHBOR_STEPS = np.array([(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)], dtype=np.int64)


def _abs(a, b):
    """``|a + b w|`` for integer arrays."""
    return np.sqrt(a.astype(float) ** 2 + a.astype(float) * b + b.astype(float) ** 2)


def canonical_rep(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Image of ``(a, b)`` in the wedge ``0 <= b <= a`` under the dihedral group."""
    a = np.asarray(a, dtype=np.int64).copy()
    b = np.asarray(b, dtype=np.int64).copy()
    out_a, out_b = a.copy(), b.copy()
    done = np.zeros(a.shape, dtype=bool)
    x, y = a, b
    for _ in range(6):
        for p, q in ((x, y), (x + y, -y)):  # rotation, then rotation followed by conjugation
            hit = ~done & (q >= 0) & (q <= p)
            out_a[hit], out_b[hit] = p[hit], q[hit]
            done |= hit
        x, y = -y, x + y  # rotate by 60 degrees
    assert done.all()
    return out_a, out_b


def orbit_size(a, b) -> np.ndarray:
    """Orbit size of wedge points under the order-12 symmetry group."""
    a, b = np.asarray(a), np.asarray(b)
    return np.where((a == 0) & (b == 0), 1, np.where((b == 0) | (b == a), 6, 12))


@dataclass(frozen=True)
class LatticeRing:
    """Ring ``k`` of the radial exhaustion of the unit triangular lattice.

    ``EL`` is ``EL(V_{k-1}, closure(V_k^c))`` with unit resistances;
    ``lhs = sum_{E0} l_e^2 = |E0|``, ``area_term`` and ``rhs`` are the
    sine-law area chain with the measured ``epsilon``.
    """

    k: int
    radius_inner: float
    radius_outer: float
    EL: float
    bound: float
    n_unknowns: int
    lhs: float
    area_term: float
    rhs: float

    @property
    def el_ok(self) -> bool:
        return self.EL >= self.bound

    @property
    def area_ok(self) -> bool:
        return self.lhs <= self.area_term * (1.0 + 1e-12) and self.area_term <= self.rhs * (1.0 + 1e-12)


def hex_lattice_ring(k: int, C: float, epsilon: float, r0: float = 1.0, rel_tol: float = 1e-9) -> LatticeRing:
    """Solve ring ``k`` (radii ``(2C)^(k-1) r0`` and ``(2C)^k r0``) on the infinite lattice."""
    if k < 1:
        raise PreconditionError("ring index starts at 1")
    r_in = r0 * (2 * C) ** (k - 1)
    r_out = r0 * (2 * C) ** k
    lim_in, lim_out = r_in * (1 - rel_tol), r_out * (1 - rel_tol)
    amax = int(math.ceil(r_out)) + 3
    aa, bb = np.meshgrid(np.arange(amax + 1), np.arange(amax + 1), indexing="ij")
    sel = (bb <= aa) & (_abs(aa, bb) < r_out + 2)
    ra, rb = aa[sel], bb[sel]
    index = np.full((amax + 2, amax + 2), -1, dtype=np.int64)
    index[ra, rb] = np.arange(len(ra))
    norm = _abs(ra, rb)
    in_v1 = norm < lim_in
    in_vk = norm < lim_out
    # neighbor representatives
    nb = np.empty((len(ra), 6), dtype=np.int64)
    for s, (da, db) in enumerate(NEIGHBOR_STEPS):
        ca, cb = canonical_rep(ra + da, rb + db)
        nb[:, s] = index[ca, cb]
    # interior of V_k: in V_k with every neighbor in V_k (reps past the table lie outside)
    valid = nb >= 0
    nb_in_vk = np.where(valid, in_vk[np.maximum(nb, 0)], False)
    int_vk = in_vk & nb_in_vk.all(axis=1)
    v0 = int_vk & ~in_v1
    if (v0 & ~valid.all(axis=1)).any():
        raise RuntimeError("lattice table too small")
    m = orbit_size(ra, rb).astype(float)
    ids = np.flatnonzero(v0)
    pos = np.full(len(ra), -1, dtype=np.int64)
    pos[ids] = np.arange(len(ids))
    rows = np.repeat(pos[ids], 6)
    cols_rep = nb[ids].ravel()
    w = np.repeat(m[ids], 6)
    tgt_v0 = v0[cols_rep]
    tgt_v1 = in_v1[cols_rep]
    tgt_v2 = ~tgt_v0 & ~tgt_v1
    n = len(ids)
    diag = np.bincount(rows, weights=w, minlength=n)
    off = tgt_v0
    A = sp.csc_matrix(
        (np.concatenate([diag, -w[off]]), (np.concatenate([np.arange(n), rows[off]]), np.concatenate([np.arange(n), pos[cols_rep[off]]]))),
        shape=(n, n),
    )
    rhs = np.bincount(rows[tgt_v2], weights=w[tgt_v2], minlength=n)
    f = spd_solve(A, rhs)
    current = float(np.sum(w[tgt_v1] * f[rows[tgt_v1]]))
    EL = 1.0 / current
    # |E0| = (sum of degrees over V0 + edges leaving V0) / 2, counted on full orbits
    deg_sum = 6.0 * m[ids].sum()
    leaving = float(w[~tgt_v0].sum())
    n_e0 = 0.5 * (deg_sum + leaving)
    s2 = math.sin(epsilon) ** 2
    area_term = n_e0 * 2.0 * (_SQRT3 / 4.0) / s2
    rhs_bound = 12.0 * math.pi * C * C / s2 * r_in**2
    return LatticeRing(k, r_in, r_out, EL, ring_bound(epsilon, C), n, n_e0, area_term, rhs_bound)


def hex_lattice_recurrence(C: float, n: int, epsilon: float, r0: float = 1.0) -> list[LatticeRing]:
    """Rings ``1..n`` of the radial exhaustion with ratio ``2C``."""
    return [hex_lattice_ring(k, C, epsilon, r0) for k in range(1, n + 1)]
