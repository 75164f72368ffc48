"""Command-line interface.

Exit codes: 0 success, 1 failed ``verify`` check, 2 invalid input, 3 solver
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import io
from .conformal import acuteness_box, cotan_weights, curvature, flow_integrate, solve_zero_curvature
from .errors import AcuteRigidError, BudgetExceededError, SolverError
from .experiments import _jsonable, flow_to_constant_experiment, oscillation_experiment
from .generators import annulus_mesh, generate_perturbed_acute, hex_disk, hex_patch, square_grid
from .geometry import Embedding, classify, covering_constants, delaunay_circumdisk_form
from .hyperbolic import one_ring_hyperbolic_embed
from .lattice import hex_lattice_recurrence
from .modulus import PLMap, dilatation, modulus_estimate
from .network import (
    ELProblem,
    Network,
    area_sum_bound_check,
    extremal_length,
    extremal_width,
    radial_exhaustion,
    recurrence_profile,
    solve_dirichlet,
)
from .verify import run_checks

__all__ = ["main", "build_parser"]


def _out(args):
    return open(args.output, "w", encoding="utf-8") if getattr(args, "output", None) else sys.stdout


def _emit(args, text: str) -> None:
    fh = _out(args)
    try:
        fh.write(text)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _json(obj) -> str:
    return json.dumps(_jsonable(obj)) + "\n"


# -- subcommands -----------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.kind == "hex":
        if args.jitter:
            emb = generate_perturbed_acute(args.rings, args.jitter, args.seed, epsilon=args.eps)
        else:
            emb = hex_patch(args.rings)
    elif args.kind == "disk":
        emb = hex_disk(args.radius)
    elif args.kind == "square":
        emb = square_grid(args.n)
    else:
        emb = annulus_mesh(args.r, args.R, args.level).emb
    _emit(args, io.format_mesh(emb))
    return 0


def cmd_classify(args) -> int:
    emb = io.read_mesh(args.mesh)
    c = classify(emb.metric(), args.eps, tol=args.tol)
    d = delaunay_circumdisk_form(emb, tol=args.tol)
    rec = dict(c.__dict__)
    rec["delaunay_circumdisk"] = d.delaunay
    rec["circumdisk_min_distance"] = d.min_distance
    rec["circumdisk_witness_edge"] = d.witness_edge
    _emit(args, _json(rec))
    return 0


def _factor(args, emb):
    return io.read_factor(args.factor, emb.tri.n) if getattr(args, "factor", None) else np.zeros(emb.tri.n)


def cmd_curvature(args) -> int:
    emb = io.read_mesh(args.mesh)
    inner = emb.tri.interior_vertices()
    K = curvature(emb.metric(), _factor(args, emb), inner)
    _emit(args, "".join(f"{i} {io.format_float(k)}\n" for i, k in zip(inner.tolist(), K)))
    return 0


def cmd_weights(args) -> int:
    emb = io.read_mesh(args.mesh)
    tri = emb.tri
    eta = cotan_weights(emb.metric(), _factor(args, emb))
    lines = [
        f"{i} {j} {io.format_float(w)}{' boundary' if b else ''}\n"
        for (i, j), w, b in zip(tri.edges.tolist(), eta, tri.boundary_edges)
    ]
    _emit(args, "".join(lines))
    return 0


def cmd_solve(args) -> int:
    emb = io.read_mesh(args.mesh)
    g = io.read_factor(args.boundary, emb.tri.n)
    u = solve_zero_curvature(emb.metric(), emb.tri.all_vertices(), g, tol=args.tol)
    _emit(args, "".join(io.format_float(x) + "\n" for x in u))
    return 0


def cmd_flow(args) -> int:
    emb = io.read_mesh(args.mesh)
    v = io.read_factor(args.velocity, emb.tri.n)
    box = acuteness_box(emb.metric(), args.eps) if args.box is None else args.box
    traj = flow_integrate(emb.metric(), emb.tri.all_vertices(), v, args.t, dt=args.dt, box=box, record_every=args.every)
    fh = _out(args)
    try:
        traj.write_jsonl(fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    if traj.status != "complete":
        print(f"flow stopped at t={traj.exit_time}: {traj.status}", file=sys.stderr)
    return 0


def cmd_harmonic(args) -> int:
    emb = io.read_mesh(args.mesh)
    g = io.read_factor(args.boundary, emb.tri.n)
    tri = emb.tri
    net = Network(tri) if args.unit else Network(tri, conductance=_positive_cotan(emb))
    f = solve_dirichlet(net, tri.all_vertices(), g)
    _emit(args, "".join(io.format_float(x) + "\n" for x in f))
    return 0


def _positive_cotan(emb):
    eta = cotan_weights(emb.metric())
    if (eta <= 0).any():
        raise SolverError("cotangent weights are not all positive; use --unit")
    return eta


def _el_problem(args):
    net = io.read_network(args.network)
    spec = io.read_problem(args.problem)
    tri = net.tri
    for key in ("v1", "v2"):
        if any(v < 0 or v >= tri.n for v in spec[key]):
            raise AcuteRigidError(f"'{key}' index out of range")
    return net, ELProblem(net, tri.vertex_set(spec["v1"]), tri.vertex_set(spec["v2"]), spec["direct_edges"])


def _edge_lines(tri, edges, w) -> str:
    return "".join(f"{tri.edges[e][0]} {tri.edges[e][1]} {io.format_float(x)}\n" for e, x in zip(edges, w))


def cmd_el(args) -> int:
    net, p = _el_problem(args)
    res = extremal_length(p)
    _emit(args, f"{res.EL!r}\n" + _edge_lines(net.tri, res.edges, res.w))
    return 0


def cmd_ew(args) -> int:
    net, p = _el_problem(args)
    res = extremal_width(p)
    _emit(args, f"{res.EW!r}\n" + _edge_lines(net.tri, res.edges, res.w))
    return 0


def cmd_recurrence(args) -> int:
    if args.lattice:
        cover = covering_constants(hex_patch(3))
        eps = math.pi / 3 - 1e-9 if args.eps is None else args.eps
        out = []
        for ring in hex_lattice_recurrence(cover.C, args.rings, eps):
            rec = dict(ring.__dict__)
            rec.update(el_ok=ring.el_ok, area_ok=ring.area_ok)
            out.append(_json(rec))
        _emit(args, "".join(out))
        return 0
    emb = io.read_mesh(args.mesh)
    cover = covering_constants(emb)
    eps = classify(emb.metric(), 0.0).min_angle - 1e-9 if args.eps is None else args.eps
    ex = radial_exhaustion(emb, args.center, cover.C, args.rings, args.r0)
    prof = recurrence_profile(Network(emb.tri), ex, eps)
    areas = [area_sum_bound_check(emb, ex, k, eps) for k in range(1, args.rings + 1)]
    rec = {
        "C": cover.C,
        "delta": cover.delta,
        "epsilon": eps,
        "radii": list(ex.radii),
        "ring_el": prof.ring_el,
        "cumulative": prof.cumulative,
        "bound": prof.bound,
        "all_above_bound": prof.all_above_bound,
        "area_checks": [a.__dict__ for a in areas],
    }
    _emit(args, _json(rec))
    return 0


def cmd_hyp(args) -> int:
    emb = io.read_mesh(args.mesh)
    z = emb.z - emb.z[args.center] if args.center is not None else emb.z - emb.z.mean()
    z = args.scale * z / np.abs(z).max()
    disk = Embedding(emb.tri, z)
    verts = [args.vertex] if args.vertex is not None else emb.tri.interior_vertices().tolist()
    out = []
    for v in verts:
        r = one_ring_hyperbolic_embed(disk, v, epsilon=args.eps)
        rec = dict(r.__dict__)
        rec["vertex"] = v
        out.append(_json(rec))
    _emit(args, "".join(out))
    return 0


def cmd_dilatation(args) -> int:
    src, dst = io.read_mesh(args.source), io.read_mesh(args.target)
    d = dilatation(PLMap(src, dst))
    _emit(args, f"{d.sup!r}\n" + "".join(f"{k} {io.format_float(x)}\n" for k, x in enumerate(d.per_face)))
    return 0


def _split_rim(emb):
    """Two rim loops of an annulus: the one nearer the centroid is the inner loop."""
    tri = emb.tri
    be = tri.edges[tri.boundary_edges]
    g = sp.csr_matrix((np.ones(len(be)), (be[:, 0], be[:, 1])), shape=(tri.n, tri.n))
    _, labels = connected_components(g, directed=False)
    loops = [np.flatnonzero((labels == lab) & tri.rim) for lab in np.unique(labels[tri.rim])]
    if len(loops) != 2:
        raise AcuteRigidError(f"expected two boundary loops, found {len(loops)}")
    c = emb.z[tri.faces.ravel()].mean()
    loops.sort(key=lambda ids: float(np.abs(emb.z[ids] - c).mean()))
    return loops


def cmd_modulus(args) -> int:
    if args.mesh:
        emb = io.read_mesh(args.mesh)
        inner, outer = _split_rim(emb)
        est = modulus_estimate(emb, inner, outer)
        rec = {"estimate": est.value, "n_vertices": est.n_vertices}
    else:
        m = annulus_mesh(args.r, args.R, args.level)
        est = modulus_estimate(m.emb, m.inner, m.outer, args.level)
        exact = math.log(args.R / args.r) / (2 * math.pi)
        rec = {"estimate": est.value, "exact": exact, "relative_error": est.value / exact - 1, "level": args.level, "n_vertices": est.n_vertices}
    _emit(args, _json(rec))
    return 0


def cmd_experiment(args) -> int:
    if args.kind == "oscillation":
        phi, psi = io.read_mesh(args.inputs[0]), io.read_mesh(args.inputs[1])
        rep = oscillation_experiment(phi, psi, args.eps, tol=args.tol).to_dict()
    else:
        emb = io.read_mesh(args.inputs[0])
        ub = io.read_factor(args.inputs[1], emb.tri.n)
        rep = flow_to_constant_experiment(emb, ub, delta=args.delta, epsilon=args.eps, dt=args.dt).to_dict()
    if args.report:
        io.append_jsonl(rep, args.report)
    _emit(args, _json(rep))
    return 0 if rep["passed"] else 1


def cmd_verify(args) -> int:
    emb = io.read_mesh(args.mesh)
    results = run_checks(emb, seed=args.seed)
    _emit(args, "".join(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}\n" for r in results))
    return 0 if all(r.passed for r in results) else 1


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument("--eps", type=float, default=None, help="angle margin epsilon (radians)")
    common.add_argument("--tol", type=float, default=None, help="numerical tolerance")
    common.add_argument("-o", "--output", help="write output to this file instead of stdout")

    p = argparse.ArgumentParser(prog="acuterigid", description="Discrete conformal geometry of acute triangulations.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a mesh")
    g.add_argument("kind", choices=["hex", "disk", "square", "annulus"])
    g.add_argument("--rings", type=int, default=3)
    g.add_argument("--jitter", type=float, default=0.0)
    g.add_argument("--radius", type=float, default=5.0)
    g.add_argument("--n", type=int, default=4)
    g.add_argument("--r", type=float, default=1.0)
    g.add_argument("--R", type=float, default=2.0)
    g.add_argument("--level", type=int, default=3)
    g.set_defaults(func=cmd_gen, eps_default=0.2)

    c = sub.add_parser("classify", parents=[common], help="acuteness, nondegeneracy and Delaunay predicates")
    c.add_argument("mesh")
    c.set_defaults(func=cmd_classify, eps_default=0.0, tol_default=1e-9)

    for name, fn, helptext in (("curvature", cmd_curvature, "curvature at interior vertices"), ("weights", cmd_weights, "cotangent edge weights")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("mesh")
        s.add_argument("--factor", help="conformal factor file (default 0)")
        s.set_defaults(func=fn)

    s = sub.add_parser("solve", parents=[common], help="zero-curvature factor with given boundary values")
    s.add_argument("mesh")
    s.add_argument("boundary", help="factor file; only boundary entries are used")
    s.set_defaults(func=cmd_solve, tol_default=1e-11)

    f = sub.add_parser("flow", parents=[common], help="integrate the conformal flow, JSON lines output")
    f.add_argument("mesh")
    f.add_argument("velocity", help="factor file with boundary velocities")
    f.add_argument("--t", type=float, default=0.1)
    f.add_argument("--dt", type=float, default=1e-3)
    f.add_argument("--box", type=float, default=None, help="stop when |u|_inf reaches this (default: acuteness box)")
    f.add_argument("--every", type=int, default=1, help="record every k-th step")
    f.set_defaults(func=cmd_flow, eps_default=0.1)

    h = sub.add_parser("harmonic", parents=[common], help="Dirichlet problem with cotangent (or unit) conductances")
    h.add_argument("mesh")
    h.add_argument("boundary")
    h.add_argument("--unit", action="store_true")
    h.set_defaults(func=cmd_harmonic)

    for name, fn in (("el", cmd_el), ("ew", cmd_ew)):
        s = sub.add_parser(name, parents=[common], help=f"extremal {'length' if name == 'el' else 'width'} of a network problem")
        s.add_argument("network")
        s.add_argument("problem")
        s.set_defaults(func=fn)

    r = sub.add_parser("recurrence", parents=[common], help="per-ring extremal lengths and area checks")
    r.add_argument("mesh", nargs="?")
    r.add_argument("--rings", type=int, default=2)
    r.add_argument("--center", type=int, default=0)
    r.add_argument("--r0", type=float, default=1.0)
    r.add_argument("--lattice", action="store_true", help="use the symmetry-reduced infinite lattice")
    r.set_defaults(func=cmd_recurrence)

    y = sub.add_parser("hyp", parents=[common], help="1-ring hyperbolic embedding checks")
    y.add_argument("mesh")
    y.add_argument("--vertex", type=int, default=None)
    y.add_argument("--center", type=int, default=None, help="vertex moved to the disk center")
    y.add_argument("--scale", type=float, default=0.9, help="mesh is scaled to this radius")
    y.set_defaults(func=cmd_hyp, eps_default=1e-9)

    d = sub.add_parser("dilatation", parents=[common], help="dilatation of the PL map between two meshes")
    d.add_argument("source")
    d.add_argument("target")
    d.set_defaults(func=cmd_dilatation)

    m = sub.add_parser("modulus", parents=[common], help="discrete annulus modulus")
    m.add_argument("mesh", nargs="?")
    m.add_argument("--r", type=float, default=1.0)
    m.add_argument("--R", type=float, default=2.0)
    m.add_argument("--level", type=int, default=4)
    m.set_defaults(func=cmd_modulus)

    e = sub.add_parser("experiment", parents=[common], help="run an experiment and append its JSON report")
    e.add_argument("kind", choices=["oscillation", "flow"])
    e.add_argument("inputs", nargs=2, help="oscillation: PHI PSI meshes; flow: MESH UBAR factor")
    e.add_argument("--delta", type=float, default=None)
    e.add_argument("--dt", type=float, default=1e-3)
    e.add_argument("--report", help="append the JSON report to this file")
    e.set_defaults(func=cmd_experiment, eps_default=0.1, tol_default=1e-9)

    v = sub.add_parser("verify", parents=[common], help="run the invariant suite on a mesh")
    v.add_argument("mesh")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.eps is None and getattr(args, "eps_default", None) is not None:
        args.eps = args.eps_default
    if args.tol is None:
        args.tol = getattr(args, "tol_default", 1e-9)
    try:
        return args.func(args)
    except (SolverError, BudgetExceededError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (AcuteRigidError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
