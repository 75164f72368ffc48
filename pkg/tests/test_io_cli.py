from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from acuterigid import io
from acuterigid.cli import main
from acuterigid.errors import MeshError
from acuterigid.generators import generate_perturbed_acute, hex_patch
from acuterigid.geometry import Embedding

DATA = Path(__file__).resolve().parent.parent / "data"


def test_mesh_round_trip_is_bit_identical(tmp_path):
    emb = generate_perturbed_acute(2, 0.05, seed=3)
    p = tmp_path / "m.txt"
    io.write_mesh(emb, p)
    back = io.read_mesh(p)
    assert np.array_equal(back.z, emb.z)
    assert np.array_equal(back.tri.faces, emb.tri.faces)
    q = tmp_path / "m2.txt"
    io.write_mesh(back, q)
    assert p.read_bytes() == q.read_bytes()


@pytest.mark.parametrize(
    "text",
    ["v 0 0\nv 1 nan\nv 0 1\nf 0 1 2\n", "v 0 0\nv inf 0\nv 0 1\nf 0 1 2\n", "v 0 0\nv 1 0\nf 0 1\n", "x 1 2\n", "v 0 zero\n"],
    ids=["nan", "inf", "short-face", "unknown-record", "not-a-number"],
)
def test_parse_mesh_rejects(text):
    with pytest.raises(MeshError):
        io.parse_mesh(text)


def test_parse_mesh_comments():
    emb = io.parse_mesh("# tri\nv 0 0\n\nv 1 0  # x\nv 0 1\nf 0 1 2\n")
    assert emb.tri.n == 3 and emb.tri.n_faces == 1


def test_factor_files(tmp_path):
    u = np.array([0.1, -2.5, 1e-300])
    p = tmp_path / "u.txt"
    io.write_factor(u, p)
    assert np.array_equal(io.read_factor(p, 3), u)
    with pytest.raises(MeshError):
        io.read_factor(p, 4)
    with pytest.raises(MeshError):
        io.parse_factor("1\nnan\n")


def test_network_and_problem_files(tmp_path):
    net = io.read_network(DATA / "parallel_paths.net")
    assert net.tri.n == 4 and net.tri.n_edges == 4
    assert io.read_problem(DATA / "parallel_paths.json") == {"v1": [0], "v2": [3], "direct_edges": False}
    bad = tmp_path / "p.json"
    bad.write_text('{"v1": [0]}')
    with pytest.raises(MeshError):
        io.read_problem(bad)
    bad.write_text("{not json")
    with pytest.raises(MeshError):
        io.read_problem(bad)
    nf = tmp_path / "n.net"
    nf.write_text("e 0 1\n")
    with pytest.raises(MeshError):
        io.read_network(nf)


# -- command line ----------------------------------------------------------------

@pytest.fixture
def hexfile(tmp_path):
    p = tmp_path / "hex.txt"
    io.write_mesh(hex_patch(3), p)
    return p


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_gen(capsys, tmp_path):
    code, out, _ = run(capsys, "gen", "hex", "--rings", 1)
    assert code == 0
    emb = io.parse_mesh(out)
    assert (emb.tri.n, emb.tri.n_faces) == (7, 6)
    for kind in ("disk", "square", "annulus"):
        code, out, _ = run(capsys, "gen", kind, "--level", 2)
        assert code == 0 and io.parse_mesh(out).tri.n > 0
    p = tmp_path / "g.txt"
    assert run(capsys, "gen", "hex", "--rings", 2, "--jitter", 0.05, "--seed", 4, "-o", p)[0] == 0
    assert io.read_mesh(p).tri.n == 19


def test_cli_gen_budget_exit_code(capsys):
    code, _, err = run(capsys, "gen", "hex", "--rings", 2, "--jitter", 10)
    assert code == 3 and err


def test_cli_classify_curvature_weights(capsys, hexfile, tmp_path):
    code, out, _ = run(capsys, "classify", hexfile, "--eps", 0.3)
    d = json.loads(out)
    assert code == 0 and d["uniformly_acute"] and d["delaunay"]
    code, out, _ = run(capsys, "curvature", hexfile)
    vals = [float(line.split()[-1]) for line in out.splitlines()]
    assert code == 0 and max(abs(v) for v in vals) < 1e-12
    u = tmp_path / "u.txt"
    io.write_factor(np.full(37, 0.3), u)
    code, out, _ = run(capsys, "weights", hexfile, "--factor", u)
    assert code == 0
    w = [float(line.split()[2]) for line in out.splitlines()]
    assert np.allclose(sorted(set(np.round(w, 12))), [1 / (2 * np.sqrt(3)), 1 / np.sqrt(3)])


def test_cli_solve_harmonic_flow(capsys, hexfile, tmp_path):
    g = tmp_path / "g.txt"
    io.write_factor(np.full(37, 0.25), g)
    code, out, _ = run(capsys, "solve", hexfile, g)
    assert code == 0 and np.allclose(io.parse_factor(out), 0.25, atol=1e-10)
    code, out, _ = run(capsys, "harmonic", hexfile, g, "--unit")
    assert code == 0 and np.allclose(io.parse_factor(out), 0.25, atol=1e-10)
    code, out, _ = run(capsys, "flow", hexfile, g, "--t", 0.01, "--dt", 1e-3, "--every", 5)
    assert code == 0
    recs = [json.loads(line) for line in out.splitlines()]
    assert len(recs) >= 2 and "t" in recs[-1]


def test_cli_el_ew_bundled(capsys):
    code, out, _ = run(capsys, "el", DATA / "parallel_paths.net", DATA / "parallel_paths.json")
    assert code == 0 and float(out.splitlines()[0]) == pytest.approx(1.0, abs=1e-12)
    code, out, _ = run(capsys, "ew", DATA / "parallel_paths.net", DATA / "parallel_paths.json")
    assert code == 0 and float(out.splitlines()[0]) == pytest.approx(1.0, abs=1e-9)


def test_cli_recurrence_hyp_dilatation_modulus(capsys, hexfile, tmp_path):
    code, out, _ = run(capsys, "recurrence", "--lattice", "--rings", 1)
    assert code == 0 and out.strip()
    code, out, _ = run(capsys, "hyp", hexfile, "--vertex", 0)
    assert code == 0 and out.strip()
    other = tmp_path / "o.txt"
    base = hex_patch(3)
    io.write_mesh(Embedding(base.tri, 2 * base.z), other)
    code, out, _ = run(capsys, "dilatation", hexfile, other)
    assert code == 0 and "1" in out
    code, out, _ = run(capsys, "modulus", "--level", 2)
    assert code == 0 and out.strip()


def test_cli_verify_and_experiment(capsys, hexfile, tmp_path):
    code, out, _ = run(capsys, "verify", hexfile)
    assert code == 0
    rep = tmp_path / "r.jsonl"
    code, out, _ = run(capsys, "experiment", "oscillation", hexfile, hexfile, "--eps", 0.2, "--report", rep)
    assert code == 0
    d = json.loads(rep.read_text().splitlines()[-1])
    assert d["passed"] and d["oscillation"] == pytest.approx(0.0, abs=1e-12)


def test_cli_error_exit_codes(capsys, tmp_path):
    assert run(capsys, "classify", tmp_path / "missing.txt")[0] == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("v 0 nan\n")
    assert run(capsys, "classify", bad)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 2
    capsys.readouterr()
