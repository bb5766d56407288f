import json
import subprocess
import sys

import numpy as np
import pytest

from dpwillmore.cli import UsageError, main, parse_lambda
from dpwillmore.loops import loop_exp, random_twisted_algebra_loop
from dpwillmore.potentials import load_potential
from dpwillmore.reference import example_s6
from dpwillmore.surfaces import SurfaceGrid, read_obj, read_ply
from conftest import DATA

POT = str(DATA / "s6.pot")


def _err(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.mark.parametrize("text,val", [("1", 1), ("i", 1j), ("-i", -1j), ("0.6+0.8i", 0.6 + 0.8j),
                                      ("exp(i*pi/4)", np.exp(1j * np.pi / 4)),
                                      ("e^(i pi/2)", 1j), ("exp(i*0.3)", np.exp(0.3j))])
def test_parse_lambda(text, val):
    assert np.isclose(parse_lambda(text), val)


def test_parse_lambda_rejects():
    with pytest.raises(UsageError):
        parse_lambda("one")


def test_construct_csv_and_diagnostics(tmp_path):
    out = tmp_path / "s.csv"
    code = main(["construct", "--potential", POT, "--grid", "re:-1:1:5,im:-1:1:5",
                 "--deg", "6", "--out", str(out), "--mesh", str(tmp_path / "s.obj")])
    assert code == 0
    sg = SurfaceGrid.from_csv(out)
    assert np.max(np.abs(sg.points - example_s6(sg.grid.z))) < 1e-6
    diag = json.loads((tmp_path / "s.diagnostics.json").read_text())
    assert diag["status"] == {"ok": 25} and diag["ok_fraction"] == 1.0
    assert diag["norm_defect"] < 1e-12
    verts, faces = read_obj(tmp_path / "s.obj")
    assert len(verts) == 25 and len(faces) == 16


def test_construct_at_lambda(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["construct", "--potential", POT, "--grid", "re:-0.5:0.5:3,im:-0.5:0.5:3",
                 "--lambda", "i", "--deg", "6", "--out", str(out)]) == 0
    sg = SurfaceGrid.from_csv(out)
    assert np.max(np.abs(sg.points - example_s6(sg.grid.z, 1j))) < 1e-6


def test_config_defaults_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grid": "re:0:0.5:2,im:0:0.5:2", "deg": 6}))
    out = tmp_path / "a.csv"
    assert main(["--config", str(cfg), "construct", "--potential", POT, "--out", str(out)]) == 0
    assert SurfaceGrid.from_csv(out).grid.shape == (2, 2)
    assert main(["--config", str(cfg), "construct", "--potential", POT, "--out", str(out),
                 "--grid", "re:0:0.5:3,im:0:0.5:2"]) == 0
    assert SurfaceGrid.from_csv(out).grid.shape == (2, 3)


def test_error_codes(tmp_path, capsys):
    assert main(["construct", "--potential", str(tmp_path / "missing.pot"), "--out", "x.csv"]) == 2
    assert _err(capsys)["exit_code"] == 2
    bad = tmp_path / "bad.pot"
    bad.write_text("n = 2\nlambda^-1:\n[z+ , 0]\n")
    assert main(["construct", "--potential", str(bad), "--out", str(tmp_path / "x.csv")]) == 3
    e = _err(capsys)
    assert e["error"] == "PotentialSyntaxError" and e["exit_code"] == 3
    assert main(["construct", "--potential", POT, "--grid", "re:0:1", "--out", "x.csv"]) == 2
    assert main(["nonsense"]) == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[1, 2]")
    assert main(["--config", str(cfg), "reference", "--which", "s6", "--out", "x.csv"]) == 2


def test_reference_and_analyze(tmp_path):
    out = tmp_path / "ref.csv"
    assert main(["reference", "--which", "s6", "--grid", "re:-0.3:0.3:31,im:-0.3:0.3:31",
                 "--invariants", "--out", str(out)]) == 0
    rep = tmp_path / "rep.json"
    assert main(["analyze", "--surface", str(out), "--checks", "conformal,isotropy,strong,energy",
                 "--out", str(rep)]) == 0
    r = json.loads(rep.read_text())
    assert r["ok_points"] == 31 * 31
    # gridded fourth-order differences at spacing 0.02
    assert r["residuals"]["conformal"] < 1e-5
    assert r["residuals"]["strong_conformality"] < 1e-4
    assert r["residuals"]["patch_energy"] > 0
    assert main(["analyze", "--surface", str(out), "--checks", "bogus"]) == 2


def test_reference_meshes_with_linear_projection(tmp_path):
    mat = tmp_path / "m.txt"
    mat.write_text("1,0,0,0,0\n0,1,0,0,0\n0,0,1,0,0\n")
    out = tmp_path / "c.ply"
    assert main(["reference", "--which", "cylinder", "--a", "0.6", "--b", "0.8", "--grid",
                 "re:0:1:3,im:0:1:4", "--projection", "linear", "--matrix", str(mat),
                 "--out", str(out)]) == 0
    verts, faces = read_ply(out)
    assert verts.shape == (12, 3) and len(faces) == 6
    assert main(["reference", "--which", "ejiri", "--out", str(tmp_path / "e.txt"), "--b", "1"]) == 2
    assert main(["reference", "--which", "cylinder", "--out", str(tmp_path / "e.csv")]) == 2


def test_homogeneous_family(tmp_path, capsys):
    pot, rep = tmp_path / "c.pot", tmp_path / "c.json"
    assert main(["homogeneous", "--family", "cylinder", "--a", "0.6", "--b", "0.8",
                 "--potential-out", str(pot), "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["ok"] is True
    q = load_potential(pot)
    assert q.is_constant() and q.N == 6
    assert main(["homogeneous", "--family", "ejiri", "--b", "1", "--energy", "1,1;1,2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("j,l") and len(lines) == 3
    assert abs(float(lines[1].split(",")[4]) - 2 * np.sqrt(3) * np.pi ** 2) < 1e-10
    assert main(["homogeneous", "--family", "cylinder", "--a", "0.6", "--b", "0.8",
                 "--energy", "1,1"]) == 2
    assert main(["homogeneous", "--family", "ejiri", "--b", "1", "--energy", "2,4"]) == 2


def test_factorize(tmp_path):
    g = loop_exp(random_twisted_algebra_loop(2, 3, np.random.default_rng(0), 0.5))
    lp = tmp_path / "g.json"
    lp.write_text(g.to_json())
    out = tmp_path / "r.json"
    assert main(["factorize", "--loop", str(lp), "--which", "iwasawa", "--no-factors",
                 "--out", str(out)]) == 0
    assert json.loads(out.read_text())["residual"] < 1e-10
    assert main(["factorize", "--loop", str(lp), "--which", "cell", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["cell"] == "identity_cell"
    lp.write_text("{}")
    assert main(["factorize", "--loop", str(lp)]) == 2


def test_wu_from_emitted_samples(tmp_path):
    pot = tmp_path / "c.pot"
    assert main(["homogeneous", "--family", "cylinder", "--a", "0.6", "--b", "0.8",
                 "--potential-out", str(pot)]) == 0
    samp, out1, out2, rep = (tmp_path / n for n in ("s.json", "q1.pot", "q2.pot", "r.json"))
    assert main(["wu", "--potential", str(pot), "--radii", "12", "--angles", "16",
                 "--q-terms", "8", "--emit-samples", str(samp), "--out", str(out1),
                 "--report", str(rep)]) == 0
    assert main(["wu", "--samples", str(samp), "--q-terms", "8", "--out", str(out2)]) == 0
    assert out1.read_text() == out2.read_text()
    assert json.loads(rep.read_text())["validation"]["ok"] is True
    q = load_potential(out1)
    assert q.kind == "normalized"
    assert main(["wu", "--out", str(out1)]) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "dpwillmore", "--help"], capture_output=True,
                       text=True, timeout=60)
    assert r.returncode == 0 and "construct" in r.stdout
