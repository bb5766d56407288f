import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import special_ortho_group

from dpwillmore.errors import DegenerateLift, DomainError
from dpwillmore.grid import Grid
from dpwillmore.homogeneous import ejiri_constants
from dpwillmore.linalg import I13
from dpwillmore.loops import TwistedLoop
from dpwillmore.reference import ejiri_immersion, example_s6
from dpwillmore.surfaces import (SurfaceGrid, assemble_blocks, conformal_gauss_frame,
                                 conformality_check, diagnostics_json, energy_from_density,
                                 frame_to_immersion, gauss_codazzi_ricci, isotropy_check,
                                 kappa_field, read_obj, read_ply, strong_conformality_residual,
                                 willmore_energy, willmore_residual)


def s6(u, v):
    return example_s6(np.asarray(u) + 1j * np.asarray(v))


def s6_ld(u, v):
    return example_s6((np.asarray(u) + 1j * np.asarray(v)).astype(np.clongdouble))


U = np.array([0.3, -0.5, 0.7, 0.05])
V = np.array([0.1, 0.6, -0.4, -0.9])


def test_frame_to_immersion_default_light():
    assert np.allclose(frame_to_immersion(np.eye(6)), [-1, 0, 0, 0, 0])
    F = TwistedLoop.from_dict({0: np.eye(6)})
    assert np.allclose(frame_to_immersion(F, 1j), [-1, 0, 0, 0, 0])
    with pytest.raises(DegenerateLift):
        frame_to_immersion(np.eye(6), light=[0, 0, 1, 0])
    with pytest.raises(DomainError):
        frame_to_immersion(1j * np.eye(6))


def test_conformal_gauss_frame_structure():
    cf = conformal_gauss_frame(s6, U, V)
    N = cf.frame.shape[-1]
    d = np.ones(N)
    d[0] = -1
    G = np.swapaxes(cf.frame, -1, -2) @ (d[:, None] * cf.frame)
    assert np.max(np.abs(G - np.diag(d))) < 1e-6
    assert np.max(np.abs(np.einsum("...i,ij,...j->...", cf.Y, np.diag(d), cf.Y))) < 1e-10
    assert np.max(np.abs(np.swapaxes(cf.B1, -1, -2) @ I13 @ cf.B1)) < 1e-6
    assert np.allclose(cf.energy_density, 4 * cf.kappa_sq)


@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=3),
       st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.floats(-3, 3))
def test_assembled_b1_is_always_strongly_conformal(k, beta, s):
    k = np.array(k)
    _, B1 = assemble_blocks(s, k, np.full_like(k, beta))
    assert np.max(np.abs(B1.T @ I13 @ B1)) <= 1e-12 * max(1, np.max(np.abs(B1))) ** 2


def test_example_residuals_in_long_double():
    assert conformality_check(s6_ld, U, V, dtype=np.longdouble) < 1e-6
    assert strong_conformality_residual(s6_ld, U, V, dtype=np.longdouble)[0] < 1e-4
    assert willmore_residual(s6_ld, U, V, h=1e-3, dtype=np.longdouble) < 1e-3
    assert isotropy_check(s6_ld, U, V, dtype=np.longdouble) < 1e-6
    gcr = gauss_codazzi_ricci(s6_ld, U * 0.3, V * 0.3, dtype=np.longdouble)
    assert gcr["gauss"] < 1e-4 and gcr["ricci"] < 1e-5


def test_gridded_source_matches_callable():
    h = 1e-2
    u = np.arange(-6, 7) * h + 0.3
    v = np.arange(-6, 7) * h + 0.1
    vals = s6(u[None, :], v[:, None])
    a = conformality_check((vals, h, h))
    b = conformality_check(s6, np.array([0.3]), np.array([0.1]), h=h)
    assert a < 1e-6 and b < 1e-6


@given(st.integers(0, 2 ** 31))
def test_invariants_are_rotation_invariant(seed):
    R = special_ortho_group.rvs(7, random_state=seed)
    rot = lambda u, v: s6(u, v) @ R.T
    assert conformality_check(rot, U, V) < 1e-8
    k0 = kappa_field(s6, U, V)[2]
    k1 = kappa_field(rot, U, V)[2]
    assert np.max(np.abs(k0 - k1)) < 1e-6 * np.max(k0)


@pytest.mark.parametrize("b", [1.0, 2.0])
def test_ejiri_density_is_constant(b):
    c = ejiri_constants(b)
    kk = kappa_field(lambda u, v: ejiri_immersion(u, v, b), U * 3, V * 3)[2]
    assert np.max(np.abs(kk - (abs(c["k1"]) ** 2 + abs(c["k2"]) ** 2))) < 1e-8


def test_ejiri_energy_by_quadrature():
    e, err = willmore_energy(lambda u, v: ejiri_immersion(u, v, 1.0), (0, 2 * np.pi),
                             (0, 2 * np.pi * np.sqrt(3)), nodes=101)
    assert abs(e / (2 * np.sqrt(3) * np.pi ** 2) - 1) < 1e-8
    assert err < 1e-6
    with pytest.raises(DomainError):
        willmore_energy(s6, (0, 1), (0, 1), nodes=10)


def test_energy_from_density():
    u = np.linspace(0, 2, 11)
    v = np.linspace(0, 3, 21)
    e, err = energy_from_density(np.full((21, 11), 2.0), u, v)
    assert np.isclose(e, 12.0) and err < 1e-12
    d = np.ones((21, 11))
    d[3, 3] = np.nan
    with pytest.raises(DomainError):
        energy_from_density(d, u, v)


def _sg():
    g = Grid.from_ranges(-1, 1, 9, -0.5, 0.5, 5)
    sg = SurfaceGrid.from_callable(s6, g)
    sg.status[2, 4] = "pole_skipped"
    sg.points[2, 4] = np.nan
    return sg


def test_csv_roundtrip(tmp_path):
    sg = _sg()
    sg.compute_invariants()
    sg.to_csv(tmp_path / "s.csv")
    back = SurfaceGrid.from_csv(tmp_path / "s.csv")
    assert back.grid.shape == sg.grid.shape
    assert np.array_equal(back.points, sg.points, equal_nan=True)
    assert np.array_equal(back.status, sg.status)
    assert np.array_equal(back.energy_density, sg.energy_density, equal_nan=True)
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(DomainError):
        SurfaceGrid.from_csv(tmp_path / "bad.csv")


@pytest.mark.parametrize("fmt", ["obj", "ply"])
def test_mesh_roundtrip(tmp_path, fmt):
    sg = _sg()
    path = tmp_path / f"s.{fmt}"
    getattr(sg, f"to_{fmt}")(path)
    verts, faces = (read_obj if fmt == "obj" else read_ply)(path)
    P = sg.project()
    assert np.array_equal(verts, P[sg.ok()])
    # a skipped vertex removes the four quads around it
    assert len(faces) == 8 * 4 - 4
    assert all(len(f) == 4 and max(f) < len(verts) for f in faces)


def test_projections():
    sg = _sg()
    M = np.zeros((3, 7))
    M[0, 0] = M[1, 1] = M[2, 2] = 1
    assert np.array_equal(sg.project("linear", M)[sg.ok()], sg.points[sg.ok()][:, :3])
    with pytest.raises(DomainError):
        sg.project("linear", np.eye(3))
    with pytest.raises(DomainError):
        sg.project("orthographic")


def test_grid_invariants_match_stencil():
    g = Grid.from_ranges(-1, 1, 41, -1, 1, 41)
    sg = SurfaceGrid.from_callable(s6, g).compute_invariants()
    l, k = 20, 25
    ref = 4 * kappa_field(s6, np.array([g.z[l, k].real]), np.array([g.z[l, k].imag]))[2][0]
    assert abs(sg.energy_density[l, k] - ref) < 1e-3 * ref
    assert np.isnan(sg.energy_density[0, 0])
    assert sg.norm_defect() < 1e-14


def test_diagnostics_json():
    d = {"a": np.float64(1.5), "b": 1 + 2j, "c": np.arange(3), "d": {"e": (np.int64(2),)}}
    assert json.loads(diagnostics_json(d)) == {"a": 1.5, "b": [1.0, 2.0], "c": [0, 1, 2],
                                               "d": {"e": [2]}}
