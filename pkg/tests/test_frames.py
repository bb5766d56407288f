import numpy as np
import pytest

from dpwillmore.frames import (dpw_construct, dpw_points, extended_frame_check,
                               integrate_along, integrate_holomorphic_frame)
from dpwillmore.grid import Grid
from dpwillmore.homogeneous import cylinder_potential, ejiri_potential, homogeneous_frame
from dpwillmore.linalg import k_mask, matrix_exp
from dpwillmore.loops import unit_circle
from dpwillmore.potentials import Potential, make_lightlike_potential
from dpwillmore.rational import RationalExpr, RationalMatrix
from dpwillmore.reference import example_s6

Z = RationalExpr.z()
SMALL = Grid.from_ranges(-0.8, 0.8, 5, -0.8, 0.8, 5)


def _zero(n=2):
    return Potential(n, {-1: RationalMatrix.zeros(n + 4)})


def test_zero_potential_gives_identity():
    hol = integrate_holomorphic_frame(_zero(), SMALL)
    ff = dpw_construct(_zero(), SMALL)
    for C, F in zip(hol.loops.flat, ff.frames.flat):
        for lam in (1.0, 1j):
            assert np.array_equal(C.evaluate(lam), np.eye(6))
            assert np.allclose(F.evaluate(lam), np.eye(6), atol=1e-15)


def test_constant_potential_is_exponential():
    p = cylinder_potential(0.6, 0.8)
    B, A = p.coefficient(-1, 0), p.coefficient(0, 0)
    hol = integrate_holomorphic_frame(p, SMALL)
    for (l, k), C in np.ndenumerate(hol.loops):
        z = SMALL.z[l, k]
        for lam in unit_circle(4):
            assert np.max(np.abs(C.evaluate(lam) - matrix_exp(z * (B / lam + A)))) < 1e-10


def test_example_frame_is_polynomial_in_inverse_lambda(s6_potential):
    hol = integrate_holomorphic_frame(s6_potential, SMALL)
    for C in hol.loops.flat:
        assert np.array_equal(C.coeff(0), np.eye(8)) or np.allclose(C.coeff(0), np.eye(8), atol=1e-15)
        assert C.d_pos == 0
        assert C.d_neg <= 2


def test_hierarchy_matches_sampled_lambda(s6_potential):
    a = integrate_holomorphic_frame(s6_potential, SMALL, mode="hierarchy")
    b = integrate_holomorphic_frame(s6_potential, SMALL, mode="sampled")
    for C, D in zip(a.loops.flat, b.loops.flat):
        for lam in (1.0, 1j, np.exp(1j * np.pi / 4)):
            assert np.max(np.abs(C.evaluate(lam) - D.evaluate(lam))) < 1e-10


def test_path_independence(s6_potential):
    for z in (0.7 + 0.8j, -0.9 + 0.3j, 0.2 - 0.95j):
        A = integrate_along(s6_potential, z)
        B = integrate_along(s6_potential, z, path="vertical_first")
        for lam in unit_circle(8):
            assert np.max(np.abs(A.evaluate(lam) - B.evaluate(lam))) < 1e-8


def test_example_surface_and_reality(s6_potential):
    ff = dpw_construct(s6_potential, Grid.from_ranges(-1, 1, 7, -1, 1, 7))
    assert np.all(ff.ok())
    y = ff.surface()
    assert np.max(np.abs(y - example_s6(ff.grid.z))) < 1e-6
    for F in ff.frames.flat:
        assert F.reality_defect() < 1e-6
        m = k_mask(8)
        for j in F.powers:
            assert np.all(F.coeff(j)[~m if j % 2 == 0 else m] == 0)
    # basepoint normalization
    l, k = 3, 3
    assert np.allclose(ff.frames[l, k].evaluate(np.exp(0.3j)), np.eye(8), atol=1e-12)


@pytest.mark.parametrize("p", [cylinder_potential(0.6, 0.8), ejiri_potential(1.0)],
                         ids=["cylinder", "ejiri"])
def test_frames_match_closed_form_up_to_constant_gauge(p):
    """F_dpw = F_closed k with k real, block diagonal and lambda-independent."""
    ff = dpw_construct(p, SMALL, samples=32)
    assert np.all(ff.ok())
    for (l, k), F in np.ndenumerate(ff.frames):
        H = homogeneous_frame(p, SMALL.z[l, k])
        ks = [np.linalg.solve(H.evaluate(lam), F.evaluate(lam)) for lam in unit_circle(4)]
        for kk in ks[1:]:
            assert np.max(np.abs(kk - ks[0])) < 1e-8
        assert np.max(np.abs(ks[0].imag)) < 1e-8
        assert np.max(np.abs(ks[0][~k_mask(p.N)])) < 1e-8


def test_pole_is_skipped_and_rest_reached():
    p = make_lightlike_potential([1 / (Z - 0.5)], [Z])
    g = Grid.from_ranges(-1, 1, 5, -1, 1, 5)
    ff = dpw_construct(p, g)
    assert ff.status[2, 3] == "pole_skipped"
    # the point behind the pole on the basepoint's row is reached by a detour
    assert ff.status[2, 4] != "pole_skipped"
    assert set(np.unique(ff.status.astype(str))) <= {"ok", "pole_skipped", "cell_boundary"}


def test_threads_do_not_change_results(s6_potential):
    a = dpw_construct(s6_potential, SMALL, workers=1).surface()
    b = dpw_construct(s6_potential, SMALL, workers=3).surface()
    assert np.array_equal(a, b)


def test_dpw_points_agree_with_grid(s6_potential):
    pts = np.array([0.4 + 0.4j, -0.8 - 0.4j])
    frames, status = dpw_points(s6_potential, pts)
    assert status == ["ok", "ok"]
    ff = dpw_construct(s6_potential, SMALL)
    for F, (l, k) in zip(frames, [(3, 3), (1, 0)]):
        assert np.isclose(SMALL.z[l, k], pts[[(3, 3), (1, 0)].index((l, k))])
        assert np.max(np.abs(F.evaluate(1j) - ff.frames[l, k].evaluate(1j))) < 1e-10


@pytest.mark.parametrize("p", [cylinder_potential(0.6, 0.8), ejiri_potential(1.0)],
                         ids=["cylinder", "ejiri"])
def test_extended_frame_check_constant_potentials(p):
    r = extended_frame_check(p, [0.3 + 0.2j, -0.4 - 0.5j])
    assert r["points"] == 2
    for key in ("support", "algebra", "reality", "flatness", "strong_conformality"):
        assert r[key] < 1e-8, key


def test_extended_frame_check_example(s6_potential):
    r = extended_frame_check(s6_potential, [0.3 + 0.2j, -0.5 + 0.4j, 0.7 - 0.6j])
    assert r["support"] < 1e-4
    assert r["strong_conformality"] < 1e-4
    assert r["flatness"] < 1e-6 and r["reality"] < 1e-10


def test_extended_frame_check_zero_potential():
    r = extended_frame_check(_zero(), [0.3, -0.2j])
    assert all(r[k] == 0 for k in ("support", "algebra", "reality", "flatness",
                                   "strong_conformality"))
