import numpy as np
import pytest
from hypothesis import given, strategies as st

from _oracles import cross_ratios, fd_mc, stencil9
from dpwillmore.errors import DomainError, ValidationError
from dpwillmore.homogeneous import (cylinder_potential, ejiri_constants, ejiri_potential,
                                    homogeneous_frame, homogeneous_surface, torus_energy,
                                    vacuum_classify, validate_homogeneous)
from dpwillmore.linalg import I13, group_residual, minkowski_form
from dpwillmore.loops import tau, unit_circle
from dpwillmore.reference import cylinder_immersion, ejiri_immersion
from dpwillmore.surfaces import kappa_field

FAMILIES = {
    "cylinder": (cylinder_potential(0.6, 0.8), lambda u, v: cylinder_immersion(u, v, 0.6, 0.8)),
    "ejiri": (ejiri_potential(1.0), lambda u, v: ejiri_immersion(u, v, 1.0)),
    "ejiri_b2": (ejiri_potential(2.0), lambda u, v: ejiri_immersion(u, v, 2.0)),
}


@pytest.mark.parametrize("name", FAMILIES)
def test_family_brackets(name):
    p = FAMILIES[name][0]
    rep = validate_homogeneous(p.coefficient(-1, 0), p.coefficient(0, 0))
    assert rep.ok and rep.pattern_ok, rep.messages
    assert rep.bracket_mixed < 1e-12 and rep.bracket_sum < 1e-12


@given(st.floats(0, 2 * np.pi))
def test_cylinder_brackets_whole_circle(t):
    p = cylinder_potential(np.cos(t), np.sin(t))
    assert validate_homogeneous(p.coefficient(-1, 0), p.coefficient(0, 0)).ok


@given(st.floats(0.1, 10))
def test_ejiri_brackets_all_b(b):
    p = ejiri_potential(b)
    assert validate_homogeneous(p.coefficient(-1, 0), p.coefficient(0, 0)).ok


def test_broken_brackets_are_reported():
    p = cylinder_potential(0.6, 0.8)
    B = p.coefficient(-1, 0).copy()
    B[3, 5], B[5, 3] = B[5, 3], B[3, 5]     # the sign misprint
    rep = validate_homogeneous(B, p.coefficient(0, 0))
    assert not rep.ok
    assert any("bracket" in m for m in rep.messages)
    with pytest.raises(ValidationError):
        validate_homogeneous(np.eye(3), np.eye(3))


def test_index_sum_reporting():
    A = ejiri_potential(1.0).coefficient(0, 0)
    rep = validate_homogeneous(ejiri_potential(1.0).coefficient(-1, 0), A)
    assert rep.eta0_13_plus_23["zero_based"] == A[1, 3] + A[2, 3]
    assert rep.eta0_13_plus_23["one_based"] == A[0, 2] + A[1, 2]


def test_ejiri_constants_at_one():
    c = ejiri_constants(1.0)
    assert np.isclose(c["k1"], np.sqrt(6) / 12)
    assert np.isclose(c["s"], 1 / 6)
    assert np.isclose(abs(c["k2"]) ** 2, 1 / 12)
    with pytest.raises(DomainError):
        ejiri_constants(-1.0)


@pytest.mark.parametrize("name", FAMILIES)
def test_closed_form_frame(name):
    p = FAMILIES[name][0]
    assert np.allclose(homogeneous_frame(p, 0j).evaluate(1j), np.eye(p.N), atol=1e-15)
    F = homogeneous_frame(p, 0.7 - 0.4j)
    for lam in unit_circle(4):
        assert group_residual(F.evaluate(lam), minkowski_form(p.n)) < 1e-10
    assert (tau(F) - F).max_abs() < 1e-12


@pytest.mark.parametrize("name", FAMILIES)
def test_closed_form_mc_is_constant(name):
    p = FAMILIES[name][0]
    h = 1e-3
    for z in (0.3 + 0.2j, -1.5 + 0.9j):
        a = fd_mc([homogeneous_frame(p, w) for w in stencil9(z, h)], h)
        for lam in unit_circle(4):
            X = p.coefficient(-1, 0) / lam + p.coefficient(0, 0)
            assert np.max(np.abs(a.evaluate(lam) - X)) < 1e-10


@pytest.mark.parametrize("name", FAMILIES)
def test_surface_matches_immersion_up_to_moebius(name):
    p, y = FAMILIES[name]
    rng = np.random.default_rng(0)
    z = rng.uniform(-2, 2, 8) + 1j * rng.uniform(-2, 2, 8)
    Y = homogeneous_surface(p, z)
    assert np.max(np.abs(np.linalg.norm(Y, axis=-1) - 1)) < 1e-12
    assert np.max(np.abs(cross_ratios(Y) - cross_ratios(y(z.real, z.imag)))) < 1e-10


def test_surface_matches_frame_route():
    p = ejiri_potential(1.0)
    from dpwillmore.surfaces import frame_to_immersion
    from dpwillmore.homogeneous import homogeneous_light
    z = 0.4 + 1.1j
    a = frame_to_immersion(homogeneous_frame(p, z), 1.0, light=homogeneous_light(p))
    assert np.max(np.abs(a - homogeneous_surface(p, z))) < 1e-12


def test_clifford_torus_constant_kappa():
    p = cylinder_potential(0.0, 1.0)
    rng = np.random.default_rng(5)
    u, v = rng.uniform(-3, 3, 15), rng.uniform(-3, 3, 15)
    _, _, kk = kappa_field(lambda a, b: homogeneous_surface(p, a + 1j * b), u, v)
    assert np.ptp(kk) < 1e-8
    assert np.isclose(kk.mean(), 0.25, atol=1e-8)


def test_torus_energy():
    e = torus_energy(1, 1)
    assert abs(e.closed_form / (2 * np.sqrt(3) * np.pi ** 2) - 1) < 1e-14
    assert e.relative_gap < 1e-10
    assert torus_energy(2, 3).b == 1.5
    assert torus_energy(2, 3).relative_gap < 1e-10
    with pytest.raises(DomainError):
        torus_energy(2, 4)


def test_vacuum_classify():
    B = np.zeros((4, 2), dtype=complex)
    B[0, 0] = B[1, 0] = 1                 # lorentz-null column
    assert vacuum_classify(B) == "reduces_lorentz"
    B = np.zeros((4, 2), dtype=complex)
    B[2, 0], B[3, 0] = 1, 1j              # bilinear-null, hermitian norm 2
    assert vacuum_classify(B) == "reduces_compact"
    # rank one forces v0 real up to phase under [B, conj B] = 0
    assert vacuum_classify(B, strict=True) == "invalid"
    B = np.zeros((4, 2), dtype=complex)
    B[0, 1], B[1, 1] = 1j, -1j
    assert vacuum_classify(B, strict=True) == "reduces_lorentz"
    assert vacuum_classify(np.ones((4, 2))) == "invalid"      # rank 1, not null
    assert vacuum_classify(np.zeros((4, 2))) == "invalid"
    B = np.zeros((4, 2), dtype=complex)
    B[2, 0] = 1
    assert vacuum_classify(B) == "invalid"   # not null
    B = np.zeros((4, 2), dtype=complex)
    B[0, 0] = B[1, 0] = 1
    B[2, 1], B[3, 1] = 1, 1j
    assert np.max(np.abs(B.T @ I13 @ B)) == 0
    assert vacuum_classify(B) == "invalid"   # rank 2
