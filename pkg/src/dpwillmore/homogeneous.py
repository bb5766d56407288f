"""Constant potentials: bracket conditions, closed-form frames, the two shipped families.

For a constant potential ``(lambda^{-1} B + A) dz`` with
``[lambda^{-1} B + A, lambda conj(B) + conj(A)] = 0`` the extended frame is
``F = exp(z (lambda^{-1} B + A) + conj(z) (lambda conj(B) + conj(A)))``.
"""
import logging
from dataclasses import dataclass
from math import gcd

import numpy as np

from .errors import DomainError, ValidationError
from .lift import choose_light, project_lift
from .linalg import I13, commutator, k_mask
from .loops import TwistedLoop, loop_exp
from .potentials import constant_potential

SQ2 = np.sqrt(2.0)
log = logging.getLogger(__name__)


@dataclass
class HomogeneousReport:
    ok: bool
    bracket_mixed: float
    bracket_sum: float
    pattern_ok: bool
    eta0_13_plus_23: dict
    messages: list


def _pattern(eta_m1, eta_0, tol=1e-12):
    """Block pattern checks; returns list of messages."""
    msgs = []
    N = eta_m1.shape[0]
    even = k_mask(N)
    if np.max(np.abs(np.where(even, eta_m1, 0))) > tol:
        msgs.append("eta_-1 has entries in the diagonal blocks")
    if np.max(np.abs(np.where(even, 0, eta_0))) > tol:
        msgs.append("eta_0 has entries in the off-diagonal blocks")
    B1 = eta_m1[:4, 4:]
    if np.max(np.abs(eta_m1[4:, :4] + B1.T @ I13)) > tol:
        msgs.append("eta_-1 lower block is not -B1^t I13")
    if np.max(np.abs(B1.T @ I13 @ B1)) > tol:
        msgs.append("B1^t I13 B1 != 0")
    A1 = eta_0[:4, :4]
    if np.max(np.abs(A1[:2, :2])) > tol or np.max(np.abs(A1[2:, 2:])) > tol:
        msgs.append("A1 has nonzero diagonal 2x2 blocks")
    d = np.ones(N)
    d[0] = -1
    for name, X in (("eta_-1", eta_m1), ("eta_0", eta_0)):
        if np.max(np.abs(X.T * d[None, :] + d[:, None] * X)) > tol:
            msgs.append(f"{name} violates the algebra condition")
    return msgs


def validate_homogeneous(eta_m1, eta_0, tol=1e-10):
    """Bracket conditions for a constant potential.

    ``[eta_-1, conj(eta_0)] = 0`` and ``[eta_-1, conj(eta_-1)] + [eta_0, conj(eta_0)] = 0``.
    The sum ``eta_0[1,3] + eta_0[2,3]`` is reported for both 0- and 1-based
    readings of the indices.
    """
    eta_m1 = np.asarray(eta_m1, dtype=complex)
    eta_0 = np.asarray(eta_0, dtype=complex)
    if eta_m1.shape != eta_0.shape or eta_m1.shape[0] < 5:
        raise ValidationError("eta_-1 and eta_0 must be square of equal size n + 4")
    msgs = _pattern(eta_m1, eta_0)
    r1 = float(np.max(np.abs(commutator(eta_m1, eta_0.conj()))))
    r2 = float(np.max(np.abs(commutator(eta_m1, eta_m1.conj()) + commutator(eta_0, eta_0.conj()))))
    idx = {"zero_based": complex(eta_0[1, 3] + eta_0[2, 3]),
           "one_based": complex(eta_0[0, 2] + eta_0[1, 2])}
    ok = r1 < tol and r2 < tol
    if not ok:
        msgs.append(f"bracket conditions fail ({r1:.3g}, {r2:.3g})")
    pattern_ok = not any(m for m in msgs if "bracket" not in m)
    return HomogeneousReport(ok, r1, r2, pattern_ok, idx, msgs)


def _blocks(p):
    if not p.is_constant():
        raise DomainError("homogeneous frames need a constant potential")
    if set(p.terms) - {-1, 0}:
        raise DomainError("constant potential must have only lambda^-1 and lambda^0 terms")
    B = p.coefficient(-1, 0.0)
    A = p.coefficient(0, 0.0)
    return B, A


def homogeneous_frame(p, z, validate=True, tail_tol=1e-15):
    """Closed-form extended frame ``exp(z X + conj(z) conj-reflected X)`` as a loop."""
    B, A = _blocks(p)
    if validate:
        rep = validate_homogeneous(B, A)
        if not rep.ok:
            raise ValidationError("; ".join(rep.messages))
    z = complex(z) - p.basepoint
    X = TwistedLoop.from_dict({-1: z * B, 0: z * A + np.conj(z) * A.conj(), 1: np.conj(z) * B.conj()})
    return loop_exp(X, tail_tol=tail_tol)


def homogeneous_light(p):
    """Lift direction for the closed-form frame (its MC lambda^{-1} block is constant)."""
    B, _ = _blocks(p)
    c, _ = choose_light(B[:4, 4:])
    return c


def _exp_apply(M, t, w, vectors=False):
    """``exp(t M) w`` for a stack of scalars ``t`` and vectors ``w`` (constant or stacked).

    Uses the eigendecomposition of ``M`` when its eigenbasis is well conditioned.
    """
    mu, V = np.linalg.eig(M)
    if np.linalg.cond(V) < 1e6:
        coef = np.linalg.solve(V, np.moveaxis(np.asarray(w, dtype=complex), -1, 0).reshape(M.shape[0], -1))
        coef = coef.reshape((M.shape[0],) + np.shape(w)[:-1])
        coef = np.moveaxis(coef, 0, -1)
        return (np.exp(t[..., None] * mu) * coef) @ V.T
    from .linalg import matrix_exp
    E = matrix_exp(t[..., None, None] * M)
    return np.einsum("...ij,...j->...i", E, w)


def homogeneous_surface(p, z, lam=1.0):
    """Sphere points of the closed-form frame at an array of ``z``.

    ``z (lam^{-1} B + A) + conj(z) (lam conj(B) + conj(A)) = u P + v Q`` with
    commuting ``P, Q``, so the frame is ``exp(u P) exp(v Q)``.
    """
    B, A = _blocks(p)
    c = homogeneous_light(p)
    z = np.asarray(z, dtype=complex) - p.basepoint
    X = B / lam + A
    Xt = lam * B.conj() + A.conj()
    P = X + Xt
    Q = 1j * (X - Xt)
    w = _exp_apply(Q, z.imag, np.concatenate([c, np.zeros(p.N - 4)]))
    Y = _exp_apply(P, z.real, w).real
    Y = np.where(Y[..., :1] < 0, -Y, Y)
    return project_lift(Y)


def vacuum_classify(B, tol=1e-10, strict=False):
    """Reduction type of a vacuum potential ``lambda^{-1} B``.

    Returns ``reduces_lorentz`` (generating vector ``v0`` with
    ``conj(v0)^t I13 v0 = 0``), ``reduces_compact`` (that form nonzero) or
    ``invalid`` (``B1^t I13 B1 != 0`` or rank of ``B1`` not one).

    For rank one, ``[B, conj B] = 0`` forces ``v0`` to be real up to phase,
    so only the Lorentz branch can satisfy it.  The bracket is therefore
    logged rather than enforced; ``strict=True`` returns ``invalid`` when
    it fails.
    """
    B = np.asarray(B, dtype=complex)
    B1 = B[:4, 4:] if B.shape[0] == B.shape[1] and B.shape[0] >= 5 else B
    full = np.zeros((B1.shape[1] + 4,) * 2, dtype=complex)
    full[:4, 4:] = B1
    full[4:, :4] = -B1.T @ I13
    scale = max(1.0, float(np.max(np.abs(B1))))
    if np.max(np.abs(B1.T @ I13 @ B1)) > tol * scale ** 2:
        return "invalid"
    u, s, vh = np.linalg.svd(B1)
    if s.size == 0 or s[0] == 0:
        return "invalid"
    rank = int(np.sum(s > 1e-9 * s[0]))
    if rank != 1:
        return "invalid"
    br = float(np.max(np.abs(commutator(full, full.conj()))))
    if br > tol * scale ** 2:
        if strict:
            return "invalid"
        log.warning("[B, conj B] = %.3g: not a vacuum potential", br)
    v0 = u[:, 0]
    q = np.vdot(v0, I13 @ v0).real
    return "reduces_lorentz" if abs(q) <= 1e-9 else "reduces_compact"


# ---------------------------------------------------------------------------
# the two families

def cylinder_potential(a, b):
    """Constant potential of the homogeneous cylinder in S^4 (``a^2 + b^2 = 1``)."""
    if abs(a * a + b * b - 1) > 1e-12:
        raise DomainError("cylinder parameters need a^2 + b^2 = 1")
    r = 1 / (4 * SQ2)
    A = np.zeros((6, 6), dtype=complex)
    A[0, 2], A[0, 3] = r, -1j * (1 + 2 * a * a) * r
    A[1, 2], A[1, 3] = 3 * r, -1j * (1 + 2 * b * b) * r
    A[2, 0], A[2, 1] = r, -3 * r
    A[3, 0], A[3, 1] = -1j * (1 + 2 * a * a) * r, 1j * (1 + 2 * b * b) * r
    A[4, 5], A[5, 4] = -a / 2, a / 2
    B = np.zeros((6, 6), dtype=complex)
    B[0, 4] = 1j * a * b / (2 * SQ2)
    B[1, 4] = -1j * a * b / (2 * SQ2)
    # (-k, -ik) pattern with k = -ib/2
    B[2, 5] = 1j * b / 2
    B[3, 5] = -b / 2
    B[4, 0] = B[4, 1] = 1j * a * b / (2 * SQ2)
    B[5, 2] = -1j * b / 2
    B[5, 3] = b / 2
    return constant_potential(B, A)


def ejiri_constants(b):
    """Entries of the constant potential of the homogeneous torus family in S^5."""
    if not b > 0:
        raise DomainError("ejiri parameter b must be positive")
    b2 = b * b
    return {
        "k1": np.sqrt(4 * b2 + 2) / (12 * b),
        "k2": -1j * np.sqrt(3) / 6,
        "s": (4 * b2 - 1) / (18 * b2),
        "beta3": -1j * SQ2 * (4 * b2 - 1) / (72 * b2),
        "a13": -1j * np.sqrt(2 * b2 + 1) / (6 * b),
        "a23": np.sqrt(6) / 6,
        "s1": SQ2 * (20 * b2 + 1) / (144 * b2),
        "s2": -1j * SQ2 * (12 * b2 - 1) / (48 * b2),
        "s3": SQ2 * (52 * b2 - 1) / (144 * b2),
        "s4": -1j * SQ2 * (12 * b2 + 1) / (48 * b2),
    }


def ejiri_potential(b):
    """Constant potential of the homogeneous torus family in S^5 (``b > 0``)."""
    c = ejiri_constants(b)
    A = np.zeros((7, 7), dtype=complex)
    A[0, 2], A[0, 3] = c["s1"], c["s2"]
    A[1, 2], A[1, 3] = c["s3"], c["s4"]
    A[2, 0], A[2, 1] = c["s1"], -c["s3"]
    A[3, 0], A[3, 1] = c["s2"], -c["s4"]
    A[4, 6], A[5, 6] = -c["a13"], -c["a23"]
    A[6, 4], A[6, 5] = c["a13"], c["a23"]
    B = np.zeros((7, 7), dtype=complex)
    k1, k2, be = c["k1"], c["k2"], SQ2 * c["beta3"]
    B[0, 6], B[1, 6] = be, -be
    B[2, 4], B[2, 5] = -k1, -k2
    B[3, 4], B[3, 5] = -1j * k1, -1j * k2
    B[4, 2], B[4, 3] = k1, 1j * k1
    B[5, 2], B[5, 3] = k2, 1j * k2
    B[6, 0], B[6, 1] = be, be
    return constant_potential(B, A)


@dataclass
class TorusEnergy:
    j: int
    l: int
    b: float
    quadrature: float
    closed_form: float

    @property
    def relative_gap(self):
        return abs(self.quadrature - self.closed_form) / abs(self.closed_form)


def torus_energy(j, l, nodes=9):
    """Willmore energy of the ``(j, l)`` torus of the S^5 family.

    The integrand ``4 (|k1|^2 + |k2|^2)`` is constant; it is integrated with
    composite Simpson over ``[0, 2 pi] x [0, 2 pi l sqrt(3)]`` at ``b = l / j``,
    which makes ``2 pi l sqrt(3)`` the v-period.
    """
    from scipy.integrate import simpson
    j, l = int(j), int(l)
    if j < 1 or l < 1 or gcd(j, l) != 1:
        raise DomainError("j, l must be coprime positive integers")
    b = l / j
    c = ejiri_constants(b)
    dens = 4 * (abs(c["k1"]) ** 2 + abs(c["k2"]) ** 2)
    u = np.linspace(0, 2 * np.pi, nodes)
    v = np.linspace(0, 2 * np.pi * l * np.sqrt(3), nodes)
    grid = np.full((nodes, nodes), dens)
    quad = float(simpson(simpson(grid, x=u, axis=1), x=v))
    closed = float(16 * np.pi ** 2 * np.sqrt(3) / 9 * (l + j * j / (8 * l)))
    return TorusEnergy(j, l, b, quad, closed)
