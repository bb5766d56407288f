"""Birkhoff and Iwasawa splittings of twisted loops.

Birkhoff
    ``g = g_minus g_plus`` with ``g_minus(inf) = I``.  The unknown
    ``h = g_minus^{-1} = I + sum_{k=1}^D h_k lambda^{-k}`` is fixed by requiring
    that ``h g`` has no negative powers, a block Toeplitz system in ``h_k``.

Iwasawa
    ``g = F V_plus^{-1}`` with ``F`` real on the circle and ``V_plus(0)`` in the
    solvable group ``S = S1 x S2``.  With ``W = tau(g)^{-1} g = tau(V) V^{-1}``
    the Birkhoff factors of ``W`` give ``W_plus(0) = conj(q)^{-1} q`` where
    ``q = V_plus(0)^{-1}``, so ``q`` is recovered by :func:`solve_solvable`
    and ``V_plus = tau(W_minus) q^{-1}``.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (BigCellViolation, CellBoundary, DomainError, NotInCell, NumericError,
                     SingularLoop)
from .linalg import I13, is_in_group, minkowski_form
from .loops import TwistedLoop, product_residual

COND_THRESHOLD = 1e12


@dataclass
class FactorizationReport:
    factors: list
    residual: float
    cell: str = "unknown"
    condition: float = 1.0
    extra: dict = field(default_factory=dict)

    def to_json_dict(self, include_factors=True):
        doc = {
            "residual": self.residual,
            "cell": self.cell,
            "condition": self.condition,
            "extra": {k: (float(v) if isinstance(v, (float, np.floating)) else v)
                      for k, v in self.extra.items()},
        }
        if include_factors:
            doc["factors"] = [f.to_json_dict() for f in self.factors]
        return doc


def _rcond(lu_piv, anorm):
    lu, _ = lu_piv
    gecon = scipy.linalg.get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    return rcond


MAX_BIRKHOFF_DEGREE = 256


def _toeplitz_solve(g, D, cond_threshold):
    """Solve for ``[h_1 .. h_D]`` with ``(h g)_{-m} = 0``, ``m = 1..D``."""
    N = g.N
    stack = np.array([g.coeff(j) for j in range(-(D - 1), D)])
    idx = np.subtract.outer(np.arange(D), np.arange(D)) + (D - 1)
    # T[k, m] = g_{k-m}
    T = stack[idx].transpose(0, 2, 1, 3).reshape(N * D, N * D)
    G = np.hstack([g.coeff(-m) for m in range(1, D + 1)])
    A = T.T
    with warnings.catch_warnings():
        # exact singularity shows up as rcond = 0 below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu = scipy.linalg.lu_factor(A, check_finite=False)
    anorm = np.max(np.sum(np.abs(A), axis=0))
    rc = _rcond(lu, anorm)
    cond = np.inf if rc == 0 else 1.0 / rc
    if not np.isfinite(cond) or cond > cond_threshold:
        raise BigCellViolation(f"Birkhoff system singular (cond {cond:.3g})", cond)
    return scipy.linalg.lu_solve(lu, -G.T, check_finite=False).T, cond


def birkhoff(g, degree=None, cond_threshold=COND_THRESHOLD, samples=16, residual_tol=1e-8):
    """Split ``g = g_minus g_plus`` with ``g_minus`` normalized at infinity.

    Parameters
    ----------
    g : TwistedLoop
    degree : int, optional
        Number of unknown negative coefficients of ``g_minus^{-1}``.  By
        default it grows from ``g.d_neg + 4`` until the tail is negligible.

    residual_tol : float
        Relative bound on ``||g_minus g_plus - g||``; above it the loop is
        treated as outside the big cell.

    Returns
    -------
    g_minus, g_plus, report
    """
    N = g.N
    if g.d_neg == 0 or np.max(np.abs(g.coeffs[: g.d_neg]), initial=0.0) == 0.0:
        gm = TwistedLoop.identity(g.n)
        rep = FactorizationReport([gm, g], 0.0, condition=1.0)
        return gm, g, rep
    scale = max(1.0, g.max_abs())
    D = degree if degree is not None else max(8, g.d_neg + 4)
    while True:
        H, cond = _toeplitz_solve(g, D, cond_threshold)
        tail = np.max(np.abs(H[:, -2 * N:]))
        if degree is not None or tail <= 1e-15 * scale or D >= MAX_BIRKHOFF_DEGREE:
            break
        D = min(MAX_BIRKHOFF_DEGREE, int(1.5 * D) + 2)
    hc = np.zeros((D + 1, N, N), dtype=complex)
    for k in range(1, D + 1):
        hc[D - k] = H[:, (k - 1) * N: k * N]
    hc[D] = np.eye(N)
    h = TwistedLoop(hc, D, 0)
    # g_plus keeps the non-negative part of h g
    full = h.multiply(g, d_neg=D + g.d_neg, d_pos=g.d_pos)
    leak = max((np.max(np.abs(full.coeff(j))) for j in range(-(D + g.d_neg), 0)), default=0.0)
    g_plus = full.truncate(0, g.d_pos)
    g_plus.dropped = float(leak)
    try:
        g_minus = h.invert(d_neg=D, d_pos=0)
    except SingularLoop as exc:
        raise BigCellViolation(f"Birkhoff factor not invertible: {exc}", np.inf) from None
    gm = np.array(g_minus.coeffs)
    gm[-1] = np.eye(N)
    g_minus = TwistedLoop(gm, D, 0, g_minus.dropped)
    res = product_residual([g_minus, g_plus], g, samples)
    if not res <= residual_tol * scale:
        # truncated factors cannot reproduce g: too close to the cell boundary
        raise BigCellViolation(f"Birkhoff residual {res:.3g} at degree {D} (cond {cond:.3g})", cond)
    rep = FactorizationReport([g_minus, g_plus], res, condition=float(cond),
                              extra={"negative_leak": float(leak), "degree": D})
    return g_minus, g_plus, rep


# --- the solvable complement S = S1 x S2 -----------------------------------

_S1_BASIS = None


def _s1_basis():
    """Real basis of s1: parameters a12, a34 real, a13, a23 complex."""
    global _S1_BASIS
    if _S1_BASIS is None:
        basis = []
        for k in range(6):
            a = np.zeros(6)
            a[k] = 1.0
            basis.append(s1_matrix(a))
        _S1_BASIS = np.array(basis)
    return _S1_BASIS


def s1_matrix(a):
    """Element of s1 for real coordinates ``(a12, a34, Re a13, Im a13, Re a23, Im a23)``."""
    a12, a34 = a[0], a[1]
    a13 = a[2] + 1j * a[3]
    a23 = a[4] + 1j * a[5]
    return np.array([
        [0, 1j * a12, a13, 1j * a13],
        [1j * a12, 0, a23, 1j * a23],
        [a13, -a23, 0, 1j * a34],
        [1j * a13, -1j * a23, -1j * a34, 0],
    ], dtype=complex)


def s1_element(a):
    """``exp(diagonal part) exp(off-diagonal part)`` for coordinates ``a``."""
    a = np.asarray(a, dtype=float)
    b = np.zeros(6)
    b[:2] = a[:2]
    c = np.zeros(6)
    c[2:] = a[2:]
    return scipy.linalg.expm(s1_matrix(b)) @ scipy.linalg.expm(s1_matrix(c))


def _s1_jacobian(a):
    basis = _s1_basis()
    b = np.zeros(6)
    b[:2] = a[:2]
    c = np.zeros(6)
    c[2:] = a[2:]
    Bm = s1_matrix(b)
    Cm = s1_matrix(c)
    eB = scipy.linalg.expm(Bm)
    eC = scipy.linalg.expm(Cm)
    ds = []
    for k in range(6):
        if k < 2:
            ds.append(scipy.linalg.expm_frechet(Bm, basis[k], compute_expm=False) @ eC)
        else:
            ds.append(eB @ scipy.linalg.expm_frechet(Cm, basis[k], compute_expm=False))
    return eB @ eC, ds


def solve_s1(C, tol=1e-13, maxiter=60, start=None):
    """Solve ``conj(s)^{-1} s = C`` for ``s`` in S1 by damped Gauss-Newton.

    Returns ``(s, residual, iterations)``; raises :class:`NotInCell` on failure.
    """
    C = np.asarray(C, dtype=complex)
    a = np.zeros(6) if start is None else np.array(start, dtype=float)

    def resid(a):
        s = s1_element(a)
        # conj(s)^{-1} = I conj(s)^t I inside SO(1,3,C)
        return I13 @ s.conj().T @ I13 @ s - C

    r = resid(a)
    rn = np.max(np.abs(r))
    for it in range(maxiter):
        if rn <= tol:
            return s1_element(a), float(rn), it
        s, ds = _s1_jacobian(a)
        sib = I13 @ s.conj().T @ I13
        cols = []
        for d in ds:
            J = I13 @ d.conj().T @ I13 @ s + sib @ d
            cols.append(np.concatenate([J.real.ravel(), J.imag.ravel()]))
        Jm = np.array(cols).T
        rv = np.concatenate([r.real.ravel(), r.imag.ravel()])
        step, *_ = np.linalg.lstsq(Jm, -rv, rcond=None)
        t = 1.0
        while t > 1e-6:
            r_new = resid(a + t * step)
            rn_new = np.max(np.abs(r_new))
            if np.isfinite(rn_new) and rn_new < rn:
                break
            t *= 0.5
        else:
            break
        a = a + t * step
        r, rn = r_new, rn_new
        if np.max(np.abs(a)) > 50:
            break
    if rn <= 1e-10 * max(1.0, np.max(np.abs(C))):
        return s1_element(a), float(rn), maxiter
    raise NotInCell(f"no S1 factor: Newton stalled at residual {rn:.3g}")


def _t_basis(n):
    """Unitary ``T`` with ``T^t T`` the anti-diagonal identity."""
    T = np.zeros((n, n), dtype=complex)
    r = 1 / np.sqrt(2)
    for k in range(n // 2):
        m = n - 1 - k
        T[k, k] = r
        T[m, k] = 1j * r
        T[k, m] = r
        T[m, m] = -1j * r
    if n % 2:
        T[n // 2, n // 2] = 1.0
    return T


def solve_s2(C2):
    """Solve ``conj(s)^{-1} s = C2`` for ``s`` in S2 (triangular in the null basis).

    Since ``conj(s)^{-1} = s^H`` on SO(n, C), ``C2 = s^H s`` and ``s`` comes from a
    Cholesky factor.
    """
    C2 = np.asarray(C2, dtype=complex)
    n = C2.shape[0]
    T = _t_basis(n)
    A = T.conj().T @ C2 @ T
    A = (A + A.conj().T) / 2
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise NotInCell("SO(n,C) block: Hermitian factor not positive definite") from None
    R = L.conj().T
    s = T @ R @ T.conj().T
    res = float(np.max(np.abs(s.conj().T @ s - C2)))
    return s, res


def solve_solvable(C, tol=1e-11):
    """``q`` in S1 x S2 with ``conj(q)^{-1} q = C`` for block-diagonal ``C``."""
    C = np.asarray(C, dtype=complex)
    N = C.shape[0]
    off = max(np.max(np.abs(C[:4, 4:])), np.max(np.abs(C[4:, :4])))
    if off > 1e-8 * max(1.0, np.max(np.abs(C))):
        raise DomainError("constant term is not block diagonal")
    s1, r1, _ = solve_s1(C[:4, :4])
    s2, r2 = solve_s2(C[4:, 4:])
    q = np.zeros((N, N), dtype=complex)
    q[:4, :4] = s1
    q[4:, 4:] = s2
    return q, max(r1, r2)


def solvable_residual(s):
    """Distance of a block-diagonal matrix from S1 x S2.

    The S1 part is measured as the distance of ``log(s1)`` from the algebra s1,
    the S2 part as the failure of ``T^H s2 T`` to be upper triangular with
    positive diagonal, plus the orthogonality defect.
    """
    s = np.asarray(s, dtype=complex)
    L = scipy.linalg.logm(s[:4, :4])
    basis = _s1_basis()
    Amat = np.array([np.concatenate([b.real.ravel(), b.imag.ravel()]) for b in basis]).T
    lv = np.concatenate([L.real.ravel(), L.imag.ravel()])
    coef, *_ = np.linalg.lstsq(Amat, lv, rcond=None)
    r1 = float(np.max(np.abs(Amat @ coef - lv)))
    s2 = s[4:, 4:]
    n = s2.shape[0]
    T = _t_basis(n)
    R = T.conj().T @ s2 @ T
    d = np.diag(R)
    r2 = max(float(np.max(np.abs(np.tril(R, -1)), initial=0.0)),
             float(np.max(np.abs(d.imag))),
             float(np.max(np.maximum(-d.real, 0.0))),
             float(np.max(np.abs(s2.T @ s2 - np.eye(n)))))
    off = max(float(np.max(np.abs(s[:4, 4:]))), float(np.max(np.abs(s[4:, :4]))))
    return max(r1, r2, off)


def k_factor_normalize(k0, tol=1e-9):
    """Factor ``k0 = k_real s`` with ``k_real`` in SO+(1,3) x SO(n), ``s`` in S1 x S2.

    Raises
    ------
    NotInCell
        When no such factorization exists (or Newton fails to find it).
    """
    k0 = np.asarray(k0, dtype=complex)
    N = k0.shape[0]
    form = minkowski_form(N - 4)
    if is_in_group(k0, form, 1e-8) == "none":
        raise DomainError("k0 is not in SO(1, n+3, C)")
    C = np.linalg.solve(k0.conj(), k0)
    q, res = solve_solvable(C)
    k_real = k0 @ np.linalg.inv(q)
    imag = float(np.max(np.abs(k_real.imag)))
    kr = k_real.real
    if imag > tol * max(1.0, np.max(np.abs(kr))) or is_in_group(kr, form, 1e-8) != "real_plus" \
            or np.linalg.det(kr[4:, 4:]) < 0:
        raise NotInCell("k0 has no factor in the identity component of the real group")
    return kr, q


# --- Iwasawa ----------------------------------------------------------------

def iwasawa(g, degree=None, cond_threshold=COND_THRESHOLD, samples=16, check_cell=True):
    """Split ``g = F V_plus^{-1}`` with ``F`` real and ``V_plus(0)`` in S.

    Returns
    -------
    F : TwistedLoop
        Real loop, ``F = g V_plus``.
    v_plus : TwistedLoop
        Plus loop with ``v_plus(0)`` in S1 x S2.
    report : FactorizationReport
    """
    try:
        W = g.tau().group_inverse().multiply(
            g, d_neg=g.d_neg + g.d_pos, d_pos=g.d_neg + g.d_pos)
        W_minus, W_plus, brep = birkhoff(W, degree=degree, cond_threshold=cond_threshold)
    except (BigCellViolation, NumericError) as exc:
        raise CellBoundary(f"inner Birkhoff step failed: {exc}",
                           getattr(exc, "condition", np.inf)) from None
    C = W_plus.coeff(0)
    try:
        q, qres = solve_solvable(C)
    except NotInCell as exc:
        raise CellBoundary(f"constant normalization failed: {exc}", brep.condition) from None
    qinv = np.linalg.inv(q)
    v_plus = W_minus.tau().multiply(TwistedLoop.constant(qinv), d_neg=0, d_pos=W_minus.d_neg)
    F = g.multiply(v_plus, d_neg=g.d_neg, d_pos=g.d_pos + v_plus.d_pos)
    F = F.trim(1e-16 * max(1.0, F.max_abs()))
    reality = F.reality_defect()
    res = product_residual([g, v_plus], F, samples)
    F1 = F.evaluate(1.0)
    rep = FactorizationReport(
        [F, v_plus], res, cell="identity_cell", condition=brep.condition,
        extra={"reality_defect": reality, "birkhoff_residual": brep.residual,
               "constant_residual": qres, "negative_leak": brep.extra.get("negative_leak", 0.0)})
    if check_cell:
        form = minkowski_form(g.n)
        tag = is_in_group(F1.real, form, 1e-7) if np.max(np.abs(F1.imag)) < 1e-6 else "none"
        if tag != "real_plus" or np.linalg.det(F1.real[4:, 4:]) < 0:
            raise CellBoundary(f"real factor leaves the identity component ({tag})",
                               brep.condition)
    return F, v_plus, rep


def delta0(n):
    d = np.ones(n + 4)
    d[0] = -1.0
    d[4] = -1.0
    return np.diag(d)


def cell_classify(g, cond_threshold=COND_THRESHOLD):
    """``identity_cell``, ``second_cell``, ``boundary`` or ``unknown``."""
    try:
        iwasawa(g, cond_threshold=cond_threshold)
        return "identity_cell"
    except CellBoundary as exc:
        first = exc
    try:
        iwasawa(TwistedLoop.constant(delta0(g.n)).multiply(g, d_neg=g.d_neg, d_pos=g.d_pos),
                cond_threshold=cond_threshold)
        return "second_cell"
    except CellBoundary as exc:
        second = exc
    worst = max(first.condition, second.condition)
    if not np.isfinite(worst) or worst > cond_threshold:
        return "boundary"
    return "unknown"
