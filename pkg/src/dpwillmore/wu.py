"""Normalized potential from Maurer-Cartan data by holomorphic parts.

With ``alpha = lambda^{-1} alpha'_p + alpha_k + lambda alpha''_p`` the
``dz``-parts are expanded in ``(z, zbar)`` about the basepoint; ``delta_0``
and ``delta_1`` are the ``zbar``-free parts of ``alpha'_k`` and ``alpha'_p``.
Then ``F0' = F0 delta_0``, ``F0(0) = I`` and ``eta_{-1} = F0 delta_1 F0^{-1}``.
"""
import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .grid import Grid
from .linalg import k_mask
from .potentials import Potential
from .rational import RationalExpr, RationalMatrix

log = logging.getLogger(__name__)

MAX_FIT_DEGREE = 12
VANDERMONDE_COND = 1e10


def _monomials(D):
    return [(p, q) for t in range(D + 1) for p in range(t + 1) for q in [t - p]]


@dataclass
class BivariateTaylor:
    """Truncated double series ``sum_{p+q<=D} c[p, q] z^p zbar^q`` (matrix-valued).

    ``coeffs`` has shape ``(D+1, D+1) + value_shape``; entries with
    ``p + q > D`` are zero.
    """

    coeffs: np.ndarray
    degree: int
    fit_residual: float = 0.0

    @property
    def value_shape(self):
        return self.coeffs.shape[2:]

    @classmethod
    def from_dict(cls, terms, degree=None, value_shape=()):
        """``terms = {(p, q): value}``."""
        D = degree if degree is not None else max((p + q for p, q in terms), default=0)
        c = np.zeros((D + 1, D + 1) + tuple(value_shape), dtype=complex)
        for (p, q), val in terms.items():
            if p + q > D:
                raise DomainError("term beyond the stated degree")
            c[p, q] = val
        return cls(c, D)

    def __call__(self, z, center=0j):
        z = np.asarray(z, dtype=complex) - center
        out = np.zeros(z.shape + self.value_shape, dtype=complex)
        zp = np.ones_like(z)
        ex = (Ellipsis,) + (None,) * len(self.value_shape)
        P, Q = self.coeffs.shape[:2]
        for p in range(P):
            zq = np.ones_like(z)
            for q in range(Q):
                if p + q <= self.degree and np.any(self.coeffs[p, q]):
                    out = out + (zp * zq)[ex] * self.coeffs[p, q]
                zq = zq * np.conj(z)
            zp = zp * z
        return out

    @classmethod
    def fit(cls, z, values, degree=MAX_FIT_DEGREE, center=0j, cond_limit=VANDERMONDE_COND):
        """Least-squares fit to samples; lowers the degree until the scaled
        Vandermonde matrix has condition below ``cond_limit``.
        """
        z = np.asarray(z, dtype=complex).ravel() - center
        values = np.asarray(values, dtype=complex)
        vshape = values.shape[1:]
        Vals = values.reshape(len(z), -1)
        r = max(float(np.max(np.abs(z))), 1e-300)
        w = z / r
        for D in range(degree, -1, -1):
            mons = _monomials(D)
            if len(mons) > len(z):
                continue
            A = np.stack([w ** p * np.conj(w) ** q for p, q in mons], axis=1)
            if np.linalg.cond(A) < cond_limit:
                break
        else:
            raise DomainError("no stable polynomial fit")
        sol, *_ = np.linalg.lstsq(A, Vals, rcond=None)
        res = float(np.max(np.abs(A @ sol - Vals))) if len(z) else 0.0
        c = np.zeros((D + 1, D + 1, Vals.shape[1]), dtype=complex)
        for (p, q), row in zip(mons, sol):
            c[p, q] = row / r ** (p + q)
        if D < degree:
            log.info("Taylor fit degree lowered to %d for conditioning", D)
        return cls(c.reshape((D + 1, D + 1) + vshape), D, res)


    @classmethod
    def fit_polar(cls, radii, values, q_terms=10, modes=None):
        """Fit from samples on concentric circles ``radii[j] e^{2 pi i m / M}``.

        ``values`` has shape ``(len(radii), M) + value_shape``.  Each angular
        Fourier mode ``k`` is fitted as ``sum_q c_q r^{|k| + 2q}``,
        ``q < q_terms + 1``, which gives ``c[|k|+q, q]`` (``k >= 0``) or
        ``c[q, q+|k|]`` (``k < 0``).
        """
        radii = np.asarray(radii, dtype=float)
        values = np.asarray(values, dtype=complex)
        R, M = values.shape[:2]
        vshape = values.shape[2:]
        if R < q_terms + 1:
            raise DomainError("need more radii than q terms")
        K = M // 2 - 1 if modes is None else min(modes, M // 2 - 1)
        rs = float(np.max(radii))
        x = radii / rs
        F = np.fft.fft(values.reshape(R, M, -1), axis=1) / M
        D = K + 2 * q_terms
        c = np.zeros((D + 1, D + 1, F.shape[-1]), dtype=complex)
        for k in range(-K, K + 1):
            A = np.stack([x ** (abs(k) + 2 * q) for q in range(q_terms + 1)], axis=1)
            sol, *_ = np.linalg.lstsq(A, F[:, k % M], rcond=None)
            for q, row in enumerate(sol):
                p_, q_ = (abs(k) + q, q) if k >= 0 else (q, q + abs(k))
                c[p_, q_] = row / rs ** (abs(k) + 2 * q)
        t = cls(c.reshape((D + 1, D + 1) + vshape), D)
        th = 2 * np.pi * np.arange(M) / M
        pts = radii[:, None] * np.exp(1j * th)[None, :]
        t.fit_residual = float(np.max(np.abs(t(pts) - values)))
        return t


def polar_points(radius=0.5, n_radii=14, n_angles=32, center=0j):
    """Radii at Chebyshev nodes in ``r^2`` on ``(0, radius^2)`` and equispaced angles.

    Returns ``(radii, points)`` with ``points`` of shape ``(n_radii, n_angles)``.
    """
    j = np.arange(n_radii)
    s = radius ** 2 * (1 - np.cos(np.pi * (j + 0.5) / n_radii)) / 2
    radii = np.sqrt(s)
    th = 2 * np.pi * np.arange(n_angles) / n_angles
    return radii, center + radii[:, None] * np.exp(1j * th)[None, :]


def holomorphic_part(t):
    """Coefficients of the ``zbar``-free terms: array ``(D+1,) + value_shape`` in powers of z."""
    return t.coeffs[:, 0].copy()


def _series_mul(a, b, D):
    out = np.zeros((D + 1,) + a.shape[1:-1] + b.shape[-1:], dtype=complex)
    for i in range(min(D + 1, a.shape[0])):
        for j in range(min(D + 1 - i, b.shape[0])):
            out[i + j] += a[i] @ b[j]
    return out


def frame_series(delta0, D):
    """``F0`` and ``F0^{-1}`` as z-series with ``F0' = F0 delta0``, ``F0(0) = I``."""
    N = delta0.shape[-1]
    f = np.zeros((D + 1, N, N), dtype=complex)
    g = np.zeros((D + 1, N, N), dtype=complex)
    f[0] = g[0] = np.eye(N)
    for m in range(D):
        acc_f = np.zeros((N, N), dtype=complex)
        acc_g = np.zeros((N, N), dtype=complex)
        for j in range(m + 1):
            l = m - j
            if l < delta0.shape[0]:
                acc_f += f[j] @ delta0[l]
                acc_g -= delta0[l] @ g[j]
        f[m + 1] = acc_f / (m + 1)
        g[m + 1] = acc_g / (m + 1)
    return f, g


def _check_blocks(t, even, name, tol=1e-8):
    m = k_mask(t.value_shape[-1])
    bad = t.coeffs[..., ~m] if even else t.coeffs[..., m]
    scale = max(1.0, float(np.max(np.abs(t.coeffs))))
    if bad.size and np.max(np.abs(bad)) > tol * scale:
        raise ValidationError(f"{name} has entries outside its block pattern")


def wu_normalized_potential(alpha_k, alpha_p, degree=None, basepoint=0j, check=True):
    """Normalized potential ``lambda^{-1} F0 delta1 F0^{-1} dz`` from MC data.

    Parameters
    ----------
    alpha_k, alpha_p : BivariateTaylor
        ``dz``-parts of the ``lambda^0`` and ``lambda^{-1}`` Maurer-Cartan
        coefficients, expanded about ``basepoint``.
    degree : int, optional
        Truncation degree of the output polynomials (default: fit degree).

    Returns
    -------
    Potential
        ``kind='normalized'`` with polynomial entries in ``z - basepoint``.
    """
    if check:
        _check_blocks(alpha_k, True, "alpha_k")
        _check_blocks(alpha_p, False, "alpha_p")
    D = degree if degree is not None else max(alpha_k.degree, alpha_p.degree)
    d0 = holomorphic_part(alpha_k)[:D + 1]
    d1 = holomorphic_part(alpha_p)[:D + 1]
    f, g = frame_series(d0, D)
    eta = _series_mul(_series_mul(f, d1, D), g, D)
    return _series_potential(eta, basepoint)


def _series_potential(eta, basepoint):
    """Potential with entries ``sum_m eta[m] (z - z0)^m``."""
    N = eta.shape[-1]
    z0 = complex(basepoint)
    ents = np.empty((N, N), dtype=object)
    m = k_mask(N)
    for a in range(N):
        for b in range(N):
            c = np.where(m[a, b], 0, eta[:, a, b])
            ents[a, b] = _shifted_poly(c, z0)
    return Potential(N - 4, {-1: RationalMatrix(ents)}, z0, "normalized")


def _shifted_poly(c, z0):
    """Coefficients of ``sum c_m (z - z0)^m`` in powers of ``z``."""
    if z0 == 0:
        return RationalExpr(np.asarray(c, dtype=complex))
    out = np.zeros(len(c), dtype=complex)
    base = np.array([1.0 + 0j])
    lin = np.array([-z0, 1.0 + 0j])
    for cm in c:
        out[:len(base)] += cm * base
        base = np.convolve(base, lin)
    return RationalExpr(out)


def homogeneous_normalized_b1(B, A, z, basepoint=0j):
    """``e^{zA} B e^{-zA}`` restricted to the upper-right block (closed-form reference)."""
    from scipy.linalg import expm
    z = complex(z) - basepoint
    E = expm(z * np.asarray(A))
    return (E @ np.asarray(B) @ np.linalg.inv(E))[:4, 4:]


# ---------------------------------------------------------------------------
# Maurer-Cartan data from frames

def mc_from_frames(p, grid, h=1e-4, degree=8, samples=64, workers=1):
    """``dz``-parts of the ``lambda^{-1}`` and ``lambda^0`` MC coefficients of the DPW frame.

    Central differences of frames on four copies of ``grid`` shifted by
    ``+-h`` and ``+-ih``.  Returns ``(alpha_p, alpha_k, ok)`` with arrays of
    shape ``grid.shape + (N, N)``; entries are NaN where a frame is missing.
    """
    from .frames import dpw_construct

    def run(dz):
        g = Grid(tuple(x + dz.real for x in grid.re), tuple(y + dz.imag for y in grid.im))
        return dpw_construct(p, g, degree=degree, samples=samples, workers=workers)

    runs = [run(0j), run(h + 0j), run(-h + 0j), run(1j * h), run(-1j * h)]
    shape = grid.shape
    out_p = np.full(shape + (p.N, p.N), np.nan, dtype=complex)
    out_k = np.full_like(out_p, np.nan)
    ok = np.all([r.status == "ok" for r in runs], axis=0)
    for l, k in zip(*np.nonzero(ok)):
        F, Fp, Fm, Gp, Gm = (r.frames[l, k] for r in runs)
        du = (Fp - Fm).scale(1 / (2 * h))
        dv = (Gp - Gm).scale(1 / (2 * h))
        a = F.group_inverse() @ (du - dv.scale(1j)).scale(0.5)
        out_p[l, k] = a.coeff(-1)
        out_k[l, k] = a.coeff(0)
    return out_p, out_k, ok


def disc_grid(radius=0.5, count=15, center=0j):
    """``count x count`` grid over the square circumscribing a disc, and the disc mask."""
    t = np.linspace(-radius, radius, count)
    g = Grid(tuple(center.real + t), tuple(center.imag + t))
    return g, np.abs(g.z - center) <= radius * (1 + 1e-12)


def mc_at_points(p, points, h=1e-4, degree=8, samples=64):
    """Like :func:`mc_from_frames` for arbitrary points (straight paths from the basepoint)."""
    from .frames import dpw_points
    pts = np.asarray(points, dtype=complex)
    flat = pts.ravel()
    n = flat.size
    shifts = (0j, h, -h, 1j * h, -1j * h)
    F, st = dpw_points(p, np.concatenate([flat + d for d in shifts]), degree=degree, samples=samples)
    out_p = np.full((n, p.N, p.N), np.nan, dtype=complex)
    out_k = np.full_like(out_p, np.nan)
    ok = np.ones(n, dtype=bool)
    for i in range(n):
        fr = [F[j * n + i] for j in range(5)]
        if any(f is None for f in fr):
            ok[i] = False
            continue
        F0, Fp, Fm, Gp, Gm = fr
        du = (Fp - Fm).scale(1 / (2 * h))
        dv = (Gp - Gm).scale(1 / (2 * h))
        a = F0.group_inverse() @ (du - dv.scale(1j)).scale(0.5)
        out_p[i] = a.coeff(-1)
        out_k[i] = a.coeff(0)
    shape = pts.shape + (p.N, p.N)
    return out_p.reshape(shape), out_k.reshape(shape), ok.reshape(pts.shape)


def wu_roundtrip(p, radius=0.5, method="polar", out_degree=8, h=1e-4, degree=8, samples=64,
                 n_radii=14, n_angles=32, q_terms=10, count=15, fit_degree=MAX_FIT_DEGREE):
    """Potential -> DPW frames -> MC samples -> Taylor fit -> Wu potential.

    ``method='polar'`` samples concentric circles and fits each angular mode
    in ``r^2``; ``method='lattice'`` fits a total-degree polynomial to a
    square lattice clipped to the disc.  Returns ``(potential, info)``.
    """
    z0 = complex(p.basepoint)
    if method == "polar":
        radii, pts = polar_points(radius, n_radii, n_angles, z0)
        ap, ak, ok = mc_at_points(p, pts, h=h, degree=degree, samples=samples)
        if not np.all(ok):
            raise DomainError("frames missing on the sampling circles")
        tp = BivariateTaylor.fit_polar(radii, ap, q_terms)
        tk = BivariateTaylor.fit_polar(radii, ak, q_terms)
        npts = pts.size
    elif method == "lattice":
        grid, disc = disc_grid(radius, count, z0)
        ap, ak, ok = mc_from_frames(p, grid, h=h, degree=degree, samples=samples)
        use = disc & ok
        tp = BivariateTaylor.fit(grid.z[use], ap[use], fit_degree, center=z0)
        tk = BivariateTaylor.fit(grid.z[use], ak[use], fit_degree, center=z0)
        npts = int(use.sum())
    else:
        raise DomainError(f"unknown method {method!r}")
    q = wu_normalized_potential(tk, tp, out_degree, basepoint=z0)
    info = {"method": method, "fit_residual_p": tp.fit_residual, "fit_residual_k": tk.fit_residual,
            "out_degree": out_degree, "points": npts}
    return q, info


# ---------------------------------------------------------------------------
# JSON exchange for the CLI

def _mat_to_json(M):
    return [[[float(x.real), float(x.imag)] for x in row] for row in M]


def _mat_from_json(rows):
    return np.array([[complex(a, b) for a, b in row] for row in rows])


def mc_samples_to_json(points, alpha_p, alpha_k, n, basepoint=0j, radii=None):
    """Serialize MC samples: ``{"n", "basepoint", "samples": [{"z", "alpha_p", "alpha_k"}]}``.

    With ``radii`` the points are the ``(len(radii), M)`` polar layout of
    :func:`polar_points` and a ``"polar"`` entry records it.
    """
    doc = {
        "n": int(n),
        "basepoint": [float(complex(basepoint).real), float(complex(basepoint).imag)],
        "samples": [{"z": [float(z.real), float(z.imag)],
                     "alpha_p": _mat_to_json(P), "alpha_k": _mat_to_json(K)}
                    for z, P, K in zip(np.ravel(points), alpha_p.reshape(-1, *alpha_p.shape[-2:]),
                                       alpha_k.reshape(-1, *alpha_k.shape[-2:]))],
    }
    if radii is not None:
        doc["polar"] = {"radii": [float(r) for r in radii], "n_angles": int(np.shape(points)[-1])}
    return json.dumps(doc)


def mc_samples_from_json(text):
    """Inverse of :func:`mc_samples_to_json`: ``(points, alpha_p, alpha_k, basepoint, radii)``.

    ``radii`` is ``None`` unless the file records a polar layout, in which
    case the arrays come back with shape ``(R, M, ...)``.
    """
    try:
        d = json.loads(text)
        pts = np.array([complex(*s["z"]) for s in d["samples"]])
        ap = np.array([_mat_from_json(s["alpha_p"]) for s in d["samples"]])
        ak = np.array([_mat_from_json(s["alpha_k"]) for s in d["samples"]])
        bp = complex(*d.get("basepoint", [0.0, 0.0]))
        N = int(d["n"]) + 4
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed MC sample file: {exc}") from exc
    if ap.ndim != 3 or ap.shape[1:] != (N, N) or ak.shape != ap.shape:
        raise DomainError("MC sample matrices do not match n")
    radii = None
    if "polar" in d:
        radii = np.array(d["polar"]["radii"], dtype=float)
        M = int(d["polar"]["n_angles"])
        if len(radii) * M != len(pts):
            raise DomainError("polar layout does not match the sample count")
        pts = pts.reshape(len(radii), M)
        ap = ap.reshape(len(radii), M, N, N)
        ak = ak.reshape(len(radii), M, N, N)
    return pts, ap, ak, bp, radii


def wu_from_samples(points, alpha_p, alpha_k, basepoint=0j, radii=None, out_degree=8,
                    q_terms=10, fit_degree=MAX_FIT_DEGREE):
    """Normalized potential from sampled MC data (polar layout if ``radii`` is given)."""
    if radii is not None:
        tp = BivariateTaylor.fit_polar(radii, alpha_p, q_terms)
        tk = BivariateTaylor.fit_polar(radii, alpha_k, q_terms)
    else:
        tp = BivariateTaylor.fit(points, alpha_p, fit_degree, center=basepoint)
        tk = BivariateTaylor.fit(points, alpha_k, fit_degree, center=basepoint)
    q = wu_normalized_potential(tk, tp, out_degree, basepoint=basepoint)
    return q, {"fit_residual_p": tp.fit_residual, "fit_residual_k": tk.fit_residual,
               "out_degree": out_degree}
