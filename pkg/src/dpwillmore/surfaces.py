"""Surface extraction from frames, conformal invariants and diagnostics.

All differential quantities are central finite differences on a square
stencil of offsets ``(i h_u, j h_v)``, ``|i|, |j| <= r``.  A stencil is an
array ``S[i, j, *points, m]``; each derivative shrinks its radius by one.
Stencils come either from a callable surface ``y(u, v)`` or from shifted
views of gridded samples.

Conventions: ``<x, y> = -x0 y0 + sum x_k y_k`` (complex bilinear), canonical
lift ``Y = e^{-w}(1, y)`` with ``e^{2w} = (|y_u|^2 + |y_v|^2) / 2``.
"""
import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import BranchPoint, DegenerateLift, DomainError
from .grid import Grid
from .lift import DEFAULT_LIGHT, project_lift

log = logging.getLogger(__name__)

SQ2 = np.sqrt(2.0)


# ---------------------------------------------------------------------------
# lift

def frame_to_immersion(F, lam=1.0, light=None):
    """Sphere point of a real frame: ``Y = F(lam)[:, :4] c``, ``y = Y[1:] / Y[0]``.

    ``light`` is the frame-coordinate light-like vector ``c``; the default
    ``(1, -1, 0, 0)/sqrt(2)`` is right for frames in the conformal Gauss
    frame gauge ``((Y+N)/sqrt2, (-Y+N)/sqrt2, Y_u, Y_v, psi)``.  The sign of
    ``Y`` is chosen with ``Y[0] > 0``.
    """
    M = F.evaluate(lam) if hasattr(F, "evaluate") else np.asarray(F)
    if np.max(np.abs(M.imag)) > 1e-6 * max(1.0, np.max(np.abs(M))):
        raise DomainError("frame is not real at this lambda")
    c = DEFAULT_LIGHT if light is None else np.asarray(light, dtype=float)
    Y = M.real[:, :4] @ c
    if abs(Y[0]) < 1e-12:
        raise DegenerateLift("lift has vanishing time component")
    return project_lift(Y if Y[0] > 0 else -Y)


# ---------------------------------------------------------------------------
# stencil machinery

def ip(a, b):
    """Complex-bilinear Minkowski product over the last axis."""
    return -a[..., 0] * b[..., 0] + np.sum(a[..., 1:] * b[..., 1:], axis=-1)


_D1 = {2: np.array([-0.5, 0.0, 0.5]),
       4: np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12])}
_D2 = {2: np.array([1.0, -2.0, 1.0]),
       4: np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])}


class _Ops:
    """Central differences of order 2 or 4 on stencil arrays."""

    def __init__(self, hu, hv, order=4):
        if order not in _D1:
            raise DomainError("difference order must be 2 or 4")
        self.hu = hu
        self.hv = hv
        self.w = order // 2
        self.c1 = _D1[order]
        self.c2 = _D2[order]

    def _apply(self, S, coef, axis):
        n = S.shape[axis] - 2 * self.w
        out = 0
        for k, c in enumerate(coef):
            if c:
                out = out + c * np.take(S, np.arange(k, k + n), axis=axis)
        return out

    def _trim(self, S, axis):
        w = self.w
        return np.take(S, np.arange(w, S.shape[axis] - w), axis=axis)

    def crop(self, S):
        return self._trim(self._trim(S, 0), 1)

    def du(self, S):
        return self._trim(self._apply(S, self.c1, 0), 1) / self.hu

    def dv(self, S):
        return self._trim(self._apply(S, self.c1, 1), 0) / self.hv

    def duu(self, S):
        return self._trim(self._apply(S, self.c2, 0), 1) / self.hu ** 2

    def dvv(self, S):
        return self._trim(self._apply(S, self.c2, 1), 0) / self.hv ** 2

    def duv(self, S):
        return self._apply(self._apply(S, self.c1, 0), self.c1, 1) / (self.hu * self.hv)

    def dz(self, S):
        return (self.du(S) - 1j * self.dv(S)) / 2

    def dzb(self, S):
        return (self.du(S) + 1j * self.dv(S)) / 2


def _center(a):
    r = (a.shape[0] - 1) // 2
    return a[r, r]


def callable_stencil(y, u, v, h, radius, dtype=float):
    """``S[i, j] = y(u + (i - r) h, v + (j - r) h)``."""
    u = np.asarray(u, dtype=dtype)
    v = np.asarray(v, dtype=dtype)
    h = dtype(h) if dtype is not float else float(h)
    rows = []
    for i in range(-radius, radius + 1):
        rows.append([np.asarray(y(u + i * h, v + j * h)) for j in range(-radius, radius + 1)])
    return np.array(rows)


def grid_stencil(values, radius):
    """Stencil of shifted views of ``values[l, k, m]`` (rows = v, columns = u).

    The result covers the interior ``values[r:-r, r:-r]``.
    """
    L, K = values.shape[:2]
    r = radius
    out = np.empty((2 * r + 1, 2 * r + 1, L - 2 * r, K - 2 * r) + values.shape[2:], dtype=values.dtype)
    for i in range(-r, r + 1):
        for j in range(-r, r + 1):
            out[i + r, j + r] = values[r + j:L - r + j, r + i:K - r + i]
    return out


# ---------------------------------------------------------------------------
# pointwise geometry

@dataclass
class _Geometry:
    """Canonical-lift quantities on a stencil of radius ``r``."""

    Y: np.ndarray
    Yu: np.ndarray
    Yv: np.ndarray
    N: np.ndarray
    kappa: np.ndarray
    s: np.ndarray
    kk: np.ndarray
    omega: np.ndarray
    rho_min: float


def _geometry(S, ops):
    """Geometry of radius ``R - 2`` from sphere-point stencil of radius ``R``."""
    one = np.ones(S.shape[:-1] + (1,), dtype=S.dtype)
    X = np.concatenate([one, S], axis=-1)
    Xu, Xv = ops.du(X), ops.dv(X)
    rho = (ip(Xu, Xu) + ip(Xv, Xv)) / 2
    rho_min = float(np.min(rho)) if rho.size else np.inf
    if rho_min <= 0:
        raise BranchPoint("vanishing induced metric")
    Y1 = ops.crop(X) / np.sqrt(rho)[..., None]
    Y = ops.crop(Y1)
    Yu, Yv = ops.du(Y1), ops.dv(Y1)
    Yuu, Yvv, Yuv = ops.duu(Y1), ops.dvv(Y1), ops.duv(Y1)
    Yzz = (Yuu - Yvv - 2j * Yuv) / 4
    Yzzb = (Yuu + Yvv) / 4
    kk = ip(Yzz, np.conj(Yzz)).real
    N = 2 * Yzzb + 2 * kk[..., None] * Y
    s = 2 * ip(Yzz, N)
    kappa = Yzz + (s / 2)[..., None] * Y
    omega = 0.5 * np.log(ops.crop(rho))
    return _Geometry(Y, Yu, Yv, N.real, kappa, s, kk, omega, rho_min)


def _crop_to(a, r):
    """Crop a stencil array to radius ``r``."""
    R = (a.shape[0] - 1) // 2
    d = R - r
    return a[d:a.shape[0] - d, d:a.shape[1] - d] if d else a


def _normal_proj(x, g):
    """``x`` minus its component in ``V = span{Y, N, Y_u, Y_v}`` (geometry cropped to x)."""
    r = (x.shape[0] - 1) // 2
    Y, N, Yu, Yv = (_crop_to(a, r) for a in (g.Y, g.N, g.Yu, g.Yv))
    pv = (-ip(x, N)[..., None] * Y - ip(x, Y)[..., None] * N
          + ip(x, Yu)[..., None] * Yu + ip(x, Yv)[..., None] * Yv)
    return x - pv


def _normal_frame(g, n):
    """Orthonormal ``psi_j`` of the normal bundle by Gram-Schmidt of ambient axes.

    Axis choice is made at the stencil centre and reused on the whole stencil.
    """
    Y = g.Y
    dim = Y.shape[-1]
    r = (Y.shape[0] - 1) // 2
    E = np.broadcast_to(np.eye(dim), Y.shape[:-1] + (dim, dim))
    cands = np.stack([_normal_proj(E[..., a, :].astype(complex), g).real for a in range(dim)], axis=-2)
    psi = []
    for _ in range(n):
        norms = ip(cands, cands)
        pick = np.argmax(norms[r, r], axis=-1)
        idx = np.broadcast_to(pick[None, None, ..., None, None], cands.shape[:-2] + (1, dim))
        v = np.take_along_axis(cands, idx, axis=-2)[..., 0, :]
        v = v / np.sqrt(ip(v, v))[..., None]
        psi.append(v)
        cands = cands - ip(cands, v[..., None, :])[..., None] * v[..., None, :]
    psi = np.stack(psi, axis=-1)
    return psi


def _frame(g, psi):
    e0 = (g.Y + g.N) / SQ2
    e1 = (-g.Y + g.N) / SQ2
    F = np.concatenate([e0[..., None], e1[..., None], g.Yu[..., None], g.Yv[..., None], psi], axis=-1)
    return F


def _orient(F, psi):
    """Flip the last normal vector where ``det F < 0`` (decided at the centre)."""
    r = (F.shape[0] - 1) // 2
    sgn = np.sign(np.linalg.det(F[r, r].real.astype(float)))
    sgn = np.where(sgn == 0, 1, sgn)
    psi = psi.copy()
    F = F.copy()
    psi[..., -1] *= sgn[None, None, ..., None]
    F[..., -1] *= sgn[None, None, ..., None]
    return F, psi


# ---------------------------------------------------------------------------
# public geometry

@dataclass
class ConformalFrame:
    """Conformal Gauss frame data at a set of points.

    Attributes
    ----------
    Y, N : (..., n+4) canonical lift and its null partner.
    omega : conformal factor, ``|y_z|^2 = e^{2 omega} / 2``.
    kappa : (..., n+4) complex conformal Hopf differential.
    s : complex Schwarzian.
    psi : (..., n+4, n) orthonormal normal frame.
    k, beta : (..., n) components of ``kappa`` and ``D_zbar kappa`` along ``psi``.
    A1, B1 : (..., 4, 4) and (..., 4, n) assembled Maurer-Cartan blocks.
    frame : (..., n+4, n+4) real frame ``((Y+N)/sqrt2, (-Y+N)/sqrt2, Y_u, Y_v, psi)``.
    """

    Y: np.ndarray
    N: np.ndarray
    omega: np.ndarray
    kappa: np.ndarray
    s: np.ndarray
    psi: np.ndarray
    k: np.ndarray
    beta: np.ndarray
    A1: np.ndarray
    B1: np.ndarray
    frame: np.ndarray

    @property
    def kappa_sq(self):
        """``<kappa, conj kappa>``."""
        return ip(self.kappa, np.conj(self.kappa)).real

    @property
    def energy_density(self):
        return 4 * self.kappa_sq


def assemble_blocks(s, k, beta):
    """``A1`` from ``s`` and ``k^2``; ``B1`` columns ``(sqrt2 b, -sqrt2 b, -k, -ik)``."""
    s = np.asarray(s)
    k = np.asarray(k)
    beta = np.asarray(beta)
    k2 = np.sum(np.abs(k) ** 2, axis=-1)
    c = 1 / (2 * SQ2)
    s1 = c * (1 - s - 2 * k2)
    s2 = -1j * c * (1 + s - 2 * k2)
    s3 = c * (1 + s + 2 * k2)
    s4 = -1j * c * (1 - s + 2 * k2)
    A1 = np.zeros(s.shape + (4, 4), dtype=complex)
    A1[..., 0, 2], A1[..., 0, 3] = s1, s2
    A1[..., 1, 2], A1[..., 1, 3] = s3, s4
    A1[..., 2, 0], A1[..., 2, 1] = s1, -s3
    A1[..., 3, 0], A1[..., 3, 1] = s2, -s4
    B1 = np.stack([SQ2 * beta, -SQ2 * beta, -k, -1j * k], axis=-2)
    return A1, B1


def _components(x, psi):
    """``<x, psi_j>`` for each column of ``psi``."""
    sign = np.ones(psi.shape[-2])
    sign[0] = -1
    return np.einsum("...i,...ij->...j", x, psi * sign[:, None])


def _frame_from_stencil(S, ops):
    """ConformalFrame at the centre of a radius-3 sphere-point stencil."""
    g = _geometry(S, ops)                       # radius 1
    n = S.shape[-1] - 3
    psi = _normal_frame(g, n)
    F, psi = _orient(_frame(g, psi), psi)
    dk = _normal_proj(ops.dzb(g.kappa), g)      # radius 0
    c = _center
    psi0 = c(psi)
    k = _components(c(g.kappa), psi0)
    beta = _components(c(dk), psi0)
    A1, B1 = assemble_blocks(c(g.s), k, beta)
    return ConformalFrame(c(g.Y).real, c(g.N), c(g.omega), c(g.kappa), c(g.s), psi0, k, beta,
                          A1, B1, c(F).real)


def conformal_gauss_frame(y, u, v, h=1e-3, dtype=float, order=4):
    """Conformal Gauss frame of a callable surface ``y(u, v) -> (..., n+3)``.

    Parameters
    ----------
    y : callable
        Vectorized surface; must broadcast over array ``u, v``.
    u, v : array_like
        Evaluation points.
    h : float
        Finite-difference step.
    dtype : type
        ``np.longdouble`` for extended precision if ``y`` supports it.

    Raises
    ------
    BranchPoint
        Where the induced metric vanishes.
    """
    ops = _Ops(h, h, order)
    S = callable_stencil(y, u, v, h, 3 * ops.w, dtype)
    return _frame_from_stencil(S, ops)


def grid_conformal_frame(values, hu, hv, order=4):
    """Conformal Gauss frame on the grid interior (``3 * order / 2`` points in from each edge)."""
    ops = _Ops(hu, hv, order)
    return _frame_from_stencil(grid_stencil(values, 3 * ops.w), ops)


# ---------------------------------------------------------------------------
# diagnostics

def _nanmax(a):
    """Max over finite entries; NaN marks masked grid points."""
    a = np.asarray(a).astype(float)
    fin = np.isfinite(a)
    return float(np.max(a[fin])) if np.any(fin) else float("nan")


def _source(y, u, v, h, levels, dtype, order):
    """Stencil with ``levels`` nested differences from a callable or ``(values, hu, hv)``."""
    if callable(y):
        ops = _Ops(h, h, order)
        return callable_stencil(y, u, v, h, levels * ops.w, dtype), ops
    values, hu, hv = y
    ops = _Ops(hu, hv, order)
    return grid_stencil(np.asarray(values), levels * ops.w), ops


def conformality_check(y, u=None, v=None, h=1e-3, dtype=float, order=4):
    """Max ``|<Y_z, Y_z>|`` of the canonical lift.

    ``y`` is a callable (with points ``u, v``) or a tuple ``(values, hu, hv)``
    of gridded samples.
    """
    S, ops = _source(y, u, v, h, 2, dtype, order)
    one = np.ones(S.shape[:-1] + (1,), dtype=S.dtype)
    X = np.concatenate([one, S], axis=-1)
    Xu, Xv = ops.du(X), ops.dv(X)
    rho = (ip(Xu, Xu) + ip(Xv, Xv)) / 2
    Y1 = ops.crop(X) / np.sqrt(rho)[..., None]
    Yz = ops.dz(Y1)
    return _nanmax(np.abs(ip(Yz, Yz))) if Yz.size else 0.0


def kappa_field(y, u=None, v=None, h=1e-3, dtype=float, order=4):
    """``(kappa, s, <kappa, conj kappa>)`` at the points."""
    S, ops = _source(y, u, v, h, 2, dtype, order)
    g = _geometry(S, ops)
    return _center(g.kappa), _center(g.s), _center(g.kk)


def willmore_residual(y, u=None, v=None, h=1e-3, dtype=float, relative=False, order=4):
    """Max norm of ``D_zbar D_zbar kappa + conj(s)/2 kappa``.

    The normal connection ``D`` is the normal projection of the ambient
    derivative.  Uses a radius-4 stencil (five nested differences), so
    ``dtype=np.longdouble`` is advisable for ``h`` near ``1e-3``.
    Returns the Euclidean norm of the ambient residual vector, maximized
    over the points; ``relative=True`` divides by ``1 + |kappa|^2``.
    """
    S, ops = _source(y, u, v, h, 4, dtype, order)
    g = _geometry(S, ops)
    D1 = _normal_proj(ops.dzb(g.kappa), g)
    D2 = _normal_proj(ops.dzb(D1), g)
    k0 = _center(g.kappa)
    res = _center(D2) + (np.conj(_center(g.s)) / 2)[..., None] * k0
    val = np.sqrt(np.sum(np.abs(res) ** 2, axis=-1))
    if relative:
        val = val / (1 + _center(g.kk))
    return _nanmax(val) if val.size else 0.0


def isotropy_check(y, u=None, v=None, h=1e-3, dtype=float, derivatives=0, order=4):
    """Max ``|<kappa, kappa>|``; ``order=1`` also includes ``<D_z kappa, kappa>`` and ``<D_z kappa, D_z kappa>``."""
    S, ops = _source(y, u, v, h, 2 if derivatives == 0 else 3, dtype, order)
    g = _geometry(S, ops)
    k0 = _center(g.kappa)
    vals = [np.abs(ip(k0, k0))]
    if derivatives >= 1:
        Dk = _center(_normal_proj(ops.dz(g.kappa), g))
        vals += [np.abs(ip(Dk, k0)), np.abs(ip(Dk, Dk))]
    return float(max(_nanmax(a) for a in vals))


def strong_conformality_residual(y, u=None, v=None, h=1e-3, dtype=float, order=4):
    """Max ``|B1^t I13 B1|`` with ``B1`` read off the finite-difference
    Maurer-Cartan form ``F^{-1} F_z`` of the reconstructed frame.

    Also returns the max deviation of that Maurer-Cartan form's
    ``(A1, B1)`` blocks from the ones assembled from ``s, k, beta``.
    """
    S, ops = _source(y, u, v, h, 3, dtype, order)
    g = _geometry(S, ops)
    n = S.shape[-1] - 3
    psi = _normal_frame(g, n)
    F, psi = _orient(_frame(g, psi), psi)
    Fz = _center(ops.dz(F))
    F0 = _center(F)
    d = np.ones(F0.shape[-1])
    d[0] = -1
    Finv = d[:, None] * np.swapaxes(F0, -1, -2) * d[None, :]
    alpha = Finv @ Fz
    B1 = alpha[..., :4, 4:]
    I13 = np.diag([-1.0, 1, 1, 1])
    res = np.swapaxes(B1, -1, -2) @ I13 @ B1
    sc = _nanmax(np.abs(res)) if res.size else 0.0
    # structure comparison against assembled blocks
    dk = _normal_proj(ops.dzb(g.kappa), g)
    psi0 = _center(psi)
    k = _components(_center(g.kappa), psi0)
    beta = _components(_center(dk), psi0)
    A1, B1a = assemble_blocks(_center(g.s), k, beta)
    dev = max(_nanmax(np.abs(alpha[..., :4, :4] - A1)),
              _nanmax(np.abs(B1 - B1a)))
    return sc, dev


def gauss_codazzi_ricci(y, u=None, v=None, h=1e-3, dtype=float, order=4):
    """Residuals of the conformal Gauss and Ricci equations.

    Gauss: ``s_zbar / 2 - 3 <kappa, D_z conj kappa> - <D_z kappa, conj kappa>``.
    Ricci: ``(D_zbar D_z - D_z D_zbar) psi - 2 <psi, kappa> conj kappa + 2 <psi, conj kappa> kappa``.
    Returns a dict of max norms.
    """
    S, ops = _source(y, u, v, h, 4, dtype, order)
    g = _geometry(S, ops)
    Dk = _normal_proj(ops.dz(g.kappa), g)
    Dkb = _normal_proj(ops.dz(np.conj(g.kappa)), g)
    gi = _crop_to(g.kappa, (Dk.shape[0] - 1) // 2)
    s_zb = ops.dzb(g.s[..., None])[..., 0]
    gauss = s_zb / 2 - 3 * ip(gi, Dkb) - ip(Dk, np.conj(gi))
    n = S.shape[-1] - 3
    psi = _normal_frame(g, n)
    worst = 0.0
    k0 = _center(g.kappa)
    for j in range(n):
        p = psi[..., j].astype(complex)
        a = _center(_normal_proj(ops.dzb(_normal_proj(ops.dz(p), g)), g))
        b = _center(_normal_proj(ops.dz(_normal_proj(ops.dzb(p), g)), g))
        p0 = _center(p)
        rhs = 2 * ip(p0, k0)[..., None] * np.conj(k0) - 2 * ip(p0, np.conj(k0))[..., None] * k0
        worst = max(worst, _nanmax(np.abs(a - b - rhs)))
    return {"gauss": _nanmax(np.abs(_center(gauss))), "ricci": worst}


def willmore_energy(y, u_range, v_range, nodes=201, h=1e-3, dtype=float, order=4):
    """``W = 4 * int int <kappa, conj kappa> du dv`` by composite Simpson.

    Returns ``(value, error_estimate)``; the estimate is the Richardson
    difference against Simpson on every other node.
    """
    if nodes < 5 or nodes % 2 == 0:
        raise DomainError("nodes must be odd and >= 5")
    u = np.linspace(*u_range, nodes)
    v = np.linspace(*v_range, nodes)
    V, U = np.meshgrid(v, u, indexing="ij")
    _, _, kk = kappa_field(y, U, V, h, dtype, order)
    dens = 4 * np.asarray(kk, dtype=float)
    return energy_from_density(dens, u, v)


def energy_from_density(dens, u, v):
    """Simpson integral of a ``dens[l, k]`` grid (rows = v) with a Richardson error estimate."""
    from scipy.integrate import simpson
    if np.any(~np.isfinite(dens)):
        raise DomainError("energy density has gaps in the integration domain")
    full = simpson(simpson(dens, x=u, axis=1), x=v)
    if dens.shape[0] >= 5 and dens.shape[0] % 2 and dens.shape[1] % 2:
        half = simpson(simpson(dens[::2, ::2], x=u[::2], axis=1), x=v[::2])
        err = abs(full - half) / 15
    else:
        err = float("nan")
    return float(full), float(err)


# ---------------------------------------------------------------------------
# gridded surfaces and export

@dataclass
class SurfaceGrid:
    """Sphere points on a grid with a status mask; optional per-point data."""

    grid: Grid
    points: np.ndarray
    status: np.ndarray
    omega: np.ndarray = None
    energy_density: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_frame_field(cls, ff, lam=1.0):
        pts = ff.surface(lam)
        return cls(ff.grid, pts, ff.status.astype(str).copy(), meta={"lambda": complex(lam)})

    @classmethod
    def from_callable(cls, y, grid):
        Z = grid.z
        pts = np.asarray(y(Z.real, Z.imag), dtype=float)
        return cls(grid, pts, np.full(grid.shape, "ok", dtype=object))

    @property
    def dim(self):
        return self.points.shape[-1]

    def ok(self):
        return self.status == "ok"

    def norm_defect(self):
        m = self.ok()
        if not np.any(m):
            return 0.0
        return float(np.max(np.abs(np.linalg.norm(self.points[m], axis=-1) - 1)))

    def compute_invariants(self, order=4):
        """Fill ``omega`` and ``energy_density`` on interior points (NaN elsewhere)."""
        L, K = self.grid.shape
        hu = self.grid.re[1] - self.grid.re[0] if K > 1 else 1.0
        hv = self.grid.im[1] - self.grid.im[0] if L > 1 else 1.0
        self.omega = np.full((L, K), np.nan)
        self.energy_density = np.full((L, K), np.nan)
        ops = _Ops(hu, hv, order)
        r = 2 * ops.w
        if L <= 2 * r or K <= 2 * r:
            return self
        pts = np.where(self.ok()[..., None], self.points, np.nan)
        S = grid_stencil(pts, r)
        with np.errstate(invalid="ignore"):
            g = _geometry(np.nan_to_num(S, nan=0.0), ops)
        okm = np.all(np.isfinite(S), axis=(0, 1, -1))
        self.omega[r:-r, r:-r] = np.where(okm, _center(g.omega), np.nan)
        self.energy_density[r:-r, r:-r] = np.where(okm, 4 * _center(g.kk), np.nan)
        return self

    # -- CSV
    def to_csv(self, path):
        L, K = self.grid.shape
        m = self.dim
        Z = self.grid.z
        om = self.omega if self.omega is not None else np.full((L, K), np.nan)
        ed = self.energy_density if self.energy_density is not None else np.full((L, K), np.nan)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "v"] + [f"y_{i}" for i in range(m)] + ["omega", "energy_density", "status"])
            for l in range(L):
                for k in range(K):
                    w.writerow([repr(float(Z[l, k].real)), repr(float(Z[l, k].imag))]
                               + [repr(float(x)) for x in self.points[l, k]]
                               + [repr(float(om[l, k])), repr(float(ed[l, k])), str(self.status[l, k])])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        head, body = rows[0], rows[1:]
        if head[:2] != ["u", "v"] or head[-1] != "status":
            raise DomainError(f"{path}: not a surface CSV")
        m = sum(1 for h in head if h.startswith("y_"))
        data = np.array([[float(x) for x in r[:-1]] for r in body])
        status = np.array([r[-1] for r in body], dtype=object)
        us = np.unique(data[:, 0])
        vs = np.unique(data[:, 1])
        L, K = len(vs), len(us)
        if L * K != len(body):
            raise DomainError(f"{path}: rows do not form a rectangular grid")
        order = np.lexsort((data[:, 0], data[:, 1]))
        data = data[order].reshape(L, K, -1)
        status = status[order].reshape(L, K)
        grid = Grid(tuple(us), tuple(vs))
        return cls(grid, data[..., 2:2 + m], status, data[..., 2 + m], data[..., 3 + m])

    # -- meshes
    def project(self, mode="stereographic", matrix=None):
        """Project points to R^3: stereographic from ``(0, ..., 0, 1)`` then first three
        coordinates, or a user ``3 x (n+3)`` matrix."""
        P = self.points
        if mode == "stereographic":
            den = 1 - P[..., -1]
            den = np.where(np.abs(den) < 1e-12, np.nan, den)
            Q = P[..., :-1] / den[..., None]
            return Q[..., :3]
        if mode == "linear":
            M = np.asarray(matrix, dtype=float)
            if M.shape != (3, P.shape[-1]):
                raise DomainError(f"projection matrix must be 3 x {P.shape[-1]}")
            return P @ M.T
        raise DomainError(f"unknown projection {mode!r}")

    def _faces(self, valid):
        L, K = valid.shape
        idx = -np.ones((L, K), dtype=int)
        idx[valid] = np.arange(int(valid.sum()))
        faces = []
        for l in range(L - 1):
            for k in range(K - 1):
                q = (idx[l, k], idx[l, k + 1], idx[l + 1, k + 1], idx[l + 1, k])
                if min(q) >= 0:
                    faces.append(q)
        return idx, faces

    def to_obj(self, path, mode="stereographic", matrix=None):
        V = self.project(mode, matrix)
        valid = self.ok() & np.all(np.isfinite(V), axis=-1)
        _, faces = self._faces(valid)
        with open(path, "w") as fh:
            for p in V[valid]:
                fh.write("v {:.17g} {:.17g} {:.17g}\n".format(*p))
            for q in faces:
                fh.write("f " + " ".join(str(i + 1) for i in q) + "\n")

    def to_ply(self, path, mode="stereographic", matrix=None):
        V = self.project(mode, matrix)
        valid = self.ok() & np.all(np.isfinite(V), axis=-1)
        _, faces = self._faces(valid)
        pts = V[valid]
        with open(path, "w") as fh:
            fh.write("ply\nformat ascii 1.0\n")
            fh.write(f"element vertex {len(pts)}\nproperty double x\nproperty double y\nproperty double z\n")
            fh.write(f"element face {len(faces)}\nproperty list uchar int vertex_indices\nend_header\n")
            for p in pts:
                fh.write("{:.17g} {:.17g} {:.17g}\n".format(*p))
            for q in faces:
                fh.write("4 " + " ".join(str(i) for i in q) + "\n")


def read_obj(path):
    """Vertices and faces of an OBJ written by :meth:`SurfaceGrid.to_obj`."""
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(x) - 1 for x in parts[1:]])
    return np.array(verts), faces


def read_ply(path):
    """Vertices and faces of an ASCII PLY written by :meth:`SurfaceGrid.to_ply`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    nv = nf = 0
    for i, line in enumerate(lines):
        if line.startswith("element vertex"):
            nv = int(line.split()[-1])
        elif line.startswith("element face"):
            nf = int(line.split()[-1])
        elif line == "end_header":
            start = i + 1
            break
    verts = np.array([[float(x) for x in lines[start + i].split()] for i in range(nv)])
    faces = [[int(x) for x in lines[start + nv + i].split()[1:]] for i in range(nf)]
    return verts, faces


def diagnostics_json(d):
    """JSON text for a diagnostics dict (numpy scalars and complex allowed)."""
    def conv(x):
        if isinstance(x, dict):
            return {str(k): conv(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [conv(v) for v in x]
        if isinstance(x, (complex, np.complexfloating)):
            return [float(x.real), float(x.imag)]
        if isinstance(x, np.generic):
            return x.item()
        if isinstance(x, np.ndarray):
            return conv(x.tolist())
        return x
    return json.dumps(conv(d), indent=2, sort_keys=True)
