"""Holomorphic frames from potentials and the DPW extended frame field.

``dC = C eta`` is integrated from the basepoint along staircase paths
(horizontal first, then vertical).  Normalized potentials use the exact
triangular hierarchy of lambda-coefficients ``C_k' = C_{k-1} eta_{-1}``;
other potentials are integrated at ``M`` unit-circle samples of lambda and
transformed back to coefficients.  Each grid point is then Iwasawa split.
"""
import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import CellBoundary, DegenerateLift, NumericError
from .factorization import iwasawa
from .grid import Grid
from .lift import choose_light, project_lift
from .linalg import group_inverse
from .loops import TwistedLoop, unit_circle

log = logging.getLogger(__name__)

RTOL = 1e-12
ATOL = 1e-13
STATUS = ("ok", "pole_skipped", "cell_boundary", "not_computed", "no_lift")


@dataclass
class HolomorphicFrames:
    """Per-point solutions of ``dC = C eta``, as twisted loops."""

    grid: Grid
    loops: np.ndarray
    status: np.ndarray
    mode: str
    dropped: float = 0.0


class _System:
    """Right-hand side of ``dC/dt = (dz/dt) C eta(z)`` in flattened form."""

    def __init__(self, p, mode, degree, samples):
        self.p = p
        self.N = p.N
        self.mode = mode
        if mode == "hierarchy":
            self.shape = (degree + 1, self.N, self.N)
        else:
            self.lam = unit_circle(samples)
            self.shape = (samples, self.N, self.N)

    def initial(self):
        y = np.zeros(self.shape, dtype=complex)
        if self.mode == "hierarchy":
            y[0] = np.eye(self.N)
        else:
            y[:] = np.eye(self.N)
        return y.ravel()

    def rhs(self, start, dirn):
        p = self.p
        shape = self.shape
        if self.mode == "hierarchy":
            term = p.terms.get(-1)

            def f(t, y):
                C = y.reshape(shape)
                out = np.zeros_like(C)
                if term is not None:
                    E = term(start + dirn * t) * dirn
                    out[1:] = C[:-1] @ E
                return out.ravel()
            return f
        lam = self.lam
        terms = list(p.terms.items())

        def f(t, y):
            C = y.reshape(shape)
            z = start + dirn * t
            E = sum((lam ** j)[:, None, None] * m(z)[None] for j, m in terms) * dirn
            return (C @ E).ravel()
        return f

    def to_loop(self, y, d_neg, d_pos):
        C = y.reshape(self.shape)
        if self.mode == "hierarchy":
            c = np.zeros((C.shape[0],) + C.shape[1:], dtype=complex)
            c[:] = C[::-1]
            return TwistedLoop(c, C.shape[0] - 1, 0, dropped=float(np.max(np.abs(C[-1]))))
        return TwistedLoop.from_samples(C, d_neg, d_pos)


def _segment_block(start, dirn, length, poles, radius):
    """Largest ``t`` in ``[0, length]`` (signed) reachable without nearing a pole."""
    if poles.size == 0 or length == 0:
        return length
    sgn = np.sign(length)
    d = dirn * sgn
    best = abs(length)
    for q in poles:
        w = (q - start) / d
        tc = w.real  # closest approach parameter
        dist = abs(w.imag)
        if dist <= radius:
            # path enters the disc at tc - sqrt(r^2 - dist^2)
            tin = tc - np.sqrt(radius ** 2 - dist ** 2)
            if tin <= best and tc + radius >= 0:
                best = max(0.0, min(best, tin))
    return sgn * best


def _integrate(system, y0, start, dirn, targets, poles, radius):
    """Integrate from ``start`` along ``dirn`` to real offsets ``targets``.

    Returns a list of states (``None`` for targets behind a pole).
    """
    targets = np.asarray(targets, dtype=float)
    out = [None] * len(targets)
    for sgn in (1.0, -1.0):
        idx = [i for i, t in enumerate(targets) if (t > 0 if sgn > 0 else t < 0)]
        if not idx:
            continue
        far = max(abs(targets[i]) for i in idx) * sgn
        reach = _segment_block(start, dirn, far, poles, radius)
        ok = [i for i in idx if abs(targets[i]) <= abs(reach) - 0.0]
        if not ok:
            continue
        t_eval = sorted((targets[i] for i in ok), key=abs)
        sol = solve_ivp(system.rhs(start, dirn), (0.0, t_eval[-1]), y0, method="DOP853",
                        t_eval=t_eval, rtol=RTOL, atol=ATOL)
        if sol.status != 0:
            raise NumericError(f"integration failed: {sol.message}")
        lookup = {float(t): sol.y[:, k] for k, t in enumerate(sol.t)}
        for i in ok:
            out[i] = lookup[float(targets[i])]
    for i, t in enumerate(targets):
        if t == 0:
            out[i] = y0.copy()
    return out


def integrate_holomorphic_frame(p, grid, degree=8, mode="auto", samples=64,
                                d_neg=None, d_pos=None, exclusion=1e-2):
    """Solve ``C^{-1} dC = eta``, ``C(z0) = I`` on every grid point.

    Parameters
    ----------
    p : Potential
    grid : Grid
    degree : int
        Truncation degree in ``lambda^{-1}`` for the hierarchy mode.
    mode : {"auto", "hierarchy", "sampled"}
        ``auto`` uses the hierarchy for potentials with only a ``lambda^{-1}`` term.
    samples : int
        Number of lambda samples in sampled mode.
    d_neg, d_pos : int, optional
        Degrees kept after sampling (default ``samples // 2 - 1`` each).
    exclusion : float
        Pole exclusion radius as a fraction of the grid spacing.
    """
    if mode == "auto":
        mode = "hierarchy" if set(p.terms) <= {-1} else "sampled"
    if mode == "hierarchy" and set(p.terms) - {-1}:
        raise ValueError("hierarchy mode needs a potential with only a lambda^{-1} term")
    if d_neg is None:
        d_neg = samples // 2 - 1
    if d_pos is None:
        d_pos = samples // 2 - 1
    system = _System(p, mode, degree, samples)
    poles = p.poles()
    radius = exclusion * grid.spacing
    z0 = p.basepoint
    Z = grid.z
    shape = grid.shape
    states = np.empty(shape, dtype=object)
    y0 = system.initial()
    # horizontal leg along Im z = Im z0, then vertical legs
    xs = np.asarray(grid.re)
    row = _integrate(system, y0, z0, 1.0, xs - z0.real, poles, radius)
    for k, x in enumerate(xs):
        if row[k] is None:
            continue
        col = _integrate(system, row[k], complex(x, z0.imag), 1j,
                         np.asarray(grid.im) - z0.imag, poles, radius)
        for l in range(shape[0]):
            states[l, k] = col[l]
    # second staircase (vertical first) for points blocked on the first one
    blocked = [(l, k) for l in range(shape[0]) for k in range(shape[1]) if states[l, k] is None]
    if blocked:
        ys = np.asarray(grid.im)
        colz = _integrate(system, y0, z0, 1j, ys - z0.imag, poles, radius)
        for l, k in blocked:
            if colz[l] is None:
                continue
            res = _integrate(system, colz[l], complex(z0.real, ys[l]), 1.0,
                             [xs[k] - z0.real], poles, radius)
            states[l, k] = res[0]
    # detours around poles on the basepoint's own row or column
    blocked = [(l, k) for l in range(shape[0]) for k in range(shape[1]) if states[l, k] is None]
    if blocked:
        d = 2 * grid.spacing
        for l, k in blocked:
            for off in (d, -d):
                y = _integrate(system, y0, z0, 1j, [off], poles, radius)[0]
                if y is not None:
                    y = _integrate(system, y, z0 + 1j * off, 1.0, [Z[l, k].real - z0.real],
                                   poles, radius)[0]
                if y is not None:
                    y = _integrate(system, y, complex(Z[l, k].real, z0.imag + off), 1j,
                                   [Z[l, k].imag - z0.imag - off], poles, radius)[0]
                if y is not None:
                    # with monodromy around a pole the side chosen fixes the branch
                    log.info("point %s reached by a detour at offset %g", Z[l, k], off)
                    states[l, k] = y
                    break
    loops = np.empty(shape, dtype=object)
    status = np.full(shape, "ok", dtype=object)
    dropped = 0.0
    for l in range(shape[0]):
        for k in range(shape[1]):
            if states[l, k] is None or (poles.size and np.min(np.abs(poles - Z[l, k])) <= radius):
                status[l, k] = "pole_skipped"
                continue
            lp = system.to_loop(states[l, k], d_neg, d_pos)
            dropped = max(dropped, lp.dropped)
            loops[l, k] = lp.trim(1e-15 * max(1.0, lp.max_abs()))
    return HolomorphicFrames(grid, loops, status, mode, dropped)


def integrate_along(p, z, path="horizontal_first", **kw):
    """Holomorphic frame at a single point using one of the two staircases."""
    g = Grid((complex(z).real,), (complex(z).imag,))
    if path == "horizontal_first":
        return integrate_holomorphic_frame(p, g, **kw).loops[0, 0]
    # vertical first: swap roles by integrating on the transposed staircase
    mode = kw.pop("mode", "auto")
    if mode == "auto":
        mode = "hierarchy" if set(p.terms) <= {-1} else "sampled"
    degree = kw.get("degree", 8)
    samples = kw.get("samples", 64)
    system = _System(p, mode, degree, samples)
    z0 = p.basepoint
    z = complex(z)
    poles = p.poles()
    y = system.initial()
    y = _integrate(system, y, z0, 1j, [z.imag - z0.imag], poles, 0.0)[0]
    y = _integrate(system, y, complex(z0.real, z.imag), 1.0, [z.real - z0.real], poles, 0.0)[0]
    d = samples // 2 - 1
    return system.to_loop(y, kw.get("d_neg", d), kw.get("d_pos", d))


@dataclass
class FrameField:
    """Extended frames ``F(z, lambda)`` on a grid, with status mask.

    ``light[l, k]`` holds the frame-coordinate light-like vector ``c`` with
    surface lift ``Y = F[:, :4] c``; ``b1[l, k]`` the ``lambda^{-1}`` block
    ``V0^{-1} eta_{-1} V0`` of the Maurer-Cartan form.
    """

    grid: Grid
    frames: np.ndarray
    status: np.ndarray
    degree: int
    light: np.ndarray = None
    b1: np.ndarray = None
    v0: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.grid.shape

    def ok(self):
        return self.status == "ok"

    def frame_at(self, l, k, lam=1.0):
        return self.frames[l, k].evaluate(lam)

    def surface(self, lam=1.0):
        """Sphere points ``y`` (grid shape + ``(n+3,)``); NaN where not ok."""
        n = None
        for f in self.frames.flat:
            if f is not None:
                n = f.n
                break
        if n is None:
            raise DegenerateLift("no successfully computed frames")
        out = np.full(self.shape + (n + 3,), np.nan)
        for l, k in zip(*np.nonzero(self.ok())):
            F = self.frames[l, k].evaluate(lam)
            Y = F[:, :4].real @ self.light[l, k]
            if Y[0] < 0:
                Y = -Y
            out[l, k] = project_lift(Y)
        return out

    def summary(self):
        vals, counts = np.unique(self.status.astype(str), return_counts=True)
        return {str(v): int(c) for v, c in zip(vals, counts)}


def _split_point(C, eta_m1):
    F, V, rep = iwasawa(C)
    V0 = V.coeff(0)
    B = np.linalg.solve(V0[:4, :4], eta_m1[:4, 4:]) @ V0[4:, 4:]
    return F, V0, B, rep


def dpw_construct(p, grid, degree=8, mode="auto", samples=64, workers=1, **kw):
    """Run the DPW construction: integrate, Iwasawa split, attach lift vectors."""
    hol = integrate_holomorphic_frame(p, grid, degree=degree, mode=mode, samples=samples, **kw)
    shape = grid.shape
    Z = grid.z
    frames = np.empty(shape, dtype=object)
    status = hol.status.copy()
    b1 = np.full(shape + (4, p.n), np.nan, dtype=complex)
    v0 = np.full(shape + (p.N, p.N), np.nan, dtype=complex)
    light = np.full(shape + (4,), np.nan)
    idx = [(l, k) for l in range(shape[0]) for k in range(shape[1]) if status[l, k] == "ok"]

    def work(lk):
        l, k = lk
        try:
            return lk, _split_point(hol.loops[l, k], p.coefficient(-1, Z[l, k])), None
        except CellBoundary as exc:
            return lk, None, exc

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(work, idx))
    else:
        results = [work(lk) for lk in idx]
    worst = {"reality_defect": 0.0, "iwasawa_residual": 0.0, "birkhoff_residual": 0.0,
             "constant_residual": 0.0}
    for (l, k), res, exc in results:
        if res is None:
            status[l, k] = "cell_boundary"
            log.debug("cell boundary at %s: %s", Z[l, k], exc)
            continue
        F, V0, B, rep = res
        frames[l, k] = F
        v0[l, k] = V0
        b1[l, k] = B
        worst["reality_defect"] = max(worst["reality_defect"], rep.extra["reality_defect"])
        worst["iwasawa_residual"] = max(worst["iwasawa_residual"], rep.residual)
        worst["birkhoff_residual"] = max(worst["birkhoff_residual"], rep.extra["birkhoff_residual"])
        worst["constant_residual"] = max(worst["constant_residual"], rep.extra["constant_residual"])
    umbilic = _assign_light(grid, p, frames, b1, light, status)
    worst["truncation_dropped"] = hol.dropped
    worst["umbilic_points"] = umbilic
    if umbilic:
        # B1 = 0: the frame fixes only the 4-space, not the point inside it
        log.warning("%d umbilic points; lift there follows neighbours, not the frame", umbilic)
    ff = FrameField(grid, frames, status, degree, light, b1, v0, worst)
    log.info("dpw_construct: %s", ff.summary())
    return ff


def _assign_light(grid, p, frames, b1, light, status):
    """Choose lift vectors, breaking ties by continuity from the basepoint outwards.

    Returns the number of umbilic points (``B1 = 0``).
    """
    shape = grid.shape
    umbilic = 0
    Z = grid.z
    ok = status == "ok"
    if not np.any(ok):
        return 0
    start = np.unravel_index(np.argmin(np.where(ok, np.abs(Z - p.basepoint), np.inf)), shape)
    world = {}
    seen = np.zeros(shape, dtype=bool)
    queue = deque([start])
    seen[start] = True
    while queue:
        l, k = queue.popleft()
        hint = None
        for dl, dk in ((0, -1), (0, 1), (-1, 0), (1, 0)):
            nb = (l + dl, k + dk)
            if nb in world:
                F1 = frames[l, k].evaluate(1.0).real
                hint = (group_inverse(F1) @ world[nb])[:4]
                break
        try:
            c, count = choose_light(b1[l, k], hint)
            umbilic += count == 0
        except DegenerateLift:
            status[l, k] = "no_lift"
            c = None
        if c is not None:
            light[l, k] = c
            world[(l, k)] = frames[l, k].evaluate(1.0).real[:, :4] @ c
        for dl, dk in ((0, -1), (0, 1), (-1, 0), (1, 0)):
            nb = (l + dl, k + dk)
            if 0 <= nb[0] < shape[0] and 0 <= nb[1] < shape[1] and ok[nb] and not seen[nb]:
                seen[nb] = True
                queue.append(nb)
    # points not reached (disconnected ok patches) fall back to the default tie-break
    for l, k in zip(*np.nonzero((status == "ok") & np.isnan(light[..., 0]))):
        try:
            light[l, k], count = choose_light(b1[l, k])
            umbilic += count == 0
        except DegenerateLift:
            status[l, k] = "no_lift"
    return int(umbilic)


def dpw_points(p, points, degree=8, mode="auto", samples=64, d_neg=None, d_pos=None):
    """Extended frames at arbitrary points via straight paths from the basepoint.

    Points sharing a direction from the basepoint share one integration.
    Returns ``(frames, status)`` lists; frames are ``None`` where not ok.
    """
    if mode == "auto":
        mode = "hierarchy" if set(p.terms) <= {-1} else "sampled"
    d = samples // 2 - 1
    d_neg = d if d_neg is None else d_neg
    d_pos = d if d_pos is None else d_pos
    system = _System(p, mode, degree, samples)
    z0 = complex(p.basepoint)
    pts = np.asarray(points, dtype=complex).ravel()
    poles = p.poles()
    y0 = system.initial()
    rays = {}
    for i, z in enumerate(pts):
        w = z - z0
        key = round(float(np.angle(w)), 13) if w != 0 else None
        rays.setdefault(key, []).append(i)
    states = [None] * len(pts)
    for key, idx in rays.items():
        if key is None:
            for i in idx:
                states[i] = y0.copy()
            continue
        dirn = np.exp(1j * key)
        res = _integrate(system, y0, z0, dirn, [abs(pts[i] - z0) for i in idx], poles, 0.0)
        for i, st in zip(idx, res):
            states[i] = st
    frames = [None] * len(pts)
    status = ["not_computed"] * len(pts)
    for i, st in enumerate(states):
        if st is None:
            status[i] = "pole_skipped"
            continue
        C = system.to_loop(st, d_neg, d_pos)
        C = C.trim(1e-15 * max(1.0, C.max_abs()))
        try:
            frames[i] = iwasawa(C)[0]
            status[i] = "ok"
        except CellBoundary:
            status[i] = "cell_boundary"
    return frames, status


def _mc(F, dF):
    return F.group_inverse().multiply(dF, d_neg=F.d_neg + dF.d_neg, d_pos=F.d_pos + dF.d_pos)


def _d4(f1, fm1, f2, fm2, h):
    """Fourth-order central difference from values at +-h and +-2h."""
    return (f1 - fm1).scale(8 / (12 * h)) - (f2 - fm2).scale(1 / (12 * h))


def extended_frame_check(p, points, h=1e-3, degree=8, samples=64):
    """Finite-difference Maurer-Cartan checks of DPW frames at ``points``.

    Frames are computed on a 5 x 5 stencil of spacing ``h`` around each point;
    ``alpha_u = F^{-1} F_u`` and ``alpha_v`` use fourth-order central
    differences.  A :class:`FrameField` may be passed instead of points (its
    ok points are used).

    Returns
    -------
    dict
        ``support``: largest lambda-coefficient of ``alpha_u, alpha_v`` outside
        powers -1, 0, 1; ``algebra``: largest algebra-condition residual of
        those coefficients; ``reality``: ``||tau(alpha) - alpha||``;
        ``flatness``: ``||d alpha + [alpha ^ alpha] / 2||``;
        ``strong_conformality``: ``||B1^t I13 B1||`` of the ``dz`` part;
        ``points``: number of points checked.
    """
    from .linalg import algebra_residual, minkowski_form
    if isinstance(points, FrameField):
        points = points.grid.z[points.ok()]
    pts = np.atleast_1d(np.asarray(points, dtype=complex)).ravel()
    grid = [(a, b) for b in range(-2, 3) for a in range(-2, 3)]
    frames, _ = dpw_points(p, np.concatenate([pts + (a + 1j * b) * h for a, b in grid]),
                           degree=degree, samples=samples)
    n = len(pts)
    form = minkowski_form(p.n)
    I13 = np.diag([-1.0, 1, 1, 1])
    out = {"support": 0.0, "algebra": 0.0, "reality": 0.0, "flatness": 0.0,
           "strong_conformality": 0.0, "points": 0}
    for i in range(n):
        S = {ab: frames[j * n + i] for j, ab in enumerate(grid)}
        if any(f is None for f in S.values()):
            continue

        def d_u(b):
            return _mc(S[(0, b)], _d4(S[(1, b)], S[(-1, b)], S[(2, b)], S[(-2, b)], h))

        def d_v(a):
            return _mc(S[(a, 0)], _d4(S[(a, 1)], S[(a, -1)], S[(a, 2)], S[(a, -2)], h))

        au, av = d_u(0), d_v(0)
        for a in (au, av):
            out["support"] = max(out["support"], max(
                (float(np.max(np.abs(a.coeff(j)))) for j in a.powers if abs(j) > 1), default=0.0))
            out["algebra"] = max(out["algebra"], max(algebra_residual(a.coeff(j), form)
                                                     for j in (-1, 0, 1)))
            out["reality"] = max(out["reality"], a.reality_defect())
        # alpha_u along the v axis and alpha_v along the u axis
        au_v = _d4(d_u(1), d_u(-1), d_u(2), d_u(-2), h)
        av_u = _d4(d_v(1), d_v(-1), d_v(2), d_v(-2), h)
        curv = av_u - au_v + au.multiply(av, d_neg=2, d_pos=2) - av.multiply(au, d_neg=2, d_pos=2)
        out["flatness"] = max(out["flatness"], curv.max_abs())
        B1 = (au.coeff(-1) - 1j * av.coeff(-1))[:4, 4:] / 2
        out["strong_conformality"] = max(out["strong_conformality"],
                                         float(np.max(np.abs(B1.T @ I13 @ B1))))
        out["points"] += 1
    return out
