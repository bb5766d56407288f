"""Command-line drivers.

Exit codes: 0 success, 1 numerical failure, 2 usage or I/O, 3 validation.
Errors are reported on stderr as one JSON object
``{"error": <type>, "message": <text>, "exit_code": <int>}``.
"""
import argparse
import json
import logging
import re
import sys
import time
from pathlib import Path

import numpy as np

from .errors import (DomainError, NullConditionViolated, NumericError, PotentialSyntaxError,
                     ValidationError)
from .grid import Grid

log = logging.getLogger("dpwillmore")

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE, EXIT_VALIDATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# flag parsing

_PI = re.compile(r"^\s*([-+]?[0-9.]*)\s*\*?\s*pi\s*(?:/\s*([0-9.]+))?\s*$")


def _real(text):
    """Decimal number, or ``[k*]pi[/m]``."""
    m = _PI.match(text)
    if m:
        k = m.group(1)
        k = 1.0 if k in ("", "+") else -1.0 if k == "-" else float(k)
        return k * np.pi / (float(m.group(2)) if m.group(2) else 1.0)
    return float(text)


def parse_lambda(text):
    """Complex number with ``i`` as the imaginary unit; also ``exp(i*theta)``."""
    t = text.strip().replace(" ", "")
    m = re.fullmatch(r"exp\(i\*?(.+)\)", t) or re.fullmatch(r"e\^\(?i\*?(.+?)\)?", t)
    try:
        if m:
            return complex(np.exp(1j * _real(m.group(1))))
        if t in ("i", "+i"):
            return 1j
        if t == "-i":
            return -1j
        t = re.sub(r"(?<![0-9.])i", "1j", t).replace("i", "j")
        return complex(t)
    except ValueError:
        raise UsageError(f"cannot parse lambda {text!r}") from None


def _floats(text, count=None):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise UsageError(f"expected {count} numbers, got {text!r}")
    return vals


def _grid(text):
    try:
        return Grid.parse(text)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text)


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _emit_surface(sg, out, projection="stereographic", matrix=None):
    """Write a SurfaceGrid by extension: .csv, .obj or .ply."""
    suffix = Path(out).suffix.lower()
    if suffix == ".csv":
        sg.to_csv(out)
    elif suffix in (".obj", ".ply"):
        M = None
        if projection == "linear":
            if matrix is None:
                raise UsageError("--projection linear needs --matrix")
            M = np.array([_floats(r) for r in _read(matrix).strip().splitlines()])
        (sg.to_obj if suffix == ".obj" else sg.to_ply)(out, projection, M)
    else:
        raise UsageError(f"unknown output type {suffix!r} (use .csv, .obj or .ply)")


def _sidecar(out):
    return None if out in (None, "-") else str(Path(out).with_suffix("")) + ".diagnostics.json"


# ---------------------------------------------------------------------------
# subcommands

def cmd_construct(args):
    """Potential file -> DPW frames on a grid -> surface file plus diagnostics."""
    from .frames import dpw_construct
    from .potentials import validate_potential
    from .surfaces import SurfaceGrid, diagnostics_json

    t0 = time.perf_counter()
    p = _load_potential(args.potential)
    rep = validate_potential(p)
    if not rep.ok:
        raise ValidationError("potential fails validation: " + "; ".join(rep.messages))
    grid = _grid(args.grid)
    lam = parse_lambda(args.lam)
    ff = dpw_construct(p, grid, degree=args.deg, samples=args.samples, workers=args.threads)
    if not np.any(ff.ok()):
        raise NumericError("no grid point could be factorized")
    sg = SurfaceGrid.from_frame_field(ff, lam)
    if args.invariants:
        sg.compute_invariants()
    diag = {"potential": str(args.potential), "grid": grid.to_text(), "lambda": lam,
            "status": ff.summary(), "ok_fraction": float(np.mean(ff.ok())),
            "residuals": dict(ff.diagnostics), "norm_defect": sg.norm_defect(),
            "validation": rep.to_json_dict()}
    if sg.energy_density is not None:
        diag.update(_patch_energy(sg))
    if args.out:
        _emit_surface(sg, args.out, args.projection, args.matrix)
    if args.mesh:
        _emit_surface(sg, args.mesh, args.projection, args.matrix)
    diag["seconds"] = time.perf_counter() - t0
    _write(args.diagnostics or _sidecar(args.out), diagnostics_json(diag))
    return EXIT_OK


def _patch_energy(sg):
    """Energy of the bounding box of finite energy density (interior of the grid)."""
    from .surfaces import energy_from_density
    rows, cols = np.nonzero(np.isfinite(sg.energy_density))
    if not rows.size:
        return {"patch_energy": None, "patch_energy_note": "grid too small for invariants"}
    rs, cs = slice(rows.min(), rows.max() + 1), slice(cols.min(), cols.max() + 1)
    try:
        e, err = energy_from_density(sg.energy_density[rs, cs], np.asarray(sg.grid.re)[cs],
                                     np.asarray(sg.grid.im)[rs])
    except DomainError as exc:
        return {"patch_energy": None, "patch_energy_note": str(exc)}
    return {"patch_energy": e, "patch_energy_error": err}


CHECKS = ("conformal", "willmore", "isotropy", "strong", "gauss", "energy")


def cmd_analyze(args):
    """Surface CSV -> residual report."""
    from .surfaces import (SurfaceGrid, conformality_check, diagnostics_json, gauss_codazzi_ricci, isotropy_check, strong_conformality_residual,
                           willmore_residual)

    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    bad = sorted(set(checks) - set(CHECKS))
    if bad:
        raise UsageError(f"unknown checks {bad}; choose from {', '.join(CHECKS)}")
    try:
        sg = SurfaceGrid.from_csv(args.surface)
    except OSError as exc:
        raise UsageError(f"cannot read {args.surface}: {exc.strerror}") from None
    g = sg.grid
    if len(g.re) < 2 or len(g.im) < 2:
        raise UsageError("surface grid needs at least two points per axis")
    hu, hv = g.re[1] - g.re[0], g.im[1] - g.im[0]
    vals = np.where(sg.ok()[..., None], sg.points, np.nan)
    src = (vals, hu, hv)
    out = {"surface": str(args.surface), "grid": g.to_text(), "ok_points": int(sg.ok().sum()),
           "norm_defect": sg.norm_defect(), "residuals": {}}
    res = out["residuals"]
    try:
        for c in checks:
            if c == "conformal":
                res["conformal"] = conformality_check(src, order=args.order)
            elif c == "willmore":
                res["willmore"] = willmore_residual(src, order=args.order)
            elif c == "isotropy":
                res["isotropy"] = isotropy_check(src, order=args.order)
            elif c == "strong":
                sc, dev = strong_conformality_residual(src, order=args.order)
                res["strong_conformality"] = sc
                res["structure_deviation"] = dev
            elif c == "gauss":
                res.update(gauss_codazzi_ricci(src, order=args.order))
            elif c == "energy":
                res.update(_patch_energy(sg.compute_invariants(args.order)))
    except ValueError as exc:
        raise UsageError(f"grid too small for the requested checks: {exc}") from None
    out["spacing"] = [float(hu), float(hv)]
    _write(args.out, diagnostics_json(out))
    return EXIT_OK


def cmd_wu(args):
    """MC samples (or a potential to sample) -> normalized potential text."""
    from .potentials import format_potential, validate_normalized
    from .surfaces import diagnostics_json
    from .wu import (mc_at_points, mc_samples_from_json, mc_samples_to_json, polar_points,
                     wu_from_samples)

    if bool(args.samples) == bool(args.potential):
        raise UsageError("give exactly one of --samples or --potential")
    if args.potential:
        p = _load_potential(args.potential)
        radii, pts = polar_points(args.radius, args.radii, args.angles, p.basepoint)
        ap, ak, ok = mc_at_points(p, pts, h=args.h, degree=args.deg)
        if not np.all(ok):
            raise NumericError("frames missing on the sampling circles")
        bp = p.basepoint
        if args.emit_samples:
            _write(args.emit_samples, mc_samples_to_json(pts, ap, ak, p.n, bp, radii))
    else:
        pts, ap, ak, bp, radii = mc_samples_from_json(_read(args.samples))
    q, info = wu_from_samples(pts, ap, ak, bp, radii, out_degree=args.out_degree,
                              q_terms=args.q_terms)
    rep = validate_normalized(q, tol=args.tol)
    info["validation"] = rep.to_json_dict()
    _write(args.out, format_potential(q))
    if args.report:
        _write(args.report, diagnostics_json(info))
    return EXIT_OK if rep.ok else EXIT_VALIDATION


def cmd_factorize(args):
    """Serialized loop -> Birkhoff or Iwasawa report JSON."""
    from .factorization import birkhoff, cell_classify, iwasawa
    from .loops import TwistedLoop

    try:
        g = TwistedLoop.from_json(_read(args.loop))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed loop file: {exc}") from None
    if args.which == "birkhoff":
        _, _, rep = birkhoff(g)
    elif args.which == "iwasawa":
        _, _, rep = iwasawa(g)
    else:
        doc = {"cell": cell_classify(g)}
        _write(args.out, json.dumps(doc, indent=2))
        return EXIT_OK
    _write(args.out, json.dumps(rep.to_json_dict(include_factors=not args.no_factors), indent=2))
    return EXIT_OK


def cmd_homogeneous(args):
    """Family potentials, validation, surfaces and the energy table."""
    from .homogeneous import (cylinder_potential, ejiri_potential, homogeneous_surface,
                              torus_energy, validate_homogeneous)
    from .potentials import format_potential
    from .surfaces import SurfaceGrid, diagnostics_json

    if args.family == "cylinder":
        if args.a is None or args.b is None:
            raise UsageError("cylinder needs --a and --b")
        p = cylinder_potential(args.a, args.b)
    else:
        if args.b is None:
            raise UsageError("ejiri needs --b")
        p = ejiri_potential(args.b)
    B = p.coefficient(-1, p.basepoint)
    A = p.coefficient(0, p.basepoint)
    rep = validate_homogeneous(B, A)
    if args.potential_out:
        _write(args.potential_out, format_potential(p))
    if args.report:
        _write(args.report, diagnostics_json({"ok": rep.ok, "bracket_mixed": rep.bracket_mixed,
                                              "bracket_sum": rep.bracket_sum,
                                              "pattern_ok": rep.pattern_ok,
                                              "eta0_13_plus_23": rep.eta0_13_plus_23,
                                              "messages": rep.messages}))
    if args.grid:
        if not args.out:
            raise UsageError("--grid needs --out")
        lam = parse_lambda(args.lam)
        grid = _grid(args.grid)
        sg = SurfaceGrid(grid, homogeneous_surface(p, grid.z, lam),
                         np.full(grid.shape, "ok", dtype=object), meta={"lambda": lam})
        sg.compute_invariants()
        _emit_surface(sg, args.out, args.projection, args.matrix)
    if args.energy:
        if args.family != "ejiri":
            raise UsageError("--energy applies to the ejiri family")
        rows = ["j,l,b,quadrature,closed_form,relative_gap"]
        for pair in args.energy.split(";"):
            j, l = (int(x) for x in _floats(pair, 2))
            try:
                e = torus_energy(j, l)
            except DomainError as exc:
                raise UsageError(str(exc)) from None
            rows.append(f"{j},{l},{e.b!r},{e.quadrature!r},{e.closed_form!r},{e.relative_gap!r}")
        _write(args.table, "\n".join(rows) + "\n")
    return EXIT_OK if rep.ok else EXIT_VALIDATION


def cmd_reference(args):
    """Closed-form surfaces sampled on a grid."""
    from .reference import cylinder_immersion, ejiri_immersion, example_s6
    from .surfaces import SurfaceGrid

    grid = _grid(args.grid)
    Z = grid.z
    if args.which == "s6":
        pts = example_s6(Z, parse_lambda(args.lam))
    elif args.which == "cylinder":
        if args.a is None or args.b is None:
            raise UsageError("cylinder needs --a and --b")
        pts = cylinder_immersion(Z.real, Z.imag, args.a, args.b)
    else:
        if args.b is None:
            raise UsageError("ejiri needs --b")
        pts = ejiri_immersion(Z.real, Z.imag, args.b)
    sg = SurfaceGrid(grid, pts, np.full(grid.shape, "ok", dtype=object))
    if args.invariants:
        sg.compute_invariants()
    _emit_surface(sg, args.out, args.projection, args.matrix)
    return EXIT_OK


def _load_potential(path):
    from .potentials import load_potential
    try:
        return load_potential(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


# ---------------------------------------------------------------------------
# parser

def _add_output(sp, required=False):
    sp.add_argument("--out", required=required, help="output file (.csv, .obj, .ply)")
    sp.add_argument("--projection", choices=("stereographic", "linear"), default="stereographic")
    sp.add_argument("--matrix", help="text file with a 3 x (n+3) projection matrix")


def build_parser():
    ap = argparse.ArgumentParser(prog="dpwillmore",
                                 description="Willmore surfaces from loop-group potentials.")
    ap.add_argument("--config", help="JSON file of flag defaults; explicit flags override")
    ap.add_argument("--log-level", default="WARNING")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("construct", help="potential file -> surface")
    sp.add_argument("--potential", required=True)
    sp.add_argument("--grid", default="re:-1:1:21,im:-1:1:21")
    sp.add_argument("--lambda", dest="lam", default="1")
    sp.add_argument("--deg", type=int, default=8, help="loop truncation degree")
    sp.add_argument("--samples", type=int, default=64, help="FFT samples on the unit circle")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--invariants", action="store_true", help="add omega and energy density")
    sp.add_argument("--mesh", help="additional .obj/.ply output")
    sp.add_argument("--diagnostics", help="diagnostics JSON path (default: next to --out)")
    _add_output(sp)
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("analyze", help="surface CSV -> residual report")
    sp.add_argument("--surface", required=True)
    sp.add_argument("--checks", default="conformal,willmore,isotropy")
    sp.add_argument("--order", type=int, choices=(2, 4), default=4)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("wu", help="MC samples -> normalized potential")
    sp.add_argument("--samples", help="MC sample JSON")
    sp.add_argument("--potential", help="sample the MC form of this potential first")
    sp.add_argument("--emit-samples", help="write the sampled MC JSON here")
    sp.add_argument("--radius", type=float, default=0.5)
    sp.add_argument("--radii", type=int, default=14)
    sp.add_argument("--angles", type=int, default=32)
    sp.add_argument("--q-terms", type=int, default=10)
    sp.add_argument("--out-degree", type=int, default=8)
    sp.add_argument("--deg", type=int, default=8)
    sp.add_argument("--h", type=float, default=1e-4)
    sp.add_argument("--tol", type=float, default=1e-4, help="validation tolerance for the output")
    sp.add_argument("--report")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_wu)

    sp = sub.add_parser("factorize", help="loop JSON -> factorization report")
    sp.add_argument("--loop", required=True)
    sp.add_argument("--which", choices=("iwasawa", "birkhoff", "cell"), default="iwasawa")
    sp.add_argument("--no-factors", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_factorize)

    sp = sub.add_parser("homogeneous", help="constant-potential families")
    sp.add_argument("--family", choices=("cylinder", "ejiri"), required=True)
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--energy", help="'j,l' pairs separated by ';'")
    sp.add_argument("--table", help="energy table CSV (default stdout)")
    sp.add_argument("--potential-out")
    sp.add_argument("--report")
    sp.add_argument("--grid")
    sp.add_argument("--lambda", dest="lam", default="1")
    _add_output(sp)
    sp.set_defaults(func=cmd_homogeneous)

    sp = sub.add_parser("reference", help="closed-form reference surfaces")
    sp.add_argument("--which", choices=("s6", "cylinder", "ejiri"), required=True)
    sp.add_argument("--grid", default="re:-1:1:21,im:-1:1:21")
    sp.add_argument("--lambda", dest="lam", default="1")
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--invariants", action="store_true")
    _add_output(sp, required=True)
    sp.set_defaults(func=cmd_reference)
    return ap


def _apply_config(parser, argv):
    """Reparse with defaults taken from ``--config`` (flags still win)."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(known.config).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot load config {known.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    args = parser.parse_args(argv)
    sp = parser._subparsers._group_actions[0].choices[args.command]
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    cfg = {("lam" if k == "lambda" else k): v for k, v in cfg.items()}
    sp.set_defaults(**cfg)
    return parser.parse_args(argv)


def _error(exc, code):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc),
                                 "exit_code": code}) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
    except UsageError as exc:
        return _error(exc, EXIT_USAGE)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        return _error(exc, EXIT_USAGE)
    except (PotentialSyntaxError, ValidationError, NullConditionViolated) as exc:
        return _error(exc, EXIT_VALIDATION)
    except NumericError as exc:
        return _error(exc, EXIT_NUMERIC)
    except (DomainError, OSError) as exc:
        return _error(exc, EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
