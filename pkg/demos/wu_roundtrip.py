"""Recover a normalized potential from Maurer-Cartan data.

The extended frames of a potential are differentiated on concentric
circles, each angular mode of the Maurer-Cartan coefficients is fitted in
``r^2``, and the holomorphic parts are pushed through the normalized
frame.  The recovered ``B1`` is compared with the known one.
"""
from pathlib import Path

import numpy as np

from dpwillmore import cylinder_potential, load_potential, validate_normalized, wu_roundtrip
from dpwillmore.wu import homogeneous_normalized_b1, polar_points

DATA = Path(__file__).resolve().parents[1] / "src" / "dpwillmore" / "data"


def report(name, q, ref, info):
    _, pts = polar_points(0.5, 6, 12)
    err = max(np.max(np.abs(q.B1(z) - ref(z))) for z in pts.ravel())
    rep = validate_normalized(q, tol=1e-4)
    print(f"{name:10s} fit residuals {info['fit_residual_p']:.1e}/{info['fit_residual_k']:.1e}, "
          f"B1 error on |z| <= 0.5: {err:.1e}, null/nilpotent residuals "
          f"{rep.residuals['null_condition']:.1e}/{rep.residuals['nilpotency']:.1e}")


def main():
    p = load_potential(DATA / "s6.pot")
    q, info = wu_roundtrip(p, degree=6)
    report("sphere", q, p.B1, info)

    c = cylinder_potential(0.6, 0.8)
    q, info = wu_roundtrip(c, samples=32)
    B, A = c.coefficient(-1, 0), c.coefficient(0, 0)
    report("cylinder", q, lambda z: homogeneous_normalized_b1(B, A, z), info)


if __name__ == "__main__":
    main()
