"""Constant potentials: the cylinder family in S^4 and the torus family in S^5.

For each family the bracket conditions are checked, the closed-form frame
is compared with the loop-group construction, and the Willmore energy of
the ``(j, l)`` tori is tabulated against its closed form.
"""
import numpy as np

from dpwillmore import (Grid, cylinder_potential, dpw_construct, ejiri_potential,
                        homogeneous_surface, torus_energy, validate_homogeneous)
from dpwillmore.surfaces import kappa_field, willmore_energy


def check_family(name, p):
    rep = validate_homogeneous(p.coefficient(-1, 0), p.coefficient(0, 0))
    grid = Grid.from_ranges(-1, 1, 11, -1, 1, 11)
    ff = dpw_construct(p, grid, samples=32)
    gap = np.max(np.abs(ff.surface() - homogeneous_surface(p, grid.z)))
    print(f"{name:10s} brackets ok={rep.ok} ({rep.bracket_mixed:.1e}, {rep.bracket_sum:.1e}); "
          f"loop-group vs closed form {gap:.1e}")


def main():
    check_family("cylinder", cylinder_potential(0.6, 0.8))
    check_family("torus b=1", ejiri_potential(1.0))

    # a = 0 is the Clifford torus: |kappa| is constant
    p = cylinder_potential(0.0, 1.0)
    u, v = np.random.default_rng(0).uniform(-3, 3, (2, 10))
    _, _, kk = kappa_field(lambda a, b: homogeneous_surface(p, a + 1j * b), u, v)
    print(f"Clifford torus |kappa|^2 in [{kk.min():.12f}, {kk.max():.12f}]")

    print("\n j  l   quadrature         closed form        rel. gap")
    for j, l in [(1, 1), (1, 2), (2, 1), (2, 3)]:
        e = torus_energy(j, l)
        print(f"{j:2d} {l:2d}   {e.quadrature:.12f}  {e.closed_form:.12f}  {e.relative_gap:.1e}")

    # the same number from finite-difference curvature of the reconstructed surface
    p = ejiri_potential(1.0)
    w, err = willmore_energy(lambda a, b: homogeneous_surface(p, a + 1j * b), (0, 2 * np.pi),
                             (0, 2 * np.pi * np.sqrt(3)), nodes=101)
    print(f"\nreconstructed energy (1,1): {w:.10f} +- {err:.1e}; 2 sqrt3 pi^2 = "
          f"{2 * np.sqrt(3) * np.pi ** 2:.10f}")


if __name__ == "__main__":
    main()
