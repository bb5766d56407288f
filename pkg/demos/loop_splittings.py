"""Birkhoff and Iwasawa splittings of twisted loops, and where they break.

Random loops ``exp(X)`` near the identity split cleanly.  Scaling ``X`` up
walks toward the cell boundary: the Toeplitz condition number grows until
the splitting is refused.  Constant loops illustrate the second cell and
the finite-dimensional K-factor.
"""
import numpy as np

from dpwillmore import CellBoundary, NotInCell, birkhoff, cell_classify, delta0, iwasawa, k_factor_normalize
from dpwillmore.linalg import matrix_exp
from dpwillmore.loops import TwistedLoop, loop_exp, random_twisted_algebra_loop


def main():
    rng = np.random.default_rng(1)
    X = random_twisted_algebra_loop(2, 4, rng, 1.0)
    print(" scale  birkhoff res  iwasawa res  reality    condition")
    for s in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0):
        g = loop_exp(X.scale(s))
        try:
            _, _, rb = birkhoff(g)
            F, V, ri = iwasawa(g)
            print(f"{s:6.2f}  {rb.residual:.1e}       {ri.residual:.1e}      "
                  f"{ri.extra['reality_defect']:.1e}    {rb.condition:.1e}")
        except CellBoundary as exc:
            print(f"{s:6.2f}  refused: {exc}")

    print("\ncell of the identity:", cell_classify(TwistedLoop.identity(2)))
    print("cell of delta0:      ", cell_classify(TwistedLoop.constant(delta0(2))))

    K = np.zeros((6, 6))
    K[0, 2] = K[2, 0] = 1
    for t in (np.pi / 4, np.pi / 2):
        P = matrix_exp(1j * t * K)
        try:
            k, s = k_factor_normalize(P)
            print(f"boost i*{t:.4f}: factors, residual {np.max(np.abs(k @ s - P)):.1e}")
        except NotInCell:
            print(f"boost i*{t:.4f}: not in the cell")


if __name__ == "__main__":
    main()
