"""Locate the end of a twisted continuity path two independent ways.

For a twist sigma the reference form omega0 + s*sigma eventually loses
positivity, and no solution can exist past that point.  With constant
omega0 the exact threshold is a generalized eigenvalue computation;
bisection on actual solves should land on the same number, and must
keep landing there after omega0 is shifted inside its class by an
i ddbar perturbation.
"""

import numpy as np

from torusma.continuity import TwistSpec, max_time_bisect, \
    max_time_closed_form
from torusma.geometry import MetricField
from torusma.grid import constant_form, i_ddbar, make_grid
from torusma.ma import SolverOptions
from torusma.randomfields import random_potential_form

CASES = [
    ("identity vs -identity", np.eye(2), np.diag([-1.0, -1.0])),
    ("matched diagonal", np.diag([2.0, 1.0]), np.diag([-2.0, -1.0])),
    ("single shrinking direction", np.eye(2), np.diag([-2.0, 0.0])),
]


def main():
    grid = make_grid(2, 8)
    opts = SolverOptions(newton_tol=1e-9)
    print("maximal existence time: closed form vs bisection, n = 2, N = 8")
    print()
    print(f"{'case':>28s} {'T closed':>9s} {'T bisect':>9s} "
          f"{'bracket':>18s} {'probes':>7s}")
    for name, m0, sig in CASES:
        T = max_time_closed_form(m0, TwistSpec(sig))
        omega0 = MetricField(constant_form(grid, m0))
        res = max_time_bisect(omega0, TwistSpec(sig), s_max=4.0,
                              opts=opts)
        bracket = f"[{res.lo:.4f}, {res.hi:.4f}]"
        print(f"{name:>28s} {T:9.4f} {res.estimate:9.4f} {bracket:>18s} "
              f"{len(res.probes):7d}")

    print()
    print("the threshold is a property of the cohomology class, so an")
    print("i ddbar shift of omega0 must not move it.  perturbing the")
    print("identity case by a small random potential:")
    m0, sig = np.eye(2), np.diag([-1.0, -1.0])
    T = max_time_closed_form(m0, TwistSpec(sig))
    for amp in (0.001, 0.002):
        poly, _ = random_potential_form(grid, 47, amplitude=amp,
                                        max_mode=2, num_modes=6)
        form = (constant_form(grid, m0)
                + i_ddbar(poly.sample(grid))).symmetrized()
        res = max_time_bisect(MetricField(form), TwistSpec(sig),
                              s_max=4.0, opts=opts)
        print(f"  amplitude {amp:g}: T bisect {res.estimate:.4f} "
              f"(closed form on the class: {T:.4f})")


if __name__ == "__main__":
    main()
