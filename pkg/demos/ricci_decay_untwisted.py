"""Sweep an untwisted family to large parameter values.

With no twist the continuity path exists for every s > 0 and the
Ricci form of the solution metric must fade.  This script runs the
path far past s = 1 and fits the decay rate of sup |Ric|, which
should come out close to 1/s.
"""

import numpy as np

from torusma.continuity import geometric_schedule, sweep
from torusma.diagnostics import fit_decay_slope
from torusma.geometry import MetricField, chern_ricci
from torusma.grid import constant_form, i_ddbar, make_grid
from torusma.randomfields import random_potential_form


def build_omega0(N=16, seed=311):
    grid = make_grid(2, N)
    # a random potential keeps omega0 honest: curved, but still a
    # genuine Hermitian metric on the torus
    poly, _ = random_potential_form(grid, seed, amplitude=0.2,
                                    max_mode=1, num_modes=4)
    form = constant_form(grid, np.eye(2)) + i_ddbar(poly.sample(grid))
    return MetricField(form.symmetrized())


def main():
    omega0 = build_omega0()
    schedule = geometric_schedule(1.0, 1024.0, ratio=2.0)
    print(f"untwisted continuity sweep, n = 2, N = 16, "
          f"s from {schedule[0]:g} to {schedule[-1]:g}")
    print()
    print(f"{'s':>8s} {'sup|Ric|':>12s} {'s * sup|Ric|':>13s} "
          f"{'sup|phi|':>12s}")

    path = sweep(schedule, omega0)
    sups = []
    for state in path:
        sup = chern_ricci(state.omega).sup_norm()
        sups.append(sup)
        sup_phi = np.abs(state.phi.values).max()
        print(f"{state.s:8.0f} {sup:12.4e} {state.s * sup:13.4f} "
              f"{sup_phi:12.4e}")

    fit = fit_decay_slope(schedule, sups, s_min=1.0)
    print()
    print("log-log fit of sup|Ric| against s:")
    print(f"  slope    {fit.slope:+.4f}   (the 1/s law predicts -1)")
    print(f"  residual {fit.residual:.4f} over {fit.count} points")


if __name__ == "__main__":
    main()
