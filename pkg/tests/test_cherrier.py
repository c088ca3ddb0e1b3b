"""The two-metric trace identity as a global cross-check of the calculus."""

import numpy as np
import pytest

from torusma.cherrier import (b_tensor, cherrier_residual, cherrier_terms,
                              potential_defect)
from torusma.errors import TorusmaError
from torusma.geometry import MetricField
from torusma.grid import (HermitianFormField, constant_form, from_function,
                          i_ddbar, make_grid, _d_holo_raw)
from torusma.randomfields import random_hermitian_field, random_potential_form

from oracles import subsample_indices


def seeded_pair(N, metric_seed=2024, potential_seed=2025, amplitude=0.05):
    """Analytic random metric plus a potential perturbation of it, sampled
    at resolution N (the analytic data is fixed by the seeds, so different
    N sample the same pair)."""
    from torusma.grid import _i_ddbar_raw
    base = make_grid(2, 16)
    analytic, _ = random_hermitian_field(base, seed=metric_seed,
                                         amplitude=amplitude, max_mode=1)
    poly, _ = random_potential_form(base, seed=potential_seed,
                                    amplitude=amplitude, max_mode=1)
    grid = make_grid(2, N)
    gform = analytic.sample(grid).symmetrized()
    hess = _i_ddbar_raw(poly.sample(grid).real_values(), grid)
    gp_form = HermitianFormField(grid, gform.entries + hess,
                                 validate=False).symmetrized()
    return MetricField(gform), MetricField(gp_form)


def test_identical_constant_metrics_give_zero():
    grid = make_grid(2, 8)
    m = MetricField(constant_form(grid, np.diag([1.0, 2.0])))
    t = cherrier_terms(m, m)
    assert np.abs(t.B).max() <= 1e-13
    assert np.abs(t.K.values).max() <= 1e-13
    assert t.residual() <= 1e-12


def test_kahler_base_b_reduces_to_gradient_form():
    """With a constant base metric the connection and torsion drop out of
    B, leaving d(g') minus the trace-gradient part."""
    grid = make_grid(2, 16)
    g = MetricField(constant_form(grid, np.eye(2)))
    _, form = random_potential_form(grid, seed=77, amplitude=0.1, max_mode=2)
    gp = MetricField(form.symmetrized())
    t = b_tensor(g, gp)

    from torusma.geometry import trace_pair
    u = trace_pair(g, gp.form).real_values()
    dgp = np.stack([_d_holo_raw(gp.entries, grid, i) for i in range(2)],
                   axis=-3)
    du = np.stack([_d_holo_raw(u.astype(complex), grid, k) for k in range(2)],
                  axis=-1)
    expect = (np.swapaxes(dgp, -1, -2)
              - np.einsum('...ij,...k->...ijk', gp.entries, du / u[..., None]))
    assert np.abs(t.B - expect).max() <= 1e-12

    from torusma.cherrier import _terms_by_loops
    idx = subsample_indices(grid, 200, seed=3)
    B_loops, rhs_loops = _terms_by_loops(g, gp, idx)
    flatB = t.B.reshape(-1, 2, 2, 2)[idx]
    assert np.abs(flatB - B_loops).max() <= 1e-6
    flat_rhs = t.rhs.values.ravel()[idx]
    assert np.abs(flat_rhs - rhs_loops).max() <= 1e-6


def test_seeded_pair_matches_index_loop_oracle():
    g, gp = seeded_pair(16)
    t = cherrier_terms(g, gp)
    from torusma.cherrier import _terms_by_loops
    idx = subsample_indices(g.grid, 300, seed=4)
    B_loops, rhs_loops = _terms_by_loops(g, gp, idx)
    assert np.abs(t.B.reshape(-1, 2, 2, 2)[idx] - B_loops).max() <= 1e-6
    assert np.abs(t.rhs.values.ravel()[idx] - rhs_loops).max() <= 1e-6


def test_conformal_pair_one_dimension():
    """n=1 pair: flat base against a positive potential perturbation."""
    grid = make_grid(1, 64)
    g = MetricField(constant_form(grid, [[1.0]]))
    f = from_function(grid, lambda x, y: 0.04 * np.sin(2 * np.pi * x)
                      * np.sin(2 * np.pi * y))
    gp = MetricField(constant_form(grid, [[1.0]]) + i_ddbar(f))
    assert cherrier_residual(g, gp) <= 1e-6


def test_refinement_study_two_dimensions():
    g16, gp16 = seeded_pair(16)
    g32, gp32 = seeded_pair(32)
    r16 = cherrier_residual(g16, gp16)
    r32 = cherrier_residual(g32, gp32)
    assert r32 <= 1e-6
    assert r32 <= 1e-2 * r16


def test_square_term_nonnegative():
    g, gp = seeded_pair(16)
    t = cherrier_terms(g, gp)
    vals = t.K.values
    assert vals.real.min() >= -1e-10
    assert np.abs(vals.imag).max() <= 1e-12


def test_rescaling_covariance():
    """Both sides scale by 1/c under g -> cg, g' -> cg', so the rescaled
    residual field matches the original after multiplying back."""
    g, gp = seeded_pair(16)
    c = 2.7
    gc = MetricField(g.form * c)
    gpc = MetricField(gp.form * c)
    t = cherrier_terms(g, gp)
    tc = cherrier_terms(gc, gpc)
    res = t.lhs.values - t.rhs.values
    res_c = tc.lhs.values - tc.rhs.values
    assert np.abs(c * res_c - res).max() <= 1e-10


def test_non_potential_pair_rejected():
    grid = make_grid(2, 16)
    _, gform = random_hermitian_field(grid, seed=81, amplitude=0.05,
                                     max_mode=1)
    _, other = random_hermitian_field(grid, seed=82, amplitude=0.05,
                                      max_mode=1)
    g = MetricField(gform.symmetrized())
    gp = MetricField(other.symmetrized())
    assert potential_defect(g, gp) > 1e-4
    with pytest.raises(TorusmaError):
        cherrier_terms(g, gp)


def test_potential_pair_accepted_by_checker():
    g, gp = seeded_pair(16)
    assert potential_defect(g, gp) <= 1e-10
