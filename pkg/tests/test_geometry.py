"""Chern connection, torsion, curvature, Ricci, traces, Gauduchon defect."""

import numpy as np
import pytest

from torusma.errors import HermitianError, PositivityError
from torusma.geometry import (MetricField, chern_curvature, chern_ricci,
                              chern_scalar, christoffel, complex_laplacian,
                              gauduchon_defect, herm_eig_range, lower_curvature,
                              max_abs_eigenvalue, min_eigenvalue, torsion,
                              trace_pair)
from torusma.grid import (HermitianFormField, ScalarField, constant_form,
                          constant_scalar, from_function, i_ddbar, make_grid)
from torusma.randomfields import (AnalyticHermitian, TrigField,
                                  random_hermitian_field,
                                  random_potential_form, random_real_trig,
                                  random_scalar_field)

from oracles import (fd4_christoffel, fd4_mixed_second_at, loop_trace_pair,
                     subsample_coords, subsample_indices)


def exp_metric_1d(grid, amplitude=0.3, seed=101):
    """Conformal n=1 metric g = e^u with a band-limited random u."""
    poly, u = random_scalar_field(grid, seed, amplitude=amplitude, max_mode=2)
    ents = np.exp(u.real_values())[..., None, None].astype(complex)
    return u, MetricField(HermitianFormField(grid, ents))


def sine_stripe_metric(grid):
    """n=2 metric with g_{1 1bar} = 1 + sin(2 pi x^2)/2, other entries flat.

    Returned with its analytic description for finite-difference checks.
    """
    amp = 0.25j
    poly = TrigField(np.array([[0, 0, 1, 0], [0, 0, -1, 0]]),
                     np.array([-amp, amp]))
    analytic = AnalyticHermitian(2, np.eye(2), {(0, 0): poly,
                                                (0, 1): TrigField(np.zeros((0, 4)), np.zeros(0)),
                                                (1, 1): TrigField(np.zeros((0, 4)), np.zeros(0))})
    return analytic, MetricField(analytic.sample(grid).symmetrized())


# --- MetricField certificate ----------------------------------------------


def test_metric_inverse_identity():
    g = make_grid(2, 16)
    _, form = random_hermitian_field(g, seed=3, amplitude=0.2)
    m = MetricField(form.symmetrized())
    eye = np.einsum('...ij,...jk->...ik', m.entries, m.inverse)
    target = np.broadcast_to(np.eye(2), eye.shape)
    assert np.abs(eye - target).max() <= 1e-12


def test_metric_rejects_indefinite_form():
    g = make_grid(1, 8)
    with pytest.raises(PositivityError):
        MetricField(constant_form(g, [[-1.0]]))
    # a barely positive metric passes only with a lowered floor
    tiny = constant_form(g, [[1e-9]])
    with pytest.raises(PositivityError):
        MetricField(tiny)
    assert MetricField(tiny, floor=1e-12).min_eig == pytest.approx(1e-9)


def test_metric_log_det_closed_form():
    g = make_grid(2, 8)
    m = MetricField(constant_form(g, np.diag([2.0, 3.0])))
    assert np.allclose(m.log_det, np.log(6.0))
    assert m.volume_density() == pytest.approx(8 * 6.0)


# --- christoffel -----------------------------------------------------------


def test_christoffel_constant_metric_is_zero():
    g = make_grid(2, 8)
    m = MetricField(constant_form(g, [[2.0, 0.5j], [-0.5j, 1.0]]))
    assert christoffel(m).sup_norm() <= 1e-13


def test_christoffel_conformal_1d_closed_form():
    """For g = e^u in one variable, Gamma^1_11 = d_holo u."""
    grid = make_grid(1, 64)
    u, m = exp_metric_1d(grid)
    gamma = christoffel(m)
    from torusma.grid import d_holo
    du = d_holo(u, 0).values
    assert np.abs(gamma.entries[..., 0, 0, 0] - du).max() <= 1e-10


def test_christoffel_matches_fd_oracle_1d():
    grid = make_grid(1, 64)
    analytic, form = random_hermitian_field(grid, seed=17, amplitude=0.3,
                                            max_mode=2)
    m = MetricField(form.symmetrized())
    oracle = fd4_christoffel(analytic, grid)
    assert np.abs(christoffel(m).entries - oracle).max() <= 1e-6


def test_christoffel_matches_fd_oracle_2d():
    grid = make_grid(2, 16)
    analytic, form = random_hermitian_field(grid, seed=19, amplitude=0.05,
                                            max_mode=1)
    m = MetricField(form.symmetrized())
    oracle = fd4_christoffel(analytic, grid, refine=16)
    assert np.abs(christoffel(m).entries - oracle).max() <= 1e-6


# --- torsion ---------------------------------------------------------------


def test_torsion_constant_metric_is_zero():
    g = make_grid(2, 8)
    m = MetricField(constant_form(g, np.eye(2)))
    assert torsion(m).sup_norm() == 0.0


def test_torsion_vanishes_for_potential_metric():
    """A metric of the form (identity + complex Hessian) has zero torsion."""
    g = make_grid(2, 16)
    _, form = random_potential_form(g, seed=23, amplitude=0.3, max_mode=2)
    m = MetricField(form.symmetrized())
    assert torsion(m).sup_norm() <= 1e-8


def test_torsion_sine_stripe_closed_form_and_oracle():
    grid = make_grid(2, 16)
    analytic, m = sine_stripe_metric(grid)
    t = torsion(m)
    # only T^1_{21} = -T^1_{12} = d_2 g_{1 1bar} / g_{1 1bar} survives
    x2 = grid.coordinates()[2]
    g11 = 1 + 0.5 * np.sin(2 * np.pi * x2)
    expect = (0.5 * np.pi * np.cos(2 * np.pi * x2) / g11
              + np.zeros(grid.shape))
    assert np.abs(t.entries[..., 1, 0, 0] - expect).max() <= 1e-10
    assert t.sup_norm() >= 1e-2

    gamma_fd = fd4_christoffel(analytic, grid, refine=16)
    torsion_fd = gamma_fd - np.swapaxes(gamma_fd, -3, -2)
    assert np.abs(t.entries - torsion_fd).max() <= 1e-6
    # exact antisymmetry by construction
    assert np.abs(t.entries + np.swapaxes(t.entries, -3, -2)).max() == 0.0


# --- curvature -------------------------------------------------------------


def test_curvature_constant_metric_is_zero():
    g = make_grid(2, 8)
    m = MetricField(constant_form(g, np.diag([1.0, 2.0])))
    assert chern_curvature(m).sup_norm() <= 1e-13


def test_curvature_conformal_1d_closed_form():
    """For g = e^u: R_{1 1bar 1}^1 = -d_1 d_1bar u."""
    grid = make_grid(1, 64)
    u, m = exp_metric_1d(grid)
    r = chern_curvature(m)
    hess = i_ddbar(u)
    assert np.abs(r.entries[..., 0, 0, 0, 0]
                  + hess.entries[..., 0, 0]).max() <= 1e-9


def test_curvature_trace_recovers_ricci():
    grid = make_grid(2, 32)
    _, form = random_hermitian_field(grid, seed=29, amplitude=0.05, max_mode=1)
    m = MetricField(form.symmetrized())
    low = lower_curvature(m, chern_curvature(m))
    traced = np.einsum('...ji,...klij->...kl', m.inverse, low.entries)
    ric = chern_ricci(m)
    assert np.abs(traced - ric.entries).max() <= 1e-8


def test_lowered_curvature_pairing_symmetry():
    """conj(R_{k lbar i jbar}) = R_{l kbar j ibar} for Hermitian metrics."""
    grid = make_grid(2, 32)
    _, form = random_hermitian_field(grid, seed=31, amplitude=0.05, max_mode=1)
    m = MetricField(form.symmetrized())
    low = lower_curvature(m, chern_curvature(m)).entries
    swapped = np.conj(np.transpose(low, axes=(0, 1, 2, 3, 5, 4, 7, 6)))
    scale = np.abs(low).max()
    assert np.abs(low - swapped).max() <= 1e-10 * max(scale, 1.0)


# --- chern_ricci -----------------------------------------------------------


def test_ricci_constant_metric_is_zero():
    g = make_grid(2, 8)
    m = MetricField(constant_form(g, [[3.0, 1.0], [1.0, 2.0]]))
    assert chern_ricci(m).sup_norm() == 0.0


def test_ricci_conformal_1d_closed_form():
    grid = make_grid(1, 64)
    u, m = exp_metric_1d(grid)
    ric = chern_ricci(m)
    assert np.abs(ric.entries + i_ddbar(u).entries).max() <= 1e-9


def test_ricci_depends_only_on_determinant():
    """diag(a, b) and diag(a*b, 1) share det and therefore share Ricci."""
    grid = make_grid(2, 16)
    _, a = random_scalar_field(grid, seed=37, amplitude=0.3, max_mode=2)
    _, b = random_scalar_field(grid, seed=38, amplitude=0.3, max_mode=2)
    av, bv = 1 + a.real_values(), 1 + b.real_values()
    e1 = np.zeros(grid.shape + (2, 2), dtype=complex)
    e1[..., 0, 0], e1[..., 1, 1] = av, bv
    e2 = np.zeros_like(e1)
    e2[..., 0, 0], e2[..., 1, 1] = av * bv, 1.0
    r1 = chern_ricci(MetricField(HermitianFormField(grid, e1)))
    r2 = chern_ricci(MetricField(HermitianFormField(grid, e2)))
    assert np.abs(r1.entries - r2.entries).max() <= 1e-10


def test_ricci_scale_invariance_and_zero_mean():
    grid = make_grid(2, 16)
    _, form = random_hermitian_field(grid, seed=41, amplitude=0.1, max_mode=2)
    m = MetricField(form.symmetrized())
    mc = MetricField(form.symmetrized() * 3.7)
    r, rc = chern_ricci(m), chern_ricci(mc)
    assert np.abs(r.entries - rc.entries).max() <= 1e-12
    gax = tuple(range(4))
    assert np.abs(r.entries.mean(axis=gax)).max() <= 1e-12


# --- chern_scalar / traces / laplacian ------------------------------------


def test_scalar_curvature_conformal_closed_form():
    """g = e^u in one variable: R = -e^{-u} d_1 d_1bar u."""
    grid = make_grid(1, 64)
    u, m = exp_metric_1d(grid)
    r = chern_scalar(m)
    expect = -np.exp(-u.real_values()) * i_ddbar(u).entries[..., 0, 0]
    assert np.abs(r.values - expect).max() <= 1e-9
    consistency = trace_pair(m, chern_ricci(m))
    assert np.abs(r.values - consistency.values).max() <= 1e-12


def test_trace_pair_of_metric_with_itself():
    grid = make_grid(2, 16)
    _, form = random_hermitian_field(grid, seed=43, amplitude=0.2, max_mode=2)
    m = MetricField(form.symmetrized())
    tr = trace_pair(m, m.form)
    assert np.abs(tr.values - 2.0).max() <= 1e-12
    tr3 = trace_pair(m, m.form * 3.0)
    assert np.abs(tr3.values - 6.0).max() <= 1e-12


def test_trace_pair_matches_loop_oracle():
    grid = make_grid(2, 16)
    _, gform = random_hermitian_field(grid, seed=47, amplitude=0.2)
    _, aform = random_hermitian_field(grid, seed=48, amplitude=1.0,
                                      base_matrix=np.zeros((2, 2)))
    m = MetricField(gform.symmetrized())
    a = aform.symmetrized()
    got = trace_pair(m, a)
    assert got.certified_real
    oracle = loop_trace_pair(m.inverse, a.entries)
    assert np.abs(got.values - oracle).max() <= 1e-12


def test_complex_laplacian_flat_metric():
    """With the identity metric the operator is a quarter of the Euclidean
    Laplacian."""
    grid = make_grid(2, 16)
    m = MetricField(constant_form(grid, np.eye(2)))
    poly, f = random_scalar_field(grid, seed=53, amplitude=0.2, max_mode=2)
    lap = complex_laplacian(m, f)
    h = 1.0 / (32 * grid.N)
    _, coords = subsample_coords(grid, 500, seed=1)
    acc = 0.0
    for j in range(2):
        acc = acc + 4.0 * fd4_mixed_second_at(
            lambda c: poly.evaluate(c), coords, j, j, h)
    idx = np.ravel_multi_index(
        tuple((np.asarray(c) * grid.N).astype(int) for c in coords),
        grid.shape)
    assert np.abs(lap.values.ravel()[idx] - 0.25 * acc).max() <= 1e-6


def test_complex_laplacian_consistency():
    grid = make_grid(2, 16)
    _, form = random_hermitian_field(grid, seed=59, amplitude=0.2)
    m = MetricField(form.symmetrized())
    _, f = random_scalar_field(grid, seed=60, max_mode=2)
    lhs = complex_laplacian(m, f)
    rhs = trace_pair(m, i_ddbar(f))
    assert np.abs(lhs.values - rhs.values).max() <= 1e-12
    assert np.abs(complex_laplacian(m, constant_scalar(grid, 4.2)).values
                  ).max() == 0.0


# --- gauduchon defect ------------------------------------------------------


def test_gauduchon_defect_constant_and_kahler():
    grid = make_grid(2, 16)
    m = MetricField(constant_form(grid, np.diag([1.0, 2.0])))
    assert gauduchon_defect(m) <= 1e-12
    _, form = random_potential_form(grid, seed=61, amplitude=0.3, max_mode=2)
    mk = MetricField(form.symmetrized())
    assert gauduchon_defect(mk) <= 1e-8


def test_gauduchon_defect_conformal_metric_against_oracle():
    """e^sigma times the flat metric has defect Delta-like(e^sigma) != 0."""
    grid = make_grid(2, 32)
    poly = random_real_trig(2, seed=67, max_mode=2, num_modes=5)
    sigma = poly.sample(grid)
    scale = 0.1 / sigma.sup_norm()
    poly = poly.scaled(scale)
    conf = np.exp(scale * sigma.real_values())
    ents = np.zeros(grid.shape + (2, 2), dtype=complex)
    ents[..., 0, 0] = conf
    ents[..., 1, 1] = conf
    m = MetricField(HermitianFormField(grid, ents))
    defect = gauduchon_defect(m)
    assert defect >= 1e-2

    # the defect field is d1 d1bar + d2 d2bar of e^sigma; compare sups on
    # a point subsample against nested finite differences
    idx, coords = subsample_coords(grid, 400, seed=2)
    h = 1.0 / (16 * grid.N)
    ev = lambda c: np.exp(poly.evaluate(c))
    oracle = (fd4_mixed_second_at(ev, coords, 0, 0, h)
              + fd4_mixed_second_at(ev, coords, 1, 1, h))
    from torusma.grid import _mixed_second_raw
    field = (_mixed_second_raw(ents[..., 1, 1], grid, 0, 0)
             + _mixed_second_raw(ents[..., 0, 0], grid, 1, 1)
             - _mixed_second_raw(ents[..., 1, 0], grid, 0, 1)
             - _mixed_second_raw(ents[..., 0, 1], grid, 1, 0))
    assert np.abs(field.ravel()[idx] - oracle).max() <= 1e-6


def test_gauduchon_rejects_one_dimensional_input():
    grid = make_grid(1, 8)
    m = MetricField(constant_form(grid, [[1.0]]))
    assert gauduchon_defect(m) == 0.0


# --- eigenvalue helpers ----------------------------------------------------


def test_min_eigenvalue_closed_forms():
    g = make_grid(2, 8)
    assert min_eigenvalue(constant_form(g, np.eye(2))) == pytest.approx(1.0)
    assert min_eigenvalue(constant_form(g, np.diag([2.0, 0.5]))) == \
        pytest.approx(0.5)
    assert min_eigenvalue(constant_form(g, [[2.0, 1.0], [1.0, 2.0]])) == \
        pytest.approx(1.0)


def test_min_eigenvalue_rejects_non_hermitian():
    g = make_grid(2, 8)
    ents = np.zeros(g.shape + (2, 2), dtype=complex)
    ents[..., 0, 1] = 1.0
    bad = HermitianFormField(g, ents, validate=False)
    with pytest.raises(HermitianError):
        min_eigenvalue(bad)


def test_eig_range_against_numpy():
    rng = np.random.default_rng(71)
    a = rng.standard_normal((50, 2, 2)) + 1j * rng.standard_normal((50, 2, 2))
    herm = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    lo, hi = herm_eig_range(herm)
    w = np.linalg.eigvalsh(herm)
    assert np.abs(lo - w[..., 0]).max() <= 1e-12
    assert np.abs(hi - w[..., 1]).max() <= 1e-12
    assert max_abs_eigenvalue(
        HermitianFormField(make_grid(1, 8),
                           np.full((8, 8, 1, 1), -3.0 + 0j),
                           validate=False)) == pytest.approx(3.0)
