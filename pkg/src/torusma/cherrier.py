"""Second-order trace identity relating two Hermitian metrics.

For metrics g and g' = g + i ddbar(phi) on the same grid, with
u = tr_g g', f = log(det g'/det g), Delta and Delta' the complex
Laplacians of g and g', T and R the torsion and curvature of g, the
following holds pointwise:

    Delta' log u = (1/u) * (
        (2/u) Re( g'^{qbar k} T^i_{ik} d_qbar u )
        + K + Delta f - R
        + g'^{jbar i} d_i conj(T^l_{jl})
        + g'^{jbar i} g^{lbar k} g_{p jbar} d_lbar T^p_{ik}
        - g'^{jbar i} g^{lbar k} g'_{k qbar}
              ( d_i conj(T^q_{jl}) - R_{i lbar p jbar} g^{qbar p} )
        - g'^{jbar i} g^{lbar k} T^p_{ik} conj(T^q_{jl}) g_{p qbar} )

with the nonnegative square term

    K = g^{lbar i} g'^{jbar p} g'^{qbar k} B_{i jbar k} conj(B_{l pbar q}),
    B_{i jbar k} = nabla_i g'_{k jbar} - g'_{i jbar} d_k u / u
                   + T^p_{ik} g'_{p jbar},

where nabla is the Chern connection of g.  Evaluating both sides with
the spectral calculus and taking the sup of the difference gives a single
number exercising every tensor operation at once; it decays spectrally
under refinement on analytic data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TorusmaError
from .geometry import (MetricField, chern_curvature, chern_ricci, chern_scalar,
                       christoffel, complex_laplacian, lower_curvature,
                       torsion, trace_pair)
from .grid import (ScalarField, _check_same_grid, _d_antiholo_raw, _d_holo_raw,
                   wirtinger_symbols)
from scipy import fft as _fft


@dataclass
class CherrierTerms:
    """Assembled pieces of the identity for one metric pair.

    B has shape grid.shape + (n, n, n) indexed [i, jbar, k]; K, lhs, rhs
    and f are scalar fields; residual() is sup |lhs - rhs|.
    """

    grid: object
    B: np.ndarray
    K: ScalarField
    lhs: ScalarField
    rhs: ScalarField
    f: ScalarField

    def residual(self):
        return float(np.abs(self.lhs.values - self.rhs.values).max())


def potential_defect(g, gp):
    """How far gp - g is from being i ddbar of a real potential.

    Projects the Fourier transform of the difference onto the span of the
    mixed-derivative symbols mode by mode and returns the sup of the
    projection residual relative to the difference scale.  Zero-mean and
    Hermitian symmetry requirements are part of the projection (the k = 0
    mode has an empty span).
    """
    _check_same_grid(g.form, gp.form)
    grid = g.grid
    n = grid.n
    diff = gp.entries - g.entries
    scale = np.abs(diff).max()
    if scale == 0.0:
        return 0.0
    gax = tuple(range(2 * n))
    dhat = _fft.fftn(diff, axes=gax)
    mu, nu = wirtinger_symbols(grid)
    sym = np.empty(grid.shape + (n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            sym[..., i, j] = mu[i] * nu[j]
    weight = (np.abs(sym) ** 2).sum(axis=(-2, -1))
    coeff = np.where(weight > 0,
                     (np.conj(sym) * dhat).sum(axis=(-2, -1))
                     / np.where(weight > 0, weight, 1.0),
                     0.0)
    resid = dhat - sym * coeff[..., None, None]
    return float(np.abs(resid).max() / (scale * grid.num_points))


def cherrier_terms(g, gp, check_pair=True):
    """Evaluate every ingredient of the identity for the pair (g, g').

    With ``check_pair`` the difference g' - g is verified to be a
    potential perturbation first (relative defect below 1e-8).
    """
    if not (isinstance(g, MetricField) and isinstance(gp, MetricField)):
        raise TypeError("cherrier_terms needs two MetricFields")
    _check_same_grid(g.form, gp.form)
    if check_pair:
        defect = potential_defect(g, gp)
        if defect > 1e-8:
            raise TorusmaError(
                f"metric difference is not a potential perturbation "
                f"(relative projection defect {defect:.3e})")
    grid = g.grid
    n = grid.n

    G, Gp = g.entries, gp.entries
    Ginv, Gpinv = g.inverse, gp.inverse

    u_field = trace_pair(g, gp.form)
    u = u_field.real_values()
    log_u = ScalarField(grid, np.log(u).astype(complex))

    f = ScalarField(grid, (gp.log_det - g.log_det).astype(complex))

    lhs = complex_laplacian(gp, log_u)
    lap_f = complex_laplacian(g, f)
    scal = chern_scalar(g)

    gamma = christoffel(g).entries
    tors = torsion(g).entries

    # derivative stacks; leading stacked axis is the derivative direction
    du_holo = np.stack([_d_holo_raw(u.astype(complex), grid, k)
                        for k in range(n)], axis=-1)          # [..., k]
    du_anti = np.stack([_d_antiholo_raw(u.astype(complex), grid, q)
                        for q in range(n)], axis=-1)          # [..., q]
    dGp = np.stack([_d_holo_raw(Gp, grid, i) for i in range(n)],
                   axis=-3)                                   # [..., i, k, j]
    dbarT = np.stack([_d_antiholo_raw(tors, grid, l) for l in range(n)],
                     axis=-4)                                 # [..., l, i, k, p]
    conjT = np.conj(tors)
    dconjT = np.stack([_d_holo_raw(conjT, grid, i) for i in range(n)],
                      axis=-4)                                # [..., i, j, l, q]
    tau = np.einsum('...jll->...j', tors)                     # T^l_{jl}
    dconj_tau = np.stack([_d_holo_raw(np.conj(tau), grid, i)
                          for i in range(n)], axis=-2)        # [..., i, j]

    # B tensor: covariant derivative, trace-gradient, torsion correction
    covd = dGp - np.einsum('...ikp,...pj->...ikj', gamma, Gp)
    tcorr = np.einsum('...ikp,...pj->...ikj', tors, Gp)
    B = (np.swapaxes(covd + tcorr, -1, -2)
         - np.einsum('...ij,...k->...ijk', Gp, du_holo / u[..., None]))

    K_vals = np.einsum('...li,...jp,...qk,...ijk,...lpq->...',
                       Ginv, Gpinv, Gpinv, B, np.conj(B))
    K = ScalarField(grid, K_vals)

    tau2 = np.einsum('...iki->...k', tors)                    # T^i_{ik}
    term1 = (2.0 / u) * np.einsum('...qk,...k,...q->...',
                                  Gpinv, tau2, du_anti).real
    term5 = np.einsum('...ji,...ij->...', Gpinv, dconj_tau)
    term6 = np.einsum('...ji,...lk,...pj,...likp->...',
                      Gpinv, Ginv, G, dbarT)
    rlow = lower_curvature(g, chern_curvature(g)).entries
    inner = dconjT - np.einsum('...ilpj,...qp->...ijlq', rlow, Ginv)
    term7 = -np.einsum('...ji,...lk,...kq,...ijlq->...',
                       Gpinv, Ginv, Gp, inner)
    term8 = -np.einsum('...ji,...lk,...ikp,...jlq,...pq->...',
                       Gpinv, Ginv, tors, conjT, G)

    rhs_vals = (term1 + K_vals + lap_f.values - scal.values
                + term5 + term6 + term7 + term8) / u
    rhs = ScalarField(grid, rhs_vals)
    return CherrierTerms(grid=grid, B=B, K=K, lhs=lhs, rhs=rhs, f=f)


def b_tensor(g, gp):
    """The B tensor and square term K for the pair, with the full identity
    sides included for convenience."""
    return cherrier_terms(g, gp)


def cherrier_residual(g, gp):
    """Sup-norm of (lhs - rhs) of the identity over the grid."""
    return cherrier_terms(g, gp).residual()


def _terms_by_loops(g, gp, flat_indices):
    """Reference evaluation of B and the right-hand side at a subset of
    points using explicit index loops.

    Shares the derivative fields with the fast path (those are covered by
    separate finite-difference oracles) but redoes every contraction
    loop by loop.  Returns (B_subset, rhs_subset).
    """
    grid = g.grid
    n = grid.n
    flat = np.asarray(flat_indices)

    def take(arr):
        comp = arr.shape[2 * grid.n:]
        return arr.reshape((grid.num_points,) + comp)[flat]

    G, Gp = take(g.entries), take(gp.entries)
    Ginv, Gpinv = take(g.inverse), take(gp.inverse)
    u_all = trace_pair(g, gp.form).real_values()
    u = take(u_all)

    gamma = take(christoffel(g).entries)
    tors_full = torsion(g).entries
    tors = take(tors_full)
    du_holo = take(np.stack([_d_holo_raw(u_all.astype(complex), grid, k)
                             for k in range(n)], axis=-1))
    du_anti = take(np.stack([_d_antiholo_raw(u_all.astype(complex), grid, q)
                             for q in range(n)], axis=-1))
    dGp = take(np.stack([_d_holo_raw(gp.entries, grid, i) for i in range(n)],
                        axis=-3))
    dbarT = take(np.stack([_d_antiholo_raw(tors_full, grid, l)
                           for l in range(n)], axis=-4))
    dconjT = take(np.stack([_d_holo_raw(np.conj(tors_full), grid, i)
                            for i in range(n)], axis=-4))
    tau = np.einsum('...jll->...j', tors_full)
    dconj_tau = take(np.stack([_d_holo_raw(np.conj(tau), grid, i)
                               for i in range(n)], axis=-2))
    rlow = take(lower_curvature(g, chern_curvature(g)).entries)
    lap_f = take(complex_laplacian(
        g, ScalarField(grid, (gp.log_det - g.log_det).astype(complex))).values)
    scal = take(chern_scalar(g).values)

    npts = len(flat)
    B = np.zeros((npts, n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                covd = dGp[:, i, k, j].copy()
                for p in range(n):
                    covd -= gamma[:, i, k, p] * Gp[:, p, j]
                    covd += tors[:, i, k, p] * Gp[:, p, j]
                B[:, i, j, k] = covd - Gp[:, i, j] * du_holo[:, k] / u

    K = np.zeros(npts, dtype=complex)
    for i in range(n):
        for l in range(n):
            for j in range(n):
                for p in range(n):
                    for q in range(n):
                        for k in range(n):
                            K += (Ginv[:, l, i] * Gpinv[:, j, p]
                                  * Gpinv[:, q, k] * B[:, i, j, k]
                                  * np.conj(B[:, l, p, q]))

    t1 = np.zeros(npts, dtype=complex)
    for q in range(n):
        for k in range(n):
            acc = np.zeros(npts, dtype=complex)
            for i in range(n):
                acc += tors[:, i, k, i]
            t1 += Gpinv[:, q, k] * acc * du_anti[:, q]
    t1 = (2.0 / u) * t1.real

    t5 = np.zeros(npts, dtype=complex)
    for i in range(n):
        for j in range(n):
            t5 += Gpinv[:, j, i] * dconj_tau[:, i, j]

    t6 = np.zeros(npts, dtype=complex)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    for p in range(n):
                        t6 += (Gpinv[:, j, i] * Ginv[:, l, k] * G[:, p, j]
                               * dbarT[:, l, i, k, p])

    t7 = np.zeros(npts, dtype=complex)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    for q in range(n):
                        inner = dconjT[:, i, j, l, q].copy()
                        for p in range(n):
                            inner -= rlow[:, i, l, p, j] * Ginv[:, q, p]
                        t7 -= (Gpinv[:, j, i] * Ginv[:, l, k] * Gp[:, k, q]
                               * inner)

    t8 = np.zeros(npts, dtype=complex)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    for p in range(n):
                        for q in range(n):
                            t8 -= (Gpinv[:, j, i] * Ginv[:, l, k]
                                   * tors[:, i, k, p]
                                   * np.conj(tors[:, j, l, q]) * G[:, p, q])

    rhs = (t1 + K + lap_f - scal + t5 + t6 + t7 + t8) / u
    return B, rhs
