"""Chern-connection tensor calculus for Hermitian metrics on the flat torus.

Conventions, with g_{i jbar} the matrix of the metric in the frame dz^i:

    Gamma^k_{ij}   = g^{qbar k} d_i g_{j qbar}          (connection)
    T^k_{ij}       = Gamma^k_{ij} - Gamma^k_{ji}        (torsion)
    R_{k lbar i}^p = - d_lbar Gamma^p_{ki}              (curvature)
    Ric_{k lbar}   = - d_k d_lbar log det g             (first Chern form /
                                                         Ricci coefficient)

Index placement in arrays follows the formulas: a metric entry array E has
E[..., i, j] = g_{i jbar}, and the inverse entry array Q has
Q[..., j, i] = g^{jbar i}, so matrix algebra (E @ Q = identity) holds
pointwise with plain matmul.
"""

from __future__ import annotations

import numpy as np

from .errors import PositivityError
from .grid import (HermitianFormField, ScalarField, _check_same_grid,
                   _d_antiholo_raw, _d_holo_raw, _i_ddbar_raw,
                   _mixed_second_raw)

POSITIVITY_FLOOR = 1e-8


# ---------------------------------------------------------------------------
# Closed-form pointwise linear algebra for n <= 2 Hermitian matrices.


def herm_det(entries):
    """Pointwise determinant of a Hermitian matrix array, as a real array."""
    n = entries.shape[-1]
    if n == 1:
        return entries[..., 0, 0].real.copy()
    a = entries[..., 0, 0].real
    d = entries[..., 1, 1].real
    b = entries[..., 0, 1]
    return a * d - (b.real ** 2 + b.imag ** 2)


def herm_inverse(entries, det=None):
    """Pointwise inverse of a Hermitian matrix array via the adjugate."""
    n = entries.shape[-1]
    if det is None:
        det = herm_det(entries)
    out = np.empty_like(entries, dtype=np.complex128)
    if n == 1:
        out[..., 0, 0] = 1.0 / det
        return out
    out[..., 0, 0] = entries[..., 1, 1] / det
    out[..., 1, 1] = entries[..., 0, 0] / det
    out[..., 0, 1] = -entries[..., 0, 1] / det
    out[..., 1, 0] = -entries[..., 1, 0] / det
    return out


def herm_eig_range(entries):
    """Pointwise (smallest, largest) eigenvalue of a Hermitian matrix array.

    Closed forms: the entry itself for n = 1, the trace/radius formula for
    n = 2.
    """
    n = entries.shape[-1]
    if n == 1:
        a = entries[..., 0, 0].real
        return a.copy(), a.copy()
    a = entries[..., 0, 0].real
    d = entries[..., 1, 1].real
    b = entries[..., 0, 1]
    mid = 0.5 * (a + d)
    rad = np.sqrt((0.5 * (a - d)) ** 2 + b.real ** 2 + b.imag ** 2)
    return mid - rad, mid + rad


def mixed_det(a_entries, b_entries):
    """Polarized determinant S(A, B) = det(A+B) - det A - det B for n = 2.

    For Hermitian A, B this is real; it is the coefficient pairing two
    (1,1)-forms in a wedge product.
    """
    if a_entries.shape[-1] != 2:
        raise ValueError("mixed_det is a two-dimensional construction")
    cross = a_entries[..., 0, 1] * np.conj(b_entries[..., 0, 1])
    return (a_entries[..., 0, 0].real * b_entries[..., 1, 1].real
            + a_entries[..., 1, 1].real * b_entries[..., 0, 0].real
            - 2.0 * cross.real)


def min_eigenvalue(a):
    """Smallest pointwise eigenvalue of a Hermitian form field, over the grid."""
    a.check_hermitian()
    lo, _ = herm_eig_range(a.entries)
    return float(lo.min())


def max_abs_eigenvalue(a):
    """Largest pointwise |eigenvalue| over the grid, the operator sup norm."""
    lo, hi = herm_eig_range(a.entries)
    return float(max(np.abs(lo).max(), np.abs(hi).max()))


# ---------------------------------------------------------------------------
# Metrics.


class MetricField:
    """A positive definite Hermitian form with cached pointwise algebra.

    Construction certifies positivity: the smallest eigenvalue over the
    grid must stay above ``floor`` (default POSITIVITY_FLOOR), otherwise
    PositivityError is raised.  The inverse and log det arrays are computed
    once, by closed form, and shared with every operation that needs them.
    """

    def __init__(self, form, floor=POSITIVITY_FLOOR):
        if not isinstance(form, HermitianFormField):
            raise TypeError("MetricField wraps a HermitianFormField")
        form.check_hermitian()
        lo, _ = herm_eig_range(form.entries)
        self.min_eig = float(lo.min())
        if not np.isfinite(self.min_eig) or self.min_eig < floor:
            raise PositivityError(
                f"smallest metric eigenvalue {self.min_eig:.6e} is below "
                f"the positivity floor {floor:.0e}")
        self.form = form
        self.grid = form.grid
        self.det = herm_det(form.entries)
        self.inverse = herm_inverse(form.entries, self.det)
        self.log_det = np.log(self.det)

    @property
    def entries(self):
        return self.form.entries

    @property
    def n(self):
        return self.grid.n

    def log_det_field(self):
        return ScalarField(self.grid, self.log_det.astype(np.complex128))

    def volume_density(self):
        """Density of omega^n against the Lebesgue sample measure: the
        (1,1)-form with matrix g has omega^n / (dx dy ...) = n! 2^n det g."""
        n = self.grid.n
        factor = {1: 2.0, 2: 8.0}[n]
        return factor * self.det


# ---------------------------------------------------------------------------
# Tensor fields produced by the calculus: thin containers with the grid,
# the entry array, and the index layout recorded in the docstring.


class TensorField:
    """Bare tensor samples: grid plus an entries array with trailing
    component axes."""

    def __init__(self, grid, entries):
        self.grid = grid
        self.entries = entries

    def sup_norm(self):
        return float(np.abs(self.entries).max())


def christoffel(g):
    """Chern connection coefficients Gamma^k_{ij} = g^{qbar k} d_i g_{j qbar}.

    Returns a TensorField with entries[..., i, j, k].
    """
    n = g.n
    dg = np.stack([_d_holo_raw(g.entries, g.grid, i) for i in range(n)],
                  axis=-3)
    # dg[..., i, a, b] = d_i g_{a bbar}
    gamma = np.einsum('...qk,...ijq->...ijk', g.inverse, dg)
    return TensorField(g.grid, gamma)


def torsion(g):
    """Chern torsion T^k_{ij}, antisymmetric in (i, j) by construction.

    Returns a TensorField with entries[..., i, j, k].  Identically zero
    exactly when the metric is Kahler.
    """
    gamma = christoffel(g).entries
    return TensorField(g.grid, gamma - np.swapaxes(gamma, -3, -2))


def chern_curvature(g):
    """Curvature R_{k lbar i}^p = - d_lbar Gamma^p_{ki} of the Chern
    connection.

    Returns a TensorField with entries[..., k, l, i, p]; ``l`` is the
    barred direction.
    """
    n = g.n
    gamma = christoffel(g).entries
    dbar = np.stack([_d_antiholo_raw(gamma, g.grid, l) for l in range(n)],
                    axis=-4)
    # dbar[..., l, k, i, p] = d_lbar Gamma^p_{ki}
    return TensorField(g.grid, -np.swapaxes(dbar, -4, -3))


def lower_curvature(g, curv):
    """All-index-down curvature R_{k lbar i jbar} = R_{k lbar i}^p g_{p jbar}."""
    ents = np.einsum('...klip,...pj->...klij', curv.entries, g.entries)
    return TensorField(g.grid, ents)


def chern_ricci(g):
    """First Chern / Ricci form coefficients Ric_{k lbar} = - d_k d_lbar
    log det g.

    Computed straight from the log determinant, never by tracing the full
    curvature tensor, so it is cheap and exactly Hermitian.
    """
    return HermitianFormField(g.grid, -_i_ddbar_raw(g.log_det, g.grid),
                              validate=False)


def trace_pair(g, a):
    """Metric trace of a Hermitian form: tr_g a = g^{jbar i} a_{i jbar}."""
    if isinstance(a, HermitianFormField):
        _check_same_grid(g, a)
        a = a.entries
    vals = np.einsum('...ji,...ij->...', g.inverse, a)
    return ScalarField(g.grid, vals)


def chern_scalar(g):
    """Chern scalar curvature tr_g Ric as a scalar field."""
    return trace_pair(g, chern_ricci(g))


def complex_laplacian(g, f):
    """Canonical (Chern) Laplacian tr_g (i d dbar f) of a real scalar field."""
    _check_same_grid(g, f)
    hess = _i_ddbar_raw(f.real_values(), f.grid)
    return trace_pair(g, hess)


def gauduchon_defect(g):
    """Sup of the scalar d dbar (omega^{n-1}) obstruction.

    In two complex dimensions the coefficient of i^2 ddbar(omega) against
    the volume frame is

        c = d1 d1bar g_{2 2bar} + d2 d2bar g_{1 1bar}
          - d1 d2bar g_{2 1bar} - d2 d1bar g_{1 2bar},

    real wherever g is Hermitian.  Returns sup |c| over the grid; zero by
    convention in one complex dimension, where every metric is Gauduchon.
    """
    if g.n == 1:
        return 0.0
    e = g.entries
    c = (_mixed_second_raw(e[..., 1, 1], g.grid, 0, 0)
         + _mixed_second_raw(e[..., 0, 0], g.grid, 1, 1)
         - _mixed_second_raw(e[..., 1, 0], g.grid, 0, 1)
         - _mixed_second_raw(e[..., 0, 1], g.grid, 1, 0))
    return float(np.abs(c).max())
