"""Seeded band-limited random fields with exact trigonometric evaluators.

A :class:`TrigField` is a finite sum of Fourier modes that can be evaluated
at arbitrary (not just grid) coordinates and differentiated in closed form.
That makes generated data reproducible from a seed and lets independent
checks resample the same analytic object off-grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import HermitianFormField, ScalarField, _i_ddbar_raw


@dataclass(frozen=True)
class TrigField:
    """Trigonometric polynomial sum_m c_m exp(2 pi i m . x) on the torus.

    ``modes`` has shape (M, 2n) with integer rows over the real axes
    (x1, y1, ...); ``coeffs`` has shape (M,).  Real-valued fields are
    represented by conjugate-symmetric mode pairs.
    """

    modes: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "modes",
                           np.asarray(self.modes, dtype=np.int64))
        object.__setattr__(self, "coeffs",
                           np.asarray(self.coeffs, dtype=np.complex128))
        if self.modes.ndim != 2 or len(self.modes) != len(self.coeffs):
            raise ValueError("modes and coeffs must pair up")

    @property
    def num_axes(self):
        return self.modes.shape[1]

    def evaluate(self, coords):
        """Evaluate at broadcastable coordinate arrays, one per real axis."""
        if len(coords) != self.num_axes:
            raise ValueError(f"need {self.num_axes} coordinate arrays")
        acc = None
        for m, c in zip(self.modes, self.coeffs):
            phase = 0.0
            for a in range(self.num_axes):
                if m[a]:
                    phase = phase + m[a] * coords[a]
            term = c * np.exp(2j * np.pi * phase)
            acc = term if acc is None else acc + term
        if acc is None:
            return np.zeros(np.broadcast(*coords).shape, dtype=np.complex128)
        return acc + np.zeros(np.broadcast(*coords).shape)

    def sample(self, grid):
        """Values on a grid as a ScalarField."""
        return ScalarField(grid, self.evaluate(grid.coordinates()))

    def axis_derivative(self, axis):
        """Exact d/dx_axis, again a TrigField."""
        return TrigField(self.modes, self.coeffs * (2j * np.pi * self.modes[:, axis]))

    def d_holo(self, j):
        """Exact d/dz^j = (d/dx^j - i d/dy^j) / 2."""
        dx = self.axis_derivative(2 * j)
        dy = self.axis_derivative(2 * j + 1)
        return TrigField(self.modes, 0.5 * (dx.coeffs - 1j * dy.coeffs))

    def d_antiholo(self, j):
        """Exact d/dzbar^j = (d/dx^j + i d/dy^j) / 2."""
        dx = self.axis_derivative(2 * j)
        dy = self.axis_derivative(2 * j + 1)
        return TrigField(self.modes, 0.5 * (dx.coeffs + 1j * dy.coeffs))

    def conj(self):
        return TrigField(-self.modes, np.conj(self.coeffs))

    def scaled(self, factor):
        return TrigField(self.modes, self.coeffs * factor)

    def __add__(self, other):
        return TrigField(np.vstack([self.modes, other.modes]),
                         np.concatenate([self.coeffs, other.coeffs]))


def _draw_modes(rng, n, max_mode, num_modes):
    """Distinct nonzero integer frequency vectors in [-max_mode, max_mode]^2n."""
    # modes come in +/- pairs (conjugate closure uses the other half), so
    # only half the nonzero lattice is drawable; without this check the
    # rejection loop below would never terminate
    available = ((2 * max_mode + 1) ** (2 * n) - 1) // 2
    if num_modes > available:
        raise ValueError(
            f"cannot draw {num_modes} distinct modes with max_mode "
            f"{max_mode} in complex dimension {n}; only {available} "
            "sign-distinct choices exist")
    seen = set()
    rows = []
    while len(rows) < num_modes:
        m = tuple(int(v) for v in rng.integers(-max_mode, max_mode + 1,
                                               size=2 * n))
        if any(m) and m not in seen and tuple(-v for v in m) not in seen:
            seen.add(m)
            rows.append(m)
    return np.array(rows, dtype=np.int64)


def random_real_trig(n, seed, max_mode=2, num_modes=6):
    """Seeded real-valued TrigField, unnormalized.

    Draws ``num_modes`` distinct nonzero frequencies with standard complex
    Gaussian coefficients and closes under conjugation, so the result is
    exactly real wherever evaluated.
    """
    rng = np.random.default_rng(seed)
    modes = _draw_modes(rng, n, max_mode, num_modes)
    c = (rng.standard_normal(num_modes) + 1j * rng.standard_normal(num_modes))
    return TrigField(np.vstack([modes, -modes]),
                     np.concatenate([0.5 * c, 0.5 * np.conj(c)]))


def random_scalar_field(grid, seed, amplitude=1.0, max_mode=2, num_modes=6):
    """Seeded real scalar field with grid sup norm exactly ``amplitude``.

    Returns (TrigField, ScalarField); the TrigField carries the same
    normalization, so off-grid evaluation stays consistent with the samples.
    """
    poly = random_real_trig(grid.n, seed, max_mode, num_modes)
    raw = poly.sample(grid)
    scale = amplitude / raw.sup_norm()
    poly = poly.scaled(scale)
    return poly, ScalarField(grid, raw.values * scale)


class AnalyticHermitian:
    """Hermitian matrix field whose entries are TrigFields plus a constant.

    Provides exact off-grid evaluation of every entry, used to drive
    finite-difference cross-checks of the spectral tensor calculus.
    """

    def __init__(self, n, base_matrix, polys):
        self.n = n
        self.base = np.asarray(base_matrix, dtype=np.complex128)
        # polys maps (i, j) with i <= j to a TrigField; lower entries conjugate.
        self.polys = polys

    def entry_field(self, i, j):
        """TrigField of the fluctuating part of entry (i, jbar)."""
        if i <= j:
            return self.polys[(i, j)]
        return self.polys[(j, i)].conj()

    def evaluate_entry(self, i, j, coords):
        return self.base[i, j] + self.entry_field(i, j).evaluate(coords)

    def sample(self, grid):
        ents = np.empty(grid.shape + (self.n, self.n), dtype=np.complex128)
        coords = grid.coordinates()
        for i in range(self.n):
            for j in range(i, self.n):
                v = self.evaluate_entry(i, j, coords)
                ents[..., i, j] = v
                if i != j:
                    ents[..., j, i] = np.conj(v)
        return HermitianFormField(grid, ents, validate=False)

    def scaled_fluctuation(self, factor):
        polys = {k: p.scaled(factor) for k, p in self.polys.items()}
        return AnalyticHermitian(self.n, self.base, polys)


def random_hermitian_field(grid, seed, base_matrix=None, amplitude=0.1,
                           max_mode=2, num_modes=4):
    """Seeded Hermitian perturbation of a constant matrix.

    Diagonal fluctuations are real TrigFields; each off-diagonal entry is
    an independent complex TrigField mirrored by conjugation.  The whole
    fluctuation is rescaled so its largest sampled entry is ``amplitude``.
    Returns (AnalyticHermitian, HermitianFormField).
    """
    n = grid.n
    if base_matrix is None:
        base_matrix = np.eye(n)
    rng = np.random.default_rng(seed)
    polys = {}
    for i in range(n):
        sub = int(rng.integers(0, 2 ** 31))
        polys[(i, i)] = random_real_trig(n, sub, max_mode, num_modes)
    for i in range(n):
        for j in range(i + 1, n):
            re = random_real_trig(n, int(rng.integers(0, 2 ** 31)),
                                  max_mode, num_modes)
            im = random_real_trig(n, int(rng.integers(0, 2 ** 31)),
                                  max_mode, num_modes)
            polys[(i, j)] = TrigField(np.vstack([re.modes, im.modes]),
                                      np.concatenate([re.coeffs, 1j * im.coeffs]))
    probe = AnalyticHermitian(n, np.zeros((n, n)), polys).sample(grid)
    scale = amplitude / probe.sup_norm()
    analytic = AnalyticHermitian(n, base_matrix, polys).scaled_fluctuation(scale)
    ents = base_matrix + probe.entries * scale
    return analytic, HermitianFormField(grid, ents, validate=False)


def random_potential_form(grid, seed, base_matrix=None, amplitude=0.1,
                          max_mode=2, num_modes=6):
    """Constant matrix plus i d dbar of a seeded real potential.

    The potential is rescaled so the largest complex Hessian entry on the
    grid is ``amplitude``.  Returns (TrigField potential, HermitianFormField).
    """
    n = grid.n
    if base_matrix is None:
        base_matrix = np.eye(n)
    poly = random_real_trig(n, seed, max_mode, num_modes)
    hess = _i_ddbar_raw(poly.sample(grid).real_values(), grid)
    scale = amplitude / np.abs(hess).max()
    poly = poly.scaled(scale)
    ents = np.asarray(base_matrix, dtype=np.complex128) + hess * scale
    return poly, HermitianFormField(grid, ents, validate=False)
