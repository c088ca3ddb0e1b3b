"""Independent oracles used by the test suite.

The finite-difference oracles evaluate analytic inputs at shifted off-grid
points with a step much finer than the grid spacing (the inputs are exact
trigonometric polynomials, so off-grid evaluation is exact).  A 4th-order
central stencil at step h = 1/(8N) keeps the truncation error around
h^4 * |f^(5)| / 30, well below 1e-6 for the band-limited data used in the
tests, while sharing no code with the FFT differentiation under test.

The index-sum oracles re-derive contractions with explicit Python loops
over components, on a small random subset of grid points, as a guard
against einsum index mistakes.
"""

import numpy as np

DEFAULT_REFINE = 8


def fd4(evaluate, coords, axis, h):
    """4th-order central difference d/dx_axis at the given coordinates.

    ``evaluate`` maps a list of broadcastable coordinate arrays to values.
    """

    def at(shift):
        c = list(coords)
        c[axis] = c[axis] + shift
        return evaluate(c)

    return (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h)


def fd4_wirtinger(evaluate, coords, j, anti, h):
    """Holomorphic (anti=False) or antiholomorphic Wirtinger derivative
    along complex axis j, by the 4th-order stencil on both real axes."""
    dx = fd4(evaluate, coords, 2 * j, h)
    dy = fd4(evaluate, coords, 2 * j + 1, h)
    return 0.5 * (dx + 1j * dy) if anti else 0.5 * (dx - 1j * dy)


def fd4_d_holo(evaluate, grid, j, refine=DEFAULT_REFINE):
    """d/dz^j on the grid points, finite differences only."""
    h = 1.0 / (refine * grid.N)
    return fd4_wirtinger(evaluate, grid.coordinates(), j, False, h)


def fd4_d_antiholo(evaluate, grid, j, refine=DEFAULT_REFINE):
    h = 1.0 / (refine * grid.N)
    return fd4_wirtinger(evaluate, grid.coordinates(), j, True, h)


def fd4_mixed_second_at(evaluate, coords, i, j, h):
    """d_i d_jbar at arbitrary coordinates by nesting two stencils."""

    def inner(c):
        return fd4_wirtinger(evaluate, c, j, True, h)

    return fd4_wirtinger(inner, coords, i, False, h)


def fd4_mixed_second(evaluate, grid, i, j, refine=DEFAULT_REFINE):
    """d_i d_jbar on the grid points by nesting two 4th-order stencils."""
    h = 1.0 / (refine * grid.N)
    return fd4_mixed_second_at(evaluate, grid.coordinates(), i, j, h)


def subsample_coords(grid, count, seed):
    """Random grid points as (flat indices, coordinate arrays)."""
    idx = subsample_indices(grid, count, seed)
    unraveled = np.unravel_index(idx, grid.shape)
    coords = [u / grid.N for u in unraveled]
    return idx, coords


def trig_evaluator(poly):
    """Adapt a TrigField to the list-of-coordinates calling convention."""
    return lambda coords: poly.evaluate(coords)


def analytic_entry_evaluator(analytic, i, j):
    """Evaluator for one entry of an AnalyticHermitian (constant + trig)."""
    base = analytic.base[i, j]
    poly = analytic.entry_field(i, j)
    return lambda coords: base + poly.evaluate(coords)


def fd4_christoffel(analytic, grid, refine=DEFAULT_REFINE):
    """Gamma^k_{ij} = g^{qbar k} d_i g_{j qbar} with finite-difference
    derivatives of the analytic metric entries and an explicit inverse of
    the sampled matrix."""
    n = analytic.n
    sampled = analytic.sample(grid).entries
    inv = np.linalg.inv(sampled)
    dg = np.empty(grid.shape + (n, n, n), dtype=np.complex128)
    for i in range(n):
        for a in range(n):
            for b in range(n):
                ev = analytic_entry_evaluator(analytic, a, b)
                dg[..., i, a, b] = fd4_d_holo(ev, grid, i, refine)
    gamma = np.zeros(grid.shape + (n, n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for q in range(n):
                    gamma[..., i, j, k] += inv[..., q, k] * dg[..., i, j, q]
    return gamma


def loop_trace_pair(inv_entries, a_entries):
    """tr_g a = g^{jbar i} a_{i jbar} with explicit component loops."""
    n = inv_entries.shape[-1]
    out = np.zeros(inv_entries.shape[:-2], dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            out += inv_entries[..., j, i] * a_entries[..., i, j]
    return out


def subsample_indices(grid, count, seed):
    """Deterministic random selection of flat grid indices."""
    rng = np.random.default_rng(seed)
    total = grid.num_points
    return rng.choice(total, size=min(count, total), replace=False)
