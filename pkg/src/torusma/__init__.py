"""Numerical laboratory for the Hermitian continuity equation on flat
complex tori, driven by a scalar complex Monge-Ampere solver.

Subpackage map:

- ``grid``: sample grids, scalar and Hermitian matrix fields, spectral
  Wirtinger calculus, field snapshots.
- ``geometry``: Chern connection, torsion, curvature, Ricci form, traces,
  Gauduchon defect.
- ``cherrier``: the second-order trace identity used as a cross-check on
  every solved metric.
- ``ma``: damped Newton solver for the scalar Monge-Ampere equation with
  homotopy continuation.
- ``continuity``: reduction of the continuity equation of Hermitian
  metrics to the scalar equation, parameter sweeps, maximal existence
  time estimation, and the normalized collapsing family.
- ``diagnostics``: residual meters, decay-rate fits, and the bound suite
  aggregated over a sweep.
- ``randomfields``: seeded band-limited random data with exact
  trigonometric evaluators.
- ``config`` / ``runner`` / ``cli``: TOML experiment configs, artifact
  writing, and the command-line entry point.
"""

__version__ = "0.1.0"

from .grid import (Grid, HermitianFormField, ScalarField, constant_form,
                   constant_scalar, d_antiholo, d_holo, from_function,
                   i_ddbar, load_field, make_grid, mean, save_field)
from .geometry import (MetricField, chern_curvature, chern_ricci,
                       chern_scalar, christoffel, complex_laplacian,
                       gauduchon_defect, lower_curvature, min_eigenvalue,
                       torsion, trace_pair)

__all__ = [
    "Grid", "ScalarField", "HermitianFormField", "make_grid",
    "constant_scalar", "constant_form", "from_function", "mean",
    "d_holo", "d_antiholo", "i_ddbar", "save_field", "load_field",
    "MetricField", "christoffel", "torsion", "chern_curvature",
    "lower_curvature", "chern_ricci", "chern_scalar", "trace_pair",
    "complex_laplacian", "gauduchon_defect", "min_eigenvalue",
    "__version__",
]
