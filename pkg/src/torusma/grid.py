"""Sampling grids and spectral complex calculus on flat complex tori.

The ambient space is C^n / (Z^n + i Z^n) with n in {1, 2}, carrying real
coordinates (x^1, y^1, ..., x^n, y^n), each periodic with period 1, and
holomorphic coordinates z^j = x^j + i y^j.  Fields are sampled on the
uniform tensor grid with N points per real axis, stored as arrays of shape
(N,)*2n in row-major axis order (x^1, y^1, x^2, y^2).

All derivatives are pseudo-spectral: FFT, multiplication by the exact
symbol of the derivative on trigonometric polynomials, inverse FFT.  In
Wirtinger form the symbols on the Fourier mode exp(2*pi*i*(k.x + l.y)) are

    d/dz^j      -> pi * (i k_j + l_j)
    d/dzbar^j   -> pi * (i k_j - l_j)

The unpaired Nyquist mode N/2 carries no usable sign information for odd
derivatives, so its wavenumber is zeroed; this keeps derivatives of real
fields real to machine precision.  The grid mean is subtracted before every
forward transform, which is an identity on derivatives but stops a large
constant offset from polluting the small Fourier coefficients.
"""

from __future__ import annotations

import json
from dataclasses import InitVar, dataclass, field

import numpy as np
from scipy import fft as _fft

from .errors import GridMismatchError, HermitianError, RealnessError

# Relative tolerance below which a field counts as certifiably real.
REALNESS_TOL = 1e-10
# Relative tolerance on conjugate-transpose symmetry of matrix fields.
HERMITIAN_TOL = 1e-12

_MAGIC = b"TORUSMA-FIELD-V1\n"


@dataclass(frozen=True)
class Grid:
    """Uniform periodic sample grid on the torus C^n / (Z^n + i Z^n).

    Parameters
    ----------
    n : int
        Complex dimension, 1 or 2.
    N : int
        Samples per real axis.  Must be even and within [8, 256] so the
        Nyquist convention and the closed-form eigenvalue helpers apply.
    """

    n: int
    N: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"complex dimension must be 1 or 2, got {self.n}")
        if self.N % 2 != 0 or not 8 <= self.N <= 256:
            raise ValueError(
                f"grid size must be even and in [8, 256], got {self.N}")

    @property
    def shape(self):
        return (self.N,) * (2 * self.n)

    @property
    def num_points(self):
        return self.N ** (2 * self.n)

    @property
    def spacing(self):
        return 1.0 / self.N

    def axes(self):
        """Sample positions along one axis: j/N for j = 0 .. N-1."""
        return np.arange(self.N) / self.N

    def coordinates(self):
        """Broadcastable coordinate arrays, one per real axis.

        The a-th entry has shape (1, ..., N, ..., 1) with N along axis a,
        so ``f(*grid.coordinates())`` evaluates a vectorized function of
        (x1, y1, x2, y2) on the whole grid.
        """
        out = []
        for a in range(2 * self.n):
            shape = [1] * (2 * self.n)
            shape[a] = self.N
            out.append(self.axes().reshape(shape))
        return out


def make_grid(n, N):
    """Construct a :class:`Grid`, validating dimension and size."""
    return Grid(int(n), int(N))


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(
            f"fields live on different grids: {a.grid} vs {b.grid}")


# ---------------------------------------------------------------------------
# Wavenumbers and derivative symbols, cached per grid size.

_wavenumber_cache = {}
_symbol_cache = {}


def _wavenumbers(N):
    """Integer wavenumbers in FFT order with the Nyquist entry zeroed."""
    try:
        return _wavenumber_cache[N]
    except KeyError:
        k = np.fft.fftfreq(N, d=1.0 / N)
        k[N // 2] = 0.0
        k.flags.writeable = False
        _wavenumber_cache[N] = k
        return k


def _axis_wavenumbers(grid, axis):
    """Wavenumbers reshaped to broadcast along one grid axis."""
    shape = [1] * (2 * grid.n)
    shape[axis] = grid.N
    return _wavenumbers(grid.N).reshape(shape)


def wirtinger_symbols(grid):
    """Fourier symbols (mu, nu) of d/dz^j and d/dzbar^j per complex axis.

    Returns two lists of length n of broadcast-ready arrays, so that
    multiplying the full 2n-dimensional FFT of a field by mu[j] (resp.
    nu[j]) and inverting gives the holomorphic (antiholomorphic)
    derivative along z^j.
    """
    key = (grid.n, grid.N)
    try:
        return _symbol_cache[key]
    except KeyError:
        mu, nu = [], []
        for j in range(grid.n):
            kx = _axis_wavenumbers(grid, 2 * j)
            ky = _axis_wavenumbers(grid, 2 * j + 1)
            m = np.pi * (1j * kx + ky)
            v = np.pi * (1j * kx - ky)
            m.flags.writeable = False
            v.flags.writeable = False
            mu.append(m)
            nu.append(v)
        _symbol_cache[key] = (mu, nu)
        return mu, nu


def _grid_axes(grid):
    return tuple(range(2 * grid.n))


def _centered(vals, grid):
    """Subtract the grid mean (an identity for derivatives, but it keeps a
    large constant offset out of the small Fourier coefficients)."""
    return vals - vals.mean(axis=_grid_axes(grid), keepdims=True)


def _axis_derivative_raw(vals, grid, axis):
    """d/dx_axis of an array whose leading axes are the grid axes."""
    fh = _fft.fft(_centered(vals, grid), axis=axis)
    shape = [1] * vals.ndim
    shape[axis] = grid.N
    fh *= (2j * np.pi * _wavenumbers(grid.N)).reshape(shape)
    return _fft.ifft(fh, axis=axis)


def _d_holo_raw(vals, grid, j):
    """d/dz^j of an array with leading grid axes (trailing axes pass through)."""
    dx = _axis_derivative_raw(vals, grid, 2 * j)
    dy = _axis_derivative_raw(vals, grid, 2 * j + 1)
    return 0.5 * (dx - 1j * dy)


def _d_antiholo_raw(vals, grid, j):
    """d/dzbar^j of an array with leading grid axes."""
    dx = _axis_derivative_raw(vals, grid, 2 * j)
    dy = _axis_derivative_raw(vals, grid, 2 * j + 1)
    return 0.5 * (dx + 1j * dy)


def _mixed_second_raw(vals, grid, i, j):
    """Single mixed derivative d/dz^i d/dzbar^j of a (possibly complex) array."""
    gax = _grid_axes(grid)
    fh = _fft.fftn(_centered(vals, grid), axes=gax)
    mu, nu = wirtinger_symbols(grid)
    ext = (...,) + (np.newaxis,) * (vals.ndim - len(gax))
    fh *= (mu[i] * nu[j])[ext]
    return _fft.ifftn(fh, axes=gax)


def _mixed_hessian_raw(vals, grid):
    """All n^2 mixed derivatives d_i d_jbar of a complex scalar array.

    Unlike :func:`_i_ddbar_raw` this makes no Hermitian-symmetry use of a
    realness assumption; it is the linearization path for complex Krylov
    iterates.
    """
    n = grid.n
    gax = _grid_axes(grid)
    fh = _fft.fftn(_centered(vals, grid), axes=gax)
    mu, nu = wirtinger_symbols(grid)
    out = np.empty(grid.shape + (n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            out[..., i, j] = _fft.ifftn(fh * (mu[i] * nu[j]), axes=gax)
    return out


def _i_ddbar_raw(real_vals, grid):
    """Complex Hessian matrix d_i d_jbar f of a real scalar array.

    Returns an array of shape grid.shape + (n, n), Hermitian at every
    point by construction, with exactly real diagonal entries.
    """
    n = grid.n
    gax = _grid_axes(grid)
    fh = _fft.fftn(real_vals - real_vals.mean(), axes=gax)
    mu, nu = wirtinger_symbols(grid)
    out = np.empty(grid.shape + (n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(i, n):
            ent = _fft.ifftn(fh * (mu[i] * nu[j]), axes=gax)
            if i == j:
                out[..., i, i] = ent.real
            else:
                out[..., i, j] = ent
                out[..., j, i] = np.conj(ent)
    return out


# ---------------------------------------------------------------------------
# Field containers.


@dataclass
class ScalarField:
    """A complex-valued sample field on a grid.

    Values are stored as complex128 regardless of input dtype.  Realness
    is a certificate, not a storage property: ``real_values`` hands out
    the real part only when the imaginary residue is below REALNESS_TOL
    relative to the field's own scale, and raises otherwise.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != self.grid.shape:
            raise ValueError(
                f"values shape {vals.shape} does not match grid shape "
                f"{self.grid.shape}")
        if vals.dtype != np.complex128:
            vals = vals.astype(np.complex128)
        self.values = vals

    def imag_defect(self):
        """Largest imaginary part relative to the field scale."""
        scale = np.abs(self.values).max()
        if scale == 0.0:
            return 0.0
        return float(np.abs(self.values.imag).max() / scale)

    @property
    def certified_real(self):
        return self.imag_defect() <= REALNESS_TOL

    def real_values(self):
        """Real part, available only under the realness certificate."""
        defect = self.imag_defect()
        if defect > REALNESS_TOL:
            raise RealnessError(
                f"relative imaginary residue {defect:.3e} exceeds "
                f"{REALNESS_TOL:.0e}")
        return np.ascontiguousarray(self.values.real)

    def sup_norm(self):
        return float(np.abs(self.values).max())

    def conj(self):
        return ScalarField(self.grid, np.conj(self.values))

    def __add__(self, other):
        if isinstance(other, ScalarField):
            _check_same_grid(self, other)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            _check_same_grid(self, other)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - other)

    def __rsub__(self, other):
        return ScalarField(self.grid, other - self.values)

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            _check_same_grid(self, other)
            return ScalarField(self.grid, self.values * other.values)
        return ScalarField(self.grid, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)


@dataclass
class HermitianFormField:
    """Pointwise Hermitian n x n matrix field, entries indexed (i, jbar).

    Shape is grid.shape + (n, n).  On construction the conjugate-transpose
    defect is checked against HERMITIAN_TOL relative to the largest entry;
    pass ``validate=False`` only for fields Hermitian by construction.
    """

    grid: Grid
    entries: np.ndarray
    validate: InitVar[bool] = True

    def __post_init__(self, validate):
        n = self.grid.n
        ents = np.asarray(self.entries)
        want = self.grid.shape + (n, n)
        if ents.shape != want:
            raise ValueError(
                f"entries shape {ents.shape} does not match {want}")
        if ents.dtype != np.complex128:
            ents = ents.astype(np.complex128)
        self.entries = ents
        if validate:
            self.check_hermitian()

    def hermitian_defect(self):
        """Largest |A - A^H| entry relative to the largest |A| entry."""
        sw = np.conj(np.swapaxes(self.entries, -1, -2))
        scale = np.abs(self.entries).max()
        if scale == 0.0:
            return 0.0
        return float(np.abs(self.entries - sw).max() / scale)

    def check_hermitian(self):
        defect = self.hermitian_defect()
        if defect > HERMITIAN_TOL:
            raise HermitianError(
                f"relative conjugate-symmetry defect {defect:.3e} exceeds "
                f"{HERMITIAN_TOL:.0e}")

    def symmetrized(self):
        """Exactly Hermitian average (A + A^H) / 2."""
        sw = np.conj(np.swapaxes(self.entries, -1, -2))
        return HermitianFormField(self.grid, 0.5 * (self.entries + sw),
                                  validate=False)

    def sup_norm(self):
        """Largest entry magnitude over all points and components."""
        return float(np.abs(self.entries).max())

    def entry(self, i, j):
        """Scalar field of the (i, jbar) component."""
        return ScalarField(self.grid, self.entries[..., i, j].copy())

    def __add__(self, other):
        _check_same_grid(self, other)
        return HermitianFormField(self.grid, self.entries + other.entries,
                                  validate=False)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return HermitianFormField(self.grid, self.entries - other.entries,
                                  validate=False)

    def __mul__(self, scalar):
        c = complex(scalar)
        if c.imag != 0.0:
            raise ValueError("scaling a Hermitian form needs a real factor")
        return HermitianFormField(self.grid, self.entries * c.real,
                                  validate=False)

    __rmul__ = __mul__

    def __neg__(self):
        return HermitianFormField(self.grid, -self.entries, validate=False)


def constant_scalar(grid, value):
    """Scalar field holding one constant value."""
    vals = np.full(grid.shape, complex(value), dtype=np.complex128)
    return ScalarField(grid, vals)


def constant_form(grid, matrix):
    """Hermitian form field holding one constant matrix."""
    m = np.asarray(matrix, dtype=np.complex128)
    if m.shape != (grid.n, grid.n):
        raise ValueError(f"matrix shape {m.shape}, expected {(grid.n, grid.n)}")
    ents = np.broadcast_to(m, grid.shape + m.shape).copy()
    return HermitianFormField(grid, ents)


def from_function(grid, fn):
    """Sample a vectorized function of the real coordinates into a field."""
    return ScalarField(grid, np.asarray(fn(*grid.coordinates()))
                       + np.zeros(grid.shape))


# ---------------------------------------------------------------------------
# Public calculus operations.


def mean(f):
    """Grid average of a scalar field (the discrete integral, since cell
    volume times point count is 1)."""
    return complex(f.values.mean())


def d_holo(f, j):
    """Holomorphic Wirtinger derivative d f / d z^j."""
    if not 0 <= j < f.grid.n:
        raise ValueError(f"axis {j} out of range for n={f.grid.n}")
    return ScalarField(f.grid, _d_holo_raw(f.values, f.grid, j))


def d_antiholo(f, j):
    """Antiholomorphic Wirtinger derivative d f / d zbar^j."""
    if not 0 <= j < f.grid.n:
        raise ValueError(f"axis {j} out of range for n={f.grid.n}")
    return ScalarField(f.grid, _d_antiholo_raw(f.values, f.grid, j))


def i_ddbar(f):
    """Coefficient matrix of i * d dbar f for a certified-real scalar field.

    Entry (i, j) holds d_i d_jbar f, so the associated (1,1)-form is
    i * H_ij dz^i wedge dzbar^j.  Every entry has zero grid mean and the
    result is Hermitian by construction.
    """
    return HermitianFormField(f.grid, _i_ddbar_raw(f.real_values(), f.grid),
                              validate=False)


# ---------------------------------------------------------------------------
# Snapshot serialization: a one-line JSON header plus raw little-endian
# complex128 bytes.  Deliberately not a zip container, so identical fields
# produce byte-identical files.


def save_field(path, f):
    """Write a ScalarField or HermitianFormField snapshot to ``path``."""
    if isinstance(f, ScalarField):
        kind, arr = "scalar", f.values
    elif isinstance(f, HermitianFormField):
        kind, arr = "hermitian", f.entries
    else:
        raise TypeError(f"cannot snapshot object of type {type(f).__name__}")
    header = {
        "format": "torusma-field",
        "version": 1,
        "kind": kind,
        "n": f.grid.n,
        "N": f.grid.N,
        "axis_order": "x1 y1 x2 y2 row-major",
        "dtype": "complex128-le",
    }
    payload = np.ascontiguousarray(arr, dtype=np.complex128).astype("<c16")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
        fh.write(payload.tobytes(order="C"))


def load_field(path):
    """Read a snapshot written by :func:`save_field`."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a field snapshot")
        header = json.loads(fh.readline().decode("ascii"))
        raw = fh.read()
    grid = make_grid(header["n"], header["N"])
    if header["kind"] == "scalar":
        shape = grid.shape
    elif header["kind"] == "hermitian":
        shape = grid.shape + (grid.n, grid.n)
    else:
        raise ValueError(f"{path}: unknown field kind {header['kind']!r}")
    arr = np.frombuffer(raw, dtype="<c16").astype(np.complex128)
    if arr.size != int(np.prod(shape)):
        raise ValueError(f"{path}: payload size {arr.size} does not match "
                         f"header shape {shape}")
    arr = arr.reshape(shape)
    if header["kind"] == "scalar":
        return ScalarField(grid, arr.copy())
    return HermitianFormField(grid, arr.copy(), validate=False)
