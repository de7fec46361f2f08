"""Periodic truncation of R^n with spectral calculus and weighted quadrature.

All fields live on a uniform grid over the cube [-L, L]^n with N samples
per axis.  Sample points sit at x_i = -L + i*h (h = 2L/N), i.e. at the
midpoints of a shifted cell partition, so a plain sum times h^n realizes
the midpoint rule and the cube center 0 is a sample point.  The frequency
set per axis is {2*pi*k/(2L) : k = -N/2, ..., N/2 - 1}.
"""

from __future__ import annotations

import struct

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "SpectralField",
    "to_spectral",
    "from_spectral",
    "gradient",
    "divergence",
    "laplacian",
    "integrate",
    "inner",
    "l2_norm",
    "save_field",
    "load_field",
]


class Grid:
    """Uniform periodic grid on [-L, L]^n.

    Parameters
    ----------
    n : spatial dimension, >= 3 (compute path exercised at n = 3)
    N : even number of samples per axis, >= 8
    L : half-extent of the cube, > 0
    """

    def __init__(self, n: int = 3, N: int = 64, L: float = 16.0):
        n, N, L = int(n), int(N), float(L)
        if n < 3:
            raise ValueError(f"dimension n must be >= 3, got {n}")
        if N < 8 or N % 2 != 0:
            raise ValueError(f"N must be even and >= 8, got {N}")
        if not L > 0:
            raise ValueError(f"L must be positive, got {L}")
        self.n = n
        self.N = N
        self.L = L
        self.h = 2.0 * L / N
        self.cell_volume = self.h**n
        self.axis = -L + self.h * np.arange(N)
        self._coords = None
        self._k = None
        self._k_sq = None
        self._r_sq = None

    @property
    def shape(self):
        return (self.N,) * self.n

    def coords(self):
        """Meshgrid coordinate arrays, one per axis (ij indexing)."""
        if self._coords is None:
            self._coords = np.meshgrid(*([self.axis] * self.n), indexing="ij")
        return self._coords

    def wavenumbers(self):
        """Meshgrid wavenumber arrays in FFT (wrapped) order."""
        if self._k is None:
            k1 = 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.h)
            self._k = np.meshgrid(*([k1] * self.n), indexing="ij")
        return self._k

    def wavenumber_sq(self):
        """|xi|^2 on the wavenumber grid."""
        if self._k_sq is None:
            self._k_sq = sum(ki**2 for ki in self.wavenumbers())
        return self._k_sq

    def radius_sq(self):
        """|x|^2 measured from the cube center."""
        if self._r_sq is None:
            self._r_sq = sum(xi**2 for xi in self.coords())
        return self._r_sq

    def bracket(self, s: float):
        """Japanese bracket weight <x>^s = (1 + |x|^2)^(s/2)."""
        if s == 0.0:
            return np.ones(self.shape)
        return (1.0 + self.radius_sq()) ** (0.5 * s)

    def min_wavenumber_sq(self) -> float:
        """Smallest nonzero |xi|^2 on the grid, (pi/L)^2."""
        return (np.pi / self.L) ** 2

    def compatible(self, other: "Grid") -> bool:
        return (self.n, self.N) == (other.n, other.N) and self.L == other.L

    def __repr__(self):
        return f"Grid(n={self.n}, N={self.N}, L={self.L})"


class Field:
    """Scalar or vector samples on a grid, components-first layout.

    data has shape grid.shape for a scalar field and (grid.n,) + grid.shape
    for a vector field.  Samples must be finite.
    """

    def __init__(self, grid: Grid, data):
        data = np.asarray(data, dtype=float)
        if data.shape == grid.shape:
            components = 1
        elif data.shape == (grid.n,) + grid.shape:
            components = grid.n
        else:
            raise ValueError(
                f"data shape {data.shape} does not match grid {grid.shape} "
                f"as scalar or {grid.n}-vector"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("field samples must be finite")
        self.grid = grid
        self.data = data
        self.components = components

    @property
    def is_vector(self) -> bool:
        return self.components > 1

    def magnitude(self):
        """Pointwise Euclidean magnitude (|f| for scalars)."""
        if self.is_vector:
            return np.sqrt(np.sum(self.data**2, axis=0))
        return np.abs(self.data)

    def copy(self) -> "Field":
        return Field(self.grid, self.data.copy())

    def __add__(self, other):
        return Field(self.grid, self.data + other.data)

    def __sub__(self, other):
        return Field(self.grid, self.data - other.data)

    def __mul__(self, scalar):
        return Field(self.grid, self.data * float(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        kind = "vector" if self.is_vector else "scalar"
        return f"Field({kind}, {self.grid!r})"


class SpectralField:
    """Fourier coefficients of a Field, same layout, wrapped frequency order."""

    def __init__(self, grid: Grid, coeffs):
        self.grid = grid
        self.coeffs = np.asarray(coeffs, dtype=complex)

    def l2_norm(self) -> float:
        """Spectral L^2 norm; equals the physical norm by Parseval."""
        g = self.grid
        scale = g.cell_volume / g.N**g.n
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2) * scale))


def _fft_axes(grid: Grid, data):
    return tuple(range(data.ndim - grid.n, data.ndim))


def to_spectral(f: Field) -> SpectralField:
    """Forward FFT of a field (per component)."""
    return SpectralField(f.grid, np.fft.fftn(f.data, axes=_fft_axes(f.grid, f.data)))


def from_spectral(F: SpectralField) -> Field:
    """Inverse FFT back to physical samples (real part)."""
    data = np.fft.ifftn(F.coeffs, axes=_fft_axes(F.grid, F.coeffs)).real
    return Field(F.grid, data)


def gradient(f: Field) -> Field:
    """Spectral gradient of a scalar field, multiplier i*xi."""
    if f.is_vector:
        raise ValueError("gradient expects a scalar field")
    g = f.grid
    fh = np.fft.fftn(f.data)
    out = np.empty((g.n,) + g.shape)
    for j, kj in enumerate(g.wavenumbers()):
        out[j] = np.fft.ifftn(1j * kj * fh).real
    return Field(g, out)


def divergence(v: Field) -> Field:
    """Spectral divergence of a vector field."""
    if not v.is_vector:
        raise ValueError("divergence expects a vector field")
    g = v.grid
    acc = np.zeros(g.shape, dtype=complex)
    for j, kj in enumerate(g.wavenumbers()):
        acc += 1j * kj * np.fft.fftn(v.data[j])
    return Field(g, np.fft.ifftn(acc).real)


def laplacian(f: Field) -> Field:
    """Spectral Laplacian, multiplier -|xi|^2 (per component)."""
    g = f.grid
    axes = _fft_axes(g, f.data)
    fh = np.fft.fftn(f.data, axes=axes)
    return Field(g, np.fft.ifftn(-g.wavenumber_sq() * fh, axes=axes).real)


def integrate(f: Field, q: float, weight=None) -> float:
    """Weighted Lebesgue norm (sum |f|^q w^q h^n)^(1/q).

    weight is None (w = 1), a number s (w = <x>^s), or any object with a
    sample(grid) method returning pointwise weight values.
    """
    q = float(q)
    if q <= 1.0:
        raise ValueError(f"Lebesgue index q must exceed 1, got {q}")
    mag = f.magnitude()
    if weight is None:
        wq = 1.0
    elif np.isscalar(weight):
        wq = f.grid.bracket(float(weight) * q)
    else:
        wq = weight.sample(f.grid) ** q
    total = np.sum(mag**q * wq) * f.grid.cell_volume
    return float(total ** (1.0 / q))


def inner(f: Field, g: Field) -> float:
    """L^2 inner product on the grid."""
    return float(np.sum(f.data * g.data) * f.grid.cell_volume)


def l2_norm(f: Field) -> float:
    return float(np.sqrt(np.sum(f.data**2) * f.grid.cell_volume))


# Flat binary field format: little-endian header (n, N int64, L float64,
# components int64) followed by row-major float64 samples.
_HEADER = struct.Struct("<qqdq")


def save_field(f: Field, path) -> None:
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(g.n, g.N, g.L, f.components))
        fh.write(np.ascontiguousarray(f.data, dtype="<f8").tobytes())


def load_field(path) -> Field:
    with open(path, "rb") as fh:
        n, N, L, components = _HEADER.unpack(fh.read(_HEADER.size))
        grid = Grid(n=n, N=N, L=L)
        count = components * N**n
        data = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
    shape = grid.shape if components == 1 else (components,) + grid.shape
    return Field(grid, data.reshape(shape).copy())
