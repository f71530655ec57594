"""Periodic uniform grids, real scalar fields, and their spectral duals.

The forward transform is normalized so that the zero mode carries the
spatial mean (coefficients = FFT / m^dims).  Under this convention
Parseval reads  sum(v**2) / m**dims == sum(|c|**2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as _fft


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, L]^dims with m nodes per axis.

    Node i maps to coordinate i * dx with dx = L / m; node m aliases
    node 0 by periodicity.  m must be even and at least 8 so that the
    2/3 dealiasing mask and the Nyquist conventions are well defined.
    """

    dims: int
    L: float
    m: int

    def __post_init__(self) -> None:
        if self.dims not in (1, 2):
            raise ValueError(f"dims must be 1 or 2, got {self.dims}")
        if self.L <= 0:
            raise ValueError(f"domain length must be positive, got {self.L}")
        if self.m < 8 or self.m % 2 != 0:
            raise ValueError(f"m must be an even integer >= 8, got {self.m}")

    @property
    def dx(self) -> float:
        return self.L / self.m

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m,) * self.dims

    @property
    def n_nodes(self) -> int:
        return self.m**self.dims

    def axis_coordinates(self) -> np.ndarray:
        """Coordinates i * dx along one axis (all axes are identical)."""
        return np.arange(self.m) * self.dx


def make_grid(L: float, m: int, dims: int = 1) -> Grid:
    """Build a periodic grid, rejecting odd m, m < 8, or L <= 0."""
    return Grid(dims=dims, L=float(L), m=int(m))


@dataclass(frozen=True, eq=False)
class Field:
    """Real scalar state sampled on a grid, row-major, index i <-> i*dx."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(
                f"values shape {vals.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.isfinite(vals).all():
            raise ValueError("field values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def mean(self) -> float:
        return float(self.values.mean())


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real field, full complex layout.

    The layout follows the standard DFT ordering per axis; conjugate
    symmetry coeff(k) == conj(coeff(-k)) is an invariant of fields
    produced by to_spectral, not a storage guarantee.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coeffs shape {coeffs.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.isfinite(coeffs).all():
            raise ValueError("spectral coefficients must be finite")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)


def wavenumbers(grid: Grid) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Angular wavenumbers 2*pi*f/L per axis in DFT frequency order.

    Returns a single array for 1D grids and a per-axis pair for 2D
    grids (both axes are identical for square domains).
    """
    k = 2.0 * np.pi * _fft.fftfreq(grid.m, d=grid.L / grid.m)
    if grid.dims == 1:
        return k
    return k, k


@lru_cache(maxsize=None)
def _integer_freqs(m: int) -> np.ndarray:
    # exact integer DFT frequencies 0, 1, ..., m/2-1, -m/2, ..., -1
    f = _fft.fftfreq(m, d=1.0 / m)
    f.flags.writeable = False
    return f


@lru_cache(maxsize=None)
def _dealias_mask(m: int, dims: int) -> np.ndarray:
    keep = np.abs(_integer_freqs(m)) <= m / 3.0
    if dims == 2:
        keep = keep[:, None] & keep[None, :]
    keep.flags.writeable = False
    return keep


def to_spectral(f: Field) -> SpectralField:
    """Forward transform with coeff(0) = spatial mean."""
    return SpectralField(f.grid, _fft.fftn(f.values, norm="forward"))


def to_physical(s: SpectralField) -> Field:
    """Inverse transform; the imaginary residue of real inputs is discarded."""
    return Field(s.grid, _fft.ifftn(s.coeffs, norm="forward").real)


def dealias(s: SpectralField) -> SpectralField:
    """Zero every mode with |integer frequency| > m/3 on any axis (2/3 rule)."""
    return SpectralField(s.grid, s.coeffs * _dealias_mask(s.grid.m, s.grid.dims))
