"""Periodic 2D grids and complex envelope fields.

The field array is indexed ``data[ix, iy]`` (row-major), x varying along
axis 0. Wavenumbers follow the standard FFT ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GridMismatchError, NumericalBlowupError


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid: nx*ny points covering [0, lx) x [0, ly)."""

    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if not isinstance(n, (int, np.integer)) or n < 16:
                raise ConfigError(f"{name} must be an integer >= 16, got {n!r}")
            if not _is_power_of_two(int(n)):
                raise ConfigError(f"{name} must be a power of two, got {n}")
        if not (self.lx > 0 and self.ly > 0):
            raise ConfigError(f"domain extents must be positive, got lx={self.lx}, ly={self.ly}")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx

    def y(self) -> np.ndarray:
        return np.arange(self.ny) * self.dy

    def meshgrid(self):
        return np.meshgrid(self.x(), self.y(), indexing="ij")

    def kx(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)

    def ky(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.dy)

    def k_squared(self) -> np.ndarray:
        kx, ky = np.meshgrid(self.kx(), self.ky(), indexing="ij")
        return kx**2 + ky**2

    @property
    def k_max(self) -> float:
        return np.pi / max(self.dx, self.dy)

    def mode_wavenumbers(self):
        """Sorted unique |K| values representable on the grid (one per (jx, jy))."""
        return np.unique(np.sqrt(self.k_squared()))


@dataclass
class ComplexField:
    """Complex order-parameter samples on a GridSpec."""

    grid: GridSpec
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.complex128)
        if self.data.shape != (self.grid.nx, self.grid.ny):
            raise GridMismatchError(
                f"field shape {self.data.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.ny})"
            )
        if not np.all(np.isfinite(self.data.view(np.float64))):
            raise NumericalBlowupError("field contains NaN/Inf values")

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.data.copy())

    def norm(self) -> float:
        """Integral of |psi|^2 over the domain."""
        d = self.data
        return float(np.sum(d.real**2 + d.imag**2)) * self.grid.cell_area

    def same_grid(self, other: "ComplexField") -> bool:
        return self.grid == other.grid


def require_same_grid(*fields):
    first = fields[0].grid
    for f in fields[1:]:
        if f.grid != first:
            raise GridMismatchError(
                f"fields live on different grids: {first} vs {f.grid}"
            )


def uniform_field(grid: GridSpec, value: complex) -> ComplexField:
    return ComplexField(grid, np.full((grid.nx, grid.ny), value, dtype=np.complex128))
