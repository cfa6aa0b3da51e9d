"""Flat periodic model manifolds and spectral calculus.

Fields are numpy arrays whose trailing ``m`` axes are the grid axes; any
leading axes (tensor components, batches) are carried along untouched.
The Laplacian convention is the analyst's one, ``Delta = sum_i d_i^2``,
with Fourier symbol ``-|k|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "make_grid",
    "to_spectral",
    "to_physical",
    "laplacian",
    "bilaplacian",
    "derivative",
    "integrate",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the flat torus ``[0, L)^m``.

    Attributes:
        m: Dimension, 1 or 2.
        n: Points per axis (even).
        L: Period, the same along every axis.
    """

    m: int
    n: int
    L: float

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def vol(self) -> float:
        return self.L**self.m

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.m

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.m, 0))

    @property
    def k_min(self) -> float:
        """Smallest nonzero wavenumber ``2*pi/L``."""
        return 2.0 * np.pi / self.L

    def coordinates(self) -> list[np.ndarray]:
        """Meshgrid of sample coordinates, one array per axis (``ij`` indexing)."""
        x = np.arange(self.n) * self.h
        return list(np.meshgrid(*([x] * self.m), indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Per-axis wavenumbers broadcast to the rfftn spectral shape."""
        full = 2.0 * np.pi * np.fft.fftfreq(self.n, d=1.0 / self.n) / self.L
        half = 2.0 * np.pi * np.fft.rfftfreq(self.n, d=1.0 / self.n) / self.L
        per_axis = [full] * (self.m - 1) + [half]
        return tuple(np.meshgrid(*per_axis, indexing="ij"))

    @cached_property
    def ksq(self) -> np.ndarray:
        """``|k|^2`` on the rfftn spectral shape (Nyquist included)."""
        return sum(k**2 for k in self.wavenumbers)

    @cached_property
    def derivative_symbols(self) -> tuple[np.ndarray, ...]:
        """``i*k_j`` with the Nyquist wavenumber zeroed, one array per axis."""
        nyq = np.pi * self.n / self.L
        out = []
        for k in self.wavenumbers:
            kk = np.where(np.isclose(np.abs(k), nyq), 0.0, k)
            out.append(1j * kk)
        return tuple(out)

    @cached_property
    def parseval_weights(self) -> np.ndarray:
        """Multiplicities of rfftn coefficients in a full-spectrum sum.

        The last axis stores only non-negative frequencies; interior
        columns stand for a conjugate pair and count twice.
        """
        w = np.full(self.ksq.shape, 2.0)
        w[..., 0] = 1.0
        if self.n % 2 == 0:
            w[..., -1] = 1.0
        return w


def make_grid(m: int, n: int, L: float) -> Grid:
    """Build a periodic grid, validating the spectral preconditions."""
    if m not in (1, 2):
        raise ValueError(f"m must be 1 or 2, got {m}")
    if int(n) != n:
        raise ValueError(f"n must be an integer, got {n}")
    n = int(n)
    if n % 2:
        raise ValueError(f"n must be even, got {n}")
    if n < 8:
        raise ValueError(f"n must be at least 8, got {n}")
    if not np.isfinite(L) or L <= 0:
        raise ValueError(f"L must be positive, got {L}")
    return Grid(m=int(m), n=n, L=float(L))


def _check_shape(field: np.ndarray, grid: Grid) -> None:
    if field.ndim < grid.m or field.shape[-grid.m:] != grid.shape:
        raise ValueError(
            f"field shape {field.shape} does not end with grid shape {grid.shape}"
        )


def _unwrap(field):
    # SymTensorField and friends expose their samples as ``.data``
    if hasattr(field, "data") and hasattr(field, "with_data"):
        return field.data, field.with_data
    return np.asarray(field, dtype=float), None


def to_spectral(field: np.ndarray, grid: Grid) -> np.ndarray:
    _check_shape(field, grid)
    return np.fft.rfftn(field, axes=grid.axes)


def to_physical(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.irfftn(coeffs, s=grid.shape, axes=grid.axes)


def _apply_symbol(field, grid: Grid, symbol: np.ndarray):
    data, wrap = _unwrap(field)
    out = to_physical(symbol * to_spectral(data, grid), grid)
    return wrap(out) if wrap else out


def laplacian(field, grid: Grid):
    """Spectral Laplacian, applied componentwise to tensor samples."""
    return _apply_symbol(field, grid, -grid.ksq)


def bilaplacian(field, grid: Grid):
    """Spectral bilaplacian ``Delta^2`` with symbol ``|k|^4``."""
    return _apply_symbol(field, grid, grid.ksq**2)


def derivative(field, grid: Grid, axis: int):
    """Spectral partial derivative along grid axis ``axis``."""
    if not 0 <= axis < grid.m:
        raise ValueError(f"axis must be in [0, {grid.m}), got {axis}")
    return _apply_symbol(field, grid, grid.derivative_symbols[axis])


def integrate(field: np.ndarray, grid: Grid) -> float | np.ndarray:
    """Rectangle-rule integral over the grid axes.

    Exact for trigonometric polynomials below the Nyquist index. Leading
    axes are kept, so a stack of scalar fields integrates to a vector.
    """
    field = np.asarray(field, dtype=float)
    _check_shape(field, grid)
    total = np.sum(field, axis=grid.axes)
    if np.ndim(total) == 0:
        return float(total) * grid.h**grid.m
    return total * grid.h**grid.m
