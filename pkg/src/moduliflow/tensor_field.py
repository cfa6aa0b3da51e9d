"""Symmetric (1,1)-tensor fields on a periodic grid.

Only the upper triangle of each pointwise matrix is stored, in row-major
order: ``(00,)`` for m=1 and ``(00, 01, 11)`` for m=2. Products go
through full matrices and are read back from the upper triangle, so
symmetry is structural.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .geometry import Grid

__all__ = [
    "SymTensorField",
    "GaugeRotation",
    "rotation",
    "sym_product",
    "matrix_power",
    "trace",
    "identity_scale",
    "conjugate",
    "eigenvalues",
    "frobenius_sq",
    "moduli_distance",
    "l2_norm",
    "sup_norm",
    "gradient_l2_norm",
    "laplacian",
]


def _triu(m: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(m)


def n_components(m: int) -> int:
    return m * (m + 1) // 2


def _weights(m: int) -> np.ndarray:
    # off-diagonal entries appear twice in the Frobenius sum
    i, j = _triu(m)
    return np.where(i == j, 1.0, 2.0)


@dataclass(frozen=True, eq=False)
class SymTensorField:
    """A symmetric ``m x m`` matrix at every grid point.

    ``data`` has shape ``(m(m+1)/2, *grid.shape)``.
    """

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        expected = (n_components(self.grid.m),) + self.grid.shape
        if data.shape != expected:
            raise ValueError(f"expected component array of shape {expected}, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise FloatingPointError("tensor field has non-finite entries")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def m(self) -> int:
        return self.grid.m

    @classmethod
    def zeros(cls, grid: Grid) -> SymTensorField:
        return cls(grid, np.zeros((n_components(grid.m),) + grid.shape))

    @classmethod
    def constant(cls, grid: Grid, matrix) -> SymTensorField:
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if matrix.shape != (grid.m, grid.m):
            raise ValueError(f"constant matrix must be {grid.m}x{grid.m}")
        i, j = _triu(grid.m)
        data = np.broadcast_to(matrix[i, j][:, None], (len(i), grid.n**grid.m))
        return cls(grid, data.reshape((len(i),) + grid.shape))

    @classmethod
    def from_matrices(cls, grid: Grid, matrices: np.ndarray) -> SymTensorField:
        """Build from an array of shape ``(*grid.shape, m, m)`` (upper triangle is read)."""
        i, j = _triu(grid.m)
        return cls(grid, np.moveaxis(matrices[..., i, j], -1, 0))

    @classmethod
    def from_components(cls, grid: Grid, components: dict) -> SymTensorField:
        """Build from ``{(i, j): samples}``; missing entries are zero."""
        data = np.zeros((n_components(grid.m),) + grid.shape)
        index = {(int(a), int(b)): c for c, (a, b) in enumerate(zip(*_triu(grid.m)))}
        for (a, b), values in components.items():
            a, b = min(a, b), max(a, b)
            data[index[(a, b)]] = values
        return cls(grid, data)

    def matrices(self) -> np.ndarray:
        """Full symmetric matrices, shape ``(*grid.shape, m, m)``."""
        m = self.m
        out = np.empty(self.grid.shape + (m, m))
        i, j = _triu(m)
        comps = np.moveaxis(self.data, 0, -1)
        out[..., i, j] = comps
        out[..., j, i] = comps
        return out

    def with_data(self, data: np.ndarray) -> SymTensorField:
        return SymTensorField(self.grid, data)

    def mean(self) -> np.ndarray:
        """Spatial mean as an ``m x m`` matrix."""
        return self.matrices().reshape(-1, self.m, self.m).mean(axis=0)

    def _same_grid(self, other: SymTensorField) -> None:
        if other.grid != self.grid:
            raise ValueError("tensor fields live on different grids")

    def __add__(self, other):
        if isinstance(other, SymTensorField):
            self._same_grid(other)
            return self.with_data(self.data + other.data)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SymTensorField):
            self._same_grid(other)
            return self.with_data(self.data - other.data)
        return NotImplemented

    def __neg__(self):
        return self.with_data(-self.data)

    def __mul__(self, scalar):
        if np.ndim(scalar) == 0:
            return self.with_data(self.data * float(scalar))
        # pointwise scalar field
        scalar = np.asarray(scalar, dtype=float)
        return self.with_data(self.data * scalar[None])

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"SymTensorField(m={self.m}, n={self.grid.n}, L={self.grid.L})"


@dataclass(frozen=True)
class GaugeRotation:
    """Constant orthogonal matrix acting by conjugation."""

    R: np.ndarray

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if R.shape[0] != R.shape[1]:
            raise ValueError("gauge matrix must be square")
        if not np.allclose(R.T @ R, np.eye(R.shape[0]), rtol=0.0, atol=1e-12):
            raise ValueError("gauge matrix is not orthogonal (R^T R != I)")
        object.__setattr__(self, "R", R)


def rotation(angle: float, reflect: bool = False) -> GaugeRotation:
    """Planar rotation by ``angle``, optionally composed with a reflection."""
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s], [s, c]])
    if reflect:
        R = R @ np.diag([1.0, -1.0])
    return GaugeRotation(R)


def sym_product(A: SymTensorField, B: SymTensorField) -> SymTensorField:
    """Pointwise symmetrized product ``(AB + BA)/2``."""
    A._same_grid(B)
    if A.m == 1:
        return A.with_data(A.data * B.data)
    a, b = A.matrices(), B.matrices()
    ab = a @ b
    return SymTensorField.from_matrices(A.grid, 0.5 * (ab + np.swapaxes(ab, -1, -2)))


def matrix_power(A: SymTensorField, p: int) -> SymTensorField:
    if int(p) != p or p < 1:
        raise ValueError(f"power must be an integer >= 1, got {p}")
    if A.m == 1:
        return A.with_data(A.data ** int(p))
    return SymTensorField.from_matrices(A.grid, np.linalg.matrix_power(A.matrices(), int(p)))


def trace(A: SymTensorField) -> np.ndarray:
    """Pointwise trace, a scalar field."""
    i, j = _triu(A.m)
    return A.data[i == j].sum(axis=0)


def identity_scale(s, grid: Grid) -> SymTensorField:
    """``s * Id`` for a scalar constant or scalar field ``s``."""
    s = np.broadcast_to(np.asarray(s, dtype=float), grid.shape)
    i, j = _triu(grid.m)
    data = np.zeros((len(i),) + grid.shape)
    data[i == j] = s
    return SymTensorField(grid, data)


def conjugate(A: SymTensorField, gauge) -> SymTensorField:
    """Gauge action ``R^{-1} A R = R^T A R`` with a constant orthogonal ``R``."""
    if not isinstance(gauge, GaugeRotation):
        gauge = GaugeRotation(gauge)
    R = gauge.R
    if R.shape != (A.m, A.m):
        raise ValueError(f"gauge must be {A.m}x{A.m}")
    return SymTensorField.from_matrices(A.grid, R.T @ A.matrices() @ R)


def eigenvalues(A: SymTensorField) -> np.ndarray:
    """Ascending pointwise eigenvalues, shape ``(m, *grid.shape)``.

    Closed form for m=2: ``(a+c)/2 -+ sqrt(((a-c)/2)^2 + b^2)``.
    """
    if A.m == 1:
        return A.data.copy()
    a, b, c = A.data
    mid = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    return np.stack([mid - rad, mid + rad])


def frobenius_sq(A: SymTensorField) -> np.ndarray:
    """Pointwise ``|A|_F^2``."""
    w = _weights(A.m).reshape((-1,) + (1,) * A.m)
    return np.sum(w * A.data**2, axis=0)


def moduli_distance(A: SymTensorField, B: SymTensorField) -> float:
    """L2 distance between pointwise sorted eigenvalue vectors.

    Vanishes exactly when A and B are pointwise orthogonally conjugate.
    """
    A._same_grid(B)
    diff = eigenvalues(A) - eigenvalues(B)
    return float(np.sqrt(geometry.integrate(np.sum(diff**2, axis=0), A.grid)))


def _scale(A: SymTensorField) -> float:
    # norms square the entries; rescaling first keeps tiny fields from underflowing
    return float(np.max(np.abs(A.data)))


def l2_norm(A: SymTensorField) -> float:
    s = _scale(A)
    if s == 0.0:
        return 0.0
    return s * float(np.sqrt(geometry.integrate(frobenius_sq(A * (1.0 / s)), A.grid)))


def sup_norm(A: SymTensorField) -> float:
    s = _scale(A)
    if s == 0.0:
        return 0.0
    return s * float(np.sqrt(np.max(frobenius_sq(A * (1.0 / s)))))


def gradient_sq_integral(A: SymTensorField) -> float:
    """``int sum_i |d_i A|_F^2`` via Parseval with the Laplacian symbol.

    Equals ``-<A, Delta A>_{L^2}`` exactly on the grid.
    """
    grid = A.grid
    coeffs = geometry.to_spectral(A.data, grid)
    w = _weights(A.m).reshape((-1,) + (1,) * A.m)
    power = np.sum(w * np.abs(coeffs) ** 2, axis=0)
    total = np.sum(grid.parseval_weights * grid.ksq * power)
    return float(total) * grid.vol / (grid.n**grid.m) ** 2


def gradient_l2_norm(A: SymTensorField) -> float:
    return float(np.sqrt(gradient_sq_integral(A)))


def gradient_sq_pointwise(A: SymTensorField) -> np.ndarray:
    """Pointwise ``sum_i |d_i A|_F^2`` from spectral first derivatives."""
    w = _weights(A.m).reshape((-1,) + (1,) * A.m)
    total = np.zeros(A.grid.shape)
    for axis in range(A.m):
        d = geometry.derivative(A.data, A.grid, axis)
        total += np.sum(w * d**2, axis=0)
    return total


def laplacian(A: SymTensorField) -> SymTensorField:
    return geometry.laplacian(A, A.grid)


def bilaplacian(A: SymTensorField) -> SymTensorField:
    return geometry.bilaplacian(A, A.grid)


def inner(A: SymTensorField, B: SymTensorField) -> float:
    """Frobenius ``L^2`` inner product."""
    A._same_grid(B)
    w = _weights(A.m).reshape((-1,) + (1,) * A.m)
    return float(geometry.integrate(np.sum(w * A.data * B.data, axis=0), A.grid))
