"""Named initial-condition presets."""

from __future__ import annotations

import numpy as np

from . import tensor_field as tf
from .geometry import Grid
from .tensor_field import SymTensorField, n_components

__all__ = ["zero", "single_mode", "random_smooth", "constant"]


def zero(grid: Grid) -> SymTensorField:
    return SymTensorField.zeros(grid)


def single_mode(grid: Grid, k=1, component=(0, 0), amplitude: float = 1.0) -> SymTensorField:
    """``amplitude * cos(k . x)`` in one (symmetric) matrix entry.

    ``k`` is an integer wave index along the first axis or a tuple with one
    index per axis.
    """
    k = np.atleast_1d(np.asarray(k, dtype=int))
    if k.size == 1 and grid.m > 1:
        k = np.concatenate([k, np.zeros(grid.m - 1, dtype=int)])
    if k.size != grid.m:
        raise ValueError(f"wave index must have {grid.m} entries")
    i, j = component
    if not (0 <= i < grid.m and 0 <= j < grid.m):
        raise ValueError(f"component {component} out of range for m={grid.m}")
    phase = sum(grid.k_min * kk * x for kk, x in zip(k, grid.coordinates()))
    return SymTensorField.from_components(grid, {(i, j): amplitude * np.cos(phase)})


def random_smooth(grid: Grid, seed: int, cutoff: float = 3.0, amplitude: float = 0.1) -> SymTensorField:
    """Mean-free random trigonometric field scaled to ``sup_norm == amplitude``.

    Only wave indices ``0 < |j| <= cutoff`` are populated. The generator is
    Philox keyed by ``seed``, so draws are reproducible across platforms.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    seed = int(seed)
    if not 0 <= seed < 2**128:
        raise ValueError("seed must be a non-negative integer below 2**128")
    rng = np.random.Generator(np.random.Philox(key=seed))
    idx = np.fft.fftfreq(grid.n, d=1.0 / grid.n)
    J = np.meshgrid(*([idx] * grid.m), indexing="ij")
    jsq = sum(j**2 for j in J)
    support = (jsq > 0) & (jsq <= cutoff**2)
    ncomp = n_components(grid.m)
    spec = np.zeros((ncomp,) + grid.shape, dtype=complex)
    count = int(support.sum())
    for c in range(ncomp):
        draws = rng.standard_normal((2, count))
        spec[c][support] = draws[0] + 1j * draws[1]
    data = np.fft.ifftn(spec, axes=tuple(range(1, grid.m + 1))).real
    field = SymTensorField(grid, data)
    sup = tf.sup_norm(field)
    if sup == 0:
        return field
    return field * (amplitude / sup)


def constant(grid: Grid, entries) -> SymTensorField:
    """Constant field from upper-triangle entries (row-major) or a full matrix."""
    entries = np.asarray(entries, dtype=float)
    if entries.shape == (grid.m, grid.m):
        return SymTensorField.constant(grid, entries)
    entries = entries.ravel()
    if entries.size != n_components(grid.m):
        raise ValueError(f"need {n_components(grid.m)} upper-triangle entries")
    i, j = np.triu_indices(grid.m)
    M = np.zeros((grid.m, grid.m))
    M[i, j] = entries
    M[j, i] = entries
    return SymTensorField.constant(grid, M)
