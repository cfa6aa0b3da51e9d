"""Linear stability of parallel tensors and decay-rate experiments.

Around a constant ``A_inf`` each Fourier mode ``P = P_k e^{ik.x}`` evolves
by a linear map ``S(k)`` on symmetric matrices. Energies of the
perturbation decay like ``exp(-beta t)`` with ``beta = -2 max Re spec S``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import geometry
from . import tensor_field as tf
from .flow import AmbientModel, FlowCoefficients, Schedule, run_flow
from .functionals import moduli_energy
from .geometry import Grid
from .tensor_field import SymTensorField

__all__ = [
    "LinearizedOperator",
    "DecayReport",
    "sym_basis",
    "linearize",
    "predicted_decay_rate",
    "fit_decay_rate",
    "perturbation_experiment",
    "coercivity_constant",
]


def sym_basis(m: int) -> list[np.ndarray]:
    """Frobenius-orthonormal basis of symmetric ``m x m`` matrices."""
    basis = []
    for i in range(m):
        for j in range(i, m):
            e = np.zeros((m, m))
            if i == j:
                e[i, i] = 1.0
            else:
                e[i, j] = e[j, i] = 1.0 / math.sqrt(2.0)
            basis.append(e)
    return basis


def _sym(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + x.T)


def _k_op(x: np.ndarray, ambient: AmbientModel) -> np.ndarray:
    m = x.shape[0]
    out = m * x
    if ambient.trace_adjusted:
        out = out - np.trace(x) * np.eye(m)
    return out


def symbol_map(A_inf: np.ndarray, ksq: float, ambient: AmbientModel, coeffs: FlowCoefficients):
    """``P -> S(k) P`` for a mode with ``|k|^2 = ksq`` (``Delta -> -ksq``)."""
    A = np.asarray(A_inf, dtype=float)
    m = A.shape[0]
    t1, t2, t3, t4, t5 = coeffs.as_tuple()
    c = ambient.c
    A2 = A @ A
    powers = [np.linalg.matrix_power(A, p) for p in range(4)]

    def apply(P: np.ndarray) -> np.ndarray:
        lap = -ksq * P
        out = -(ksq**2) * P
        out = out + t1 * (-ksq) * (A @ P + P @ A)
        out = out + t2 * _sym(A2 @ lap)
        out = out - t3 * c * _k_op(lap, ambient)
        out = out + t4 * sum(powers[i] @ P @ powers[3 - i] for i in range(4))
        out = out + t5 * c * (m * (A @ P + P @ A) - np.trace(P) * A - np.trace(A) * P)
        return out

    return apply


@dataclass(frozen=True)
class LinearizedOperator:
    """Per-mode symbol matrices in the orthonormal symmetric basis.

    ``symbols[idx]`` is the matrix of ``S(k)`` for the wavevector with
    ``|k|^2 = ksq[idx]``; ``ksq`` runs over the distinct values on the grid.
    """

    A_inf: np.ndarray
    ksq: np.ndarray
    symbols: np.ndarray

    def symbol(self, ksq: float) -> np.ndarray:
        idx = int(np.argmin(np.abs(self.ksq - ksq)))
        if not np.isclose(self.ksq[idx], ksq, rtol=1e-12, atol=1e-12):
            raise KeyError(f"|k|^2 = {ksq} is not a grid mode")
        return self.symbols[idx]

    def growth_rates(self) -> np.ndarray:
        """Largest real part of ``spec S(k)`` per distinct mode."""
        return np.array([np.linalg.eigvals(s).real.max() for s in self.symbols])


def linearize(A_inf, ambient: AmbientModel, coeffs: FlowCoefficients, grid: Grid) -> LinearizedOperator:
    A_inf = np.atleast_2d(np.asarray(A_inf, dtype=float))
    if A_inf.shape != (grid.m, grid.m) or not np.allclose(A_inf, A_inf.T):
        raise ValueError(f"A_inf must be a symmetric {grid.m}x{grid.m} matrix")
    # S(k) depends on k only through |k|^2
    ksq = np.unique(np.round(grid.ksq.ravel(), 12))
    basis = sym_basis(grid.m)
    symbols = np.empty((len(ksq), len(basis), len(basis)))
    for idx, q in enumerate(ksq):
        apply = symbol_map(A_inf, q, ambient, coeffs)
        for col, e in enumerate(basis):
            image = apply(e)
            symbols[idx, :, col] = [np.sum(image * f) for f in basis]
    return LinearizedOperator(A_inf=A_inf, ksq=ksq, symbols=symbols)


def predicted_decay_rate(lin: LinearizedOperator, exclude_zero_mode: bool = True) -> float:
    """``beta = -2 max Re spec S(k)`` over the included modes."""
    rates = lin.growth_rates()
    if exclude_zero_mode:
        rates = rates[lin.ksq > 0]
    return float(-2.0 * rates.max())


def fit_decay_rate(times, energies) -> tuple[float, float]:
    """Least-squares fit of ``log E = a - beta t``; returns ``(beta, r^2)``."""
    t = np.asarray(times, dtype=float)
    E = np.asarray(energies, dtype=float)
    if t.shape != E.shape or t.ndim != 1:
        raise ValueError("times and energies must be 1-D arrays of equal length")
    if len(t) < 10:
        raise ValueError(f"need at least 10 samples, got {len(t)}")
    if np.any(E <= 0) or not np.all(np.isfinite(E)):
        raise ValueError("energies must be positive and finite")
    y = np.log(E)
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(-slope), float(min(max(r2, 0.0), 1.0))


@dataclass(frozen=True)
class DecayReport:
    beta_predicted: float
    beta_fitted: float
    fit_r2: float
    window: tuple[float, float]
    amplitude: float
    samples: int
    stable: bool
    zero_mode_drift: float
    times: np.ndarray = field(default=None, repr=False, compare=False)
    energies: np.ndarray = field(default=None, repr=False, compare=False)
    run: object = field(default=None, repr=False, compare=False)

    @property
    def relative_error(self) -> float:
        return abs(self.beta_fitted - self.beta_predicted) / abs(self.beta_predicted)

    def as_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.compare}
        d["window"] = list(self.window)
        return d


def perturbation_experiment(
    A_inf,
    P0: SymTensorField,
    amplitude: float,
    ambient: AmbientModel,
    coeffs: FlowCoefficients,
    t_end: float,
    schedule: Schedule | None = None,
    window_factors: tuple[float, float] = (10.0, 1e4),
    max_amplitude: float = 1e-2,
) -> DecayReport:
    """Flow ``A_inf + amplitude * P0`` and fit the decay of ``E(P) = F(A - A_inf)``.

    The fit uses the samples where ``E`` has dropped by a factor between
    ``window_factors[0]`` and ``window_factors[1]`` from ``E(0)``.
    """
    grid = P0.grid
    A_inf = np.atleast_2d(np.asarray(A_inf, dtype=float))
    if amplitude == 0 or tf.l2_norm(P0) == 0:
        raise ValueError("zero perturbation")
    if abs(amplitude) > max_amplitude:
        raise ValueError(f"amplitude {amplitude} exceeds the linear-regime cap {max_amplitude}")
    mean = P0.mean()
    if np.max(np.abs(mean)) > 1e-12 * max(tf.sup_norm(P0), 1.0):
        raise ValueError("P0 must be mean-free")

    base = SymTensorField.constant(grid, A_inf)
    initial = base + amplitude * P0
    if schedule is None:
        schedule = Schedule(t_end=t_end)
    else:
        schedule = replace(schedule, t_end=t_end)
    run = run_flow(initial, ambient, coeffs, schedule, keep_states=True)
    times = np.array([s.t for s in run.states])
    energies = np.array([moduli_energy(s.A - base) for s in run.states])

    E0 = energies[0]
    lo, hi = E0 / window_factors[0], E0 / window_factors[1]
    mask = (energies <= lo) & (energies >= hi)
    if mask.sum() < 10:
        raise ValueError(
            f"only {int(mask.sum())} samples in the fit window; increase t_end or reduce dt_max"
        )
    tw, Ew = times[mask], energies[mask]
    beta, r2 = fit_decay_rate(tw, Ew)
    stable = bool(np.all(np.diff(Ew) <= 1e-12 * E0))
    drift = float(np.max(np.abs(run.final.A.mean() - A_inf)))
    lin = linearize(A_inf, ambient, coeffs, grid)
    return DecayReport(
        beta_predicted=predicted_decay_rate(lin),
        beta_fitted=beta,
        fit_r2=r2,
        window=(float(tw[0]), float(tw[-1])),
        amplitude=float(amplitude),
        samples=int(mask.sum()),
        stable=stable,
        zero_mode_drift=drift,
        times=times,
        energies=energies,
        run=run,
    )


def coercivity_constant(grid: Grid) -> float:
    """Brute-force ``min ||Delta grad P||^2 / ||grad P||^2`` over mean-free grid modes.

    Each non-Nyquist mode ``cos(k.x)`` and ``sin(k.x)`` is built in
    physical space and differentiated spectrally.
    """
    coords = grid.coordinates()
    nyq = grid.n // 2
    best = math.inf
    indices = np.array(np.meshgrid(*([np.arange(-nyq + 1, nyq)] * grid.m), indexing="ij")).reshape(grid.m, -1).T
    for j in indices:
        if not np.any(j):
            continue
        phase = sum(grid.k_min * jj * x for jj, x in zip(j, coords))
        for P in (np.cos(phase), np.sin(phase)):
            grads = [geometry.derivative(P, grid, a) for a in range(grid.m)]
            num = sum(geometry.integrate(geometry.laplacian(g, grid) ** 2, grid) for g in grads)
            den = sum(geometry.integrate(g**2, grid) for g in grads)
            best = min(best, num / den)
    return float(best)
