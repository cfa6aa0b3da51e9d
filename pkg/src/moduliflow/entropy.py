"""Moduli entropy ``W(A, f, eta)`` with a co-evolved log-weight ``f``.

    W = int (eta |grad A|^2 + 1/2 |A|^2 + eta^2 |Delta A|^2 + f) u,
    u = exp(-f) / (4 pi eta)^{m/2},   int u = 1,   eta = T - t.

``f`` follows ``df/dt = s Delta f + |grad f|^2 - tr(A^2) + m/(2 eta)`` with
``s = +1`` for the ``diffusive`` choice and ``s = -1`` for
``paper_literal``. It is stepped explicitly and re-normalized after every
step; the additive shift is returned so the drift stays auditable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import geometry
from . import tensor_field as tf
from .geometry import Grid
from .tensor_field import SymTensorField

__all__ = [
    "EntropyState",
    "EntropyHorizonError",
    "EntropyMonitor",
    "normalize_weight",
    "initial_entropy_state",
    "entropy_value",
    "evolve_f",
    "monitor_entropy",
    "zero_field_entropy",
]

ADJOINT_SIGNS = {"diffusive": 1.0, "paper_literal": -1.0}


class EntropyHorizonError(ValueError):
    """The requested time reaches or passes the terminal time ``T``."""


@dataclass(frozen=True, eq=False)
class EntropyState:
    f: np.ndarray
    T: float
    t: float
    grid: Grid
    u: np.ndarray
    shift: float = 0.0

    @property
    def eta(self) -> float:
        return self.T - self.t


def _log_norm(f: np.ndarray, eta: float, grid: Grid) -> float:
    """``log int exp(-f) / (4 pi eta)^{m/2}`` without overflow."""
    return float(logsumexp(-f)) + grid.m * math.log(grid.h) - 0.5 * grid.m * math.log(4.0 * math.pi * eta)


def normalize_weight(f: np.ndarray, eta: float, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Shift ``f`` so that ``u = exp(-f)/(4 pi eta)^{m/2}`` integrates to one."""
    if not eta > 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ValueError(f"f must have grid shape {grid.shape}")
    if not np.all(np.isfinite(f)):
        raise FloatingPointError("weight function f is not finite")
    shifted = f + _log_norm(f, eta, grid)
    with np.errstate(over="raise"):
        try:
            u = np.exp(-shifted) / (4.0 * math.pi * eta) ** (0.5 * grid.m)
        except FloatingPointError as exc:
            raise FloatingPointError("exp(-f) overflows; f is unbounded below") from exc
    return shifted, u


def initial_entropy_state(grid: Grid, T: float, t: float = 0.0, f: np.ndarray | None = None) -> EntropyState:
    if not T > t:
        raise EntropyHorizonError(f"terminal time T={T} must exceed t={t}")
    f0 = np.zeros(grid.shape) if f is None else np.asarray(f, dtype=float)
    shifted, u = normalize_weight(f0, T - t, grid)
    return EntropyState(f=shifted, T=float(T), t=float(t), grid=grid, u=u)


def zero_field_entropy(grid: Grid, eta: float) -> float:
    """Closed form of ``W`` for ``A = 0`` and constant ``f``: ``log(vol / (4 pi eta)^{m/2})``."""
    return math.log(grid.vol) - 0.5 * grid.m * math.log(4.0 * math.pi * eta)


def entropy_value(A: SymTensorField, state: EntropyState) -> float:
    grid = state.grid
    mass = geometry.integrate(state.u, grid)
    if abs(mass - 1.0) > 1e-6:
        raise ValueError(f"entropy weight is not normalized: int u = {mass!r}")
    eta = state.eta
    density = (
        eta * tf.gradient_sq_pointwise(A)
        + 0.5 * tf.frobenius_sq(A)
        + eta**2 * tf.frobenius_sq(tf.laplacian(A))
        + state.f
    )
    return float(geometry.integrate(density * state.u, grid))


def _grad_sq(f: np.ndarray, grid: Grid) -> np.ndarray:
    return sum(geometry.derivative(f, grid, axis) ** 2 for axis in range(grid.m))


def f_step_limit(grid: Grid) -> float:
    """Explicit diffusion limit ``0.2 h^2 / m`` (spectral Nyquist symbol is ``m pi^2/h^2``)."""
    return 0.2 * grid.h**2 / grid.m


def evolve_f(state: EntropyState, A: SymTensorField, dt: float, adjoint_sign: str = "diffusive") -> EntropyState:
    """Advance ``f`` by ``dt`` with ``A`` frozen, subcycling under the diffusion limit."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if adjoint_sign not in ADJOINT_SIGNS:
        raise ValueError(f"adjoint_sign must be one of {sorted(ADJOINT_SIGNS)}")
    if state.t + dt >= state.T:
        raise EntropyHorizonError(f"entropy horizon reached: t + dt = {state.t + dt!r} >= T = {state.T!r}")
    grid = state.grid
    s = ADJOINT_SIGNS[adjoint_sign]
    trA2 = tf.trace(tf.sym_product(A, A))
    nsub = max(1, math.ceil(dt / f_step_limit(grid) - 1e-12))
    sub = dt / nsub
    f = state.f
    t = state.t
    shift = state.shift
    for _ in range(nsub):
        eta = state.T - t
        rate = s * geometry.laplacian(f, grid) + _grad_sq(f, grid) - trA2 + grid.m / (2.0 * eta)
        f = f + sub * rate
        if not np.all(np.isfinite(f)):
            raise FloatingPointError("weight function f became non-finite")
        t = t + sub
    t = state.t + dt
    shifted, u = normalize_weight(f, state.T - t, grid)
    shift += float(np.mean(shifted - f))
    return EntropyState(f=shifted, T=state.T, t=t, grid=grid, u=u, shift=shift)


@dataclass
class EntropyMonitor:
    times: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    masses: list[float] = field(default_factory=list)
    shifts: list[float] = field(default_factory=list)
    tol: float = 1e-8

    @property
    def monotone(self) -> bool:
        return all(b <= a + self.tol for a, b in zip(self.values, self.values[1:]))

    @property
    def max_increase(self) -> float:
        if len(self.values) < 2:
            return 0.0
        return float(max(b - a for a, b in zip(self.values, self.values[1:])))

    @property
    def max_mass_error(self) -> float:
        return max((abs(m - 1.0) for m in self.masses), default=0.0)


def monitor_entropy(trajectory, T: float, adjoint_sign: str = "diffusive", tol: float = 1e-8, f0=None) -> EntropyMonitor:
    """Co-evolve ``f`` along an A-trajectory and record ``W(t)``.

    ``trajectory`` is a sequence of objects with ``A`` and ``t`` (flow
    states), in increasing time.
    """
    trajectory = list(trajectory)
    if not trajectory:
        raise ValueError("empty trajectory")
    if any(s.t >= T for s in trajectory):
        raise EntropyHorizonError("trajectory reaches the terminal time T")
    first = trajectory[0]
    state = initial_entropy_state(first.A.grid, T, t=first.t, f=f0)
    mon = EntropyMonitor(tol=tol)

    def push(A, st):
        mon.times.append(st.t)
        mon.values.append(entropy_value(A, st))
        mon.masses.append(geometry.integrate(st.u, st.grid))
        mon.shifts.append(st.shift)

    push(first.A, state)
    for prev, cur in zip(trajectory, trajectory[1:]):
        state = evolve_f(state, prev.A, cur.t - prev.t, adjoint_sign)
        push(cur.A, state)
    return mon
