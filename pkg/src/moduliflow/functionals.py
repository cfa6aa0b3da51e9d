"""Moduli energy, its L2 gradient, and per-step diagnostics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import tensor_field as tf
from .tensor_field import SymTensorField

__all__ = [
    "DiagnosticsRecord",
    "GradientCheck",
    "moduli_energy",
    "energy_gradient",
    "gradient_fd_check",
    "diagnostics",
]


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    F: float
    W: float | None
    grad_A_l2: float
    lap_A_l2: float
    A_l2: float
    A_sup: float
    mean_trace: float
    eig_min: float
    eig_max: float
    dt_last: float

    def as_dict(self) -> dict:
        return asdict(self)


def moduli_energy(A: SymTensorField) -> float:
    """``F(A) = 1/2 int |grad A|^2``, evaluated as an exact spectral quadratic form."""
    return 0.5 * tf.gradient_sq_integral(A)


def energy_gradient(A: SymTensorField) -> SymTensorField:
    """L2 gradient of ``F``: ``-Delta A`` (symbol ``+|k|^2``)."""
    return -tf.laplacian(A)


@dataclass(frozen=True)
class GradientCheck:
    eps: tuple[float, ...]
    rel_errors: tuple[float, ...]
    directional: float
    order: float
    roundoff_dominated: bool

    @property
    def max_rel_error(self) -> float:
        return max(self.rel_errors)


def gradient_fd_check(A: SymTensorField, B: SymTensorField, eps_list) -> GradientCheck:
    """Compare central differences of ``F`` along ``B`` with ``<grad F, B>``.

    The fitted order is the least-squares slope of ``log err`` against
    ``log eps`` (``nan`` when fewer than two errors are nonzero). The check
    is flagged roundoff-dominated when every error sits below the
    cancellation floor ``64 u (|F+| + |F-|) / (2 eps |<grad F, B>|)``.
    """
    eps_list = tuple(float(e) for e in eps_list)
    if len(eps_list) < 1:
        raise ValueError("eps_list must not be empty")
    if any(e <= 0 for e in eps_list):
        raise ValueError("eps values must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps values must be strictly decreasing")
    if tf.l2_norm(B) == 0.0:
        raise ValueError("degenerate direction: B is identically zero")
    exact = tf.inner(energy_gradient(A), B)
    scale = abs(exact) if exact != 0 else 1.0
    errors, floors = [], []
    unit = np.finfo(float).eps
    for eps in eps_list:
        f_plus = moduli_energy(A + eps * B)
        f_minus = moduli_energy(A - eps * B)
        fd = (f_plus - f_minus) / (2.0 * eps)
        errors.append(abs(fd - exact) / scale)
        floors.append(64.0 * unit * (abs(f_plus) + abs(f_minus)) / (2.0 * eps * scale))
    nonzero = [(e, r) for e, r in zip(eps_list, errors) if r > 0]
    if len(nonzero) >= 2:
        x = np.log([e for e, _ in nonzero])
        y = np.log([r for _, r in nonzero])
        order = float(np.polyfit(x, y, 1)[0])
    else:
        order = math.nan
    roundoff = all(r <= f for r, f in zip(errors, floors))
    return GradientCheck(eps_list, tuple(errors), exact, order, roundoff)


def diagnostics(state, energy: float | None = None, W: float | None = None) -> DiagnosticsRecord:
    """Scalar summary of a flow state (anything with ``A``, ``t``, ``dt_last``)."""
    A = state.A
    F = moduli_energy(A) if energy is None else energy
    eig = tf.eigenvalues(A)
    mean_trace = float(np.mean(tf.trace(A)))
    return DiagnosticsRecord(
        t=float(state.t),
        F=float(F),
        W=W,
        grad_A_l2=math.sqrt(max(2.0 * F, 0.0)),
        lap_A_l2=tf.l2_norm(tf.laplacian(A)),
        A_l2=tf.l2_norm(A),
        A_sup=tf.sup_norm(A),
        mean_trace=mean_trace,
        eig_min=float(eig[0].min()),
        eig_max=float(eig[-1].max()),
        dt_last=float(state.dt_last),
    )
