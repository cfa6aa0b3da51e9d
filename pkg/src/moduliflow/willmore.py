"""Scalar-level Willmore baseline ``int (tr A)^2`` and profile comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from . import tensor_field as tf
from .functionals import moduli_energy
from .tensor_field import SymTensorField

__all__ = ["willmore_energy", "scalar_baseline_step", "compare_profiles", "ProfileComparison"]


def willmore_energy(A: SymTensorField) -> float:
    """``int H^2`` with ``H = tr A``."""
    return float(geometry.integrate(tf.trace(A) ** 2, A.grid))


def scalar_baseline_step(A: SymTensorField, dt: float, sigma: float = 0.0) -> SymTensorField:
    """One step of ``dA/dt = -2 tr(A) Id + sigma Delta A``.

    The trace reaction is linear and pointwise, so it is applied exactly:
    the trace decays by ``exp(-2 m dt)`` and the trace-free part is left
    alone. The smoothing term is an explicit Euler update taken first.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    grid = A.grid
    if sigma > 0:
        limit = 0.2 * grid.h**2 / sigma
        if dt > limit:
            raise ValueError(f"CFL violation: dt={dt} > 0.2 h^2 / sigma = {limit}")
        A = A + (dt * sigma) * tf.laplacian(A)
    m = grid.m
    H = tf.trace(A)
    return A + tf.identity_scale(H * math.expm1(-2.0 * m * dt) / m, grid)


@dataclass(frozen=True)
class ProfileComparison:
    t: np.ndarray
    F: np.ndarray
    willmore: np.ndarray

    @property
    def F_decreased(self) -> bool:
        return bool(self.F[-1] <= self.F[0])

    @property
    def willmore_decreased(self) -> bool:
        return bool(self.willmore[-1] <= self.willmore[0])

    def rows(self):
        return zip(self.t.tolist(), self.F.tolist(), self.willmore.tolist())

    def summary(self) -> dict:
        return {
            "F_initial": float(self.F[0]),
            "F_final": float(self.F[-1]),
            "F_decreased": self.F_decreased,
            "willmore_initial": float(self.willmore[0]),
            "willmore_final": float(self.willmore[-1]),
            "willmore_decreased": self.willmore_decreased,
        }


def compare_profiles(trajectory) -> ProfileComparison:
    """Side-by-side ``F`` and Willmore energy along a sequence of flow states."""
    trajectory = list(trajectory)
    if not trajectory:
        raise ValueError("empty trajectory")
    return ProfileComparison(
        t=np.array([s.t for s in trajectory]),
        F=np.array([moduli_energy(s.A) for s in trajectory]),
        willmore=np.array([willmore_energy(s.A) for s in trajectory]),
    )
