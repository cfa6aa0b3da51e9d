"""Fourth-order moduli flow ``dA/dt = -Delta^2 A + R(A)`` on flat tori.

The reaction term is the canonical instantiation

    R = t1 Delta(A^2) + t2 sym(A^2 Delta A) - t3 c K(Delta A)
        + t4 A^4 + t5 c (m A^2 - tr(A) A)

with ``K(X) = m X - tr(X) Id`` when ``trace_adjusted`` and ``m X``
otherwise. The curvature coupling of the second-order term is written
against the rough Laplacian ``-Delta``, which makes it dissipative for
``c <= 0``.

Time stepping is exponential Euler: the bilaplacian is integrated exactly
per Fourier mode and ``R`` is treated explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import geometry
from . import tensor_field as tf
from .functionals import DiagnosticsRecord, diagnostics, moduli_energy
from .tensor_field import SymTensorField

__all__ = [
    "AmbientModel",
    "FlowCoefficients",
    "FlowState",
    "Schedule",
    "StepController",
    "FlowRun",
    "BlowUpError",
    "reaction_terms",
    "assemble_rhs",
    "step_etd1",
    "run_flow",
    "detect_stationary",
    "explicit_step_limit",
]


@dataclass(frozen=True)
class AmbientModel:
    """Constant sectional curvature ``c <= 0`` with bound ``Lambda >= |c|``."""

    c: float = 0.0
    Lambda: float | None = None
    trace_adjusted: bool = False

    def __post_init__(self):
        if not self.c <= 0:
            raise ValueError(f"c must be <= 0 (non-positive sectional curvature), got {self.c}")
        if self.Lambda is None:
            object.__setattr__(self, "Lambda", abs(self.c))
        elif self.Lambda < abs(self.c):
            raise ValueError(f"Lambda must be >= |c|, got {self.Lambda} < {abs(self.c)}")


@dataclass(frozen=True)
class FlowCoefficients:
    theta1: float = 1.0
    theta2: float = 1.0
    theta3: float = 1.0
    theta4: float = 1.0
    theta5: float = 1.0

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta3", "theta4", "theta5"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def zero(cls) -> FlowCoefficients:
        return cls(0.0, 0.0, 0.0, 0.0, 0.0)

    def as_tuple(self) -> tuple[float, ...]:
        return (self.theta1, self.theta2, self.theta3, self.theta4, self.theta5)


@dataclass(frozen=True)
class FlowState:
    A: SymTensorField
    t: float = 0.0
    step: int = 0
    dt_last: float = 0.0


@dataclass(frozen=True)
class Schedule:
    """Adaptive stepping parameters.

    ``safety`` scales the largest step for which the explicitly treated
    linear curvature coupling keeps every mode non-amplifying.
    """

    t_end: float
    dt_init: float = 1e-3
    dt_min: float = 1e-10
    dt_max: float = 0.05
    safety: float = 0.9
    diag_every: int = 1
    energy_tol: float = 1e-12
    enforce_monotone: bool = True

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("t_end must be > 0")
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if not 0 < self.safety <= 1:
            raise ValueError("safety must be in (0, 1]")
        if self.diag_every < 1:
            raise ValueError("diag_every must be >= 1")


@dataclass
class StepController:
    """Mutable dt controller; serialized into checkpoints for exact resume."""

    dt: float
    streak: int = 0
    f_ref: float = 0.0
    rejections: int = 0

    GROW_AFTER = 10
    GROWTH = 1.2


class BlowUpError(RuntimeError):
    """dt fell below ``dt_min``; ``state`` is the last accepted state."""

    def __init__(self, message: str, state: FlowState, controller: StepController | None = None):
        super().__init__(message)
        self.state = state
        self.controller = controller


@dataclass
class FlowRun:
    final: FlowState
    controller: StepController
    states: list[FlowState] = field(default_factory=list)
    records: list[DiagnosticsRecord] = field(default_factory=list)
    rejected_steps: list[int] = field(default_factory=list)


def _k_operator(X: SymTensorField, ambient: AmbientModel) -> SymTensorField:
    m = X.m
    out = X * float(m)
    if ambient.trace_adjusted:
        out = out - tf.identity_scale(tf.trace(X), X.grid)
    return out


def reaction_terms(A: SymTensorField, ambient: AmbientModel, coeffs: FlowCoefficients) -> SymTensorField:
    """The nonlinear part ``R(A)`` (everything except ``-Delta^2 A``)."""
    t1, t2, t3, t4, t5 = coeffs.as_tuple()
    c = ambient.c
    grid = A.grid
    out = SymTensorField.zeros(grid)
    need_sq = t1 or t2 or t4 or (t5 and c)
    A2 = tf.sym_product(A, A) if need_sq else None
    lapA = tf.laplacian(A) if (t2 or (t3 and c)) else None
    if t1:
        out = out + t1 * tf.laplacian(A2)
    if t2:
        out = out + t2 * tf.sym_product(A2, lapA)
    if t3 and c:
        out = out - (t3 * c) * _k_operator(lapA, ambient)
    if t4:
        out = out + t4 * tf.sym_product(A2, A2)
    if t5 and c:
        poly = A2 * float(A.m) - A * tf.trace(A)
        out = out + (t5 * c) * poly
    return out


def assemble_rhs(A: SymTensorField, ambient: AmbientModel, coeffs: FlowCoefficients) -> SymTensorField:
    """Full right-hand side ``-Delta^2 A + R(A)``."""
    if ambient.c > 0:
        raise ValueError("c must be <= 0")
    return reaction_terms(A, ambient, coeffs) - tf.bilaplacian(A)


def _phi1(z: np.ndarray) -> np.ndarray:
    out = np.ones_like(z)
    nz = z != 0
    out[nz] = np.expm1(z[nz]) / z[nz]
    return out


def step_etd1(state: FlowState, dt: float, ambient: AmbientModel, coeffs: FlowCoefficients) -> FlowState:
    """One exponential-Euler step.

    Per mode: ``A+ = exp(-|k|^4 dt) A + dt phi1(-|k|^4 dt) N(A)``.
    Raises ``FloatingPointError`` on a non-finite result.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    A = state.A
    grid = A.grid
    z = -(grid.ksq**2) * dt
    nonlinear = reaction_terms(A, ambient, coeffs)
    with np.errstate(over="ignore", invalid="ignore"):
        a_hat = geometry.to_spectral(A.data, grid)
        n_hat = geometry.to_spectral(nonlinear.data, grid)
        new_hat = np.exp(z) * a_hat + dt * _phi1(z) * n_hat
        new = geometry.to_physical(new_hat, grid)
    if not np.all(np.isfinite(new)):
        raise FloatingPointError("non-finite tensor after ETD1 step")
    return FlowState(A=A.with_data(new), t=state.t + dt, step=state.step + 1, dt_last=dt)


def explicit_step_limit(grid, ambient: AmbientModel, coeffs: FlowCoefficients) -> float:
    """Largest dt keeping ETD1 non-amplifying for the linear curvature coupling.

    The term ``-t3 c K(Delta A)`` contributes ``mu = t3 c kappa |k|^2`` per
    mode (``kappa`` an eigenvalue of K). With ``lam = |k|^4`` the ETD1
    amplification is ``g = e^{-lam dt} + (1 - e^{-lam dt}) mu/lam``; when
    ``r = mu/lam < -1`` this needs ``e^{-lam dt} >= (-1-r)/(1-r)``.
    """
    mu_scale = coeffs.theta3 * ambient.c
    if mu_scale >= 0:
        return math.inf
    # K has eigenvalues m (and 0 on the trace part when trace-adjusted)
    kappa = grid.m
    ksq = grid.ksq[grid.ksq > 0]
    lam = ksq**2
    r = mu_scale * kappa * ksq / lam
    bad = r < -1
    if not np.any(bad):
        return math.inf
    limits = -np.log((-1 - r[bad]) / (1 - r[bad])) / lam[bad]
    return float(np.min(limits))


def run_flow(
    initial: SymTensorField | FlowState,
    ambient: AmbientModel,
    coeffs: FlowCoefficients,
    schedule: Schedule,
    controller: StepController | None = None,
    keep_states: bool = False,
    callback: Callable[[FlowState, FlowState], None] | None = None,
) -> FlowRun:
    """Integrate to ``schedule.t_end`` with energy-monotone step control.

    A step is rejected (dt halved) when the result is non-finite or, with
    ``enforce_monotone``, when ``F`` rises by more than
    ``energy_tol * (1 + F_ref)``. After ten consecutive accepts dt grows by
    1.2, capped by ``dt_max`` and the explicit-stability limit. Passing a
    state and controller resumes a previous run bit-for-bit.

    Raises:
        BlowUpError: dt dropped below ``dt_min``.
    """
    state = initial if isinstance(initial, FlowState) else FlowState(A=initial)
    cap = min(schedule.dt_max, schedule.safety * explicit_step_limit(state.A.grid, ambient, coeffs))
    if controller is None:
        controller = StepController(dt=min(schedule.dt_init, cap), f_ref=moduli_energy(state.A))
    else:
        controller = replace(controller)

    run = FlowRun(final=state, controller=controller)
    energy = moduli_energy(state.A)

    def record(s: FlowState, F: float):
        run.records.append(diagnostics(s, energy=F))
        if keep_states:
            run.states.append(s)

    record(state, energy)
    # steps shorter than this are floating-point residue of t_end - t
    t_eps = 1e-12 * max(1.0, abs(schedule.t_end))
    while schedule.t_end - state.t > t_eps:
        dt = min(controller.dt, schedule.t_end - state.t)
        try:
            # a trial step may overflow; that is a rejection, not a warning
            with np.errstate(over="ignore", invalid="ignore"):
                candidate = step_etd1(state, dt, ambient, coeffs)
                new_energy = moduli_energy(candidate.A)
            ok = math.isfinite(new_energy)
        except FloatingPointError:
            ok = False
        if ok and schedule.enforce_monotone:
            ok = new_energy <= energy + schedule.energy_tol * (1.0 + controller.f_ref)
        if not ok:
            controller.dt *= 0.5
            controller.streak = 0
            controller.rejections += 1
            run.rejected_steps.append(state.step + 1)
            if controller.dt < schedule.dt_min:
                run.final = state
                raise BlowUpError(
                    f"blow-up suspected at t={state.t!r}: dt underflow below {schedule.dt_min}",
                    state,
                    controller,
                )
            continue
        if callback is not None:
            callback(state, candidate)
        state, energy = candidate, new_energy
        controller.streak += 1
        if controller.streak >= StepController.GROW_AFTER:
            controller.dt = min(controller.dt * StepController.GROWTH, cap)
            controller.streak = 0
        if state.step % schedule.diag_every == 0 or schedule.t_end - state.t <= t_eps:
            record(state, energy)
    run.final = state
    return run


def detect_stationary(state: FlowState | SymTensorField, ambient: AmbientModel, coeffs: FlowCoefficients, tol: float) -> bool:
    """True when ``sup_norm(assemble_rhs(A)) <= tol``."""
    if not tol > 0:
        raise ValueError("tol must be > 0")
    A = state.A if isinstance(state, FlowState) else state
    return tf.sup_norm(assemble_rhs(A, ambient, coeffs)) <= tol
