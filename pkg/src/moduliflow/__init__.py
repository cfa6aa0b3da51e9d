"""Numerical laboratory for the fourth-order moduli flow of shape operators."""

from .geometry import Grid, make_grid
from .tensor_field import GaugeRotation, SymTensorField, conjugate, rotation
from .flow import (
    AmbientModel,
    BlowUpError,
    FlowCoefficients,
    FlowState,
    Schedule,
    assemble_rhs,
    run_flow,
    step_etd1,
)
from .functionals import diagnostics, energy_gradient, moduli_energy

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "make_grid",
    "SymTensorField",
    "GaugeRotation",
    "conjugate",
    "rotation",
    "AmbientModel",
    "FlowCoefficients",
    "FlowState",
    "Schedule",
    "BlowUpError",
    "assemble_rhs",
    "step_etd1",
    "run_flow",
    "moduli_energy",
    "energy_gradient",
    "diagnostics",
]
