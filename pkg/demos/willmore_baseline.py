"""Moduli flow next to the scalar Willmore-type baseline.

The baseline only damps the trace, so a trace-free constant is left alone
while the moduli flow keeps acting on the oscillating part.
"""

import math

import numpy as np

from moduliflow import AmbientModel, FlowCoefficients, Schedule, make_grid, run_flow
from moduliflow import tensor_field as tf
from moduliflow.tensor_field import SymTensorField
from moduliflow.willmore import compare_profiles, scalar_baseline_step, willmore_energy

grid = make_grid(2, 16, 2 * math.pi)
A = SymTensorField.constant(grid, [[0.6, 0.2], [0.2, 0.1]])
for _ in range(100):
    A = scalar_baseline_step(A, 0.01)
print("baseline after t=1: trace", float(tf.trace(A).mean()), "expected", 0.7 * math.exp(-4.0))
print("trace-free part", np.round(A.data[:, 0, 0], 6))

line = make_grid(1, 64, 2 * math.pi)
(x,) = line.coordinates()
A0 = SymTensorField(line, 0.5 * np.cos(x)[None])
run = run_flow(A0, AmbientModel(), FlowCoefficients(), Schedule(t_end=1.0), keep_states=True)
comp = compare_profiles(run.states)
print(f"W_ref: {willmore_energy(A0):.4f} -> {comp.willmore[-1]:.4f}")
print(comp.summary())
