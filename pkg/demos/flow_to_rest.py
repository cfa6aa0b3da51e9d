"""Relax a random smooth shape-operator field on the 2-torus.

Starts from band-limited noise, flows until the gradient is gone, and
prints the energy every few accepted steps. With c < 0 the field is pulled
toward zero; with c = 0 it settles on a constant.
"""

import math

from moduliflow import AmbientModel, FlowCoefficients, Schedule, make_grid, run_flow
from moduliflow import initial
from moduliflow import tensor_field as tf

grid = make_grid(2, 32, 2 * math.pi)
A0 = initial.random_smooth(grid, seed=7, amplitude=0.2)

for c in (0.0, -1.0):
    run = run_flow(A0, AmbientModel(c=c), FlowCoefficients(), Schedule(t_end=10.0))
    print(f"c = {c:+.0f}: {len(run.records)} records, {len(run.rejected_steps)} rejected steps")
    for rec in run.records[:: max(1, len(run.records) // 8)]:
        print(f"  t={rec.t:8.4f}  F={rec.F:.6e}  |grad A|={rec.grad_A_l2:.3e}")
    A = run.final.A
    print(f"  final |A|_L2 = {tf.l2_norm(A):.3e}, mean trace = {float(tf.trace(A).mean()):.3e}")
