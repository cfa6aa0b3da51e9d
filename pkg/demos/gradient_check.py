"""Finite-difference check of the energy gradient.

A central difference of F along a random direction should agree with the
L2 pairing against the analytic gradient until roundoff takes over.
"""

import math

from moduliflow import make_grid
from moduliflow import initial
from moduliflow.functionals import gradient_fd_check

grid = make_grid(2, 32, 2 * math.pi)
A = initial.random_smooth(grid, 0, amplitude=1.0)
B = initial.random_smooth(grid, 1, amplitude=1.0)
check = gradient_fd_check(A, B, [1e-2, 1e-3, 1e-4, 1e-5])
print(f"<grad F, B> = {check.directional:.12e}")
for eps, err in zip(check.eps, check.rel_errors):
    print(f"  eps={eps:.0e}  relative error {err:.3e}")
print(f"observed order {check.order:.2f}, roundoff dominated: {check.roundoff_dominated}")
