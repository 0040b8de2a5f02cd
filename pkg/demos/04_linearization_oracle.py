"""
Trusting the linearization: two independent numeric checks
==========================================================

The deviation equation claims to be the derivative of the flow with
respect to initial data.  Two oracles test that claim without reusing
the symbolic pipeline:

1. Finite differences: integrate the base equation from nudged initial
   data and difference the trajectories.  The gap to the Jacobi field
   must shrink linearly in the nudge size eps.
2. Residual law: substitute base + eps * jacobi into the original
   equation.  The residual must shrink like eps^2, because the O(eps)
   term is exactly what the deviation equation removes.
"""

import math
from pathlib import Path

import numpy as np

from deviq import (
    JacobiProblem,
    deviation_equations,
    finite_difference_jacobi,
    load_model,
    perturbation_residual,
    solve_jacobi,
)

MODELS = Path(__file__).resolve().parent.parent / "models"

model = load_model(MODELS / "pendulum.eqn")
prob = JacobiProblem(
    deviation_equations(model),
    dict(y=2.0, y_t=0.0), dict(v_y=1.0, v_y_t=0.0),
    0.0, 2.0, 1e-3,
)
_, jacobi = solve_jacobi(prob)

# Oracle 1: the finite-difference ladder.  Each error should drop by
# about a decade per decade of eps (observed order close to 1).
print("finite-difference oracle (pendulum)")
print("eps        max gap      observed order")
errs = []
for eps in (1e-2, 1e-3, 1e-4):
    fd = finite_difference_jacobi(prob, eps)
    errs.append(float(np.max(np.abs(fd.states - jacobi.states))))
for i, eps in enumerate((1e-2, 1e-3, 1e-4)):
    order = "" if i == 0 else f"{math.log10(errs[i - 1] / errs[i]):14.3f}"
    print(f"{eps:.0e}   {errs[i]:.4e}{order}")

# Oracle 2: the residual table.  The fitted exponent of the least
# squares line through log residual vs log eps should be close to 2.
print("\nresidual law (pendulum)")
table = perturbation_residual(prob)
print(table.to_csv().strip())
print(f"fitted exponent: {table.exponent:.4f}")

# A linear model has no O(eps^2) term at all: the residual sits at the
# integrator floor and no exponent is fitted from such noise.
osc = load_model(MODELS / "oscillator.eqn")
floor = perturbation_residual(
    JacobiProblem(
        deviation_equations(osc),
        dict(y=1.0, y_t=0.0), dict(v_y=0.0, v_y_t=1.0),
        0.0, 2.0, 1e-3,
    )
)
print("\nresidual floor (oscillator, linear)")
print(floor.to_csv().strip())
