"""
Jacobi fields along a geodesic of the round sphere
==================================================

The free particle on the unit sphere has the Lagrangian
0.5*(theta_t^2 + sin(theta)^2*phi_t^2).  Along the equatorial
geodesic theta = pi/2, phi = t, the deviation equation collapses to
v_theta'' + v_theta = 0, so a Jacobi field started with v_theta = 0,
v_theta' = 1 must equal sin(t): neighbouring great circles meet again
at the antipode, t = pi.
"""

import math
from pathlib import Path

import numpy as np

from deviq import JacobiProblem, deviation_equations, load_model, solve_jacobi

MODELS = Path(__file__).resolve().parent.parent / "models"

model = load_model(MODELS / "sphere.eqn")
system = deviation_equations(model)

# Equatorial initial data for the base geodesic and a transverse kick
# for the Jacobi field.
prob = JacobiProblem(
    system,
    dict(theta=math.pi / 2, theta_t=0.0, phi=0.0, phi_t=1.0),
    dict(v_theta=0.0, v_theta_t=1.0, v_phi=0.0, v_phi_t=0.0),
    0.0, math.pi, 1e-3,
)
base, jacobi = solve_jacobi(prob)

# Sample the field at a few times against the exact solution.
print(" t        v_theta        sin(t)")
for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
    i = int(frac * (len(jacobi.times) - 1))
    t = jacobi.times[i]
    print(f"{t:5.3f}  {jacobi.column('v_theta')[i]: .10f}  {math.sin(t): .10f}")

err = float(np.max(np.abs(jacobi.column("v_theta") - np.sin(jacobi.times))))
print(f"\nmax |v_theta - sin t| on [0, pi]: {err:.3e}")

# The vanishing of the Jacobi field at t = pi is the conjugate point:
# the antipode of the starting point.
print(f"v_theta at t = pi: {jacobi.column('v_theta')[-1]:.3e}")
