"""
From a declared model to its deviation system
==============================================

A model file declares a fibred space and one of three payloads: a
Lagrangian density, a Hamiltonian density, or a bare differential
equation.  This script walks the pendulum Lagrangian through the
pipeline: Euler-Lagrange equation, then the deviation (linearized)
system obtained by applying the vertical derivative.
"""

from pathlib import Path

from deviq import deviation_system, euler_lagrange, load_model, render

MODELS = Path(__file__).resolve().parent.parent / "models"

# Load the pendulum: base t, fibre y, density 0.5*y_t^2 + cos(y).
model = load_model(MODELS / "pendulum.eqn")
print("model source")
print("------------")
print(render(model))

# The Euler-Lagrange operator of the density.  For a first-order
# density this is d(dL/dy_t)/dt - dL/dy, written as one expression
# that vanishes on solutions.
op = euler_lagrange(model.lagrangian())
print("Euler-Lagrange equation")
print("-----------------------")
print(render(op))
print()

# The deviation system doubles the equation: the original equation in
# y plus its vertical derivative, a linear equation in the deviation
# coordinates v_y, v_y_t, v_y_tt with coefficients along the base
# solution.  Solutions of the second block are Jacobi fields.
ds = deviation_system(op)
print("deviation system")
print("----------------")
print(render(ds))
print()

# The same objects render to LaTeX (note the dot convention: v_y_tt
# is the second time derivative of the deviation of y, printed as a
# deviation dot inside the double dot) and to JSON prefix trees.
print("LaTeX")
print("-----")
print(render(ds, format="latex"))
print()
print("JSON")
print("----")
print(render(ds, format="json"))
