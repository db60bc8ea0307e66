"""Horizontal derivatives on a Martinet-type space.

The frame X1 = d/dx1, X2 = d/dx2 + f(x1) d/dx3 spans the horizontal plane,
and the bracket [X1, X2] = f'(x1) d/dx3 recovers the missing direction.
This script evaluates the horizontal operators on a small field and checks
the bracket identity at a few points.
"""

import numpy as np

from martinet import (
    MartinetProfile,
    PolynomialField,
    apply_vector_field,
    horizontal_gradient,
    infinity_laplacian,
    q_laplacian,
    symmetrized_hessian,
    vector_field,
)

f = MartinetProfile([0, 0, 0.5])  # f = x1^2 / 2
u = PolynomialField.parse("x1^2 + x1*x3 - x2")
p = (1.0, 0.0, 0.0)

print("u =", u)
print("horizontal gradient at", p, "->", tuple(horizontal_gradient(u, f, p)))
print("symmetrised horizontal Hessian ->", symmetrized_hessian(u, f, p))
print("infinity Laplacian ->", infinity_laplacian(u, f, p))

# the q-Laplacian, rescaled, approaches the infinity Laplacian as q grows
g2 = horizontal_gradient(u, f, p).norm2()
for q in (10, 100, 400):  # |grad_0 u|^q overflows doubles near q = 1000 here
    print(f"q = {q:4d}: rescaled q-Laplacian {q_laplacian(u, f, p, q) / ((q - 2) * g2 ** ((q - 4) / 2)):.6f}")

# the commutator of the frame is X3 = f'(x1) d/dx3
rng = np.random.default_rng(0)
for pt in rng.uniform(-1, 1, (3, 3)):
    lhs = apply_vector_field(vector_field(u, f, 2), f, 1, pt) - apply_vector_field(vector_field(u, f, 1), f, 2, pt)
    print(f"[X1, X2] u = {lhs:+.6f}   X3 u = {apply_vector_field(u, f, 3, pt):+.6f}")
