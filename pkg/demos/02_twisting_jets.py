"""Twisting Euclidean second-order jets into horizontal ones.

A Euclidean jet (gradient, Hessian) at p is carried to the horizontal jet
through the coefficient matrix of the frame plus a correction proportional
to the vertical derivative.  Twisting the exact Euclidean jet of a
polynomial must reproduce the directly computed horizontal jet.
"""

import numpy as np

from martinet import (
    MartinetProfile,
    PolynomialField,
    euclidean_jet,
    semi_horizontal_gradient,
    symmetrized_hessian,
    twist_check,
    twist_jet,
)

f = MartinetProfile([0.3, -1.0, 0.0, 1.0])
u = PolynomialField.parse("x1^2*x3 - x2*x3 + x1*x2^2")
p = np.array([0.4, -1.2, 0.7])

m = twist_jet(euclidean_jet(u, p), f, p)
print("twisted gradient :", m.eta)
print("direct gradient  :", semi_horizontal_gradient(u, f, p))
print("twisted Hessian  :", m.X)
print("direct Hessian   :", symmetrized_hessian(u, f, p))

rep = twist_check(samples=1000, seed=1)
print(f"1000 random fields and profiles: worst relative error {rep['max_rel_error']:.2e}")
