"""Doubling variables: penalised suprema as the penalty grows.

M_tau = sup u(p) - v(q) - tau phi(p, q) decreases to sup (u - v) while the
maximising pairs merge and tau phi at the maximiser tends to zero.  The
iterated version pins one coordinate at a time.
"""

from martinet import BoxDomain, PolynomialField, escalation_paths, iterated_penalty_argmax, penalty_sweep

u = PolynomialField.parse("1 - x1^2 - x2^2 - x3^2 + 0.3*x1*x2")
v = PolynomialField.parse("0.2*x3")
dom = BoxDomain.cube(1.0)

for rep in penalty_sweep(u, v, dom, [1e1, 1e2, 1e3, 1e4, 1e5], grid_n=24):
    print(f"tau {rep.tau:8.0e}: M {rep.M:.6f}, tau*phi {rep.tau_phi:.2e}, |p - q| "
          f"{sum((a - b) ** 2 for a, b in zip(rep.p, rep.q)) ** 0.5:.2e}")

rep = iterated_penalty_argmax(u, v, dom, (1e4, 1e2, 1e1), grid_n=16)
print(f"iterated: M {rep.M:.6f} >= {rep.slices['M_tau2_tau3'].M:.6f} >= {rep.slices['M_tau3'].M:.6f}")

for order, path in escalation_paths(u, v, dom, 1e4, grid_n=12).items():
    print("escalation order", order, "ends at", f"{path[-1]:.6f}")
