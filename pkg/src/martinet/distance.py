"""
Carnot-Caratheodory distance: bracket order, the ball-box quasi-distance and
a numerical upper bound from optimised horizontal curves.

Horizontal curves are parametrised on [0, 1] by piecewise-constant controls
(u1, u2) on N equal segments,

    x1' = u1,   x2' = u2,   x3' = f(x1) u2,

and integrated exactly segment by segment.  The optimiser minimises the
energy sum_k dt (u1_k^2 + u2_k^2) under the endpoint constraint with an
augmented-penalty loop started from a feasible point; the reported value is the length of the best
curve found, so it bounds the distance from above up to the endpoint slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .core import MartinetProfile, Point

__all__ = [
    "ControlCurve",
    "DistanceConvergenceError",
    "bracket_order",
    "ball_box_distance",
    "optimal_curve",
    "cc_upper_bound",
    "scaling_exponent",
    "ENDPOINT_TOL",
]

ENDPOINT_TOL = 1e-6
_PROJECTION_STEPS = 50


class DistanceConvergenceError(RuntimeError):
    """Endpoint mismatch still above tolerance after the iteration budget."""

    def __init__(self, message, mismatch):
        super().__init__(message)
        self.mismatch = mismatch


def bracket_order(f: MartinetProfile, x1: float) -> int:
    """Smallest k >= 1 with f^(k)(x1) != 0.

    Derivative values below 1e-12 times the magnitude of the contributing
    terms count as zero, so rounding in Horner's scheme does not hide a
    genuine zero of f'.
    """
    ax = abs(float(x1))
    for k in range(1, f.degree + 1):
        coeffs = f.derivative_coeffs(k)
        scale = sum(abs(c) * ax**j for j, c in enumerate(coeffs))
        if abs(f(x1, k)) > 1e-12 * scale:
            return k
    # unreachable for valid profiles: the top derivative is a nonzero constant
    raise AssertionError("profile has f' identically zero")


def ball_box_distance(p, q, f: MartinetProfile) -> float:
    """|dx1| + |dx2| + |dx3|^(1/(r+1)), r the bracket order at p's x1."""
    p, q = Point.of(p), Point.of(q)
    r = bracket_order(f, p.x1)
    return abs(p.x1 - q.x1) + abs(p.x2 - q.x2) + abs(p.x3 - q.x3) ** (1.0 / (r + 1))


@dataclass
class ControlCurve:
    """Horizontal curve driven by piecewise-constant controls on [0, T]."""

    u1: np.ndarray
    u2: np.ndarray
    start: Point
    T: float = 1.0

    def __post_init__(self):
        self.u1 = np.asarray(self.u1, dtype=float)
        self.u2 = np.asarray(self.u2, dtype=float)
        self.start = Point.of(self.start)
        if self.u1.shape != self.u2.shape or self.u1.ndim != 1:
            raise ValueError("u1 and u2 must be 1-d arrays of equal length")
        if not self.T > 0:
            raise ValueError("duration must be positive")

    @property
    def N(self) -> int:
        return len(self.u1)

    @property
    def dt(self) -> float:
        return self.T / self.N

    def nodes(self, f: MartinetProfile) -> np.ndarray:
        """Trajectory at the N+1 segment boundaries, shape (N+1, 3)."""
        dt = self.dt
        x1 = self.start.x1 + dt * np.concatenate([[0.0], np.cumsum(self.u1)])
        x2 = self.start.x2 + dt * np.concatenate([[0.0], np.cumsum(self.u2)])
        inc = self.u2 * f.line_integral(x1[:-1], self.u1, dt)
        x3 = self.start.x3 + np.concatenate([[0.0], np.cumsum(inc)])
        return np.column_stack([x1, x2, x3])

    def endpoint(self, f: MartinetProfile) -> np.ndarray:
        return self.nodes(f)[-1]

    def length(self) -> float:
        return float(self.dt * np.sum(np.hypot(self.u1, self.u2)))

    def energy(self) -> float:
        return float(self.dt * np.sum(self.u1**2 + self.u2**2))

    def reverse_from(self, f: MartinetProfile) -> "ControlCurve":
        """The same path traversed backwards, starting at this curve's endpoint."""
        return ControlCurve(-self.u1[::-1], -self.u2[::-1], Point.of(self.endpoint(f)), self.T)


def _endpoint_and_jacobian(f: MartinetProfile, p: np.ndarray, u1, u2, dt):
    """Endpoint of the control system and its Jacobian w.r.t. (u1, u2)."""
    N = len(u1)
    a = p[0] + dt * np.concatenate([[0.0], np.cumsum(u1)[:-1]])
    deg = f.degree
    # I(a, c) = int_0^dt f(a + c s) ds and its partials, as finite Taylor sums
    I = np.zeros(N)
    dIda = np.zeros(N)
    dIdc = np.zeros(N)
    for m in range(deg + 1):
        cm = u1**m
        I += f(a, m) * cm * dt ** (m + 1) / math.factorial(m + 1)
        dIda += f(a, m + 1) * cm * dt ** (m + 1) / math.factorial(m + 1)
        dIdc += f(a, m + 1) * cm * dt ** (m + 2) / (math.factorial(m) * (m + 2))
    end = np.array([a[-1] + dt * u1[-1], p[1] + dt * np.sum(u2), p[2] + np.sum(u2 * I)])
    J = np.zeros((3, 2 * N))
    J[0, :N] = dt
    J[1, N:] = dt
    # later segments start further along x1: tail sums of u2 * dI/da
    tail = np.concatenate([np.cumsum((u2 * dIda)[::-1])[::-1][1:], [0.0]])
    J[2, :N] = u2 * dIdc + dt * tail
    J[2, N:] = I
    return end, J


def optimal_curve(p, q, f: MartinetProfile, N: int = 24, iters: int = 40, seed: int = 0,
                  restarts: int = 8, tol: float = ENDPOINT_TOL) -> ControlCurve:
    """Shortest horizontal curve from p to q found by direct transcription.

    Controls are optimised in units of the ball-box scale of (p, q), so the
    problem is dilation invariant for homogeneous profiles.  Each of the
    ``restarts`` seeded starting points is first pushed onto the endpoint
    constraint by Gauss-Newton steps, then runs at most ``iters``
    augmented-penalty rounds with geometric weight escalation, and is
    projected back onto the constraint at the end.  The shortest curve
    whose endpoint is within ``tol`` of q is returned.

    Notes
    -----
    The projection matters where f' vanishes: zero controls are a critical
    point of the x3 endpoint map there, and a pure penalty descent started
    near the origin of control space collapses onto it.
    """
    if N < 4:
        raise ValueError("need at least 4 segments")
    if iters < 1:
        raise ValueError("iteration budget must be >= 1")
    p, q = Point.of(p), Point.of(q)
    pa, qa = p.as_array(), q.as_array()
    if np.array_equal(pa, qa):
        return ControlCurve(np.zeros(N), np.zeros(N), p)
    s = ball_box_distance(p, q, f)
    r = bracket_order(f, p.x1)
    w = np.array([s, s, s ** (r + 1)]) if s < 1 else np.ones(3)
    dt = 1.0 / N
    rng = np.random.default_rng(seed)

    def constraint(v):
        end, J = _endpoint_and_jacobian(f, pa, s * v[:N], s * v[N:], dt)
        return (end - qa) / w, s * J / w[:, None]

    def project(v):
        for _ in range(_PROJECTION_STEPS):
            c, J = constraint(v)
            if np.linalg.norm(c) < 1e-13:
                break
            v = v - np.linalg.lstsq(J, c, rcond=None)[0]
        return v

    best = None
    mismatch_seen = math.inf
    straight = np.concatenate([np.full(N, (qa[0] - pa[0]) / s), np.full(N, (qa[1] - pa[1]) / s)])
    starts = [straight + 0.1 * rng.standard_normal(2 * N)]
    starts += [rng.standard_normal(2 * N) for _ in range(restarts - 1)]
    for v in starts:
        v = project(v)
        lam = np.zeros(3)
        mu = 100.0
        prev = math.inf
        for _ in range(iters):

            def obj(v, lam=lam, mu=mu):
                c, Jc = constraint(v)
                val = dt * v @ v + lam @ c + 0.5 * mu * c @ c
                grad = 2 * dt * v + Jc.T @ (lam + mu * c)
                return val, grad

            v = minimize(obj, v, jac=True, method="BFGS", options={"gtol": 1e-11, "maxiter": 2000}).x
            c, _ = constraint(v)
            cn = float(np.linalg.norm(c))
            lam = lam + mu * c
            if cn > 0.25 * prev:
                mu *= 10.0
            prev = cn
            if cn < 1e-9:
                break
        v = project(v)
        curve = ControlCurve(s * v[:N], s * v[N:], p)
        err = float(np.linalg.norm(curve.endpoint(f) - qa))
        if not np.all(np.isfinite(curve.u1)) or not np.all(np.isfinite(curve.u2)):
            err = math.inf
        mismatch_seen = min(mismatch_seen, err)
        if err <= tol and (best is None or curve.length() < best.length()):
            best = curve
    if best is None:
        raise DistanceConvergenceError(
            f"endpoint mismatch {mismatch_seen:.3e} > {tol:.0e} after {iters} rounds; "
            "raise N or the iteration budget",
            mismatch_seen,
        )
    return best


def cc_upper_bound(p, q, f: MartinetProfile, N: int = 24, iters: int = 40, seed: int = 0,
                   restarts: int = 8) -> float:
    """Length of the best horizontal curve joining p and q (an upper bound on d(p, q))."""
    return optimal_curve(p, q, f, N=N, iters=iters, seed=seed, restarts=restarts).length()


def scaling_exponent(f: MartinetProfile, base, direction: int, deltas, N: int = 24,
                     iters: int = 40, seed: int = 0, restarts: int = 8) -> float:
    """Least-squares slope of log cc_upper_bound(base, base + delta e_axis) against log delta."""
    deltas = np.asarray(deltas, dtype=float)
    if len(deltas) < 4 or np.any(deltas <= 0):
        raise ValueError("need at least 4 positive deltas")
    if np.log10(deltas.max() / deltas.min()) < 2 - 1e-9:
        raise ValueError("deltas must span at least two decades")
    if direction not in (1, 2, 3):
        raise ValueError("direction is a coordinate axis 1, 2 or 3")
    base = Point.of(base).as_array()
    e = np.zeros(3)
    e[direction - 1] = 1.0
    lengths = [
        cc_upper_bound(base, base + d * e, f, N=N, iters=iters, seed=seed, restarts=restarts)
        for d in deltas
    ]
    slope, _ = np.polyfit(np.log(deltas), np.log(lengths), 1)
    return float(slope)
