"""
Numerical harnesses for the doubling-of-variables machinery.

Penalised suprema

    M = sup_{p, q in box} u(p) - v(q) - penalty(p - q)

are computed on the product lattice of the box with itself.  Every penalty
used here is a sum of per-axis terms, so the inner supremum over q is a
max-plus convolution that factors into three one-dimensional passes, one
per axis.  An exhaustive search over grid_n^3 x grid_n^3 pairs then costs
O(grid_n^4) instead of O(grid_n^6), and stays exact: the passes visit every
pair.  Three rounds of local refinement (spacing divided by 4 each round)
follow around the incumbent.

Ties resolve to the first maximiser: p lexicographically smallest, then q
by first index along x3, x2, x1 in the order the passes are undone.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    MartinetProfile,
    Point,
    random_polynomial_field,
    semi_horizontal_gradient,
    symmetrized_hessian,
)
from .jets import euclidean_jet, imp_eta_pair, quartic_penalty, twist_jet, vector_gap
from .solver import BoxDomain, GridFunction, SolverConfig, solve_infinity_laplace

__all__ = [
    "PenaltyReport",
    "GapTable",
    "penalty_argmax",
    "penalty_sweep",
    "iterated_penalty_argmax",
    "escalation_paths",
    "default_family",
    "pinned_family",
    "gap_asymptotics",
    "comparison_harness",
    "random_profile",
    "twist_check",
    "REFINE_ROUNDS",
    "REFINE_FACTOR",
]

REFINE_ROUNDS = 3
REFINE_FACTOR = 4

Field = Callable  # PolynomialField or vectorised callable of (x1, x2, x3)


@dataclass
class PenaltyReport:
    """Outcome of one penalised supremum.

    ``M == u(p) - v(q) - penalty`` holds by construction: M is recomputed
    from the reported pair, not carried over from lattice arithmetic.
    """

    tau: float | tuple
    M: float
    p: Point
    q: Point
    phi: float
    penalty: float
    vector_gap: float = math.nan
    eta_gap: float = math.nan
    slices: dict = field(default_factory=dict)

    @property
    def tau_phi(self) -> float:
        return self.penalty

    def as_record(self) -> dict:
        rec = {
            "tau": list(self.tau) if isinstance(self.tau, tuple) else self.tau,
            "M": self.M,
            "p": list(self.p),
            "q": list(self.q),
            "phi": self.phi,
            "tau_phi": self.penalty,
            "vector_gap": self.vector_gap,
            "eta_gap": self.eta_gap,
        }
        for name, sub in self.slices.items():
            rec[f"{name}"] = sub.M
            rec[f"{name}_p"] = list(sub.p)
            rec[f"{name}_q"] = list(sub.q)
        return rec


def _terms_quartic(tau):
    return (
        lambda d: tau * 0.5 * d**2,
        lambda d: tau * 0.25 * d**4,
        lambda d: tau * 0.25 * d**4,
    )


def _terms_quadratic(tau):
    return tuple((lambda d, t=t: 0.5 * t * d**2) for t in tau)


def _tabulate(u: Field, axes) -> np.ndarray:
    X = np.meshgrid(*axes, indexing="ij")
    return np.broadcast_to(np.asarray(u(*X), dtype=float), X[0].shape)


def _maxplus_search(U, V, pa, qa, terms, tied):
    """Exact argmax of U[a] - V[b] - sum_k terms[k](pa_k[a_k] - qa_k[b_k]).

    ``tied[k]`` forces a_k == b_k (requires pa[k] == qa[k]).  Returns the
    best value and the index triples of p and q.
    """
    W = -V
    back = []
    for k in range(3):
        d = pa[k][:, None] - qa[k][None, :]
        if tied[k]:
            K = np.where(d == 0.0, 0.0, -np.inf)
        else:
            K = -terms[k](d)
        # W has p-indices on axes < k and q-indices on axes >= k
        Wk = np.moveaxis(W, k, -1)[..., None, :]  # (..., 1, nb_k)
        T = Wk + K
        arg = np.argmax(T, axis=-1)
        W = np.moveaxis(np.take_along_axis(T, arg[..., None], axis=-1)[..., 0], -1, k)
        back.append(np.moveaxis(arg, -1, k))
    total = U + W
    flat = int(np.argmax(total))
    ia = np.unravel_index(flat, total.shape)
    ib = [0, 0, 0]
    # undo the passes: pass k's table is indexed by (a_<=k, b_>k)
    for k in (2, 1, 0):
        idx = tuple(ia[j] if j <= k else ib[j] for j in range(3))
        ib[k] = int(back[k][idx])
    return float(total[ia]), tuple(int(i) for i in ia), tuple(ib)


def _local_axis(center: float, step: float, lo: float, hi: float) -> np.ndarray:
    pts = center + step * np.arange(-REFINE_FACTOR, REFINE_FACTOR + 1)
    pts[REFINE_FACTOR] = center
    keep = (pts >= lo) & (pts <= hi)
    return pts[keep]


def _search(u, v, dom: BoxDomain, terms, grid_n: int, tied=(False, False, False)):
    lo, hi = np.array(dom.lower), np.array(dom.upper)
    axes = [np.linspace(lo[k], hi[k], grid_n) for k in range(3)]
    U, V = _tabulate(u, axes), _tabulate(v, axes)
    _, ia, ib = _maxplus_search(U, V, axes, axes, terms, tied)
    p = np.array([axes[k][ia[k]] for k in range(3)])
    q = np.array([axes[k][ib[k]] for k in range(3)])
    step = (hi - lo) / (grid_n - 1)
    for _ in range(REFINE_ROUNDS):
        step = step / REFINE_FACTOR
        pa = [_local_axis(p[k], step[k], lo[k], hi[k]) for k in range(3)]
        qa = [pa[k] if tied[k] else _local_axis(q[k], step[k], lo[k], hi[k]) for k in range(3)]
        _, ia, ib = _maxplus_search(_tabulate(u, pa), _tabulate(v, qa), pa, qa, terms, tied)
        p = np.array([pa[k][ia[k]] for k in range(3)])
        q = np.array([qa[k][ib[k]] for k in range(3)])
    return p, q


def _objective(u, v, terms, p, q) -> tuple[float, float]:
    pen = float(sum(terms[k](p[k] - q[k]) for k in range(3)))
    return float(u(*p) - v(*q)) - pen, pen


def _check_grid(grid_n: int):
    if int(grid_n) != grid_n or grid_n < 8:
        raise ValueError(f"grid_n must be an integer >= 8, got {grid_n}")


def _report(u, v, terms, tau, p, q, f: MartinetProfile | None, imp_tau=None, best_of=()):
    """Assemble a report, keeping the best pair among (p, q) and ``best_of``."""
    M, pen = _objective(u, v, terms, p, q)
    for pp, qq in best_of:
        M2, pen2 = _objective(u, v, terms, pp, qq)
        if M2 > M:
            M, pen, p, q = M2, pen2, pp, qq
    rep = PenaltyReport(tau, M, Point(*map(float, p)), Point(*map(float, q)), quartic_penalty(p, q), pen)
    if f is not None:
        rep.vector_gap = vector_gap(p, q, f)[0]
        if imp_tau is not None:
            plus, minus = imp_eta_pair(p, q, imp_tau, f)
            rep.eta_gap = plus.norm2() - minus.norm2()
    return rep


def penalty_argmax(u: Field, v: Field, dom: BoxDomain, tau: float, grid_n: int = 32,
                   f: MartinetProfile | None = None) -> PenaltyReport:
    """sup of u(p) - v(q) - tau * phi(p, q) over the closed box, phi the quartic penalty.

    Parameters
    ----------
    u, v : PolynomialField or callable
        Vectorised fields of (x1, x2, x3).
    dom : BoxDomain
        Only the bounds are used.
    tau : float
        Penalty weight, > 0.
    grid_n : int
        Lattice points per axis of the exhaustive stage, >= 8.
    f : MartinetProfile, optional
        When given, the report carries the vector gap at the argmax pair.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    _check_grid(grid_n)
    terms = _terms_quartic(float(tau))
    p, q = _search(u, v, dom, terms, grid_n)
    return _report(u, v, terms, float(tau), p, q, f)


def penalty_sweep(u: Field, v: Field, dom: BoxDomain, taus: Sequence[float], grid_n: int = 32,
                  f: MartinetProfile | None = None) -> list:
    """penalty_argmax over increasing tau, sharing candidate pairs.

    A pair found at one tau is feasible at every other, so each report keeps
    the best of all pairs found in the sweep.  This never lowers an
    estimate and makes M nonincreasing in tau, as the exact suprema are.
    """
    taus = [float(t) for t in taus]
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError("taus must be strictly increasing")
    raw = [penalty_argmax(u, v, dom, t, grid_n) for t in taus]
    pairs = [(r.p.as_array(), r.q.as_array()) for r in raw]
    return [_report(u, v, _terms_quartic(t), t, *pairs[i], f, best_of=pairs) for i, t in enumerate(taus)]


def iterated_penalty_argmax(u: Field, v: Field, dom: BoxDomain, tau, grid_n: int = 32,
                            f: MartinetProfile | None = None) -> PenaltyReport:
    """Supremum under 0.5 * sum_k tau_k (x_k - y_k)^2, plus the pinned suprema.

    The report's ``slices`` hold ``M_tau2_tau3`` (pairs with x1 = y1) and
    ``M_tau3`` (x1 = y1 and x2 = y2), computed with the same search.  A
    pinned maximiser is feasible for the less constrained problem, so it
    is offered as a candidate there; the order
    M_tau3 <= M_tau2_tau3 <= M therefore holds for the reported values.
    """
    tau = tuple(float(t) for t in np.broadcast_to(np.asarray(tau, dtype=float), (3,)))
    if not all(t > 0 for t in tau):
        raise ValueError("tau components must be positive")
    _check_grid(grid_n)
    terms = _terms_quadratic(tau)
    p3, q3 = _search(u, v, dom, terms, grid_n, tied=(True, True, False))
    s3 = _report(u, v, terms, tau, p3, q3, f, imp_tau=tau)
    p23, q23 = _search(u, v, dom, terms, grid_n, tied=(True, False, False))
    s23 = _report(u, v, terms, tau, p23, q23, f, imp_tau=tau, best_of=[(p3, q3)])
    p, q = _search(u, v, dom, terms, grid_n)
    rep = _report(u, v, terms, tau, p, q, f, imp_tau=tau,
                  best_of=[(s23.p.as_array(), s23.q.as_array())])
    rep.slices = {"M_tau2_tau3": s23, "M_tau3": s3}
    return rep


def escalation_paths(u: Field, v: Field, dom: BoxDomain, tau_final, tau_start: float = 10.0,
                     grid_n: int = 16) -> dict:
    """M along every order of escalating the three weights by factors of 10.

    Each path starts at tau_start in all components and raises one
    component at a time, in the given axis order, up to its final value.
    Returns {order: [M values along the path]}; all paths end at the same
    weight vector, so their last entries are comparable.
    """
    tau_final = np.broadcast_to(np.asarray(tau_final, dtype=float), (3,))
    if np.any(tau_final < tau_start):
        raise ValueError("final weights must be >= tau_start")
    cache: dict = {}

    def M_at(t):
        key = tuple(float(x) for x in t)
        if key not in cache:
            cache[key] = iterated_penalty_argmax(u, v, dom, key, grid_n).M
        return cache[key]

    out = {}
    for order in itertools.permutations(range(3)):
        t = np.full(3, float(tau_start))
        path = [M_at(t)]
        for k in order:
            while t[k] < tau_final[k] * (1 - 1e-12):
                t[k] = min(t[k] * 10.0, tau_final[k])
                path.append(M_at(t))
        out[tuple(k + 1 for k in order)] = path
    return out


def default_family(c2: float = 1.0, c3: float = 1.0):
    """p(t) = (t, c2 sqrt(t), c3 sqrt(t)), q = 0, so that phi ~ t^2."""

    def family(t):
        r = math.sqrt(t)
        return (t, c2 * r, c3 * r), (0.0, 0.0, 0.0)

    return family


def pinned_family(c2: float = 1.0, c3: float = 1.0, x1: float = 0.5):
    """Like :func:`default_family` but with x1 = y1, so the vector gap vanishes."""

    def family(t):
        r = math.sqrt(t)
        return (x1, c2 * r, c3 * r), (x1, 0.0, 0.0)

    return family


@dataclass
class GapTable:
    rows: list
    gap_slope: float
    eta_slope: float


def _loglog_slope(x, y) -> float:
    x, y = np.abs(np.asarray(x, dtype=float)), np.abs(np.asarray(y, dtype=float))
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def gap_asymptotics(f: MartinetProfile, family=None, t_values=None, tau=(1.0, 1.0, 1.0)) -> GapTable:
    """Vector gap and IMP eta gap along a shrinking family of pairs.

    ``family(t)`` returns (p, q).  Rows hold t, phi, the vector gap
    |Y_p|^2 - |Y_q|^2 and |eta+|^2 - |eta-|^2 at weights ``tau``.
    ``gap_slope`` fits log|gap| against log phi and ``eta_slope``
    log|eta gap| against log t; either is NaN when its column has fewer
    than two nonzero entries.
    """
    family = family or default_family()
    t_values = np.logspace(-4, -1, 7) if t_values is None else np.asarray(t_values, dtype=float)
    if len(t_values) < 4 or np.any(t_values <= 0):
        raise ValueError("need at least 4 positive t values")
    if np.log10(t_values.max() / t_values.min()) < 3 - 1e-9:
        raise ValueError("t values must span at least three decades")
    rows = []
    for t in t_values:
        p, q = family(float(t))
        gap, phi = vector_gap(p, q, f)
        plus, minus = imp_eta_pair(p, q, tau, f)
        rows.append({"t": float(t), "phi": phi, "gap": gap, "eta_gap": plus.norm2() - minus.norm2()})
    gap_slope = _loglog_slope([r["phi"] for r in rows], [r["gap"] for r in rows])
    eta_slope = _loglog_slope([r["t"] for r in rows], [r["eta_gap"] for r in rows])
    return GapTable(rows, gap_slope, eta_slope)


def comparison_harness(dom: BoxDomain, f: MartinetProfile, g1, g2, cfg: SolverConfig = SolverConfig(),
                       h=None, seed: int = 0) -> float:
    """max over the interior of (u1 - u2)_+ for the solutions with data g1 <= g2.

    ``h`` defaults to 32 cells per axis.
    """
    if h is None:
        h = (np.array(dom.upper) - np.array(dom.lower)) / 32
    b1 = GridFunction.from_domain(dom.with_boundary(g1), h)
    b2 = GridFunction.from_domain(dom.with_boundary(g2), h)
    bnd = ~b1.interior_mask
    if np.any(b1.values[bnd] > b2.values[bnd]):
        worst = float(np.max(b1.values[bnd] - b2.values[bnd]))
        raise ValueError(f"need g1 <= g2 on the boundary lattice, exceeded by {worst:.3e}")
    u1 = solve_infinity_laplace(dom.with_boundary(g1), f, cfg, h, seed=seed)
    u2 = solve_infinity_laplace(dom.with_boundary(g2), f, cfg, h, seed=seed)
    return float(np.max(np.maximum(u1.values - u2.values, 0.0)[u1.interior_mask]))


def random_profile(rng: np.random.Generator, degree: int = 4) -> MartinetProfile:
    """Profile with coefficients uniform in [-1, 1] and f' not identically zero."""
    while True:
        coeffs = rng.uniform(-1.0, 1.0, degree + 1)
        if np.any(coeffs[1:] != 0):
            return MartinetProfile(coeffs)


def twist_check(samples: int = 1000, seed: int = 0, degree: int = 4, box: float = 2.0) -> dict:
    """Twist exact Euclidean jets of random fields and compare with the direct Martinet jet.

    Each sample draws a field u and a profile f of degree <= ``degree`` and
    a point in [-box, box]^3.  The error of a sample is the largest entry of
    the difference divided by the largest entry of the directly computed
    jet (gradient and Hessian together).  Returns the worst error and the
    sample index where it occurred.
    """
    rng = np.random.default_rng(seed)
    worst, where = 0.0, -1
    for i in range(samples):
        u = random_polynomial_field(rng, degree)
        f = random_profile(rng, degree)
        p = Point(*rng.uniform(-box, box, 3))
        jm = twist_jet(euclidean_jet(u, p), f, p)
        got = np.concatenate([jm.eta.as_array(), jm.X.as_array().ravel()])
        ref = np.concatenate([
            semi_horizontal_gradient(u, f, p).as_array(),
            symmetrized_hessian(u, f, p).as_array().ravel(),
        ])
        scale = np.max(np.abs(ref))
        err = float(np.max(np.abs(got - ref)) / scale) if scale > 0 else float(np.max(np.abs(got)))
        if err > worst:
            worst, where = err, i
    return {"samples": samples, "max_rel_error": worst, "worst_sample": where}
