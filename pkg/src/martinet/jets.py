"""
Euclidean to Martinet jet twisting and the jet-pair quantities used by the
doubling-of-variables estimates.

A Euclidean second-order jet (eta, X) in R^3 x S^3 of a function at p maps
to the Martinet jet

    (B(p) eta,  A(p) X A(p)^T + T(eta, p))

where A holds the coefficients of X1, X2 in the coordinate frame, B adds
the row of X3 = f'(x1) d/dx3, and T is the twisting term coming from the
non-commuting frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (
    HorizontalVector,
    MartinetProfile,
    Point,
    PolynomialField,
    SemiHorizontalVector,
    Sym2,
)

__all__ = [
    "Sym3",
    "EuclideanJet2",
    "MartinetJet2",
    "PenaltyJets",
    "coefficient_matrix_A",
    "coefficient_matrix_B",
    "twisting_matrix_T",
    "twist_jet",
    "euclidean_jet",
    "quartic_penalty",
    "penalty_jet_pair",
    "vector_gap",
    "imp_eta_pair",
]


@dataclass(frozen=True)
class Sym3:
    """3x3 symmetric matrix, upper triangle only."""

    x11: float
    x12: float
    x13: float
    x22: float
    x23: float
    x33: float

    @classmethod
    def from_array(cls, a) -> "Sym3":
        a = np.asarray(a, dtype=float)
        s = 0.5 * (a + a.T)
        return cls(s[0, 0], s[0, 1], s[0, 2], s[1, 1], s[1, 2], s[2, 2])

    @classmethod
    def zeros(cls) -> "Sym3":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                [self.x11, self.x12, self.x13],
                [self.x12, self.x22, self.x23],
                [self.x13, self.x23, self.x33],
            ]
        )


@dataclass(frozen=True)
class EuclideanJet2:
    eta: tuple
    X: Sym3

    def __post_init__(self):
        object.__setattr__(self, "eta", tuple(float(v) for v in self.eta))
        if len(self.eta) != 3:
            raise ValueError("Euclidean jet gradient must have 3 components")


@dataclass(frozen=True)
class MartinetJet2:
    eta: SemiHorizontalVector
    X: Sym2


def coefficient_matrix_A(f: MartinetProfile, p) -> np.ndarray:
    p = Point.of(p)
    return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, f(p.x1)]])


def coefficient_matrix_B(f: MartinetProfile, p) -> np.ndarray:
    p = Point.of(p)
    return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, f(p.x1)], [0.0, 0.0, f(p.x1, 1)]])


def twisting_matrix_T(eta3: float, f: MartinetProfile, p) -> Sym2:
    p = Point.of(p)
    return Sym2(0.0, 0.5 * eta3 * f(p.x1, 1), 0.0)


def twist_jet(j: EuclideanJet2, f: MartinetProfile, p) -> MartinetJet2:
    """Map a Euclidean 2-jet at p to the corresponding Martinet 2-jet."""
    p = Point.of(p)
    eta = np.asarray(j.eta)
    A = coefficient_matrix_A(f, p)
    B = coefficient_matrix_B(f, p)
    XA = A @ j.X.as_array() @ A.T
    X = Sym2.from_array(XA) + twisting_matrix_T(eta[2], f, p)
    return MartinetJet2(SemiHorizontalVector(*(B @ eta)), X)


def euclidean_jet(u: PolynomialField, p) -> EuclideanJet2:
    """Exact Euclidean gradient and Hessian of a polynomial field."""
    return EuclideanJet2(tuple(u.euclidean_gradient(p)), Sym3.from_array(u.euclidean_hessian(p)))


def quartic_penalty(p, q) -> float:
    """(x1-y1)^2/2 + (x2-y2)^4/4 + (x3-y3)^4/4."""
    d = Point.of(p).as_array() - Point.of(q).as_array()
    return 0.5 * d[0] ** 2 + 0.25 * d[1] ** 4 + 0.25 * d[2] ** 4


class PenaltyJets(NamedTuple):
    upsilon_p: SemiHorizontalVector
    upsilon_q: SemiHorizontalVector
    phi: float


def penalty_jet_pair(p, q, tau: float, f: MartinetProfile) -> PenaltyJets:
    """First-order jet vectors produced by the quartic penalty at (p, q).

    Returns the per-unit-``tau`` vectors B(p) grad_p phi and
    B(q) (-grad_q phi) together with phi(p, q); the jets themselves are
    ``tau`` times these vectors, which is left to the caller.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    p, q = Point.of(p), Point.of(q)
    d = p.as_array() - q.as_array()
    grad_p = np.array([d[0], d[1] ** 3, d[2] ** 3])
    # the penalty depends on p - q only, so -grad_q phi == grad_p phi
    up = coefficient_matrix_B(f, p) @ grad_p
    uq = coefficient_matrix_B(f, q) @ grad_p
    return PenaltyJets(SemiHorizontalVector(*up), SemiHorizontalVector(*uq), quartic_penalty(p, q))


def vector_gap(p, q, f: MartinetProfile) -> tuple[float, float]:
    """(|Upsilon_p|^2 - |Upsilon_q|^2, phi(p, q)) at unit penalty weight.

    Computed as the sum of (a_p - a_q)(a_p + a_q) over components, with
    Upsilon_p - Upsilon_q = (B(p) - B(q)) grad phi formed directly, so the
    gap keeps its relative accuracy when it is far below |Upsilon|^2.
    """
    p, q = Point.of(p), Point.of(q)
    d = p.as_array() - q.as_array()
    g = np.array([d[0], d[1] ** 3, d[2] ** 3])
    fp, fq = f(p.x1), f(q.x1)
    diff = np.array([0.0, (fp - fq) * g[2], (f(p.x1, 1) - f(q.x1, 1)) * g[2]])
    summ = (coefficient_matrix_B(f, p) + coefficient_matrix_B(f, q)) @ g
    return float(diff @ summ), quartic_penalty(p, q)


def imp_eta_pair(p, q, tau, f: MartinetProfile) -> tuple[HorizontalVector, HorizontalVector]:
    """Horizontal jet parts produced by the quadratic penalty sum tau_k (x_k - y_k)^2 / 2."""
    tau = np.asarray(tau, dtype=float)
    if tau.shape != (3,) or not np.all(tau > 0):
        raise ValueError("tau must be a 3-vector with positive entries")
    p, q = Point.of(p), Point.of(q)
    g = tau * (p.as_array() - q.as_array())
    plus = HorizontalVector(g[0], g[1] + f(p.x1) * g[2])
    minus = HorizontalVector(g[0], g[1] + f(q.x1) * g[2])
    return plus, minus
