"""
Exact horizontal calculus on Martinet spaces.

The Martinet space is R^3 with the horizontal frame

    X1 = d/dx1,    X2 = d/dx2 + f(x1) d/dx3,

and X3 = [X1, X2] = f'(x1) d/dx3.  The profile ``f`` is a polynomial so
every derivative is exact coefficient arithmetic, and test fields are
sparse polynomials in (x1, x2, x3) so that the operators below can be
checked symbolically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "MartinetProfile",
    "Point",
    "PolynomialField",
    "HorizontalVector",
    "SemiHorizontalVector",
    "Sym2",
    "DegenerateGradientError",
    "profile_eval",
    "vector_field",
    "apply_vector_field",
    "horizontal_gradient",
    "semi_horizontal_gradient",
    "symmetrized_hessian",
    "infinity_laplacian",
    "horizontal_laplacian",
    "q_laplacian",
    "jensen_operator",
    "horizontal_flow",
    "random_polynomial_field",
]


class DegenerateGradientError(ValueError):
    """Raised when an operator needs a negative power of a vanishing gradient."""


def _poly_derivative(coeffs: Sequence[float], order: int) -> list:
    c = list(coeffs)
    for _ in range(order):
        c = [k * c[k] for k in range(1, len(c))]
    return c or [0]


def _horner(coeffs: Sequence[float], x):
    acc = 0 * x
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class MartinetProfile:
    """Polynomial profile f(x1) = sum_k coeffs[k] * x1**k."""

    coeffs: tuple

    def __init__(self, coeffs: Iterable[float]):
        c = list(coeffs)
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        if not all(math.isfinite(float(v)) for v in c):
            raise ValueError("profile coefficients must be finite")
        if not any(v != 0 for v in c[1:]):
            raise ValueError(
                "profile must have a nonzero coefficient of degree >= 1 "
                "(f' identically zero is not bracket generating)"
            )
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def heisenberg(cls) -> "MartinetProfile":
        return cls([0, 1])

    @classmethod
    def monomial(cls, degree: int, scale: float = 1.0) -> "MartinetProfile":
        return cls([0] * degree + [scale])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def derivative_coeffs(self, order: int) -> list:
        return _poly_derivative(self.coeffs, order)

    def __call__(self, x1, order: int = 0):
        return _horner(self.derivative_coeffs(order), x1)

    def line_integral(self, x1, c, t):
        """Integral of f(x1 + c*s) for s in [0, t], by the finite Taylor sum.

        Exact for polynomials and well conditioned for ``c`` near zero, which
        the antiderivative quotient is not.
        """
        total = 0 * (x1 + c + t)
        for k in range(self.degree + 1):
            total = total + self(x1, k) * c**k * t ** (k + 1) / math.factorial(k + 1)
        return total

    def __str__(self) -> str:
        terms = [f"{c:g}*x1^{k}" for k, c in enumerate(self.coeffs) if c != 0]
        return " + ".join(terms) or "0"


def profile_eval(f: MartinetProfile, x1, order: int = 0):
    if order < 0:
        raise ValueError("derivative order must be nonnegative")
    return f(x1, order)


@dataclass(frozen=True)
class Point:
    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x1, self.x2, self.x3)):
            raise ValueError(f"point coordinates must be finite, got {tuple(self)}")

    def __iter__(self):
        return iter((self.x1, self.x2, self.x3))

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3], dtype=float)

    @classmethod
    def of(cls, p) -> "Point":
        if isinstance(p, Point):
            return p
        x1, x2, x3 = (float(v) for v in p)
        return cls(x1, x2, x3)


@dataclass(frozen=True)
class HorizontalVector:
    a1: float
    a2: float

    def __iter__(self):
        return iter((self.a1, self.a2))

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.a2], dtype=float)

    def norm2(self) -> float:
        return self.a1 * self.a1 + self.a2 * self.a2


@dataclass(frozen=True)
class SemiHorizontalVector:
    a1: float
    a2: float
    a3: float

    def __iter__(self):
        return iter((self.a1, self.a2, self.a3))

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3], dtype=float)

    @property
    def horizontal(self) -> HorizontalVector:
        return HorizontalVector(self.a1, self.a2)

    def norm2(self) -> float:
        return self.a1 * self.a1 + self.a2 * self.a2 + self.a3 * self.a3


@dataclass(frozen=True)
class Sym2:
    """2x2 symmetric matrix, upper triangle only."""

    m11: float
    m12: float
    m22: float

    @classmethod
    def zeros(cls) -> "Sym2":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, a) -> "Sym2":
        a = np.asarray(a, dtype=float)
        return cls(a[0, 0], 0.5 * (a[0, 1] + a[1, 0]), a[1, 1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m12, self.m22]], dtype=float)

    def quadratic_form(self, eta) -> float:
        e1, e2 = eta
        return self.m11 * e1 * e1 + 2.0 * self.m12 * e1 * e2 + self.m22 * e2 * e2

    def __add__(self, other: "Sym2") -> "Sym2":
        return Sym2(self.m11 + other.m11, self.m12 + other.m12, self.m22 + other.m22)


Exponent = tuple  # (i, j, k) powers of (x1, x2, x3)


class PolynomialField:
    """Sparse real polynomial in (x1, x2, x3).

    Coefficients are kept in a dict keyed by exponent triples; any numeric
    type that supports ``+`` and ``*`` works (floats, ints, Fractions).
    Zero coefficients are dropped on construction.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Exponent, float] | None = None):
        clean = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != 3 or min(exp) < 0:
                raise ValueError(f"bad exponent triple {exp}")
            if c != 0:
                clean[exp] = clean.get(exp, 0) + c
        self._terms = {e: c for e, c in clean.items() if c != 0}

    # construction helpers
    @classmethod
    def constant(cls, c: float) -> "PolynomialField":
        return cls({(0, 0, 0): c})

    @classmethod
    def coordinate(cls, axis: int) -> "PolynomialField":
        """x1, x2 or x3 for ``axis`` in {1, 2, 3}."""
        if axis not in (1, 2, 3):
            raise ValueError("axis must be 1, 2 or 3")
        exp = [0, 0, 0]
        exp[axis - 1] = 1
        return cls({tuple(exp): 1})

    @classmethod
    def from_profile(cls, f: MartinetProfile) -> "PolynomialField":
        return cls({(k, 0, 0): c for k, c in enumerate(f.coeffs)})

    @classmethod
    def parse(cls, text: str) -> "PolynomialField":
        """Parse a polynomial expression in x1, x2, x3 (e.g. ``"x1^2 - 0.5*x1*x3"``)."""
        import sympy

        x1, x2, x3 = sympy.symbols("x1 x2 x3")
        expr = sympy.sympify(text.replace("^", "**"), locals={"x1": x1, "x2": x2, "x3": x3})
        poly = sympy.Poly(sympy.expand(expr), x1, x2, x3)
        return cls({m: float(c) for m, c in poly.terms()})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    # arithmetic
    def _coerce(self, other) -> "PolynomialField":
        if isinstance(other, PolynomialField):
            return other
        return PolynomialField.constant(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, 0) + c
        return PolynomialField(out)

    __radd__ = __add__

    def __neg__(self):
        return PolynomialField({e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
                out[e] = out.get(e, 0) + c1 * c2
        return PolynomialField(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers")
        result = PolynomialField.constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, float)):
            other = PolynomialField.constant(other)
        if not isinstance(other, PolynomialField):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def diff(self, axis: int, order: int = 1) -> "PolynomialField":
        """Exact partial derivative d^order/dx_axis^order, axis in {1, 2, 3}."""
        if axis not in (1, 2, 3):
            raise ValueError("axis must be 1, 2 or 3")
        i = axis - 1
        out = {}
        for e, c in self._terms.items():
            if e[i] < order:
                continue
            factor = math.perm(e[i], order)
            ne = list(e)
            ne[i] -= order
            out[tuple(ne)] = c * factor
        return PolynomialField(out)

    def times_profile(self, f: MartinetProfile, order: int = 0) -> "PolynomialField":
        """Multiply by f^(order)(x1)."""
        return self * PolynomialField({(k, 0, 0): c for k, c in enumerate(f.derivative_coeffs(order))})

    def __call__(self, x1, x2=None, x3=None):
        if x2 is None and x3 is None:
            x1, x2, x3 = x1
        x1, x2, x3 = (np.asarray(v, dtype=float) for v in (x1, x2, x3))
        shape = np.broadcast(x1, x2, x3).shape
        acc = np.zeros(shape)
        for (a, b, c), coef in self._terms.items():
            acc = acc + float(coef) * x1**a * x2**b * x3**c
        return acc if shape else float(acc)

    def euclidean_gradient(self, p) -> np.ndarray:
        p = Point.of(p)
        return np.array([self.diff(k)(*p) for k in (1, 2, 3)])

    def euclidean_hessian(self, p) -> np.ndarray:
        p = Point.of(p)
        H = np.empty((3, 3))
        for i in range(3):
            di = self.diff(i + 1)
            for j in range(i, 3):
                H[i, j] = H[j, i] = di.diff(j + 1)(*p)
        return H

    def __repr__(self) -> str:
        if not self._terms:
            return "PolynomialField(0)"
        parts = []
        for (a, b, c), coef in sorted(self._terms.items(), reverse=True):
            mono = "*".join(
                f"x{k}^{e}" if e > 1 else f"x{k}" for k, e in zip((1, 2, 3), (a, b, c)) if e
            )
            parts.append(f"{coef!r}*{mono}" if mono else f"{coef!r}")
        return "PolynomialField(" + " + ".join(parts) + ")"


def vector_field(u: PolynomialField, f: MartinetProfile, index: int) -> PolynomialField:
    """Symbolic X_index u as a new polynomial field."""
    if index == 1:
        return u.diff(1)
    if index == 2:
        return u.diff(2) + u.diff(3).times_profile(f)
    if index == 3:
        return u.diff(3).times_profile(f, order=1)
    raise ValueError(f"vector field index must be 1, 2 or 3, got {index}")


def apply_vector_field(u: PolynomialField, f: MartinetProfile, index: int, p) -> float:
    return vector_field(u, f, index)(*Point.of(p))


def horizontal_gradient(u: PolynomialField, f: MartinetProfile, p) -> HorizontalVector:
    p = Point.of(p)
    return HorizontalVector(apply_vector_field(u, f, 1, p), apply_vector_field(u, f, 2, p))


def semi_horizontal_gradient(u: PolynomialField, f: MartinetProfile, p) -> SemiHorizontalVector:
    p = Point.of(p)
    return SemiHorizontalVector(*(apply_vector_field(u, f, i, p) for i in (1, 2, 3)))


def symmetrized_hessian(u: PolynomialField, f: MartinetProfile, p) -> Sym2:
    """(D^2 u)* with entries (X_i X_j u + X_j X_i u) / 2."""
    p = Point.of(p)
    x1u = vector_field(u, f, 1)
    x2u = vector_field(u, f, 2)
    x11 = vector_field(x1u, f, 1)(*p)
    x12 = vector_field(x2u, f, 1)(*p)  # X1 X2 u
    x21 = vector_field(x1u, f, 2)(*p)  # X2 X1 u
    x22 = vector_field(x2u, f, 2)(*p)
    return Sym2(x11, 0.5 * (x12 + x21), x22)


def infinity_laplacian(u: PolynomialField, f: MartinetProfile, p) -> float:
    grad = horizontal_gradient(u, f, p)
    return symmetrized_hessian(u, f, p).quadratic_form(grad)


def horizontal_laplacian(u: PolynomialField, f: MartinetProfile, p) -> float:
    H = symmetrized_hessian(u, f, p)
    return H.m11 + H.m22


def q_laplacian(u: PolynomialField, f: MartinetProfile, p, q: float) -> float:
    """Horizontal q-Laplacian div(|grad_0 u|^(q-2) grad_0 u) at a point.

    Uses the expanded product rule

        |g|^(q-2) (X1X1u + X2X2u) + (q-2) |g|^(q-4) <(D^2u)* g, g>,

    with g the horizontal gradient; the second term is taken as 0 when g
    vanishes and q >= 4.  For 2 < q < 4 a vanishing gradient raises
    :class:`DegenerateGradientError`.
    """
    if not (2 <= q < math.inf):
        raise ValueError(f"q must satisfy 2 <= q < inf, got {q}")
    grad = horizontal_gradient(u, f, p)
    H = symmetrized_hessian(u, f, p)
    n2 = grad.norm2()
    lap = H.m11 + H.m22
    if q == 2:
        return lap
    if n2 == 0.0:
        if q < 4:
            raise DegenerateGradientError(
                f"horizontal gradient vanishes at {tuple(Point.of(p))} and q={q} < 4"
            )
        return 0.0
    norm = math.sqrt(n2)
    return norm ** (q - 2) * lap + (q - 2) * norm ** (q - 4) * H.quadratic_form(grad)


def jensen_operator(kind: str, eta, X: Sym2, eps: float) -> float:
    """Jensen's regularised operators.

    ``F``: min(|eta|^2 - eps^2, -<X eta, eta>)
    ``G``: max(eps^2 - |eta|^2, -<X eta, eta>)
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    e1, e2 = eta
    n2 = e1 * e1 + e2 * e2
    form = -X.quadratic_form((e1, e2))
    if kind == "F":
        return min(n2 - eps * eps, form)
    if kind == "G":
        return max(eps * eps - n2, form)
    raise ValueError(f"kind must be 'F' or 'G', got {kind!r}")


def horizontal_flow(f: MartinetProfile, x1, x2, x3, theta, t):
    """Endpoint of the integral curve of cos(theta) X1 + sin(theta) X2 after time t.

    All arguments broadcast.  The x3 increment is sin(theta) times the
    integral of f along the x1 segment, computed exactly.
    """
    c = np.cos(theta)
    s = np.sin(theta)
    return (
        x1 + t * c,
        x2 + t * s,
        x3 + s * f.line_integral(x1, c, t),
    )


def random_polynomial_field(rng: np.random.Generator, degree: int, density: float = 0.6,
                            scale: float = 1.0) -> PolynomialField:
    """Random field with total degree <= ``degree``; a fraction of monomials kept."""
    terms = {}
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            for c in range(degree + 1 - a - b):
                if rng.random() < density:
                    terms[(a, b, c)] = float(rng.uniform(-scale, scale))
    return PolynomialField(terms)
