"""Exact horizontal calculus: sympy oracles, Heisenberg closed forms, finite differences."""

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from martinet.core import (
    DegenerateGradientError,
    HorizontalVector,
    MartinetProfile,
    Point,
    PolynomialField,
    Sym2,
    apply_vector_field,
    horizontal_gradient,
    horizontal_laplacian,
    infinity_laplacian,
    jensen_operator,
    profile_eval,
    q_laplacian,
    random_polynomial_field,
    symmetrized_hessian,
    vector_field,
)

X1, X2, X3 = sp.symbols("x1 x2 x3")

HEIS = MartinetProfile([0, 1])
QUAD = MartinetProfile([0, 0, 0.5])
CUBE = MartinetProfile([0, 0, 0, 1])


def to_sympy(u: PolynomialField):
    return sum(c * X1**a * X2**b * X3**k for (a, b, k), c in u.terms.items())


def sym_frame(f: MartinetProfile):
    fx = sum(c * X1**k for k, c in enumerate(f.coeffs))
    Xs = {
        1: lambda e: sp.diff(e, X1),
        2: lambda e: sp.diff(e, X2) + fx * sp.diff(e, X3),
        3: lambda e: sp.diff(fx, X1) * sp.diff(e, X3),
    }
    return Xs


def sym_eval(expr, p):
    return float(expr.subs({X1: p[0], X2: p[1], X3: p[2]}))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- profile ---------------------------------------------------------------


@pytest.mark.parametrize(
    "f, x1, order, expected",
    [
        (HEIS, 5.0, 1, 1.0),
        (QUAD, 3.0, 1, 3.0),
        (CUBE, 0.0, 2, 0.0),
        (CUBE, 2.0, 3, 6.0),
        (CUBE, 2.0, 4, 0.0),
        (MartinetProfile([1, -2, 3]), 2.0, 0, 9.0),
    ],
)
def test_profile_eval(f, x1, order, expected):
    assert profile_eval(f, x1, order) == expected


def test_profile_rejects_flat():
    with pytest.raises(ValueError, match="degree >= 1"):
        MartinetProfile([3.0])
    with pytest.raises(ValueError):
        MartinetProfile([1.0, 0.0, 0.0])


def test_profile_negative_order():
    with pytest.raises(ValueError):
        profile_eval(HEIS, 0.0, -1)


@given(
    coeffs=st.lists(st.floats(-3, 3), min_size=2, max_size=6).filter(lambda c: any(v != 0 for v in c[1:])),
    x=st.floats(-2, 2),
    t=st.floats(-0.5, 0.5),
    c=st.floats(-1, 1),
)
@settings(max_examples=60, deadline=None)
def test_line_integral_matches_quadrature(coeffs, x, t, c):
    f = MartinetProfile(coeffs)
    # Gauss-Legendre with enough nodes is exact for these degrees
    s, w = np.polynomial.legendre.leggauss(8)
    nodes = 0.5 * t * (s + 1)
    ref = 0.5 * t * np.sum(w * f(x + c * nodes))
    assert f.line_integral(x, c, t) == pytest.approx(ref, abs=1e-12 * (1 + abs(ref)))


# --- vector fields and operators: worked examples ------------------------------


@pytest.mark.parametrize(
    "u, f, index, p, expected",
    [
        ("x2", QUAD, 2, (0.3, -1.0, 2.0), 1.0),
        ("x3", HEIS, 2, (2.0, 0.0, 0.0), 2.0),
        ("x3", QUAD, 3, (3.0, 1.0, 1.0), 3.0),
        ("x1*x3", HEIS, 1, (1.0, 0.0, 4.0), 4.0),
    ],
)
def test_apply_vector_field_examples(u, f, index, p, expected):
    assert apply_vector_field(PolynomialField.parse(u), f, index, p) == expected


def test_horizontal_gradient_examples():
    assert horizontal_gradient(PolynomialField.parse("x1^2 + x3"), HEIS, (1, 0, 0)) == HorizontalVector(2, 1)
    assert horizontal_gradient(PolynomialField.constant(7.0), QUAD, (1, 2, 3)) == HorizontalVector(0, 0)
    assert horizontal_gradient(PolynomialField.parse("x1*x3"), HEIS, (1, 0, 4)) == HorizontalVector(4, 1)


def test_symmetrized_hessian_examples():
    assert symmetrized_hessian(PolynomialField.parse("x1*x3"), HEIS, (1, 0.3, -2)) == Sym2(0, 1.5, 0)
    assert symmetrized_hessian(PolynomialField.parse("2*x1 - x2 + 1"), HEIS, (0, 0, 0)) == Sym2(0, 0, 0)
    # an x3 term survives at x1 = 0: X1X2 (c x3) = c f' while X2X1 (c x3) = 0
    assert symmetrized_hessian(PolynomialField.parse("2*x1 - x2 + 5*x3 + 1"), HEIS, (0, 0, 0)) == Sym2(0, 2.5, 0)
    for f in (HEIS, QUAD, CUBE):
        assert symmetrized_hessian(PolynomialField.parse("x1^2"), f, (0.7, 1, 1)) == Sym2(2, 0, 0)


@pytest.mark.parametrize("f", [HEIS, QUAD, CUBE])
def test_infinity_laplacian_examples(f):
    p = (1.0, -0.4, 2.5)
    assert infinity_laplacian(PolynomialField.parse("3*x1 - 2*x2"), f, p) == 0.0
    assert infinity_laplacian(PolynomialField.parse("x3"), f, p) == 0.0
    assert infinity_laplacian(PolynomialField.parse("x1^2"), f, p) == 8.0


def test_q_laplacian_examples():
    u = PolynomialField.parse("x1^2")
    assert q_laplacian(u, QUAD, (0.2, 1, 1), 2) == 2.0
    assert q_laplacian(u, HEIS, (1.0, 0, 0), 4) == 24.0
    lin = PolynomialField.parse("2*x1 + 3*x2")
    for q in (2, 3, 4.5, 10):
        assert q_laplacian(lin, HEIS, (0.5, 0.5, 0.5), q) == 0.0


def test_q_laplacian_degenerate_gradient():
    u = PolynomialField.parse("x1^2")
    with pytest.raises(DegenerateGradientError):
        q_laplacian(u, HEIS, (0.0, 0.0, 0.0), 3)
    assert q_laplacian(u, HEIS, (0.0, 0.0, 0.0), 4) == 0.0
    assert q_laplacian(u, HEIS, (0.0, 0.0, 0.0), 2) == 2.0
    with pytest.raises(ValueError):
        q_laplacian(u, HEIS, (1, 0, 0), 1.5)


@pytest.mark.parametrize(
    "kind, eta, X, eps, expected",
    [
        ("F", (0.1, 0.0), Sym2.zeros(), 0.1, 0.0),
        ("F", (0.0, 0.0), Sym2.zeros(), 0.1, -0.01),
        ("G", (0.0, 0.0), Sym2(1.0, 2.0, 3.0), 0.1, 0.01),
        ("F", (1.0, 0.0), Sym2(-2.0, 0.0, 0.0), 0.5, 0.75),
        ("G", (1.0, 1.0), Sym2(1.0, 0.0, 1.0), 0.5, -1.75),
    ],
)
def test_jensen_operator(kind, eta, X, eps, expected):
    assert jensen_operator(kind, eta, X, eps) == pytest.approx(expected, abs=1e-15)


def test_jensen_operator_errors():
    with pytest.raises(ValueError):
        jensen_operator("H", (0, 0), Sym2.zeros(), 0.1)
    with pytest.raises(ValueError):
        jensen_operator("F", (0, 0), Sym2.zeros(), 0.0)


# --- symbolic oracle over random fields ----------------------------------


@pytest.mark.parametrize("f", [HEIS, QUAD, CUBE, MartinetProfile([0.5, -1.0, 0.25, 0.3])])
def test_operators_match_sympy(f, rng):
    Xs = sym_frame(f)
    for _ in range(15):
        u = random_polynomial_field(rng, 4)
        e = to_sympy(u)
        p = rng.uniform(-1.5, 1.5, 3)
        for i in (1, 2, 3):
            assert apply_vector_field(u, f, i, p) == pytest.approx(sym_eval(Xs[i](e), p), rel=1e-12, abs=1e-12)
        H = symmetrized_hessian(u, f, p)
        s11 = sym_eval(Xs[1](Xs[1](e)), p)
        s12 = 0.5 * (sym_eval(Xs[1](Xs[2](e)), p) + sym_eval(Xs[2](Xs[1](e)), p))
        s22 = sym_eval(Xs[2](Xs[2](e)), p)
        np.testing.assert_allclose([H.m11, H.m12, H.m22], [s11, s12, s22], rtol=1e-12, atol=1e-12)
        g1, g2 = sym_eval(Xs[1](e), p), sym_eval(Xs[2](e), p)
        ref = s11 * g1 * g1 + 2 * s12 * g1 * g2 + s22 * g2 * g2
        assert infinity_laplacian(u, f, p) == pytest.approx(ref, rel=1e-11, abs=1e-11)


def test_heisenberg_hand_formulas(rng):
    # f = x1: X1 = d1, X2 = d2 + x1 d3, so X1X2 u = u_12 + u_3 + x1 u_13 and
    # X2X2 u = u_22 + 2 x1 u_23 + x1^2 u_33
    for _ in range(100):
        u = random_polynomial_field(rng, 4)
        p = rng.uniform(-2, 2, 3)
        x1 = p[0]
        d = lambda *ax: u.diff(ax[0]) if len(ax) == 1 else d(*ax[1:]).diff(ax[0])  # noqa: E731
        val = lambda w: w(*p)  # noqa: E731
        g = np.array([val(d(1)), val(d(2)) + x1 * val(d(3))])
        h11 = val(d(1, 1))
        h12 = val(d(1, 2)) + 0.5 * val(d(3)) + x1 * val(d(1, 3))
        h22 = val(d(2, 2)) + 2 * x1 * val(d(2, 3)) + x1 * x1 * val(d(3, 3))
        H = symmetrized_hessian(u, HEIS, p)
        scale = 1 + np.max(np.abs([h11, h12, h22]))
        np.testing.assert_allclose([H.m11, H.m12, H.m22], [h11, h12, h22], rtol=1e-12, atol=1e-12 * scale)
        np.testing.assert_allclose(horizontal_gradient(u, HEIS, p).as_array(), g, rtol=1e-12, atol=1e-12 * scale)
        ref = h11 * g[0] ** 2 + 2 * h12 * g[0] * g[1] + h22 * g[1] ** 2
        assert infinity_laplacian(u, HEIS, p) == pytest.approx(ref, rel=1e-12, abs=1e-12 * scale**3)


# --- properties ------------------------------------------------------------


def test_finite_difference_order(rng):
    # centred differences along the flow of X_i converge at order 2
    f = MartinetProfile([0.3, 1.0, -0.5, 0.2])
    for _ in range(5):
        u = random_polynomial_field(rng, 4)
        p = rng.uniform(-1, 1, 3)
        for index in (1, 2, 3):
            exact = apply_vector_field(u, f, index, p)
            coef = np.array([1.0, 0, 0]) if index == 1 else (
                np.array([0.0, 1.0, f(p[0])]) if index == 2 else np.array([0.0, 0.0, f(p[0], 1)])
            )
            errs = []
            for h in (1e-2, 5e-3, 2.5e-3):
                fd = (u(*(p + h * coef)) - u(*(p - h * coef))) / (2 * h)
                errs.append(abs(fd - exact))
            if errs[0] < 1e-11:
                continue  # field is linear along this direction
            order = math.log2(errs[0] / errs[1]), math.log2(errs[1] / errs[2])
            assert min(order) >= 1.9


@given(c=st.floats(-10, 10), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_infinity_laplacian_homogeneity(c, seed):
    rng = np.random.default_rng(seed)
    u = random_polynomial_field(rng, 3)
    f = MartinetProfile([0, 1, rng.uniform(-1, 1)])
    p = rng.uniform(-1, 1, 3)
    base = infinity_laplacian(u, f, p)
    assert infinity_laplacian(u * c, f, p) == pytest.approx(c**3 * base, rel=1e-10, abs=1e-10 * (1 + abs(c) ** 3))


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_commutator_identity(seed):
    rng = np.random.default_rng(seed)
    u = random_polynomial_field(rng, 4)
    f = MartinetProfile(rng.uniform(-1, 1, 4))
    lhs = vector_field(vector_field(u, f, 2), f, 1) - vector_field(vector_field(u, f, 1), f, 2)
    rhs = vector_field(u, f, 3)
    diff = lhs - rhs
    assert all(abs(c) < 1e-12 for c in diff.terms.values())


def test_quadratic_form_even_in_eta(rng):
    for _ in range(20):
        X = Sym2(*rng.standard_normal(3))
        eta = rng.standard_normal(2)
        assert X.quadratic_form(eta) == X.quadratic_form(-eta)


def test_q_to_infinity_limit():
    u = PolynomialField.parse("x1^2 + x1*x3 - x2^3")
    f = QUAD
    p = Point(0.8, 0.3, -0.6)
    target = infinity_laplacian(u, f, p)
    n = horizontal_gradient(u, f, p).norm2() ** 0.5
    errs = []
    for q in (10, 100, 1000):
        scaled = q_laplacian(u, f, p, q) / ((q - 2) * n ** (q - 4))
        errs.append(abs(scaled - target) / abs(target))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-2


def test_horizontal_laplacian_is_q2():
    rng = np.random.default_rng(1)
    for _ in range(10):
        u = random_polynomial_field(rng, 3)
        p = rng.uniform(-1, 1, 3)
        assert horizontal_laplacian(u, CUBE, p) == q_laplacian(u, CUBE, p, 2)


def test_polynomial_parse_roundtrip():
    u = PolynomialField.parse("x1^2 - 0.5*x1*x3 + 3")
    assert u.terms == {(2, 0, 0): 1.0, (1, 0, 1): -0.5, (0, 0, 0): 3.0}
    assert u(2.0, 0.0, 1.0) == 6.0
