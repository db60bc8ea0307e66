"""Monotone lattice solvers: examples, scheme properties, independent stencil."""

import json
import math

import numpy as np
import pytest
from scipy.interpolate import RegularGridInterpolator

from martinet.core import MartinetProfile, PolynomialField, horizontal_gradient, infinity_laplacian
from martinet.solver import (
    BoxDomain,
    ConvergenceError,
    GridFunction,
    OutOfHullError,
    SolverConfig,
    horizontal_sample,
    midpoint_update,
    residual,
    residual_norms,
    solve_infinity_laplace,
    solve_monotone_model,
    write_summary,
)

HEIS = MartinetProfile([0, 1])
QUAD = MartinetProfile([0, 0, 0.5])
H = 0.125  # 17^3 lattice on the unit cube [-1, 1]^3
CFG = SolverConfig()
EPS = 3 * H
BOUND = 10 * (EPS**2 + H)


def P(text):
    return PolynomialField.parse(text)


def interior_error(u: GridFunction, exact) -> float:
    ref = np.asarray(exact(*u.mesh()), dtype=float)
    return float(np.max(np.abs(u.values - ref)[u.interior_mask]))


# --- configuration and lattice ---------------------------------------------------


@pytest.mark.parametrize("kwargs", [{"M": 4}, {"tol": 0.0}, {"max_iters": 0}, {"interpolation": "cubic"}, {"eps": -1.0}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_eps_must_cover_spacing():
    with pytest.raises(ValueError, match="smaller than the lattice spacing"):
        SolverConfig(eps=0.05).step(np.array([0.1, 0.1, 0.1]))
    assert SolverConfig().step(np.array([0.1, 0.2, 0.1])) == pytest.approx(0.6)


def test_domain_validation():
    with pytest.raises(ValueError):
        BoxDomain((0, 0, 0), (1, 0, 1))
    with pytest.raises(ValueError, match="does not divide"):
        GridFunction.from_domain(BoxDomain.cube(), 0.3)


def test_lattice_layout():
    g = GridFunction.from_domain(BoxDomain.cube(1.0, P("x1 + 2*x2")), 0.5)
    assert g.shape == (5, 5, 5)
    np.testing.assert_allclose(g.h, 0.5)
    assert g.interior_mask.sum() == 27
    assert g.values[0, 4, 2] == pytest.approx(-1 + 2)
    assert np.all(g.values[g.interior_mask] == 0)


# --- pointwise samples ------------------------------------------------------------


def test_sample_examples():
    dom = BoxDomain.cube(2.0)
    c = GridFunction.sample(dom, 0.25, lambda x1, x2, x3: 0 * x1 + 3.5)
    for th in np.linspace(0, 2 * np.pi, 7):
        assert horizontal_sample(c, QUAD, (8, 8, 8), th, 0.3) == pytest.approx(3.5, abs=1e-14)
    u2 = GridFunction.sample(dom, 0.25, P("x2"))
    assert horizontal_sample(u2, QUAD, (5, 5, 5), np.pi / 2, 0.2) == pytest.approx(u2.values[5, 5, 5] + 0.2, abs=1e-14)
    u3 = GridFunction.sample(dom, 0.25, P("x3"))
    # node (12, 8, 8) is the point (1, 0, 0)
    assert u3.point((12, 8, 8)).x1 == 1.0
    assert horizontal_sample(u3, HEIS, (12, 8, 8), np.pi / 2, 0.1) == pytest.approx(0.1, abs=1e-14)


def test_sample_out_of_hull():
    u = GridFunction.sample(BoxDomain.cube(1.0), 0.25, P("x1"))
    with pytest.raises(OutOfHullError):
        horizontal_sample(u, HEIS, (7, 4, 4), 0.0, 0.5)


@pytest.mark.parametrize("f", [HEIS, QUAD])
def test_midpoint_examples(f):
    dom = BoxDomain.cube(1.0)
    idx = (8, 7, 9)
    c = GridFunction.sample(dom, H, lambda x1, x2, x3: 0 * x1 - 2.0)
    assert midpoint_update(c, f, idx, CFG) == pytest.approx(-2.0, abs=1e-14)
    aff = GridFunction.sample(dom, H, P("0.7*x1 - 1.3*x2 + 0.2"))
    assert abs(midpoint_update(aff, f, idx, CFG) - aff.values[idx]) <= BOUND
    x3 = GridFunction.sample(dom, H, P("x3"))
    assert abs(midpoint_update(x3, HEIS, idx, CFG) - x3.values[idx]) <= BOUND


def test_midpoint_rejects_boundary_node():
    u = GridFunction.from_domain(BoxDomain.cube(), H)
    with pytest.raises(ValueError, match="boundary"):
        midpoint_update(u, HEIS, (0, 3, 3), CFG)


def test_midpoint_is_monotone():
    rng = np.random.default_rng(0)
    dom = BoxDomain.cube(1.0)
    u = GridFunction(dom, rng.standard_normal((9, 9, 9)))
    cfg = SolverConfig(M=16)
    nodes = [(4, 4, 4), (2, 5, 6), (1, 1, 7), (7, 3, 2)]
    before = [midpoint_update(u, QUAD, p, cfg) for p in nodes]
    for _ in range(10):
        bumped = u.copy()
        k = tuple(rng.integers(0, 9, 3))
        bumped.values[k] += rng.uniform(0, 1)
        after = [midpoint_update(bumped, QUAD, p, cfg) for p in nodes]
        assert all(a >= b - 1e-15 for a, b in zip(after, before))


def test_consistency_slope():
    # update - u(p) ~ (eps^2 / 2) Delta_inf u / |grad_0 u|^2
    u = P("x1^2 + x1*x3")
    p = (0.5, 0.0, 0.25)
    target = infinity_laplacian(u, HEIS, p) / horizontal_gradient(u, HEIS, p).norm2()
    epss = [0.2, 0.1, 0.05]
    defects = []
    for eps in epss:
        h, n = eps / 3, 12
        lo = np.array(p) - n * h
        g = GridFunction.sample(BoxDomain(tuple(lo), tuple(lo + 2 * n * h)), h, u)
        defects.append(midpoint_update(g, HEIS, (n, n, n), SolverConfig(eps=eps)) - g.values[n, n, n])
    slope = np.polyfit(np.log(epss), np.log(np.abs(defects)), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.05)
    # 32 directions miss the exact gradient direction by at most pi/32
    assert 2 * defects[-1] / epss[-1] ** 2 == pytest.approx(target, rel=0.02)


# --- Dirichlet problem ------------------------------------------------------------


def test_zero_data_gives_zero_exactly():
    u = solve_infinity_laplace(BoxDomain.cube(1.0, 0.0), QUAD, CFG, H)
    assert np.all(u.values == 0.0)
    assert u.info.converged


@pytest.mark.parametrize(
    "f, g",
    [(HEIS, "0.6*x1 - 0.8*x2 + 0.1"), (QUAD, "x1 + x2"), (HEIS, "x3")],
)
def test_exact_infinity_harmonic_data(f, g):
    u = solve_infinity_laplace(BoxDomain.cube(1.0, P(g)), f, CFG, H)
    assert interior_error(u, P(g)) <= BOUND


def test_converged_residual_below_tol():
    f = QUAD
    u = solve_infinity_laplace(BoxDomain.cube(1.0, P("x1^2 - x2*x3")), f, CFG, H)
    sup, mean = residual_norms(residual(u, f, CFG))
    assert sup <= CFG.tol
    assert mean <= sup


def test_residual_of_noise_and_affine():
    rng = np.random.default_rng(1)
    dom = BoxDomain.cube(1.0)
    noise = GridFunction(dom, rng.standard_normal((17, 17, 17)))
    assert residual_norms(residual(noise, HEIS, CFG))[0] > CFG.tol
    aff = GridFunction.sample(dom, H, P("x1 - 0.5*x2"))
    assert residual_norms(residual(aff, HEIS, CFG))[0] <= BOUND


def test_max_principle():
    g = P("x1^3 - x2*x3 + 0.5*x2^2")
    dom = BoxDomain.cube(1.0, g)
    u = solve_infinity_laplace(dom, QUAD, CFG, H)
    bnd = u.values[~u.interior_mask]
    inner = u.values[u.interior_mask]
    assert inner.min() >= bnd.min() - CFG.tol
    assert inner.max() <= bnd.max() + CFG.tol


def test_boundary_values_untouched():
    g = P("x1*x2 + x3")
    u = solve_infinity_laplace(BoxDomain.cube(1.0, g), HEIS, CFG, H)
    ref = GridFunction.from_domain(BoxDomain.cube(1.0, g), H)
    mask = ~u.interior_mask
    assert np.array_equal(u.values[mask], ref.values[mask])


def test_comparison_random_pairs():
    rng = np.random.default_rng(3)
    for _ in range(3):
        c = rng.uniform(-1, 1, 4)
        g1 = P(f"{c[0]}*x1 + {c[1]}*x2*x3 + {c[2]}*x1^2")
        g2 = g1 + P(f"{abs(c[3])} + 0.3*(x2 - 0.2)^2")
        u1 = solve_infinity_laplace(BoxDomain.cube(1.0, g1), QUAD, CFG, H)
        u2 = solve_infinity_laplace(BoxDomain.cube(1.0, g2), QUAD, CFG, H)
        assert np.max(u1.values - u2.values) <= 2 * CFG.tol


def test_uniqueness_across_initialisations():
    dom = BoxDomain.cube(1.0, P("x1^2 - x2 + 0.5*x1*x3"))
    sols = [solve_infinity_laplace(dom, QUAD, CFG, H, init=i, seed=4) for i in ("zeros", "harmonic", "random")]
    for s in sols[1:]:
        assert np.max(np.abs(s.values - sols[0].values)) <= 2 * CFG.tol


def test_non_convergence_raises():
    dom = BoxDomain.cube(1.0, P("x1^2"))
    with pytest.raises(ConvergenceError) as info:
        solve_infinity_laplace(dom, HEIS, SolverConfig(max_iters=3), H)
    assert info.value.iterations == 3
    assert info.value.residual > 0


def test_unknown_init():
    with pytest.raises(ValueError):
        solve_infinity_laplace(BoxDomain.cube(), HEIS, CFG, H, init="ones")


# --- Heisenberg cross-check against an independent stencil --------------------------


def _heisenberg_exit(x1, x2, x3, c, s, eps, lo, hi):
    """Closed-form exit time of t -> (x1 + c t, x2 + s t, x3 + s (x1 t + c t^2 / 2))."""
    t = np.full(x1.shape, eps)
    for x, v in ((x1, c), (x2, s)):
        if v > 0:
            t = np.minimum(t, (hi - x) / v)
        elif v < 0:
            t = np.minimum(t, (lo - x) / v)
    if s != 0:
        # x3 path is the quadratic a t^2 + b t + x3 with a = s c / 2, b = s x1
        a, b = s * c / 2, s * x1
        for bound in (lo, hi):
            k = x3 - bound
            if a == 0:
                with np.errstate(divide="ignore", invalid="ignore"):
                    r = np.where(b != 0, -k / b, np.inf)
                roots = [r]
            else:
                disc = b * b - 4 * a * k
                sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
                roots = [(-b - sq) / (2 * a), (-b + sq) / (2 * a)]
            for r in roots:
                r = np.where(np.isnan(r) | (r <= 1e-15), np.inf, r)
                t = np.minimum(t, r)
    return t


def _heisenberg_solve(n, g, eps, M, tol):
    ax = np.linspace(-1, 1, n)
    X1, X2, X3 = np.meshgrid(ax, ax, ax, indexing="ij")
    u = g(X1, X2, X3).astype(float)
    inner = np.zeros(u.shape, bool)
    inner[1:-1, 1:-1, 1:-1] = True
    u[inner] = 0.0
    x1, x2, x3 = X1[inner], X2[inner], X3[inner]
    pts = []
    for th in 2 * np.pi * np.arange(M) / M:
        c, s = math.cos(th), math.sin(th)
        c, s = (0.0 if abs(c) < 1e-14 else c), (0.0 if abs(s) < 1e-14 else s)
        t = np.minimum(_heisenberg_exit(x1, x2, x3, c, s, eps, -1, 1),
                       _heisenberg_exit(x1, x2, x3, -c, -s, eps, -1, 1))
        y = np.stack([x1 + c * t, x2 + s * t, x3 + s * (x1 * t + c * t * t / 2)], axis=-1)
        pts.append(np.clip(y, -1, 1))
    pts = np.concatenate(pts)
    for _ in range(20000):
        interp = RegularGridInterpolator((ax, ax, ax), u, method="linear")
        S = interp(pts).reshape(M, -1)
        new = 0.5 * (S.max(axis=0) + S.min(axis=0))
        change = np.max(np.abs(new - u[inner]))
        u[inner] = new
        if change < tol:
            break
    return u


def test_heisenberg_independent_stencil():
    g = P("x1^2 - 0.5*x2 + 0.3*x1*x3")
    n = 13
    h = 2 / (n - 1)
    eps, M = 3 * h, 16
    cfg = SolverConfig(eps=eps, M=M, tol=1e-8)
    ours = solve_infinity_laplace(BoxDomain.cube(1.0, g), HEIS, cfg, h)
    ref = _heisenberg_solve(n, g, eps, M, tol=1e-11)
    assert np.max(np.abs(ours.values - ref)) <= 2 * cfg.tol


# --- strictly monotone model ---------------------------------------------------------


def test_model_constant():
    sigma, c = 2.0, 0.75
    u = solve_monotone_model(BoxDomain.cube(1.0, c), QUAD, sigma, sigma * c, CFG, H)
    assert np.max(np.abs(u.values - c)) <= CFG.tol


def test_model_affine():
    aff = P("0.5*x1 - x2 + 0.25")
    u = solve_monotone_model(BoxDomain.cube(1.0, aff), HEIS, 1.0, aff, CFG, H)
    assert interior_error(u, aff) <= BOUND


@pytest.mark.parametrize("f", [HEIS, QUAD])
def test_model_manufactured_x1_squared(f):
    exact = P("x1^2")
    u = solve_monotone_model(BoxDomain.cube(1.0, exact), f, 1.0, P("x1^2 - 2"), CFG, H)
    assert interior_error(u, exact) <= BOUND


def test_model_rejects_sigma():
    with pytest.raises(ValueError):
        solve_monotone_model(BoxDomain.cube(), HEIS, 0.0, 0.0, CFG, H)


def test_model_comparison():
    rhs = P("x1*x2 - 1")
    u1 = solve_monotone_model(BoxDomain.cube(1.0, P("x3")), QUAD, 1.0, rhs, CFG, H)
    u2 = solve_monotone_model(BoxDomain.cube(1.0, P("x3 + 0.2")), QUAD, 1.0, rhs + 0.1, CFG, H)
    assert np.max(u1.values - u2.values) <= 2 * CFG.tol


# --- file formats ---------------------------------------------------------------------


def test_csv_round_trip(tmp_path):
    u = solve_infinity_laplace(BoxDomain.cube(1.0, P("x1 + x3^2")), QUAD, CFG, 0.25)
    path = tmp_path / "grid.csv"
    u.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,x3,value"
    assert lines[1].startswith("-1,-1,-1,") and lines[2].startswith("-1,-1,-0.75,")
    back = GridFunction.from_csv(path)
    assert back.same_lattice(u)
    assert np.array_equal(back.values, u.values)


def test_csv_rejects_ragged(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x1,x2,x3,value\n0,0,0,1\n0,0,1,1\n1,0,0,1\n")
    with pytest.raises(ValueError):
        GridFunction.from_csv(path)


def test_summary_json(tmp_path):
    u = solve_infinity_laplace(BoxDomain.cube(1.0, P("x1")), HEIS, CFG, 0.25)
    write_summary(tmp_path / "s.json", u, CFG, {"note": "x"})
    s = json.loads((tmp_path / "s.json").read_text())
    assert s["iterations"] == u.info.iterations
    assert s["config"]["M"] == 32 and s["config"]["eps"] == 0.75
    assert s["note"] == "x"
