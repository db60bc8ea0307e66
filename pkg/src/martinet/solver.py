"""
Monotone lattice solvers on box domains.

Two fixed-point problems are discretised with horizontal semi-Lagrangian
stencils:

* the infinity-Laplace Dirichlet problem, by the midpoint rule
  ``u(p) = (max_theta S_theta u(p) + min_theta S_theta u(p)) / 2``;
* the strictly monotone model ``sigma u - (X1X1 u + X2X2 u) = rhs``.

``S_theta u(p)`` is the trilinearly interpolated value of ``u`` at the end
of the horizontal integral curve leaving ``p`` with direction
``cos(theta) X1 + sin(theta) X2`` for time ``eps``.  Steps that would leave
the box are shortened, symmetrically for opposite directions.

Both problems are iterated with double-buffered Jacobi sweeps.  A run is
converged when the sup-norm change is below ``tol`` and the geometric tail
of the observed contraction also is, so ``tol`` bounds the distance to the
discrete fixed point rather than just the last increment.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Union

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .core import MartinetProfile, Point, PolynomialField
from .records import dumps

__all__ = [
    "BoxDomain",
    "GridFunction",
    "SolverConfig",
    "SolveInfo",
    "ConvergenceError",
    "OutOfHullError",
    "HorizontalStencil",
    "horizontal_sample",
    "midpoint_update",
    "solve_infinity_laplace",
    "solve_monotone_model",
    "residual",
    "residual_norms",
    "write_summary",
]

logger = logging.getLogger(__name__)

Boundary = Union[float, PolynomialField, Callable, np.ndarray]


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted before the stopping criterion was met."""

    def __init__(self, message, residual=math.nan, iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class OutOfHullError(ValueError):
    """A horizontal sample point falls outside the lattice box."""


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box with Dirichlet datum ``g``.

    ``g`` may be a constant, a :class:`PolynomialField`, a vectorised
    callable ``g(x1, x2, x3)`` or an array tabulated on the lattice.
    """

    lower: tuple
    upper: tuple
    g: Boundary = 0.0

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("box bounds need three coordinates")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"need lower < upper on every axis, got {lo}, {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, half_width: float = 1.0, g: Boundary = 0.0) -> "BoxDomain":
        return cls((-half_width,) * 3, (half_width,) * 3, g)

    def with_boundary(self, g: Boundary) -> "BoxDomain":
        return replace(self, g=g)

    def evaluate_g(self, X1, X2, X3) -> np.ndarray:
        g = self.g
        if isinstance(g, np.ndarray):
            if g.shape != np.shape(X1):
                raise ValueError(f"tabulated boundary has shape {g.shape}, lattice is {np.shape(X1)}")
            out = g.astype(float)
        elif callable(g):
            out = np.broadcast_to(np.asarray(g(X1, X2, X3), dtype=float), np.shape(X1)).copy()
        else:
            out = np.full(np.shape(X1), float(g))
        if not np.all(np.isfinite(out)):
            raise ValueError("boundary datum is not finite on the lattice")
        return out


def _lattice_shape(domain: BoxDomain, h) -> tuple:
    h = np.broadcast_to(np.asarray(h, dtype=float), (3,))
    if np.any(h <= 0):
        raise ValueError("grid spacing must be positive")
    shape = []
    for lo, hi, hk in zip(domain.lower, domain.upper, h):
        n = int(round((hi - lo) / hk))
        if n < 2 or abs(n * hk - (hi - lo)) > 1e-9 * (hi - lo):
            raise ValueError(f"spacing {hk} does not divide [{lo}, {hi}] into >= 2 cells")
        shape.append(n + 1)
    return tuple(shape)


@dataclass
class SolveInfo:
    iterations: int = 0
    change: float = math.nan
    residual: float = math.nan
    converged: bool = False

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_change": self.change,
            "final_residual": self.residual,
            "converged": self.converged,
        }


@dataclass(eq=False)
class GridFunction:
    """Values on the full lattice of a box, boundary layer included.

    The lattice is ``np.linspace(lower_k, upper_k, shape_k)`` on each axis;
    the outermost layer holds the boundary datum.
    """

    domain: BoxDomain
    values: np.ndarray
    info: SolveInfo | None = field(default=None, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3 or min(self.values.shape) < 3:
            raise ValueError("lattice must be 3-d with at least 3 nodes per axis")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")

    @classmethod
    def from_domain(cls, domain: BoxDomain, h, interior: float | np.ndarray = 0.0) -> "GridFunction":
        shape = _lattice_shape(domain, h)
        gf = cls(domain, np.zeros(shape))
        X = gf.mesh()
        vals = domain.evaluate_g(*X)
        mask = gf.interior_mask
        vals[mask] = np.broadcast_to(interior, shape)[mask] if np.ndim(interior) else interior
        gf.values = vals
        return gf

    @classmethod
    def sample(cls, domain: BoxDomain, h, u) -> "GridFunction":
        """Tabulate a field (PolynomialField or callable) on every lattice node."""
        gf = cls(domain, np.zeros(_lattice_shape(domain, h)))
        gf.values = np.broadcast_to(np.asarray(u(*gf.mesh()), dtype=float), gf.shape).copy()
        return gf

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def h(self) -> np.ndarray:
        lo, hi = np.array(self.domain.lower), np.array(self.domain.upper)
        return (hi - lo) / (np.array(self.shape) - 1)

    def axes(self) -> list:
        return [np.linspace(lo, hi, n) for lo, hi, n in zip(self.domain.lower, self.domain.upper, self.shape)]

    def mesh(self) -> tuple:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    @property
    def interior_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[1:-1, 1:-1, 1:-1] = True
        return m

    def point(self, index) -> Point:
        return Point(*(ax[i] for ax, i in zip(self.axes(), index)))

    def copy(self) -> "GridFunction":
        return GridFunction(self.domain, self.values.copy(), self.info)

    def same_lattice(self, other: "GridFunction") -> bool:
        return (
            self.shape == other.shape
            and self.domain.lower == other.domain.lower
            and self.domain.upper == other.domain.upper
        )

    # CSV: header x1,x2,x3,value; x3 varies fastest; 17 significant digits
    def to_csv(self, path) -> None:
        X1, X2, X3 = self.mesh()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x1", "x2", "x3", "value"])
            for row in zip(X1.ravel(), X2.ravel(), X3.ravel(), self.values.ravel()):
                w.writerow([f"{v:.17g}" for v in row])

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        axes = [np.unique(data[:, k]) for k in range(3)]
        shape = tuple(len(a) for a in axes)
        if np.prod(shape) != len(data):
            raise ValueError("CSV rows do not form a full rectangular lattice")
        values = data[:, 3].reshape(shape)
        X = np.meshgrid(*axes, indexing="ij")
        for k in range(3):
            if not np.array_equal(X[k].ravel(), data[:, k]):
                raise ValueError("CSV rows are not in x1,x2,x3 row-major order")
        boundary = values.copy()
        dom = BoxDomain(tuple(a[0] for a in axes), tuple(a[-1] for a in axes), boundary)
        return cls(dom, values)


@dataclass(frozen=True)
class SolverConfig:
    """Discretisation and stopping parameters.

    ``eps=None`` selects three times the largest lattice spacing.
    """

    eps: float | None = None
    M: int = 32
    tol: float = 1e-6
    max_iters: int = 100_000
    interpolation: str = "trilinear"

    def __post_init__(self):
        if self.M < 8:
            raise ValueError(f"need at least 8 directions, got M={self.M}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.interpolation != "trilinear":
            raise ValueError(f"unsupported interpolation {self.interpolation!r}")
        if self.eps is not None and not self.eps > 0:
            raise ValueError("eps must be positive")

    def step(self, h) -> float:
        hmax = float(np.max(h))
        eps = 3.0 * hmax if self.eps is None else float(self.eps)
        if eps < hmax * (1 - 1e-12):
            raise ValueError(f"eps={eps} is smaller than the lattice spacing {hmax}")
        return eps


# --------------------------------------------------------------------------
# geometry of horizontal steps


def _unit(theta):
    c, s = np.cos(theta), np.sin(theta)
    # exact zeros on the coordinate axes keep x1 (or x2) fixed along the flow
    c = np.where(np.abs(c) < 1e-14, 0.0, c)
    s = np.where(np.abs(s) < 1e-14, 0.0, s)
    return c, s


def _flow_x3(f, x1, x3, c, s, t):
    return x3 + s * f.line_integral(x1, c, t)


def _exit_time(f, X, c, s, lower, upper, tmax):
    """Largest t <= tmax such that the horizontal curve stays in the box on [0, t]."""
    x1, x2, x3 = X
    t = np.full(x1.shape, float(tmax))
    with np.errstate(divide="ignore", invalid="ignore"):
        for x, v, lo, hi in ((x1, c, lower[0], upper[0]), (x2, s, lower[1], upper[1])):
            if v > 0:
                t = np.minimum(t, (hi - x) / v)
            elif v < 0:
                t = np.minimum(t, (lo - x) / v)
    t = np.maximum(t, 0.0)
    if s == 0.0:
        return t

    def inside(tt):
        z = _flow_x3(f, x1, x3, c, s, tt)
        return (z >= lower[2]) & (z <= upper[2])

    # scan for the first exit, then bisect the bracketing interval
    K = 32
    lo_t = np.zeros_like(t)
    hi_t = t.copy()
    found = np.zeros(t.shape, dtype=bool)
    for k in range(1, K + 1):
        tk = t * (k / K)
        bad = ~inside(tk) & ~found
        hi_t = np.where(bad, tk, hi_t)
        lo_t = np.where(bad, t * ((k - 1) / K), lo_t)
        found |= bad
    if not found.any():
        return t
    a, b = lo_t[found], hi_t[found]
    x1f, x3f = x1[found], x3[found]
    for _ in range(60):
        mid = 0.5 * (a + b)
        z = _flow_x3(f, x1f, x3f, c, s, mid)
        ok = (z >= lower[2]) & (z <= upper[2])
        a = np.where(ok, mid, a)
        b = np.where(ok, b, mid)
    t[found] = a
    return t


def _trilinear(lower, h, shape, Y):
    """Corner flat indices and weights, each (8, n), for points Y (3, n)."""
    idx = []
    frac = []
    for k in range(3):
        r = (Y[k] - lower[k]) / h[k]
        i = np.clip(np.floor(r).astype(np.int64), 0, shape[k] - 2)
        idx.append(i)
        frac.append(np.clip(r - i, 0.0, 1.0))
    flat = []
    wts = []
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                flat.append(np.ravel_multi_index((idx[0] + a, idx[1] + b, idx[2] + c), shape))
                wts.append(
                    (frac[0] if a else 1 - frac[0])
                    * (frac[1] if b else 1 - frac[1])
                    * (frac[2] if c else 1 - frac[2])
                )
    return np.array(flat), np.array(wts)


class HorizontalStencil:
    """Precomputed interpolation operators for horizontal steps from every interior node.

    ``matrix`` stacks one (n_interior x n_nodes) block per direction, so
    ``(matrix @ u.ravel()).reshape(M, n_interior)`` gives all samples.
    ``steps[m, i]`` is the (possibly shortened) step used for direction m
    at interior node i.
    """

    def __init__(self, grid: GridFunction, f: MartinetProfile, eps: float, thetas):
        self.shape = grid.shape
        self.thetas = np.asarray(thetas, dtype=float)
        self.eps = float(eps)
        lower = np.array(grid.domain.lower)
        upper = np.array(grid.domain.upper)
        h = grid.h
        mask = grid.interior_mask
        self.interior = np.flatnonzero(mask.ravel())
        self.boundary = np.flatnonzero(~mask.ravel())
        X = tuple(m[mask] for m in grid.mesh())
        n = len(self.interior)
        M = len(self.thetas)
        steps = np.empty((M, n))
        blocks = []
        for m, th in enumerate(self.thetas):
            c, s = (float(v) for v in _unit(th))
            t_fwd = _exit_time(f, X, c, s, lower, upper, eps)
            t_bwd = _exit_time(f, X, -c, -s, lower, upper, eps)
            t = np.minimum(t_fwd, t_bwd)
            if np.any(t <= 0):
                raise OutOfHullError("a horizontal step collapsed to zero length")
            steps[m] = t
            Y = np.array(
                [X[0] + t * c, X[1] + t * s, _flow_x3(f, X[0], X[2], c, s, t)]
            )
            Y = np.clip(Y, lower[:, None], upper[:, None])
            flat, w = _trilinear(lower, h, self.shape, Y)
            rows = np.broadcast_to(np.arange(n) + m * n, flat.shape)
            blocks.append((rows.ravel(), flat.ravel(), w.ravel()))
        rows = np.concatenate([b[0] for b in blocks])
        cols = np.concatenate([b[1] for b in blocks])
        vals = np.concatenate([b[2] for b in blocks])
        self.matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(M * n, int(np.prod(self.shape))))
        self.steps = steps
        self.n_interior = n

    def samples(self, u: np.ndarray) -> np.ndarray:
        return (self.matrix @ u.ravel()).reshape(len(self.thetas), self.n_interior)

    def rows(self, direction: np.ndarray) -> sparse.csr_matrix:
        """Interpolation rows picking direction[i] at interior node i."""
        return self.matrix[direction * self.n_interior + np.arange(self.n_interior)]


def _directions(M: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(M) / M


_STENCIL_CACHE: dict = {}


def _stencil(grid: GridFunction, f: MartinetProfile, eps: float, thetas) -> HorizontalStencil:
    key = (grid.domain.lower, grid.domain.upper, grid.shape, f.coeffs, eps, tuple(np.round(thetas, 15)))
    st = _STENCIL_CACHE.get(key)
    if st is None:
        if len(_STENCIL_CACHE) > 8:
            _STENCIL_CACHE.clear()
        st = _STENCIL_CACHE[key] = HorizontalStencil(grid, f, eps, thetas)
    return st


# --------------------------------------------------------------------------
# pointwise operations


def _index(grid: GridFunction, p) -> tuple:
    idx = tuple(int(i) for i in p)
    if len(idx) != 3 or any(not 0 <= i < n for i, n in zip(idx, grid.shape)):
        raise IndexError(f"lattice index {p} outside shape {grid.shape}")
    return idx


def _interpolate(grid: GridFunction, y: np.ndarray) -> float:
    flat, w = _trilinear(np.array(grid.domain.lower), grid.h, grid.shape, y.reshape(3, 1))
    return float(np.dot(grid.values.ravel()[flat[:, 0]], w[:, 0]))


def horizontal_sample(u: GridFunction, f: MartinetProfile, p, theta: float, eps: float) -> float:
    """Interpolated value of ``u`` a horizontal step of length ``eps`` away from lattice node ``p``."""
    x = u.point(_index(u, p))
    c, s = (float(v) for v in _unit(theta))
    y = np.array([x.x1 + eps * c, x.x2 + eps * s, _flow_x3(f, x.x1, x.x3, c, s, eps)])
    lo, hi = np.array(u.domain.lower), np.array(u.domain.upper)
    slack = 1e-12 * (hi - lo)
    if np.any(y < lo - slack) or np.any(y > hi + slack):
        raise OutOfHullError(f"sample point {tuple(y)} leaves the box; shorten eps")
    return _interpolate(u, np.clip(y, lo, hi))


def _clamped_step(u: GridFunction, f, x: Point, theta: float, eps: float) -> float:
    lo, hi = np.array(u.domain.lower), np.array(u.domain.upper)
    X = tuple(np.array([v]) for v in x)
    c, s = (float(v) for v in _unit(theta))
    return float(
        min(_exit_time(f, X, c, s, lo, hi, eps)[0], _exit_time(f, X, -c, -s, lo, hi, eps)[0])
    )


def midpoint_update(u: GridFunction, f: MartinetProfile, p, cfg: SolverConfig) -> float:
    """Half the sum of the largest and smallest horizontal samples around interior node ``p``."""
    idx = _index(u, p)
    if not u.interior_mask[idx]:
        raise ValueError(f"{idx} is a boundary node")
    x = u.point(idx)
    eps = cfg.step(u.h)
    vals = []
    for th in _directions(cfg.M):
        t = _clamped_step(u, f, x, th, eps)
        if t <= 0:
            raise OutOfHullError(f"no admissible step from {tuple(x)} in direction {th}")
        vals.append(horizontal_sample(u, f, idx, th, t))
    return 0.5 * (max(vals) + min(vals))


# --------------------------------------------------------------------------
# fixed-point iterations


def _initial_interior(grid: GridFunction, init, seed) -> np.ndarray:
    vals = grid.values.copy()
    mask = grid.interior_mask
    bnd = vals[~mask]
    if isinstance(init, np.ndarray):
        vals[mask] = np.broadcast_to(init, grid.shape)[mask]
    elif init == "zeros":
        vals[mask] = 0.0
    elif init == "random":
        rng = np.random.default_rng(seed)
        vals[mask] = rng.uniform(bnd.min() - 1.0, bnd.max() + 1.0, size=int(mask.sum()))
    elif init == "harmonic":
        vals = _harmonic_extension(grid)
    else:
        raise ValueError(f"unknown initialisation {init!r}")
    return vals


def _harmonic_extension(grid: GridFunction) -> np.ndarray:
    """Discrete Euclidean harmonic extension of the boundary values (7-point Laplacian)."""
    shape = grid.shape
    mask = grid.interior_mask
    N = int(np.prod(shape))
    h2 = 1.0 / grid.h**2
    idx = np.arange(N).reshape(shape)
    rows, cols, vals = [], [], []
    centre = idx[1:-1, 1:-1, 1:-1].ravel()
    diag = np.full(centre.shape, 2.0 * h2.sum())
    for axis in range(3):
        for shift in (-1, 1):
            nb = np.roll(idx, shift, axis=axis)[1:-1, 1:-1, 1:-1].ravel()
            rows.append(centre)
            cols.append(nb)
            vals.append(np.full(centre.shape, -h2[axis]))
    L = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    )
    interior = np.flatnonzero(mask.ravel())
    bnd = np.flatnonzero(~mask.ravel())
    A = L[interior][:, interior] + sparse.diags(diag)
    b = -L[interior][:, bnd] @ grid.values.ravel()[bnd]
    out = grid.values.ravel().copy()
    x, status = spla.cg(A, b, rtol=1e-12, maxiter=20 * len(interior))
    if status != 0:
        raise ConvergenceError("harmonic extension did not converge", iterations=status)
    out[interior] = x
    return out.reshape(shape)


def _tail_bound(changes: list, window: int) -> float:
    """Geometric estimate of the distance to the fixed point after the last sweep."""
    last = changes[-1]
    if last == 0.0:
        return 0.0
    if len(changes) <= window or changes[-1 - window] == 0.0:
        return math.inf
    rate = (last / changes[-1 - window]) ** (1.0 / window)
    if rate >= 1.0:
        return math.inf
    return last * rate / (1.0 - rate)


def _fixed_point(grid: GridFunction, apply, cfg: SolverConfig, init, seed, window: int = 10):
    """Double-buffered Jacobi iteration of ``apply`` on the interior.

    Stops once the sup-norm change is <= ``cfg.tol`` and the geometric tail
    estimated from the last ``window`` changes is also <= ``cfg.tol``, or
    the change has reached rounding level.
    """
    u = _initial_interior(grid, init, seed).ravel()
    interior = np.flatnonzero(grid.interior_mask.ravel())
    scale = max(1.0, float(np.max(np.abs(u))))
    changes: list = []
    info = SolveInfo()
    while True:
        new = apply(u)
        change = float(np.max(np.abs(new - u[interior])))
        u[interior] = new
        changes.append(change)
        info.iterations += 1
        if change <= cfg.tol and (
            change <= 1e-13 * scale or _tail_bound(changes, window) <= cfg.tol
        ):
            break
        if info.iterations >= cfg.max_iters:
            raise ConvergenceError(
                f"no convergence after {info.iterations} sweeps "
                f"(sup change {change:.3e}, tol {cfg.tol:.1e})",
                residual=change,
                iterations=info.iterations,
            )
    info.change = change
    info.residual = float(np.max(np.abs(apply(u) - u[interior])))
    info.converged = True
    logger.debug("fixed point after %d sweeps (change %.3e)", info.iterations, change)
    return GridFunction(grid.domain, u.reshape(grid.shape), info)


def solve_infinity_laplace(dom: BoxDomain, f: MartinetProfile, cfg: SolverConfig = SolverConfig(),
                           h=None, *, grid: GridFunction | None = None, init="zeros",
                           seed: int = 0) -> GridFunction:
    """Discrete infinity-harmonic extension of the boundary datum of ``dom``.

    Either ``h`` (lattice spacing) or a template ``grid`` fixes the lattice.
    ``init`` is ``"zeros"``, ``"harmonic"``, ``"random"`` or an array of
    lattice values.  The sweep count is in ``result.info``.  Raises
    :class:`ConvergenceError` when ``cfg.max_iters`` sweeps are not enough.
    """
    grid = _template(dom, h, grid)
    st = _stencil(grid, f, cfg.step(grid.h), _directions(cfg.M))

    def apply(u):
        s = st.samples(u)
        return 0.5 * (s.max(axis=0) + s.min(axis=0))

    return _fixed_point(grid, apply, cfg, init, seed)


def solve_monotone_model(dom: BoxDomain, f: MartinetProfile, sigma: float, rhs,
                         cfg: SolverConfig = SolverConfig(), h=None, *,
                         grid: GridFunction | None = None, init="zeros",
                         seed: int = 0) -> GridFunction:
    """Solve sigma*u - (X1X1 u + X2X2 u) = rhs with Dirichlet datum from ``dom``.

    Second horizontal derivatives are central differences along the four
    horizontal directions theta in {0, pi/2, pi, 3pi/2}; away from the
    boundary the Jacobi update contracts with factor 4 / (4 + sigma eps^2).
    ``rhs`` is a constant, a PolynomialField or a vectorised callable.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    grid = _template(dom, h, grid)
    st = _stencil(grid, f, cfg.step(grid.h), _directions(4))
    n = st.n_interior
    inv_t2 = 1.0 / st.steps**2  # (4, n)
    denom = sigma + inv_t2.sum(axis=0)
    X = tuple(m.ravel()[st.interior] for m in grid.mesh())
    r = np.broadcast_to(np.asarray(rhs(*X) if callable(rhs) else rhs, dtype=float), (n,))

    def apply(u):
        s = st.samples(u)
        return ((inv_t2 * s).sum(axis=0) + r) / denom

    return _fixed_point(grid, apply, cfg, init, seed)


def residual(u: GridFunction, f: MartinetProfile, cfg: SolverConfig = SolverConfig()) -> GridFunction:
    """u - midpoint_update(u) on interior nodes, zero on the boundary layer.

    Use :func:`residual_norms` for the sup and mean norms.
    """
    st = _stencil(u, f, cfg.step(u.h), _directions(cfg.M))
    s = st.samples(u.values)
    r = np.zeros(int(np.prod(u.shape)))
    r[st.interior] = u.values.ravel()[st.interior] - 0.5 * (s.max(axis=0) + s.min(axis=0))
    return GridFunction(u.domain, r.reshape(u.shape))


def residual_norms(r: GridFunction) -> tuple[float, float]:
    """(sup, mean) of |r| over interior nodes."""
    vals = np.abs(r.values[r.interior_mask])
    return float(vals.max()), float(vals.mean())


def _template(dom: BoxDomain, h, grid: GridFunction | None) -> GridFunction:
    if grid is not None:
        if h is not None:
            raise ValueError("pass either h or grid, not both")
        return GridFunction.from_domain(dom, grid.h)
    if h is None:
        raise ValueError("lattice spacing h is required")
    return GridFunction.from_domain(dom, h)


def write_summary(path, grid: GridFunction, cfg: SolverConfig, extra: dict | None = None) -> None:
    """JSON run summary: iteration counts, final residual and a config echo."""
    summary = {
        "iterations": grid.info.iterations if grid.info else 0,
        "final_change": grid.info.change if grid.info else None,
        "final_residual": grid.info.residual if grid.info else None,
        "config": {
            "eps": cfg.step(grid.h),
            "M": cfg.M,
            "tol": cfg.tol,
            "max_iters": cfg.max_iters,
            "interpolation": cfg.interpolation,
            "h": [float(v) for v in grid.h],
            "lower": list(grid.domain.lower),
            "upper": list(grid.domain.upper),
        },
    }
    if extra:
        summary.update(extra)
    Path(path).write_text(dumps(summary) + "\n")
