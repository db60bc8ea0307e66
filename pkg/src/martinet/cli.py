"""
Command-line front end.

    martinet <command> [--config FILE] [--out DIR] [--seed N] [--threads N]

Commands: solve, monotone, distance, twist-check, maxprin, imp, compare,
operators.  The configuration file is INI: flat ``[section]`` headers with
``key = value`` lines, ``#`` or ``;`` comments.  Vectors are
whitespace-separated numbers; fields and boundary data are polynomial
expressions in x1, x2, x3 (``^`` or ``**`` for powers).  Sections and keys:

    [profile]      coeffs                      f = c0 + c1 x1 + ...
    [domain]       lower upper h g
    [solver]       eps M tol max_iters interpolation
    [solve]        init                        zeros | harmonic | random
    [monotone]     sigma rhs init
    [distance]     base axis deltas N iters restarts
    [twist-check]  samples degree box
    [maxprin]      u v taus grid_n
    [imp]          u v tau grid_n c2 c3 t_values
    [compare]      g1 g2 pairs
    [operators]    u points q eps              points: comma-separated triples

Every key is optional; unknown sections or keys are a configuration error.
Exit status: 0 success, 1 usage or configuration error, 2 numerical
non-convergence or a failed numerical check.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import records
from .core import (
    DegenerateGradientError,
    MartinetProfile,
    Point,
    PolynomialField,
    horizontal_gradient,
    horizontal_laplacian,
    infinity_laplacian,
    jensen_operator,
    q_laplacian,
    random_polynomial_field,
    semi_horizontal_gradient,
    symmetrized_hessian,
)
from .distance import DistanceConvergenceError, ball_box_distance, cc_upper_bound
from .experiments import (
    comparison_harness,
    default_family,
    escalation_paths,
    gap_asymptotics,
    iterated_penalty_argmax,
    penalty_sweep,
    twist_check,
)
from .solver import (
    BoxDomain,
    ConvergenceError,
    SolverConfig,
    residual,
    residual_norms,
    solve_infinity_laplace,
    solve_monotone_model,
    write_summary,
)

__all__ = ["RunConfig", "ConfigError", "load_config", "run", "main", "COMMANDS"]

logger = logging.getLogger(__name__)

COMMANDS = ("solve", "monotone", "distance", "twist-check", "maxprin", "imp", "compare", "operators")

SCHEMA = {
    "profile": {"coeffs": "0 1"},
    "domain": {"lower": "-1 -1 -1", "upper": "1 1 1", "h": "0.0625", "g": "0"},
    "solver": {"eps": "", "M": "32", "tol": "1e-6", "max_iters": "100000", "interpolation": "trilinear"},
    "solve": {"init": "zeros"},
    "monotone": {"sigma": "1", "rhs": "x1^2 - 2", "init": "zeros"},
    "distance": {"base": "0 0 0", "axis": "3", "deltas": "1e-3 3.1622776601683794e-3 1e-2 3.1622776601683794e-2 1e-1",
                 "N": "24", "iters": "40", "restarts": "8"},
    "twist-check": {"samples": "1000", "degree": "4", "box": "2"},
    "maxprin": {"u": "1 - x1^2 - x2^2 - x3^2", "v": "0", "taus": "1e1 1e2 1e3 1e4 1e5", "grid_n": "32"},
    "imp": {"u": "1 - x1^2 - x2^2 - x3^2", "v": "0", "tau": "1e4 1e2 1e1", "grid_n": "16",
            "c2": "1", "c3": "1", "t_values": "1e-4 1e-3 1e-2 1e-1"},
    "compare": {"g1": "", "g2": "", "pairs": "10"},
    "operators": {"u": "x1^2 + x1*x3", "points": "1 0 0, 0.5 -0.25 2", "q": "4", "eps": "0.1"},
}


class ConfigError(ValueError):
    """Malformed or invalid configuration (exit status 1)."""


class CheckFailed(RuntimeError):
    """A numerical check ran to completion but missed its tolerance (exit status 2)."""


@dataclass
class RunConfig:
    """Parsed configuration: raw strings per section with defaults filled in."""

    sections: dict
    seed: int = 0
    threads: int = 1
    out: Path = field(default_factory=lambda: Path("out"))

    def get(self, section: str, key: str) -> str:
        return self.sections[section][key]

    def real(self, section, key) -> float:
        return _parse(lambda s: float(s), section, key, self.get(section, key))

    def integer(self, section, key) -> int:
        return _parse(lambda s: int(s), section, key, self.get(section, key))

    def vector(self, section, key, n=None) -> np.ndarray:
        text = self.get(section, key)
        v = _parse(lambda s: np.array([float(t) for t in s.split()]), section, key, text)
        if n is not None and len(v) != n:
            raise ConfigError(f"[{section}] {key}: expected {n} numbers, got {len(v)}")
        return v

    def poly(self, section, key) -> PolynomialField:
        return _parse(PolynomialField.parse, section, key, self.get(section, key))

    def profile(self) -> MartinetProfile:
        coeffs = self.vector("profile", "coeffs")
        try:
            return MartinetProfile(coeffs)
        except ValueError as exc:
            raise ConfigError(f"[profile] coeffs: {exc}") from None

    def domain(self, g=None) -> BoxDomain:
        lo, hi = self.vector("domain", "lower", 3), self.vector("domain", "upper", 3)
        g = self.poly("domain", "g") if g is None else g
        try:
            return BoxDomain(tuple(lo), tuple(hi), g)
        except ValueError as exc:
            raise ConfigError(f"[domain] {exc}") from None

    def h(self) -> float:
        h = self.real("domain", "h")
        if not h > 0:
            raise ConfigError("[domain] h must be positive")
        return h

    def solver(self) -> SolverConfig:
        eps = self.get("solver", "eps").strip()
        try:
            return SolverConfig(
                eps=float(eps) if eps else None,
                M=self.integer("solver", "M"),
                tol=self.real("solver", "tol"),
                max_iters=self.integer("solver", "max_iters"),
                interpolation=self.get("solver", "interpolation").strip(),
            )
        except ValueError as exc:
            raise ConfigError(f"[solver] {exc}") from None


def _parse(fn, section, key, text):
    try:
        return fn(text)
    except Exception as exc:  # noqa: BLE001 - any parse failure is a config error
        raise ConfigError(f"[{section}] {key}: cannot parse {text!r} ({exc})") from None


def load_config(path=None, seed: int = 0, threads: int = 1, out=None) -> RunConfig:
    """Read an INI file (or none), reject unknown keys and fill defaults."""
    sections = {name: dict(keys) for name, keys in SCHEMA.items()}
    if path is not None:
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        for name in cp.sections():
            if name not in SCHEMA:
                raise ConfigError(f"unknown section [{name}]; known: {', '.join(SCHEMA)}")
            for key, value in cp.items(name):
                if key not in SCHEMA[name]:
                    raise ConfigError(f"unknown key {key!r} in [{name}]; known: {', '.join(SCHEMA[name])}")
                sections[name][key] = value
    if threads < 1:
        raise ConfigError("--threads must be >= 1")
    if seed < 0 or seed >= 2**64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    return RunConfig(sections, seed, threads, Path(out) if out is not None else Path("out"))


# commands: each returns a one-line summary, writes into cfg.out


def _cmd_solve(cfg: RunConfig) -> str:
    dom, f, sc = cfg.domain(), cfg.profile(), cfg.solver()
    init = cfg.get("solve", "init").strip()
    if init not in ("zeros", "harmonic", "random"):
        raise ConfigError(f"[solve] init must be zeros, harmonic or random, got {init!r}")
    u = solve_infinity_laplace(dom, f, sc, cfg.h(), init=init, seed=cfg.seed)
    res = residual_norms(residual(u, f, sc))
    u.to_csv(cfg.out / "grid.csv")
    write_summary(cfg.out / "summary.json", u, sc, {"residual_sup": res[0], "residual_mean": res[1]})
    return f"solve: {u.info.iterations} sweeps, change {u.info.change:.3e}, sup residual {res[0]:.3e}"


def _cmd_monotone(cfg: RunConfig) -> str:
    dom, f, sc = cfg.domain(), cfg.profile(), cfg.solver()
    sigma = cfg.real("monotone", "sigma")
    if not sigma > 0:
        raise ConfigError("[monotone] sigma must be positive")
    rhs = cfg.poly("monotone", "rhs")
    init = cfg.get("monotone", "init").strip()
    if init not in ("zeros", "harmonic", "random"):
        raise ConfigError(f"[monotone] init must be zeros, harmonic or random, got {init!r}")
    u = solve_monotone_model(dom, f, sigma, rhs, sc, cfg.h(), init=init, seed=cfg.seed)
    u.to_csv(cfg.out / "grid.csv")
    write_summary(cfg.out / "summary.json", u, sc, {"sigma": sigma})
    return f"monotone: {u.info.iterations} sweeps, change {u.info.change:.3e}"


def _cmd_distance(cfg: RunConfig) -> str:
    f = cfg.profile()
    base = cfg.vector("distance", "base", 3)
    axis = cfg.integer("distance", "axis")
    if axis not in (1, 2, 3):
        raise ConfigError("[distance] axis must be 1, 2 or 3")
    deltas = cfg.vector("distance", "deltas")
    if len(deltas) < 4 or np.any(deltas <= 0) or np.log10(deltas.max() / deltas.min()) < 2 - 1e-9:
        raise ConfigError("[distance] deltas: need >= 4 positive values spanning >= 2 decades")
    N, iters, restarts = (cfg.integer("distance", k) for k in ("N", "iters", "restarts"))
    if N < 4 or iters < 1 or restarts < 1:
        raise ConfigError("[distance] need N >= 4, iters >= 1, restarts >= 1")
    rows = []
    for d in deltas:
        q = base.copy()
        q[axis - 1] += d
        length = cc_upper_bound(base, q, f, N=N, iters=iters, seed=cfg.seed, restarts=restarts)
        bb = ball_box_distance(base, q, f)
        rows.append({"delta": float(d), "length": length, "ball_box": bb, "ratio": length / bb})
    slope = float(np.polyfit(np.log(deltas), np.log([r["length"] for r in rows]), 1)[0])
    records.write_jsonl(cfg.out / "distance.jsonl", rows)
    records.write_csv(cfg.out / "distance.csv", rows)
    ratios = [r["ratio"] for r in rows]
    (cfg.out / "summary.json").write_text(records.dumps({
        "slope": slope, "axis": axis, "base": base, "profile": list(f.coeffs),
        "ratio_min": min(ratios), "ratio_max": max(ratios), "seed": cfg.seed,
    }) + "\n")
    return f"distance: slope {records.fmt(slope)} along x{axis}, cc/ball-box ratio in [{min(ratios):.3f}, {max(ratios):.3f}]"


def _cmd_twist(cfg: RunConfig) -> str:
    n, deg = cfg.integer("twist-check", "samples"), cfg.integer("twist-check", "degree")
    box = cfg.real("twist-check", "box")
    if n < 1 or deg < 1 or not box > 0:
        raise ConfigError("[twist-check] need samples >= 1, degree >= 1, box > 0")
    rep = twist_check(n, cfg.seed, deg, box)
    (cfg.out / "summary.json").write_text(records.dumps(rep) + "\n")
    line = f"twist-check: {n} samples, max relative error {rep['max_rel_error']:.3e}"
    if rep["max_rel_error"] > 1e-12:
        raise CheckFailed(line + " > 1e-12")
    return line


def _cmd_maxprin(cfg: RunConfig) -> str:
    u, v = cfg.poly("maxprin", "u"), cfg.poly("maxprin", "v")
    taus = cfg.vector("maxprin", "taus")
    grid_n = cfg.integer("maxprin", "grid_n")
    if grid_n < 8 or np.any(taus <= 0) or np.any(np.diff(taus) <= 0):
        raise ConfigError("[maxprin] need grid_n >= 8 and strictly increasing positive taus")
    reps = penalty_sweep(u, v, cfg.domain(), taus, grid_n, f=cfg.profile())
    recs = [r.as_record() for r in reps]
    records.write_jsonl(cfg.out / "maxprin.jsonl", recs)
    records.write_csv(cfg.out / "maxprin.csv", recs, ["tau", "M", "phi", "tau_phi", "vector_gap", "p", "q"])
    Ms = [r.M for r in reps]
    line = f"maxprin: M from {Ms[0]:.6f} to {Ms[-1]:.6f}, tau*phi at largest tau {reps[-1].tau_phi:.3e}"
    if np.any(np.diff(Ms) > 0):
        raise CheckFailed(line + "; M increased with tau")
    return line


def _cmd_imp(cfg: RunConfig) -> str:
    u, v = cfg.poly("imp", "u"), cfg.poly("imp", "v")
    tau = cfg.vector("imp", "tau", 3)
    grid_n = cfg.integer("imp", "grid_n")
    if grid_n < 8 or np.any(tau <= 0):
        raise ConfigError("[imp] need grid_n >= 8 and positive tau")
    f, dom = cfg.profile(), cfg.domain()
    rep = iterated_penalty_argmax(u, v, dom, tau, grid_n, f=f)
    paths = escalation_paths(u, v, dom, tau, tau_start=float(min(tau.min(), 10.0)), grid_n=grid_n)
    t_values = cfg.vector("imp", "t_values")
    try:
        table = gap_asymptotics(f, default_family(cfg.real("imp", "c2"), cfg.real("imp", "c3")), t_values)
    except ValueError as exc:
        raise ConfigError(f"[imp] {exc}") from None
    rec = rep.as_record()
    records.write_jsonl(cfg.out / "imp.jsonl", [rec])
    records.write_jsonl(cfg.out / "escalation.jsonl",
                        [{"order": list(k), "M": vals} for k, vals in paths.items()])
    records.write_jsonl(cfg.out / "gap.jsonl", table.rows)
    records.write_csv(cfg.out / "gap.csv", table.rows)
    (cfg.out / "summary.json").write_text(records.dumps({
        "M": rep.M, "M_tau2_tau3": rec["M_tau2_tau3"], "M_tau3": rec["M_tau3"],
        "gap_slope": table.gap_slope, "eta_slope": table.eta_slope,
        "escalation_spread": float(np.ptp([p[-1] for p in paths.values()])),
    }) + "\n")
    return (f"imp: M {rep.M:.6f} >= {rec['M_tau2_tau3']:.6f} >= {rec['M_tau3']:.6f}, "
            f"gap slope {table.gap_slope:.3f}")


def _cmd_compare(cfg: RunConfig) -> str:
    f, sc, h = cfg.profile(), cfg.solver(), cfg.h()
    dom = cfg.domain(g=0.0)
    g1, g2 = cfg.get("compare", "g1").strip(), cfg.get("compare", "g2").strip()
    if bool(g1) != bool(g2):
        raise ConfigError("[compare] give both g1 and g2, or neither for random pairs")
    if g1:
        pairs = [(cfg.poly("compare", "g1"), cfg.poly("compare", "g2"))]
    else:
        n = cfg.integer("compare", "pairs")
        if n < 1:
            raise ConfigError("[compare] pairs must be >= 1")
        rng = np.random.default_rng(cfg.seed)
        pairs = []
        for _ in range(n):
            a = random_polynomial_field(rng, 2)
            # g2 - g1 is a sum of squares plus a constant >= 0
            b = random_polynomial_field(rng, 1)
            pairs.append((a, a + b * b + float(rng.uniform(0, 0.5))))
    rows = []
    for i, (a, b) in enumerate(pairs):
        try:
            val = comparison_harness(dom, f, a, b, sc, h, seed=cfg.seed)
        except ValueError as exc:
            raise ConfigError(f"[compare] {exc}") from None
        rows.append({"pair": i, "g1": repr(a), "g2": repr(b), "max_excess": val})
    records.write_jsonl(cfg.out / "compare.jsonl", rows)
    records.write_csv(cfg.out / "compare.csv", rows)
    worst = max(r["max_excess"] for r in rows)
    line = f"compare: {len(rows)} pairs, max (u1 - u2)+ = {worst:.3e}"
    if worst > 2 * sc.tol:
        raise CheckFailed(line + f" > 2 tol = {2 * sc.tol:.1e}")
    return line


def _cmd_operators(cfg: RunConfig) -> str:
    u, f = cfg.poly("operators", "u"), cfg.profile()
    q, eps = cfg.real("operators", "q"), cfg.real("operators", "eps")
    if q < 2 or not eps > 0:
        raise ConfigError("[operators] need q >= 2 and eps > 0")
    text = cfg.get("operators", "points")
    pts = [_parse(lambda s: Point(*[float(t) for t in s.split()]), "operators", "points", chunk)
           for chunk in text.split(",") if chunk.strip()]
    rows = []
    for p in pts:
        g = horizontal_gradient(u, f, p)
        H = symmetrized_hessian(u, f, p)
        try:
            ql = q_laplacian(u, f, p, q)
        except DegenerateGradientError:
            ql = float("nan")
        rows.append({
            "p": list(p),
            "grad0": list(g),
            "grad1": list(semi_horizontal_gradient(u, f, p)),
            "hessian_star": [H.m11, H.m12, H.m22],
            "infinity_laplacian": infinity_laplacian(u, f, p),
            "horizontal_laplacian": horizontal_laplacian(u, f, p),
            "q": q,
            "q_laplacian": ql,
            "jensen_F": jensen_operator("F", g, H, eps),
            "jensen_G": jensen_operator("G", g, H, eps),
        })
    records.write_jsonl(cfg.out / "operators.jsonl", rows)
    records.write_csv(cfg.out / "operators.csv", rows)
    return f"operators: {len(rows)} points evaluated"


HANDLERS = {
    "solve": _cmd_solve,
    "monotone": _cmd_monotone,
    "distance": _cmd_distance,
    "twist-check": _cmd_twist,
    "maxprin": _cmd_maxprin,
    "imp": _cmd_imp,
    "compare": _cmd_compare,
    "operators": _cmd_operators,
}


def run(command: str, config: RunConfig) -> int:
    """Dispatch one command; print a one-line summary and return the exit status."""
    if command not in HANDLERS:
        print(f"error: unknown command {command!r}", file=sys.stderr)
        return 1
    try:
        config.out.mkdir(parents=True, exist_ok=True)
        line = HANDLERS[command](config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, DistanceConvergenceError) as exc:
        print(f"{command}: not converged: {exc}", file=sys.stderr)
        return 2
    except CheckFailed as exc:
        print(f"{exc}", file=sys.stderr)
        return 2
    print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="martinet", description="Martinet-space calculus and viscosity numerics.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="INI configuration file")
    ap.add_argument("--out", default="out", help="output directory (default: out)")
    ap.add_argument("--seed", type=int, default=0, help="random seed, unsigned 64-bit")
    ap.add_argument("--threads", type=int, default=1, help="parallelism cap (computations are single-threaded)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage errors are status 1 here
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.seed, args.threads, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(args.command, cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
