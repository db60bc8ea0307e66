"""
Calculus and viscosity-solution numerics on Martinet spaces.

R^3 with the horizontal frame X1 = d/dx1, X2 = d/dx2 + f(x1) d/dx3 for a
polynomial profile f.  Submodules:

core         exact horizontal derivatives and second-order operators
jets         Euclidean to Martinet jet twisting, penalty jet pairs
distance     bracket order, ball-box estimate, CC distance upper bounds
solver       monotone lattice solvers for the infinity-Laplace problem
experiments  penalised suprema, gap asymptotics, comparison harness
cli          the ``martinet`` command
"""

from .core import (
    DegenerateGradientError,
    HorizontalVector,
    MartinetProfile,
    Point,
    PolynomialField,
    SemiHorizontalVector,
    Sym2,
    apply_vector_field,
    horizontal_gradient,
    horizontal_laplacian,
    infinity_laplacian,
    jensen_operator,
    profile_eval,
    q_laplacian,
    random_polynomial_field,
    semi_horizontal_gradient,
    symmetrized_hessian,
    vector_field,
)
from .distance import (
    ControlCurve,
    DistanceConvergenceError,
    ball_box_distance,
    bracket_order,
    cc_upper_bound,
    scaling_exponent,
)
from .experiments import (
    GapTable,
    PenaltyReport,
    comparison_harness,
    default_family,
    escalation_paths,
    gap_asymptotics,
    iterated_penalty_argmax,
    penalty_argmax,
    penalty_sweep,
    pinned_family,
    random_profile,
    twist_check,
)
from .jets import (
    EuclideanJet2,
    MartinetJet2,
    Sym3,
    euclidean_jet,
    imp_eta_pair,
    penalty_jet_pair,
    twist_jet,
    vector_gap,
)
from .solver import (
    BoxDomain,
    ConvergenceError,
    GridFunction,
    SolverConfig,
    horizontal_sample,
    midpoint_update,
    residual,
    solve_infinity_laplace,
    solve_monotone_model,
)

__version__ = "0.1.0"
