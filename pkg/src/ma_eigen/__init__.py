"""Monge-Ampere eigenvalue by inverse iteration on a monotone finite-difference scheme."""
from .geometry import Ball, Domain, boundary_crossing, contains, enclosing_ball
from .grid import Grid, ScalarField, build_grid, integrate_power
from .ma_core import (
    DiscreteRHS,
    NonConvergence,
    SolverParams,
    check_convexity,
    comparison_trial,
    ma_operator,
    solve_ma_dirichlet,
)
from .functionals import ma_energy, monotone_quantity, rayleigh_quotient
from .iteration import (
    EigenResult,
    IterationParams,
    build_initial_paraboloid,
    iteration_step,
    nondegeneracy_check,
    run_inverse_iteration,
)
from .oracles import exact_1d_eigenpair, radial_eigenvalue, scale_eigenvalue

__version__ = "0.1.0"
