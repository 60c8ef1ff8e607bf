"""Discrete Monge-Ampere operator and the Dirichlet solver for det D^2 u = f.

The 2D operator is the monotone wide-stencil form

    MA_h(u)(x) = min over orthogonal pairs (e1, e2) of
                 max(D_e1 u, 0) * max(D_e2 u, 0)

with ``D_e`` the (possibly cut) second difference along ``e``; in 1D it is
the positive part of the plain second difference.  The solver is a
nonlinear Gauss-Seidel iteration whose per-node update is the exact root of
the node equation with neighbors frozen.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .grid import Grid, ScalarField

__all__ = [
    "ComparisonPreconditionError",
    "DiscreteRHS",
    "NonConvergence",
    "SolveInfo",
    "SolverParams",
    "aleksandrov_ratio",
    "auto_relaxation",
    "check_convexity",
    "comparison_trial",
    "directional_differences",
    "gradient_ratio",
    "ma_operator",
    "residual",
    "solve_ma_dirichlet",
]

log = logging.getLogger(__name__)


class NonConvergence(RuntimeError):
    """Raised when the sweep budget runs out; carries the last iterate."""

    def __init__(self, residual: float, sweeps: int, field: ScalarField | None = None):
        super().__init__(f"no convergence after {sweeps} sweeps (residual {residual:.3e})")
        self.residual = residual
        self.sweeps = sweeps
        self.field = field


class ComparisonPreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class SolverParams:
    """Gauss-Seidel controls.

    ``None`` for ``tol_residual`` means ``1e-8 * max(f)^(1/n)``; for
    ``max_sweeps`` it means ``200 * nodes per side``; for ``relaxation`` it
    selects :func:`auto_relaxation`.  ``per_node_tol`` is accepted for
    configuration symmetry; the node update is solved in closed form.
    """

    tol_residual: float | None = None
    max_sweeps: int | None = None
    per_node_tol: float = 1e-14
    relaxation: float | None = None
    parallel: bool = False
    check_every: int = 10

    def __post_init__(self):
        if self.tol_residual is not None and not self.tol_residual > 0:
            raise ValueError("tol_residual must be positive")
        if self.max_sweeps is not None and self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.relaxation is not None and not 0 < self.relaxation < 2:
            raise ValueError("relaxation must lie in (0, 2)")
        if self.check_every < 1:
            raise ValueError("check_every must be >= 1")


@dataclass(frozen=True)
class SolveInfo:
    sweeps: int
    residual: float
    tol: float
    relaxation: float


class DiscreteRHS:
    """Nonnegative density per unknown node."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.broadcast_to(np.asarray(values, dtype=float), (grid.size,)).copy()
        if not np.all(np.isfinite(values)):
            raise ValueError("right-hand side must be finite")
        if np.any(values < 0):
            raise ValueError(f"right-hand side must be nonnegative (min {values.min():.3e})")
        self.grid = grid
        self.values = values

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "DiscreteRHS":
        return cls(grid, np.full(grid.size, float(value)))


def directional_differences(grid: Grid, u: ScalarField) -> np.ndarray:
    """Second differences of ``u`` along every stencil vector, shape (m, D)."""
    return _kernels.directional_differences(grid.lattice_values(u.values), *grid.kernel_args)


def ma_operator(grid: Grid, u: ScalarField) -> np.ndarray:
    """Discrete Monge-Ampere density at every unknown node (nonnegative).

    Plain numpy evaluation, kept separate from the jitted solver kernels so
    solver residuals can be re-checked independently.
    """
    vals = np.append(u.values, 0.0)
    a, b = grid.arms[:, :, 0], grid.arms[:, :, 1]
    up = vals[grid.neighbors[:, :, 0]]   # index -1 hits the appended zero
    um = vals[grid.neighbors[:, :, 1]]
    center = u.values[:, None]
    second = 2.0 / (a + b) * ((up - center) / a + (um - center) / b)
    pos = np.maximum(second, 0.0)
    prods = np.prod(pos[:, grid.pairs], axis=2)
    return prods.min(axis=1)


def check_convexity(grid: Grid, u: ScalarField) -> float:
    """Largest negative part of any directional second difference (0 if discretely convex)."""
    return float(max(0.0, -directional_differences(grid, u).min()))


def auto_relaxation(grid: Grid) -> float:
    """Over-relaxation factor tuned for symmetric sweeps on the given grid."""
    ratio = grid.h / grid.domain.diameter
    return 2.0 / (1.0 + 3.0 * math.pi * ratio)


def _roots(f: np.ndarray, dim: int) -> np.ndarray:
    return f if dim == 1 else np.sqrt(f)


def solve_ma_dirichlet(
    grid: Grid,
    f: DiscreteRHS,
    params: SolverParams | None = None,
    warm_start: ScalarField | None = None,
    *,
    full_output: bool = False,
):
    """Solve ``MA_h(u) = f`` with ``u = 0`` on the boundary.

    Returns the solution field, or ``(field, SolveInfo)`` with
    ``full_output``.  Raises :class:`NonConvergence` when the residual
    ``sup |MA_h(u)^(1/n) - f^(1/n)|`` is still above tolerance after
    ``max_sweeps`` sweeps.
    """
    if not isinstance(f, DiscreteRHS):
        f = DiscreteRHS(grid, f)
    params = params or SolverParams()
    f_root = _roots(f.values, grid.dim)
    tol = params.tol_residual
    if tol is None:
        tol = max(1e-8 * float(f_root.max()), 1e-13)
    max_sweeps = params.max_sweeps or 200 * grid.nodes_per_side
    omega = params.relaxation or auto_relaxation(grid)

    U = grid.lattice_values(warm_start.values if warm_start is not None else np.zeros(grid.size))
    args = grid.kernel_args
    if params.parallel:
        colors = grid.colors()
        members = np.argsort(colors, kind="stable")
        ptr = np.searchsorted(colors[members], np.arange(colors.max() + 2))
        sweeps, res = _kernels.solve_colored(
            U, f.values, f_root, omega, tol, max_sweeps, params.check_every,
            members, ptr, *args, grid.pairs,
        )
    else:
        sweeps, res = _kernels.solve_serial(
            U, f.values, f_root, omega, tol, max_sweeps, params.check_every,
            *args, grid.pairs,
        )
    field = ScalarField(grid, U[args[0]])
    log.debug("MA solve: %d sweeps, residual %.3e (tol %.3e)", sweeps, res, tol)
    if res > tol:
        raise NonConvergence(res, sweeps, field)
    if full_output:
        return field, SolveInfo(sweeps=int(sweeps), residual=float(res), tol=tol, relaxation=omega)
    return field


def residual(grid: Grid, u: ScalarField, f: DiscreteRHS | np.ndarray) -> float:
    """Independent evaluation of ``sup |MA_h(u)^(1/n) - f^(1/n)|``."""
    values = f.values if isinstance(f, DiscreteRHS) else np.asarray(f, dtype=float)
    ma = ma_operator(grid, u)
    return float(np.abs(_roots(ma, grid.dim) - _roots(values, grid.dim)).max())


def comparison_trial(
    grid: Grid,
    u: ScalarField,
    v: ScalarField,
    tol: float = 1e-8,
    rhs_slack: float = 0.0,
) -> bool:
    """Check the discrete comparison principle on one pair of fields.

    Requires ``MA_h(u) <= MA_h(v)`` nodewise (in nth-root units, up to
    ``rhs_slack``) and returns whether ``u >= v - tol`` everywhere.  A
    violated precondition raises :class:`ComparisonPreconditionError`.
    """
    mu = _roots(ma_operator(grid, u), grid.dim)
    mv = _roots(ma_operator(grid, v), grid.dim)
    excess = float((mu - mv).max())
    if excess > rhs_slack:
        raise ComparisonPreconditionError(
            f"MA_h(u) exceeds MA_h(v) by {excess:.3e} (allowed {rhs_slack:.3e})"
        )
    return bool(np.all(u.values >= v.values - tol))


def gradient_ratio(grid: Grid, u: ScalarField) -> float:
    """Largest ``|slope| * dist / sup|u|`` over lattice edges and cut arms.

    Slopes are difference quotients along every stencil vector; ``dist`` is
    the smaller boundary distance of the two endpoints.  Convex functions
    vanishing on the boundary give a ratio of at most 1.
    """
    sup = u.sup_norm()
    if sup == 0:
        return 0.0
    vals = np.append(u.values, 0.0)
    dist = np.append(grid.boundary_distance, 0.0)
    nb = grid.neighbors[:, :, 0]
    slope = np.abs(vals[nb] - u.values[:, None]) / grid.arms[:, :, 0]
    inner = np.where(nb >= 0, np.minimum(dist[nb], grid.boundary_distance[:, None]),
                     grid.boundary_distance[:, None])
    return float((slope * inner).max() / sup)


def aleksandrov_ratio(grid: Grid, u: ScalarField) -> float:
    """Max over nodes of ``|u|^n / (dist * diam^(n-1) * total MA mass)``."""
    n = grid.dim
    mass = float(np.dot(grid.quad_weight, ma_operator(grid, u)))
    if mass == 0:
        return 0.0
    diam = grid.domain.diameter
    ratio = np.abs(u.values) ** n / (grid.boundary_distance * diam ** (n - 1) * mass)
    return float(ratio.max())
