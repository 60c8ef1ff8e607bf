"""Inverse iteration for the Monge-Ampere eigenvalue problem.

Starting from a convex ``u_0 <= 0`` with ``MA(u_0) >= 1``, each step solves

    MA_h(u_{k+1}) = R(u_k) (-u_k)^n,   u_{k+1} = 0 on the boundary,

and the normalized iterates ``u_k / sup|u_k|`` converge to the unit-height
eigenfunction while ``R(u_k)`` converges to the eigenvalue.

The step map is positively homogeneous of degree one, so iterates may be
rescaled freely.  With ``renormalize_each_step`` the stored iterate has unit
height and the scale of the unnormalized sequence is carried separately;
the history always reports the unnormalized ``u_k``.
"""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .functionals import DegenerateField, ma_energy
from .geometry import enclosing_ball
from .grid import Grid, ScalarField, integrate_power
from .ma_core import (
    DiscreteRHS,
    NonConvergence,
    SolverParams,
    check_convexity,
    ma_operator,
    solve_ma_dirichlet,
)

__all__ = [
    "EigenResult",
    "HISTORY_HEADER",
    "HypothesisError",
    "IterationHistory",
    "IterationParams",
    "build_initial_paraboloid",
    "fixed_point_residual",
    "iteration_step",
    "nondegeneracy_check",
    "run_inverse_iteration",
]

log = logging.getLogger(__name__)

HISTORY_HEADER = "k,rayleigh,sup_norm,lp_norm,monotone_quantity,delta,energy,sweeps"

CONVERGED = "converged"
MAX_ITER = "max_iter_reached"
SOLVER_FAILURE = "solver_failure"


class HypothesisError(ValueError):
    """The initial function does not satisfy the discrete starting hypotheses."""


@dataclass(frozen=True)
class IterationParams:
    tol_rayleigh: float = 1e-8
    tol_field: float = 1e-7
    max_iter: int = 500
    solver: SolverParams = field(default_factory=SolverParams)
    renormalize_each_step: bool = True
    slack_mono: float = 1e-3

    def __post_init__(self):
        if not (self.tol_rayleigh > 0 and self.tol_field > 0):
            raise ValueError("tol_rayleigh and tol_field must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.slack_mono < 0:
            raise ValueError("slack_mono must be nonnegative")


@dataclass
class IterationHistory:
    """Per-step record of the unnormalized iterates ``u_k``, starting at k = 0."""

    dim: int
    rayleigh: list[float] = field(default_factory=list)
    sup_norm: list[float] = field(default_factory=list)
    lp_norm: list[float] = field(default_factory=list)
    monotone_quantity: list[float] = field(default_factory=list)
    delta: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    sweeps: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rayleigh)

    def append(self, *, rayleigh, sup_norm, lp_norm, energy, delta, sweeps):
        self.rayleigh.append(float(rayleigh))
        self.sup_norm.append(float(sup_norm))
        self.lp_norm.append(float(lp_norm))
        self.monotone_quantity.append(float(rayleigh) * float(lp_norm) ** self.dim)
        self.delta.append(float(delta))
        self.energy.append(float(energy))
        self.sweeps.append(int(sweeps))

    def monotone_violations(self, slack: float) -> list[int]:
        """Steps ``k >= 1`` with ``m_k > m_{k-1} (1 + slack)``."""
        m = self.monotone_quantity
        return [k for k in range(1, len(m)) if m[k] > m[k - 1] * (1.0 + slack)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(HISTORY_HEADER + "\n")
        for k in range(len(self)):
            row = [
                self.rayleigh[k], self.sup_norm[k], self.lp_norm[k],
                self.monotone_quantity[k], self.delta[k], self.energy[k],
            ]
            buf.write(f"{k}," + ",".join(f"{v:.17g}" for v in row) + f",{self.sweeps[k]}\n")
        return buf.getvalue()


@dataclass
class EigenResult:
    lambda_estimate: float
    eigenfunction: ScalarField
    history: IterationHistory
    status: str
    notes: list[str] = field(default_factory=list)
    # last iterate before normalization, scaled as the unnormalized sequence
    final_iterate: ScalarField | None = None

    @property
    def iterations(self) -> int:
        return len(self.history) - 1

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def aitken_estimate(self) -> float:
        """Aitken extrapolation of the last three Rayleigh quotients (diagnostic only)."""
        r = self.history.rayleigh
        if len(r) < 3:
            return self.lambda_estimate
        a, b, c = r[-3:]
        denom = c - 2 * b + a
        if denom == 0:
            return c
        return c - (c - b) ** 2 / denom


def build_initial_paraboloid(grid: Grid, margin: float = 0.05) -> ScalarField:
    """``u_0(x) = (|x - x0|^2 - R^2) / 2`` on the enclosing ball; ``MA(u_0) = 1``."""
    ball = enclosing_ball(grid.domain, margin)
    x0 = np.asarray(ball.center)
    r2 = ((grid.points - x0) ** 2).sum(axis=1)
    return ScalarField(grid, 0.5 * (r2 - ball.radius**2))


def _rhs(grid: Grid, u: ScalarField) -> tuple[DiscreteRHS, float]:
    R = _rayleigh(grid, u)
    neg = np.maximum(-u.values, 0.0)
    return DiscreteRHS(grid, R * neg**grid.dim), R


def _rayleigh(grid: Grid, u: ScalarField) -> float:
    denom = integrate_power(u, grid.dim + 1)
    if denom == 0:
        raise DegenerateField("iterate vanished")
    return ma_energy(grid, u) / denom


def _step(grid: Grid, u: ScalarField, params: IterationParams):
    rhs, _ = _rhs(grid, u)
    return solve_ma_dirichlet(grid, rhs, params.solver, warm_start=u, full_output=True)


def iteration_step(grid: Grid, u_k: ScalarField, params: IterationParams | None = None) -> ScalarField:
    """One inverse-iteration step, renormalized to unit height if requested."""
    params = params or IterationParams()
    nxt, _ = _step(grid, u_k, params)
    return nxt.normalized() if params.renormalize_each_step else nxt


def _check_hypotheses(grid: Grid, u0: ScalarField):
    scale = u0.sup_norm()
    if scale == 0:
        raise HypothesisError("initial function vanishes identically")
    if u0.values.max() > 1e-12 * scale:
        raise HypothesisError("initial function must be <= 0")
    tol = 1e-8
    # convexity tolerance: 1e-10 of the height, in second-difference units
    if check_convexity(grid, u0) > 1e-10 * scale / grid.h**2:
        raise HypothesisError("initial function is not discretely convex")
    ma = ma_operator(grid, u0)[grid.full_stencil]
    if ma.size and ma.min() < 1.0 - 10 * tol:
        raise HypothesisError(f"MA_h(u0) drops to {ma.min():.6g} < 1 at full-stencil nodes")
    if not math.isfinite(_rayleigh(grid, u0)):
        raise HypothesisError("R(u0) is not finite")


def run_inverse_iteration(
    grid: Grid,
    u0: ScalarField,
    params: IterationParams | None = None,
    check_hypotheses: bool = True,
    callback=None,
) -> EigenResult:
    """Iterate until the Rayleigh quotient and the normalized iterate both settle.

    Stops when ``|R_{k+1} - R_k| <= tol_rayleigh R_k`` and
    ``sup |u^_{k+1} - u^_k| <= tol_field``, or after ``max_iter`` steps.  The
    returned history always covers every completed step, including k = 0.
    ``callback(k, u_k)`` receives each unnormalized iterate.
    """
    params = params or IterationParams()
    if check_hypotheses:
        _check_hypotheses(grid, u0)
    n = grid.dim
    history = IterationHistory(dim=n)
    notes: list[str] = []

    def record(stored: ScalarField, scale: float, delta: float, sweeps: int) -> float:
        R = _rayleigh(grid, stored)
        energy = ma_energy(grid, stored)
        history.append(
            rayleigh=R,
            sup_norm=scale * stored.sup_norm(),
            lp_norm=scale * integrate_power(stored, n + 1) ** (1.0 / (n + 1)),
            energy=scale ** (n + 1) * energy,
            delta=delta,
            sweeps=sweeps,
        )
        return R

    current, scale = u0, 1.0
    R_prev = record(current, scale, math.nan, 0)
    if callback is not None:
        callback(0, current)
    hat_prev = current.normalized()
    status = MAX_ITER
    for k in range(params.max_iter):
        try:
            nxt, info = _step(grid, current, params)
        except NonConvergence as exc:
            notes.append(f"step {k + 1}: {exc}")
            status = SOLVER_FAILURE
            break
        if params.renormalize_each_step:
            t = nxt.sup_norm()
            current, scale = nxt / t, scale * t
        else:
            current = nxt
        hat = current.normalized()
        delta = float(np.abs(hat.values - hat_prev.values).max())
        R = record(current, scale, delta, info.sweeps)
        if callback is not None:
            callback(k + 1, current * scale)
        log.info("k=%d R=%.12g delta=%.3e sweeps=%d", k + 1, R, delta, info.sweeps)
        done = abs(R - R_prev) <= params.tol_rayleigh * R_prev and delta <= params.tol_field
        R_prev, hat_prev = R, hat
        if done:
            status = CONVERGED
            break

    for k in history.monotone_violations(params.slack_mono):
        notes.append(f"monotone quantity increased beyond slack at step {k}")
    return EigenResult(
        lambda_estimate=history.rayleigh[-1],
        eigenfunction=current.normalized(),
        history=history,
        status=status,
        notes=notes,
        final_iterate=current * scale,
    )


def nondegeneracy_check(history: IterationHistory, lambda_ref: float, slack: float = 0.05) -> bool:
    """Whether every ``sup|u_k|`` stays above ``(1 - slack) lambda_ref^(-1/n)``."""
    if not lambda_ref > 0:
        raise ValueError("lambda_ref must be positive")
    floor = (1.0 - slack) * lambda_ref ** (-1.0 / history.dim)
    return all(s >= floor for s in history.sup_norm)


def fixed_point_residual(grid: Grid, u: ScalarField, lam: float) -> float:
    """``sup |MA_h(u) - lam (-u)^n|`` over full-stencil nodes."""
    mask = grid.full_stencil
    ma = ma_operator(grid, u)[mask]
    target = lam * np.maximum(-u.values[mask], 0.0) ** grid.dim
    return float(np.abs(ma - target).max()) if mask.any() else 0.0
