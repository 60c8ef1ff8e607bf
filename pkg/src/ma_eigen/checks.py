"""Randomized and structural invariant checks shared by the ``check`` command and tests."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .functionals import norm_equivalence, rayleigh_quotient
from .grid import Grid, ScalarField
from .iteration import IterationParams, _step
from .ma_core import (
    DiscreteRHS,
    SolverParams,
    comparison_trial,
    gradient_ratio,
    ma_operator,
    solve_ma_dirichlet,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def scale_invariance(grid: Grid, u: ScalarField, factors=(0.1, 3.0, 10.0), rtol=1e-12) -> CheckResult:
    base = rayleigh_quotient(grid, u)
    worst = max(abs(rayleigh_quotient(grid, u * c) - base) / base for c in factors)
    return CheckResult("scale invariance of R", worst <= rtol, f"max rel. change {worst:.2e} (tol {rtol:g})")


def norm_equivalence_check(grid: Grid, fields, slack: float | None = None) -> CheckResult:
    """``sup/(n+1) <= (mean |u|^p)^(1/p) <= sup (1 + 5h)`` for p in {2, n+1} on every field."""
    slack = 5 * grid.h if slack is None else slack
    worst_lo, worst_hi = np.inf, np.inf
    for u in fields:
        for p in sorted({2, grid.dim + 1}):
            lo, mid, hi = norm_equivalence(grid, u, p)
            worst_lo = min(worst_lo, mid / lo)
            worst_hi = min(worst_hi, hi * (1 + slack) / mid)
    ok = worst_lo >= 1.0 and worst_hi >= 1.0
    return CheckResult(
        "norm equivalence",
        ok,
        f"min lower margin {worst_lo:.4f}, min upper margin {worst_hi:.4f} (both must be >= 1)",
    )


def degenerate_ellipticity(grid: Grid, u: ScalarField, trials: int = 100, seed: int = 0) -> CheckResult:
    """Raising one neighbor value never lowers the operator at the center."""
    rng = np.random.default_rng(seed)
    base = ma_operator(grid, u)
    scale = max(u.sup_norm(), 1e-300)
    worst = 0.0
    done = 0
    while done < trials:
        k = int(rng.integers(grid.size))
        nbrs = grid.neighbors[k].ravel()
        nbrs = nbrs[nbrs >= 0]
        if nbrs.size == 0:
            continue
        j = int(rng.choice(nbrs))
        bumped = u.values.copy()
        bumped[j] += rng.uniform(0.0, 0.1) * scale
        after = ma_operator(grid, ScalarField(grid, bumped))[k]
        worst = min(worst, (after - base[k]) / max(1.0, abs(base[k])))
        done += 1
    return CheckResult(
        "degenerate ellipticity", worst >= -1e-12, f"{trials} trials, worst change {worst:.2e}"
    )


def comparison_trials(
    grid: Grid, trials: int = 20, seed: int = 0, params: SolverParams | None = None
) -> CheckResult:
    """Solve with ordered random densities ``f_u <= f_v`` and confirm ``u >= v``."""
    rng = np.random.default_rng(seed)
    params = params or SolverParams()
    fails, worst = 0, np.inf
    for _ in range(trials):
        fu = rng.uniform(0.0, 2.0) * rng.random(grid.size)
        fv = fu + rng.uniform(0.0, 2.0) * rng.random(grid.size)
        tol = 1e-8 * max(1.0, float(np.sqrt(fv.max())))
        p = replace(params, tol_residual=tol)
        u = solve_ma_dirichlet(grid, DiscreteRHS(grid, fu), p)
        v = solve_ma_dirichlet(grid, DiscreteRHS(grid, fv), p)
        ok = comparison_trial(grid, u, v, tol=1e3 * tol, rhs_slack=2 * tol)
        worst = min(worst, float((u.values - v.values).min()))
        fails += not ok
    return CheckResult(
        "comparison principle", fails == 0, f"{trials} pairs, {fails} failures, min(u - v) = {worst:.2e}"
    )


def gradient_estimate(grid: Grid, fields) -> CheckResult:
    bound = 1 + 5 * grid.h
    worst = max(gradient_ratio(grid, u) for u in fields)
    return CheckResult("gradient estimate", worst <= bound, f"max ratio {worst:.4f} (bound {bound:.4f})")


def step_homogeneity(grid: Grid, u: ScalarField, params: IterationParams | None = None) -> CheckResult:
    """``step(2u) = 2 step(u)`` for the unnormalized step map."""
    params = replace(params or IterationParams(), renormalize_each_step=False)
    one, info = _step(grid, u, params)
    two, _ = _step(grid, u * 2.0, params)
    gap = float(np.abs(two.values - 2.0 * one.values).max())
    bound = 10 * info.tol
    return CheckResult("step homogeneity", gap <= bound, f"sup gap {gap:.2e} (bound {bound:.2e})")


def monotone_decay(history, slack: float = 1e-3) -> CheckResult:
    bad = history.monotone_violations(slack)
    return CheckResult(
        "monotone quantity", not bad,
        f"{len(history) - 1} steps, violations at {bad}" if bad else f"{len(history) - 1} steps, nonincreasing",
    )
