"""Rayleigh quotient, Monge-Ampere energy and related discrete functionals.

The energy uses the same discrete density the solver inverts,
``dMu ~ MA_h(u) * quad_weight``, so identities obtained by testing the
iteration against ``-u`` hold up to solver tolerance.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .grid import Grid, ScalarField, integrate_power
from .ma_core import gradient_ratio, ma_operator

__all__ = [
    "DegenerateField",
    "FunctionalReport",
    "functional_report",
    "holder_seminorm",
    "lp_norm",
    "ma_energy",
    "monotone_quantity",
    "norm_equivalence",
    "rayleigh_quotient",
]


class DegenerateField(ValueError):
    """The field has zero L^(n+1) norm, so the Rayleigh quotient is undefined."""


def ma_energy(grid: Grid, u: ScalarField) -> float:
    """Discrete ``I(u) = integral of (-u) dMu``."""
    neg = np.maximum(-u.values, 0.0)
    return float(np.dot(grid.quad_weight, neg * ma_operator(grid, u)))


def lp_norm(u: ScalarField, p: float) -> float:
    return integrate_power(u, p) ** (1.0 / p)


def rayleigh_quotient(grid: Grid, u: ScalarField) -> float:
    denom = integrate_power(u, grid.dim + 1)
    if denom == 0:
        raise DegenerateField("Rayleigh quotient of a field with zero L^(n+1) norm")
    return ma_energy(grid, u) / denom


def monotone_quantity(grid: Grid, u: ScalarField) -> float:
    """``R(u) * ||u||_{L^(n+1)}^n``; nonincreasing along the inverse iteration."""
    n = grid.dim
    return rayleigh_quotient(grid, u) * integrate_power(u, n + 1) ** (n / (n + 1))


def holder_seminorm(
    grid: Grid,
    u: ScalarField,
    exponent: float | None = None,
    reach: int = 8,
    n_random: int = 1000,
    seed: int = 0,
) -> float:
    """Sampled ``C^{0, 1/n}`` seminorm.

    Pairs: all unknown pairs within ``reach`` lattice steps, each node with
    its nearest boundary point (value 0), and ``n_random`` random pairs.
    """
    alpha = 1.0 / grid.dim if exponent is None else float(exponent)
    vals = u.values
    if not np.any(vals):
        return 0.0
    best = 0.0

    lattice = np.full(grid.shape, np.nan)
    lattice[tuple(grid.lattice_index.T)] = vals
    rng_offsets = range(-reach, reach + 1)
    if grid.dim == 1:
        offsets = [(i,) for i in range(1, reach + 1)]
    else:
        offsets = [
            (i, j) for i in rng_offsets for j in rng_offsets
            if (i > 0 or (i == 0 and j > 0)) and i * i + j * j <= reach * reach
        ]
    for off in offsets:
        src = tuple(slice(max(0, -o), n - max(0, o)) for o, n in zip(off, grid.shape))
        dst = tuple(slice(max(0, o), n - max(0, -o)) for o, n in zip(off, grid.shape))
        diff = np.abs(lattice[dst] - lattice[src])
        dist = grid.h * np.sqrt(sum(o * o for o in off))
        if np.any(np.isfinite(diff)):
            best = max(best, float(np.nanmax(diff)) / dist**alpha)

    bd = grid.boundary_distance
    best = max(best, float((np.abs(vals) / bd**alpha).max()))

    rng = np.random.default_rng(seed)
    i = rng.integers(0, grid.size, n_random)
    j = rng.integers(0, grid.size, n_random)
    keep = i != j
    i, j = i[keep], j[keep]
    if i.size:
        sep = np.sqrt(((grid.points[i] - grid.points[j]) ** 2).sum(axis=1))
        best = max(best, float((np.abs(vals[i] - vals[j]) / sep**alpha).max()))
    return best


def norm_equivalence(grid: Grid, u: ScalarField, p: float) -> tuple[float, float, float]:
    """``(sup/(n+1), (integral |u|^p / |Omega|)^(1/p), sup)`` for the comparable-norms check."""
    sup = u.sup_norm()
    mean = (integrate_power(u, p) / grid.domain.volume) ** (1.0 / p)
    return sup / (grid.dim + 1), mean, sup


@dataclass(frozen=True)
class FunctionalReport:
    rayleigh: float
    energy: float
    sup_norm: float
    lp_norm: float
    monotone_quantity: float
    holder_seminorm: float
    gradient_ratio_max: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def functional_report(grid: Grid, u: ScalarField, seed: int = 0) -> FunctionalReport:
    n = grid.dim
    energy = ma_energy(grid, u)
    power = integrate_power(u, n + 1)
    if power == 0:
        raise DegenerateField("functional report of a zero field")
    rayleigh = energy / power
    norm = power ** (1.0 / (n + 1))
    return FunctionalReport(
        rayleigh=rayleigh,
        energy=energy,
        sup_norm=u.sup_norm(),
        lp_norm=norm,
        monotone_quantity=rayleigh * norm**n,
        holder_seminorm=holder_seminorm(grid, u, seed=seed),
        gradient_ratio_max=gradient_ratio(grid, u),
    )
