"""Reference values independent of the grid pipeline.

* the closed-form 1D eigenpair ``(pi/L)^2, -sin(pi x / L)``;
* the ball eigenvalue from shooting on the radial ODE
  ``u'' (u'/r)^(n-1) = (-u)^n``, ``u(0) = -1``;
* the scaling law ``lambda(t Omega) = t^(-2n) lambda(Omega)``;
* a quadrature solver for ``u'' = f`` on ``(0, L)`` with zero end values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

__all__ = [
    "RadialShootParams",
    "exact_1d_eigenpair",
    "radial_eigenvalue",
    "scale_eigenvalue",
    "solve_1d_dirichlet_exact",
]


def exact_1d_eigenpair(L: float) -> tuple[float, Callable[[np.ndarray], np.ndarray]]:
    if not L > 0:
        raise ValueError("length must be positive")
    lam = (math.pi / L) ** 2
    return lam, lambda x: -np.sin(math.pi * np.asarray(x) / L)


@dataclass(frozen=True)
class RadialShootParams:
    ode_step: float = 1e-3
    r_max: float = 10.0

    def __post_init__(self):
        if not 0 < self.ode_step <= 1e-3:
            raise ValueError("ode_step must lie in (0, 1e-3]")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")


def _radial_rhs(n: int):
    def rhs(r: float, y: np.ndarray) -> np.ndarray:
        u, du = y
        if n == 1:
            return np.array([du, -u])
        # u'' = (-u)^n / (u'/r)^(n-1)
        return np.array([du, (-u) ** n / (du / r) ** (n - 1)])
    return rhs


def _rk4(rhs, r: float, y: np.ndarray, dr: float) -> np.ndarray:
    k1 = rhs(r, y)
    k2 = rhs(r + dr / 2, y + dr / 2 * k1)
    k3 = rhs(r + dr / 2, y + dr / 2 * k2)
    k4 = rhs(r + dr, y + dr * k3)
    return y + dr / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def radial_eigenvalue(n: int, params: RadialShootParams | None = None) -> float:
    """Monge-Ampere eigenvalue of the unit ball in dimension ``n``.

    Integrates from the series start ``u = -1 + r^2/2 - n r^4 / (8(n+2))``
    (which removes the ``u'/r`` singularity) with fixed-step RK4, then
    bisects the first sign change of ``u``.  With ``r*`` that root the
    rescaled ``u(r* x)`` has unit height on the unit ball and eigenvalue
    ``r*^(2n)``.
    """
    if n not in (1, 2):
        raise ValueError("radial oracle supports n in {1, 2}")
    params = params or RadialShootParams()
    h = params.ode_step
    rhs = _radial_rhs(n)
    c4 = -n / (8.0 * (n + 2))
    r = 10.0 * h
    y = np.array([-1.0 + r * r / 2 + c4 * r**4, r + 4 * c4 * r**3])
    while True:
        if r > params.r_max:
            raise RuntimeError(f"no root of the radial profile below r_max = {params.r_max}")
        y_next = _rk4(rhs, r, y, h)
        if y_next[0] >= 0:
            break
        r, y = r + h, y_next
    lo, hi = 0.0, h
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _rk4(rhs, r, y, mid)[0] < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * (r + hi):
            break
    root = r + 0.5 * (lo + hi)
    return root ** (2 * n)


def scale_eigenvalue(lambda_unit: float, t: float, n: int) -> float:
    """Eigenvalue of the domain dilated by ``t``."""
    if not (lambda_unit > 0 and t > 0):
        raise ValueError("eigenvalue and scale must be positive")
    return t ** (-2 * n) * lambda_unit


def solve_1d_dirichlet_exact(
    f: Callable[[np.ndarray], np.ndarray], L: float, m: int = 100_001
) -> Callable[[np.ndarray], np.ndarray]:
    """Interpolant of the solution of ``u'' = f``, ``u(0) = u(L) = 0``.

    Double cumulative trapezoid on ``m`` points, then the linear correction
    ``- x/L * F(L)``.
    """
    x = np.linspace(0.0, L, int(m))
    fx = np.asarray(f(x), dtype=float) * np.ones_like(x)
    first = cumulative_trapezoid(fx, x, initial=0.0)
    F = cumulative_trapezoid(first, x, initial=0.0)
    u = F - x / L * F[-1]
    return lambda s: np.interp(s, x, u)
