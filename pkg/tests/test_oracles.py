import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ma_eigen.oracles import (
    RadialShootParams,
    exact_1d_eigenpair,
    radial_eigenvalue,
    scale_eigenvalue,
    solve_1d_dirichlet_exact,
)

# frozen from a shooting run at ode_step = 2.5e-4 (independent of the grid pipeline)
LAMBDA_DISK = 7.490039398677


def test_exact_1d_examples():
    lam, u = exact_1d_eigenpair(1.0)
    assert lam == pytest.approx(math.pi**2, rel=1e-15)
    assert u(0.5) == pytest.approx(-1.0)
    assert exact_1d_eigenpair(2.0)[0] == pytest.approx(math.pi**2 / 4, rel=1e-15)
    for L in (0.3, 1.0, 5.0):
        assert exact_1d_eigenpair(L)[0] * L**2 == pytest.approx(math.pi**2, rel=1e-14)
    with pytest.raises(ValueError):
        exact_1d_eigenpair(0.0)


def test_exact_1d_eigenfunction_solves_equation():
    lam, u = exact_1d_eigenpair(1.5)
    x = np.linspace(0.1, 1.4, 7)
    h = 1e-4
    upp = (u(x + h) - 2 * u(x) + u(x - h)) / h**2
    assert np.allclose(upp, lam * (-u(x)), rtol=1e-5)


def test_radial_n1_cross_oracle():
    assert radial_eigenvalue(1) == pytest.approx(exact_1d_eigenpair(2.0)[0], rel=1e-8)


def test_radial_n2_step_halving():
    a = radial_eigenvalue(2, RadialShootParams(ode_step=1e-3))
    b = radial_eigenvalue(2, RadialShootParams(ode_step=5e-4))
    assert abs(a - b) <= 1e-6 * b
    assert b == pytest.approx(LAMBDA_DISK, rel=1e-9)


def test_radial_height_identity():
    lam = radial_eigenvalue(2)
    assert lam > 0
    assert 1.0 >= 0.95 * lam ** (-1 / 2) * lam ** (1 / 2)


def test_radial_rejects():
    with pytest.raises(ValueError):
        radial_eigenvalue(3)
    with pytest.raises(ValueError):
        RadialShootParams(ode_step=1e-2)
    with pytest.raises(RuntimeError):
        radial_eigenvalue(2, RadialShootParams(r_max=1.0))


def test_scale_examples():
    assert scale_eigenvalue(3.7, 1.0, 2) == 3.7
    assert scale_eigenvalue(math.pi**2 / 4, 0.5, 1) == pytest.approx(exact_1d_eigenpair(1.0)[0], rel=1e-15)
    assert scale_eigenvalue(16.0, 2.0, 2) == pytest.approx(1.0)


@given(
    lam=st.floats(1e-3, 1e3),
    t=st.floats(0.05, 20),
    n=st.sampled_from([1, 2]),
)
def test_scale_round_trip(lam, t, n):
    back = scale_eigenvalue(scale_eigenvalue(lam, t, n), 1 / t, n)
    assert back == pytest.approx(lam, rel=1e-13)


def test_scale_law_matches_1d_pairs():
    lam1 = exact_1d_eigenpair(1.0)[0]
    for L in (0.5, 2.0, 3.0):
        assert scale_eigenvalue(lam1, L, 1) == pytest.approx(exact_1d_eigenpair(L)[0], rel=1e-14)


def test_dirichlet_oracle_examples():
    u = solve_1d_dirichlet_exact(lambda x: np.ones_like(x), 1.0)
    x = np.linspace(0, 1, 11)
    assert np.allclose(u(x), x * (x - 1) / 2, atol=1e-12)
    assert u(0.5) == pytest.approx(-1 / 8, abs=1e-12)
    v = solve_1d_dirichlet_exact(lambda x: math.pi**2 * np.sin(math.pi * x), 1.0, m=100_000)
    assert np.abs(v(x) + np.sin(math.pi * x)).max() <= 1e-8
    w = solve_1d_dirichlet_exact(lambda x: np.zeros_like(x), 1.0)
    assert np.all(w(x) == 0)
