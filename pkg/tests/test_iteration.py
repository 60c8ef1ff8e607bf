import math
from dataclasses import replace

import numpy as np
import pytest

from ma_eigen.checks import step_homogeneity
from ma_eigen.geometry import Domain, enclosing_ball
from ma_eigen.grid import build_grid
from ma_eigen.functionals import rayleigh_quotient
from ma_eigen.iteration import (
    HISTORY_HEADER,
    HypothesisError,
    IterationParams,
    build_initial_paraboloid,
    fixed_point_residual,
    iteration_step,
    nondegeneracy_check,
    run_inverse_iteration,
)
from ma_eigen.ma_core import SolverParams, ma_operator
from ma_eigen.oracles import radial_eigenvalue, solve_1d_dirichlet_exact

LAMBDA_DISK = 7.490039398677


@pytest.fixture(scope="module")
def disk16():
    return build_grid(Domain.disk((0, 0), 1), 1 / 16, 2)


def test_initializer_center_value():
    g = build_grid(Domain.disk((0, 0), 1), 1 / 16, 2)
    u0 = build_initial_paraboloid(g, margin=0.0)
    k = int(np.argmin(np.hypot(*g.points.T)))
    assert u0.values[k] == pytest.approx(-0.5)


def test_initializer_margin_makes_corner_negative():
    sq = Domain.unit_square()
    for margin, sign in ((0.0, 0), (0.05, -1)):
        ball = enclosing_ball(sq, margin)
        corner = 0.5 * (np.sum((np.zeros(2) - ball.center) ** 2) - ball.radius**2)
        assert np.sign(round(corner, 14)) == sign
    g = build_grid(sq, 1 / 32, 2)
    u0 = build_initial_paraboloid(g)
    assert u0.values.max() < 0
    assert np.allclose(ma_operator(g, u0)[g.full_stencil], 1.0, atol=1e-9)


def test_initial_rayleigh():
    g = build_grid(Domain.disk((0, 0), 1), 1 / 128, 2)
    assert rayleigh_quotient(g, build_initial_paraboloid(g, 0.0)) == pytest.approx(8, abs=0.15)


def test_step_fixed_point(disk_run_32):
    res, _ = disk_run_32
    grid = res.eigenfunction.grid
    out = iteration_step(grid, res.eigenfunction)
    assert np.abs(out.values - res.eigenfunction.values).max() <= 1e-4
    assert fixed_point_residual(grid, res.eigenfunction, res.lambda_estimate) <= 1e-5 * res.lambda_estimate


def test_step_matches_1d_quadrature():
    g = build_grid(Domain.interval(0, 1), 1 / 256)
    u0 = build_initial_paraboloid(g)
    R = rayleigh_quotient(g, u0)
    ball = enclosing_ball(g.domain)
    c, r = ball.center[0], ball.radius
    f = lambda x: R * 0.5 * (r**2 - (x - c) ** 2)
    ref = solve_1d_dirichlet_exact(f, 1.0)(g.points[:, 0])
    out = iteration_step(g, u0, IterationParams(renormalize_each_step=False))
    # the exact solution is quartic, so the three-point scheme carries O(h^2) truncation
    assert np.abs(out.values - ref).max() <= 1e-4 * np.abs(ref).max()


def test_step_homogeneity(disk16):
    u0 = build_initial_paraboloid(disk16)
    assert step_homogeneity(disk16, u0).passed


def test_params_validation():
    with pytest.raises(ValueError):
        IterationParams(max_iter=0)
    with pytest.raises(ValueError):
        IterationParams(tol_rayleigh=0)


def test_single_step_bookkeeping(disk16):
    res = run_inverse_iteration(disk16, build_initial_paraboloid(disk16), IterationParams(max_iter=1))
    assert res.status == "max_iter_reached"
    assert len(res.history) == 2 and res.iterations == 1
    assert math.isnan(res.history.delta[0])
    csv = res.history.to_csv().splitlines()
    assert csv[0] == HISTORY_HEADER and len(csv) == 3


def test_hypotheses_enforced(disk16):
    u0 = build_initial_paraboloid(disk16)
    with pytest.raises(HypothesisError):
        run_inverse_iteration(disk16, u0 * -1.0)
    with pytest.raises(HypothesisError):
        run_inverse_iteration(disk16, u0 * 0.5)
    with pytest.raises(HypothesisError):
        run_inverse_iteration(disk16, disk16.zeros())
    bumpy = disk16.field(u0.values.copy())
    bumpy.values[disk16.size // 2] -= 0.05
    with pytest.raises(HypothesisError):
        run_inverse_iteration(disk16, bumpy)


def test_solver_failure_keeps_history(disk16):
    params = IterationParams(max_iter=5, solver=SolverParams(max_sweeps=3))
    res = run_inverse_iteration(disk16, build_initial_paraboloid(disk16), params)
    assert res.status == "solver_failure"
    assert len(res.history) == 1 and res.notes


def test_renormalization_invariance(disk16):
    u0 = build_initial_paraboloid(disk16)
    base = IterationParams(max_iter=8, tol_rayleigh=1e-15, tol_field=1e-15)
    seq_on, seq_off = [], []
    on = run_inverse_iteration(disk16, u0, base, callback=lambda k, u: seq_on.append(u))
    off = run_inverse_iteration(
        disk16, u0, replace(base, renormalize_each_step=False), callback=lambda k, u: seq_off.append(u)
    )
    tol = 1e-8  # solver tolerance relative to unit height
    for a, b in zip(seq_on, seq_off):
        assert np.abs(a.normalized().values - b.normalized().values).max() <= 10 * tol
    assert np.allclose(on.history.rayleigh, off.history.rayleigh, rtol=1e-8, atol=0)


def test_small_disk_run(disk_run_32):
    res, iterates = disk_run_32
    h = res.history
    assert res.converged and not res.notes
    assert res.lambda_estimate == pytest.approx(LAMBDA_DISK, rel=5e-2)
    assert not h.monotone_violations(1e-3)
    assert all(r >= res.lambda_estimate * (1 - 1e-2) for r in h.rayleigh)
    m0 = h.monotone_quantity[0]
    assert all(r * l**2 <= m0 * (1 + 1e-3) for r, l in zip(h.rayleigh[1:], h.lp_norm[1:]))
    assert nondegeneracy_check(h, radial_eigenvalue(2))
    assert len(iterates) == len(h)
    assert res.eigenfunction.sup_norm() == pytest.approx(1.0)


def test_line_run(line_run_128):
    res, _ = line_run_128
    assert res.lambda_estimate == pytest.approx(math.pi**2, rel=1e-3)
    assert nondegeneracy_check(res.history, math.pi**2)
    assert abs(res.aitken_estimate() - math.pi**2) <= 1e-3 * math.pi**2


def test_nondegeneracy_unit_height(disk_run_32):
    res, _ = disk_run_32
    from ma_eigen.iteration import IterationHistory

    hist = IterationHistory(dim=2)
    hist.append(rayleigh=res.lambda_estimate, sup_norm=1.0, lp_norm=0.5, energy=1.0, delta=0.0, sweeps=0)
    assert nondegeneracy_check(hist, 1.0)
    with pytest.raises(ValueError):
        nondegeneracy_check(hist, 0.0)


def test_history_csv_format(disk_run_32):
    res, _ = disk_run_32
    rows = res.history.to_csv().splitlines()
    assert rows[0] == HISTORY_HEADER
    first = rows[1].split(",")
    assert first[0] == "0" and first[5] == "nan"
    assert float(rows[-1].split(",")[1]) == res.history.rayleigh[-1]
