import math

import pytest

from ma_eigen import Domain, build_grid, build_initial_paraboloid, run_inverse_iteration
from ma_eigen.iteration import IterationParams


@pytest.fixture(scope="session")
def unit_disk():
    return Domain.disk((0.0, 0.0), 1.0)


@pytest.fixture(scope="session")
def unit_interval():
    return Domain.interval(0.0, 1.0)


@pytest.fixture(scope="session")
def unit_square():
    return Domain.unit_square()


@pytest.fixture(scope="session")
def disk_grid_32(unit_disk):
    return build_grid(unit_disk, 1 / 32, 2)


@pytest.fixture(scope="session")
def line_grid_128(unit_interval):
    return build_grid(unit_interval, 1 / 128)


@pytest.fixture(scope="session")
def disk_run_32(disk_grid_32):
    """Converged small disk run shared by the fast tests."""
    iterates = []
    res = run_inverse_iteration(
        disk_grid_32,
        build_initial_paraboloid(disk_grid_32),
        IterationParams(),
        callback=lambda k, u: iterates.append(u),
    )
    assert res.converged
    return res, iterates


@pytest.fixture(scope="session")
def line_run_128(line_grid_128):
    iterates = []
    res = run_inverse_iteration(
        line_grid_128,
        build_initial_paraboloid(line_grid_128),
        callback=lambda k, u: iterates.append(u),
    )
    assert res.converged
    return res, iterates


PI2 = math.pi**2


_CRITERIA: dict[str, list[tuple[str, str]]] = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    crit = props.get("criterion")
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = report.outcome
        if status == "passed" and props.get("soft_warning"):
            status = "warn"
        _CRITERIA.setdefault(crit, []).append((status, props.get("detail", report.nodeid)))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_CRITERIA, key=lambda c: (len(c), c)):
        entries = _CRITERIA[crit]
        statuses = {s for s, _ in entries}
        verdict = "FAIL" if statuses - {"passed", "warn"} else ("WARN" if "warn" in statuses else "PASS")
        details = "; ".join(d for _, d in entries)
        terminalreporter.write_line(f"{verdict}  criterion {crit}: {details}")
