import numpy as np
import pytest

from conegoursat.conformal import ConeGeometry
from conegoursat.goursat import SolverConfig, picard_solve
from conegoursat.grid import Grid
from conegoursat.initialdata import build_approximant, minus_from_profile, parse_profile, \
    plus_from_profile
from conegoursat.nonlinearity import cubic_source

# n = 4, a = 1, lambda = -1/2, alpha = -1/2, cubic source, Gaussian C+ data of amplitude 1e-2
ACCEPT_N = 400


@pytest.fixture(scope="session")
def geometry():
    return ConeGeometry(4, 1.0, -0.5)


def acceptance_problem(n_cells=ACCEPT_N, amp=1e-2):
    g = ConeGeometry(4, 1.0, -0.5)
    grid = Grid.build(g, n_cells, u_max=0.25, eps_scri=5e-4)
    plus = plus_from_profile(parse_profile(f"gaussian -0.25 0.05 {amp}"), grid.x)
    minus = minus_from_profile(parse_profile("zero"), grid.y)
    plus, minus = build_approximant(plus, minus, 0)
    return grid, plus, minus, cubic_source(1.0)


@pytest.fixture(scope="session")
def acceptance_run():
    grid, plus, minus, src = acceptance_problem()
    fld, rep = picard_solve(plus, minus, src, grid, SolverConfig(tol=1e-10, k_max=20))
    return grid, plus, minus, src, fld, rep


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
