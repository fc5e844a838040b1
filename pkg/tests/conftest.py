import numpy as np
import pytest

from infsup.greedy import GreedyConfig, run_cnnscm
from infsup.natural_norm import build_supremizers
from infsup.truth import DEFAULT_GRIDS, assemble_problem1, assemble_problem2, uniform_grid

CRITERIA_LINES = []


def record_criterion(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    CRITERIA_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def p1_small():
    return assemble_problem1(12)


@pytest.fixture(scope="session")
def p2_small():
    return assemble_problem2(12)


@pytest.fixture(scope="session")
def p1_sup(p1_small):
    return build_supremizers(p1_small)


@pytest.fixture(scope="session")
def p2_sup(p2_small):
    return build_supremizers(p2_small)


@pytest.fixture(scope="session")
def p1_run_small():
    """cNNSCM on problem 1, n=16, 33x17 grid, default tolerances."""
    op = assemble_problem1(16)
    xi = uniform_grid(op.domain, (33, 17))
    registry, report = run_cnnscm(op, xi, GreedyConfig())
    return op, xi, registry, report


@pytest.fixture(scope="session")
def benchmark_runs():
    """Full-resolution cNNSCM runs (truth n=24, benchmark grids, default tolerances)."""
    import time

    out = {}
    for name, asm in (("p1", assemble_problem1), ("p2", assemble_problem2)):
        op = asm(24)
        xi = uniform_grid(op.domain, DEFAULT_GRIDS[name])
        t0 = time.perf_counter()
        registry, report = run_cnnscm(op, xi, GreedyConfig(eps_betabar=0.8, eps_g=0.8, jnb=8))
        out[name] = (op, xi, registry, report, time.perf_counter() - t0)
    return out
