import numpy as np
import pytest

from extkacz import LinearSystem, gen_gaussian_udv, min_norm_lsq_oracle
from extkacz.problems import gen_inconsistent_rhs

ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    ACCEPTANCE[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s.split("_")[2])):
        status = "PASS" if ACCEPTANCE[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")


def inconsistent_instance(m, n, r, kappa, seed):
    rng = np.random.default_rng(seed)
    A = gen_gaussian_udv(m, n, r, kappa, rng)
    b = gen_inconsistent_rhs(A, rng)
    system = LinearSystem(A, b)
    return system, min_norm_lsq_oracle(system)


@pytest.fixture
def small_system():
    return inconsistent_instance(20, 6, 5, 4.0, 11)
