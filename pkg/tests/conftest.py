import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gabplp.instances import random_dominant_matrix, random_feasible_lp
from gabplp.model import make_problem

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def one_var_lp():
    """min x  s.t.  x = 1."""
    return make_problem([1.0], [([1.0], "=", 1.0)])


def dominant(seed, n=None, nonneg=False):
    r = np.random.default_rng(seed)
    if n is None:
        n = int(r.integers(2, 30))
    return random_dominant_matrix(r, n, float(r.uniform(0.1, 1.0)), nonneg=nonneg), r


def random_lp(seed, **kw):
    return random_feasible_lp(np.random.default_rng(seed), **kw)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


def record_criterion(number: int, ok: bool, detail: str):
    ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
