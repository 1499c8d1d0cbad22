import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from subsfm.oracle import CutFunction, TableFunction

settings.register_profile(
    "repo", deadline=None, max_examples=40, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log():
    def record(number, passed, text):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {text}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


@pytest.fixture
def two_element_table():
    """f({0}) = -1, f({1}) = 1, f({0, 1}) = 0."""
    return TableFunction([0, -1, 1, 0])


@pytest.fixture
def path_cut():
    """s -> a (2), a -> t (3), s -> t (1); vertices s=0, a=1, t=2."""
    return CutFunction(3, 0, 2, [(0, 1, 2), (1, 2, 3), (0, 2, 1)])


def unit_cut_instance(n, edges, seed):
    """Cut function on ground ``0..n-1`` (s = n, t = n + 1) with ``edges`` random unit edges."""
    rng = np.random.default_rng(seed)
    s, t = n, n + 1
    chosen = set()
    while len(chosen) < edges:
        u = int(rng.integers(0, n + 1))
        v = int(rng.integers(0, n + 2))
        if v in (u, s) or u == t:
            continue
        chosen.add((u, v))
    return CutFunction(n + 2, s, t, [(u, v, 1) for u, v in sorted(chosen)])
