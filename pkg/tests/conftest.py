import functools

import pytest

from cubicwave import spectrum, stability


@functools.lru_cache(maxsize=None)
def solution(n):
    return spectrum.find_c_n(n)


@functools.lru_cache(maxsize=None)
def eigen_report(n):
    sol = solution(n)
    return stability.eigenvalues(stability.build_potential(sol), solution=sol)


@pytest.fixture(scope="session")
def solve():
    return solution


@pytest.fixture(scope="session")
def spectrum_of():
    return eigen_report


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance as acc
    if acc.RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(acc.RESULTS):
            terminalreporter.write_line(acc.RESULTS[k])
