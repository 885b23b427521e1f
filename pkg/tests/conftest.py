"""Shared fixtures: the three reference problems on [0, 1]."""

import numpy as np
import pytest

from dschrod.nonvanishing import build_f
from dschrod.nsbf import NsbfSolver, coeffs_recursive
from dschrod.potential import PotentialSpec
from dschrod.powers import formal_powers

DELTA_X, DELTA_ALPHA = 0.5, 2.0


def constant(c):
    return lambda x: np.full(np.shape(x), c)


@pytest.fixture(scope="session")
def free_f():
    return build_f(PotentialSpec(1.0), constants_override=(1, 0))


@pytest.fixture(scope="session")
def const_f():
    return build_f(PotentialSpec(1.0, regular_part=constant(4.0)), constants_override=(1, 0))


@pytest.fixture(scope="session")
def delta_f():
    return build_f(PotentialSpec(1.0, deltas=[(DELTA_X, DELTA_ALPHA)]))


@pytest.fixture(scope="session")
def free_powers(free_f):
    return formal_powers(free_f)


@pytest.fixture(scope="session")
def const_powers(const_f):
    return formal_powers(const_f)


@pytest.fixture(scope="session")
def delta_powers(delta_f):
    return formal_powers(delta_f)


@pytest.fixture(scope="session")
def const_coeffs(const_f):
    return coeffs_recursive(const_f, 60)


@pytest.fixture(scope="session")
def delta_coeffs(delta_f):
    return coeffs_recursive(delta_f, 60)


@pytest.fixture(scope="session")
def const_solver(const_f, const_coeffs):
    return NsbfSolver(const_f, 60, const_coeffs)


@pytest.fixture(scope="session")
def delta_solver(delta_f, delta_coeffs):
    return NsbfSolver(delta_f, 60, delta_coeffs)


# acceptance summary ---------------------------------------------------------

ACCEPTANCE_LINES = []


def record_acceptance(line):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
