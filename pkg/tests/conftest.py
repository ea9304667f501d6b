import numpy as np
import pytest

from acimresp import (BranchSystem, ChebGrid, PerturbationField, assemble,
                      chebyshev_markov_map, perturbed_map, power_to_cheb)

ONE_MINUS_X2 = power_to_cheb([1.0, 0.0, -1.0])


def pipeline(f, N=48):
    return assemble(BranchSystem(f), ChebGrid(N))


@pytest.fixture(scope="session")
def tent_tm():
    return pipeline(chebyshev_markov_map(2))


@pytest.fixture(scope="session")
def cubic_tm():
    return pipeline(chebyshev_markov_map(3))


@pytest.fixture(scope="session")
def perturbed_f():
    return perturbed_map(chebyshev_markov_map(2), PerturbationField(ONE_MINUS_X2), 0.05)


@pytest.fixture(scope="session")
def perturbed_tm(perturbed_f):
    return pipeline(perturbed_f)


def rng():
    return np.random.default_rng(1234)


# acceptance lines are collected here and echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
