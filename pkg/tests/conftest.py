import warnings

import numpy as np
import pytest

warnings.filterwarnings("ignore", message=".*TBB.*")

from emcrt.mesh import PlanckSource, Reflective, Vacuum  # noqa: E402
from emcrt.physics import FrequencyGroupGrid, PowerLaw, PowThreeSqrtT  # noqa: E402
from emcrt.problem import Region, make_problem  # noqa: E402

GRAY_GRID = FrequencyGroupGrid(np.array([1e-8, 1e5]), "explicit")


def gray_slab(n=10, length=1.0, sigma0=300.0, power=3.0, cv=0.3, left=None, right=None):
    bnd = {0: left or Reflective(), 1: right or Reflective()}
    return make_problem([(0.0, length, length / n)], [Region("m", PowerLaw(sigma0, power), cv)],
                        bnd, GRAY_GRID)


def marshak_slab(n=20, length=1.0, sigma0=10.0, groups=6):
    grid = FrequencyGroupGrid.log(groups, 1e-3, 100.0)
    return make_problem([(0.0, length, length / n)], [Region("m", PowThreeSqrtT(sigma0), 0.1)],
                        {0: PlanckSource(1.0), 1: Vacuum()}, grid)


@pytest.fixture
def gray_problem():
    return gray_slab()


@pytest.fixture
def marshak_problem():
    return marshak_slab()


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
