import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import dilatlab as dl

GRID16 = dl.geometric_grid(0.5, 0.5, 16)

#: Criterion lines collected by the acceptance module for the final summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def heisenberg():
    return dl.builtin("heisenberg:1")


@pytest.fixture(scope="session")
def engel():
    return dl.builtin("engel")


@pytest.fixture(scope="session")
def affine2():
    return dl.AffineStructure(2)


@pytest.fixture(scope="session")
def chart2():
    return dl.resolve_structure("chart:2")


@pytest.fixture(scope="session")
def koranyi():
    return dl.resolve_structure("conical:heisenberg:koranyi")


@pytest.fixture(scope="session")
def isotropic():
    return dl.resolve_structure("gwd:heisenberg-isotropic")


@pytest.fixture(scope="session")
def contraction_structure():
    group = dl.from_contraction(dl.matrix_contraction(np.diag([0.5, 0.25])))
    return dl.as_dilatation_structure(group)
