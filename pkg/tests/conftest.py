import numpy as np
import pytest
from hypothesis import settings

from fhd import catalogue
from fhd.base_space import Base, BaseMap, BaseSpace
from fhd.henon import CoefPoly, HenonFactor, SkewHenonSystem

settings.register_profile("fhd", deadline=None, max_examples=50)
settings.load_profile("fhd")


@pytest.fixture(scope="session")
def classical():
    return catalogue.get("classical")


@pytest.fixture(scope="session")
def disc_contraction():
    return catalogue.get("disc-contraction")


@pytest.fixture(scope="session")
def degree4():
    return catalogue.get("degree4")


@pytest.fixture(scope="session")
def pk_squares():
    return catalogue.get("pk-squares")


@pytest.fixture(scope="session")
def pk_perturbed():
    return catalogue.get("pk-perturbed")


def point_system(*factors):
    base = Base(BaseSpace("finite", points=(0j,)), BaseMap("identity"))
    return SkewHenonSystem(base, list(factors))


def affine_lambda_system(c=0.5, radius=0.25):
    """p(y) = y^2 + λ with a generic λ-dependent Jacobian a(λ) = 1 + λ/2."""
    base = Base(BaseSpace("disc", radius=radius), BaseMap("contraction", c=c))
    f = HenonFactor(2, (CoefPoly.from_triples([(1, 0, 1.0)]),), CoefPoly.from_triples([(0, 0, 1.0), (1, 0, 0.5)]))
    return SkewHenonSystem(base, [f], name="affine-lambda")


def rng(seed=0):
    return np.random.default_rng(seed)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
