from pathlib import Path

import pytest

import rnr
from rnr.reduction import load_mapping

DATA = Path(rnr.__file__).parent / "data"
MAPPINGS = DATA / "mappings"
TOY = DATA / "toy"


@pytest.fixture(scope="session")
def zeta():
    return load_mapping(MAPPINGS / "toy_zeta.tsv")


@pytest.fixture(scope="session")
def kappa():
    return load_mapping(MAPPINGS / "toy_kappa.tsv")


@pytest.fixture(scope="session")
def rho1():
    return load_mapping(MAPPINGS / "toy_rho1.tsv")
