import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

from gcx.catalog import (
    cross_chords,
    single_chord,
    triple_linking_cocycle,
    tripod,
    type2_cocycle,
)


@pytest.fixture(scope="session")
def gamma2():
    return type2_cocycle()


@pytest.fixture(scope="session")
def triple_linking():
    return triple_linking_cocycle()


@pytest.fixture(scope="session")
def order3():
    from gcx.catalog import order3_cocycle

    return order3_cocycle()


@pytest.fixture()
def tripod_d():
    return tripod()


@pytest.fixture()
def cross_d():
    return cross_chords()


@pytest.fixture()
def chord_d():
    return single_chord()
