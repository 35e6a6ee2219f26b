from fractions import Fraction as F

import pytest

from distcore.economy import DistributionalEconomy, Reallocation, TypeProfile
from distcore.prefs import CobbDouglas

HALF = CobbDouglas((F(1, 2), F(1, 2)))


def edgeworth() -> DistributionalEconomy:
    a = TypeProfile(HALF, (1, 0))
    b = TypeProfile(HALF, (0, 1))
    return DistributionalEconomy(((a, F(1, 2)), (b, F(1, 2))), 2)


def edgeworth_equilibrium(E: DistributionalEconomy) -> Reallocation:
    return Reallocation.from_atoms((p, (F(1, 2), F(1, 2)), m) for p, m in E.types)


@pytest.fixture
def E2():
    return edgeworth()
