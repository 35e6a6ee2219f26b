import warnings
from fractions import Fraction as F

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import HALF, edgeworth
from distcore.economy import (
    DistributionalEconomy,
    Reallocation,
    SubMeasure,
    TypeProfile,
    aggregate_endowment,
    assign,
    autarky,
    strictly_positive,
    validate_allocation,
    validate_economy,
)


def test_validate_economy_examples():
    one = DistributionalEconomy(((TypeProfile(HALF, (1, 2)), F(1)),), 2)
    assert validate_economy(one).ok
    a, b = TypeProfile(HALF, (1, 0)), TypeProfile(HALF, (0, 1))
    rep = validate_economy(DistributionalEconomy(((a, F(1, 3)), (b, F(1, 3))), 2))
    assert not rep.checks["mass_sum"] and "2/3" in rep.issues[0]
    rep = validate_economy(DistributionalEconomy(((a, F(1, 2)), (a, F(1, 2))), 2))
    assert not rep.checks["distinct"]


def test_build_merges_duplicates_with_warning():
    a = TypeProfile(HALF, (1, 0))
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        E = DistributionalEconomy.build([(a, F(1, 2)), (a, F(1, 2))])
    assert len(w) == 1 and E.types == ((a, F(1)),)


def test_validate_allocation_examples():
    E = edgeworth()
    assert validate_allocation(E, autarky(E)).ok
    doubled = assign(E, [(2, 0), (0, 2)])
    assert not validate_allocation(E, doubled).checks["resource_balance"]
    swap = assign(E, [(0, 1), (1, 0)])
    assert validate_allocation(E, swap).ok


def test_aggregate_endowment():
    one = DistributionalEconomy(((TypeProfile(HALF, (1, 2)), F(1)),), 2)
    assert aggregate_endowment(one) == (1, 2)
    assert aggregate_endowment(edgeworth()) == (F(1, 2), F(1, 2))
    zero = DistributionalEconomy(((TypeProfile(HALF, (0, 0)), F(1)),), 2)
    assert not strictly_positive(aggregate_endowment(zero))


def test_submeasure_operations():
    E = edgeworth()
    a, b = E.profiles
    mu = SubMeasure.from_atoms([(a, [(0, 0), (1, 0)], F(1, 4)), (a, [(0, 0), (1, 0)], F(1, 4)), (b, [(1, 1), (0, 1)], F(1, 8))])
    assert mu.total_mass == F(5, 8) and mu.width == 2
    assert mu.column_integral(1) == [F(1, 2), F(1, 8)]
    assert mu.column_integral(1) == mu.endowment_integral()
    n = mu.normalized()
    assert n.total_mass == 1 and n.scale == F(8, 5)
    assert n.scaled(F(5, 8)) == mu
    assert mu.marginal([1]).as_dict() == {(a, ((1, 0),)): F(1, 2), (b, ((0, 1),)): F(1, 8)}


@st.composite
def allocations(draw):
    k = draw(st.integers(1, 4))
    raw = [draw(st.integers(1, 5)) for _ in range(k)]
    tot = sum(raw)
    profs = [TypeProfile(HALF, (i, draw(st.integers(0, 4)))) for i in range(k)]
    E = DistributionalEconomy(tuple((p, F(r, tot)) for p, r in zip(profs, raw)), 2)
    # move mass along random splits, keeping totals
    atoms = []
    for p, m in E.types:
        s = F(draw(st.integers(0, 4)), 4)
        atoms.append((p, p.endowment, m * (1 - s)))
        atoms.append((p, p.endowment, m * s))
    return E, Reallocation.from_atoms(atoms)


@settings(max_examples=100, deadline=None)
@given(allocations())
def test_net_trades_sum_to_zero(Et):
    E, t = Et
    assert validate_allocation(E, t).ok
    net = [F(0), F(0)]
    for p, x, m in t.atoms:
        for i in range(2):
            net[i] += m * (x[i] - p.endowment[i])
    assert net == [0, 0]
