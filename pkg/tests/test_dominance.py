from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import HALF, edgeworth
from oracles import transport_feasible
from distcore.dominance import (
    JointAllocationMeasure,
    conditionals,
    coupling_marginals_match,
    dominates_D,
    find_pareto_improvement,
    pareto_compare_joint,
    strassen_coupling,
)
from distcore.economy import DistributionalEconomy, PreconditionError, Reallocation, TypeProfile, autarky
from distcore.grids import pareto_grid
from distcore.prefs import CobbDouglas, ExplicitStrict, Leontief, Linear, strictly_prefers

LIN = Linear((1, 1))


def one_type(pref=HALF, e=(1, 1)):
    return TypeProfile(pref, e)


def realloc(prof, dist):
    return Reallocation.from_atoms((prof, x, m) for x, m in dist.items())


def test_pareto_compare_examples():
    p = HALF
    assert pareto_compare_joint(JointAllocationMeasure.from_atoms([(p, (1, 1), (1, 1), 1)])).verdict == "both"
    c = pareto_compare_joint(JointAllocationMeasure.from_atoms([(p, (1, 1), (2, 2), 1)]))
    assert c.verdict == "f'>=f" and c.mass_prime_better == 1
    j = JointAllocationMeasure.from_atoms([(p, (1, 1), (2, 2), F(1, 2)), (p, (2, 2), (1, 1), F(1, 2))])
    assert pareto_compare_joint(j).verdict == "neither"


def test_conditionals_normalize():
    E = edgeworth()
    a, b = E.profiles
    t = Reallocation.from_atoms([(a, (0, 0), F(1, 8)), (a, (1, 0), F(3, 8)), (b, (0, 1), F(1, 2))])
    c = conditionals(t)[HALF]
    assert c.mass == 1
    assert c.dist == {(0, 0): F(1, 8), (1, 0): F(3, 8), (0, 1): F(1, 2)}
    two = Reallocation.from_atoms([(one_type(), (1, 1), F(1, 2)), (one_type(LIN), (1, 1), F(1, 2))])
    assert set(conditionals(two)) == {HALF, LIN}


def test_dominance_examples():
    p = one_type()
    hi, lo = realloc(p, {(2, 2): 1}), realloc(p, {(1, 1): 1})
    assert dominates_D(hi, hi).holds
    assert dominates_D(hi, lo).holds and not dominates_D(lo, hi).holds
    q = one_type(LIN, (1, 1))
    a = realloc(q, {(0, 0): F(1, 2), (5, 0): F(1, 2)})
    b = realloc(q, {(1, 0): F(1, 4), (2, 0): F(1, 4), (3, 0): F(1, 2)})
    res = dominates_D(a, b)
    assert not res.holds and len(res.violations) == 2


def test_rejects_non_weak_orders():
    a, b, c = (1, 0), (0, 1), (1, 1)
    p = ExplicitStrict((a, b, c), frozenset({(a, b)}))
    prof = one_type(p, c)
    with pytest.raises(PreconditionError):
        dominates_D(realloc(prof, {c: 1}), realloc(prof, {c: 1}))


def test_coupling_examples():
    p = one_type()
    hi, lo = realloc(p, {(2, 2): 1}), realloc(p, {(1, 1): 1})
    res = strassen_coupling(hi, lo)
    assert res.coupling.atoms == ((HALF, (2, 2), (1, 1), 1),)
    assert pareto_compare_joint(res.coupling).f_dominates
    res = strassen_coupling(hi, hi)
    assert res.ok and pareto_compare_joint(res.coupling).f_dominates
    bad = strassen_coupling(lo, hi)
    assert not bad.ok and bad.certificate[0].bundle == (2, 2)


def test_pareto_improvement_examples():
    single = DistributionalEconomy(((one_type(), F(1)),), 2)
    assert find_pareto_improvement(single, autarky(single), pareto_grid(autarky(single))) is None
    a = TypeProfile(CobbDouglas((F(3, 4), F(1, 4))), (1, 0))
    b = TypeProfile(CobbDouglas((F(1, 4), F(3, 4))), (0, 1))
    E = DistributionalEconomy(((a, F(1, 2)), (b, F(1, 2))), 2)
    bad = Reallocation(((a, (F(1, 4), F(3, 4)), F(1, 2)), (b, (F(3, 4), F(1, 4)), F(1, 2))))
    imp = find_pareto_improvement(E, bad, pareto_grid(bad))
    assert imp is not None and imp.improving_mass == 1
    assert imp.measure.column_integral(1) == imp.measure.column_integral(0)
    good = Reallocation(((a, (F(3, 4), F(1, 4)), F(1, 2)), (b, (F(1, 4), F(3, 4)), F(1, 2))))
    assert find_pareto_improvement(E, good, pareto_grid(good)) is None
    # support-only grid: nothing to move to
    assert find_pareto_improvement(E, good, good.bundles() + [a.endowment, b.endowment]) is None
    with pytest.raises(PreconditionError):
        find_pareto_improvement(E, good, [])


# --- properties -----------------------------------------------------------------------

points = st.tuples(st.integers(0, 3), st.integers(0, 3))
prefs = st.sampled_from([HALF, LIN, Leontief((1, 2)), Linear((1, 3)), CobbDouglas((F(1, 3), F(2, 3)))])


@st.composite
def dist(draw, max_support=4):
    xs = draw(st.lists(points, min_size=1, max_size=max_support, unique=True))
    w = [draw(st.integers(1, 6)) for _ in xs]
    return {tuple(F(v) for v in x): F(k, sum(w)) for x, k in zip(xs, w)}


@settings(max_examples=200, deadline=None)
@given(prefs, dist(), dist())
def test_dominance_iff_coupling(p, da, db):
    prof = one_type(p)
    a, b = realloc(prof, da), realloc(prof, db)
    d = dominates_D(a, b).holds
    res = strassen_coupling(a, b)
    assert d == res.ok
    if res.ok:
        assert coupling_marginals_match(res.coupling, a, b)
        assert all(not strictly_prefers(q, xp, x) for q, x, xp, _ in res.coupling.atoms)


@settings(max_examples=60, deadline=None)
@given(prefs, dist(3), dist(3))
def test_coupling_matches_vertex_oracle(p, da, db):
    prof = one_type(p)
    ok = strassen_coupling(realloc(prof, da), realloc(prof, db)).ok
    assert ok == transport_feasible(da, db, lambda x, y: not strictly_prefers(p, y, x))


@settings(max_examples=100, deadline=None)
@given(prefs, dist(), dist(), dist())
def test_dominance_is_a_preorder(p, da, db, dc):
    prof = one_type(p)
    a, b, c = (realloc(prof, d) for d in (da, db, dc))
    assert dominates_D(a, a).holds
    if dominates_D(a, b).holds and dominates_D(b, c).holds:
        assert dominates_D(a, c).holds
