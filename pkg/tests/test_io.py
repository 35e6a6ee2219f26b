import json
from fractions import Fraction as F
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import edgeworth, edgeworth_equilibrium
from distcore import io as dio
from distcore.agents import Coalition, Interval, StepAllocation
from distcore.blocking import blocking_search, core_coupling
from distcore.dominance import strassen_coupling
from distcore.economy import DistributionalEconomy, Reallocation, SubMeasure, TypeProfile
from distcore.grids import default_blocking_grid
from distcore.prefs import CES, CobbDouglas, ExplicitStrict, Leontief, Linear

DATA = Path(__file__).resolve().parent.parent / "data"


def test_documents_round_trip():
    for path in sorted(DATA.glob("*.json")):
        doc = dio.load_document(str(path))
        text = dio.dumps(dio.document_to_json(doc))
        again = dio.parse_document(text)
        assert again.economy == doc.economy
        assert again.allocations == doc.allocations
        assert again.grids == doc.grids and again.prices == doc.prices
        assert again.mixtures == doc.mixtures and again.subpopulations == doc.subpopulations
        assert dio.dumps(dio.document_to_json(again)) == text


def test_zero_denominator_located():
    text = '{"format": "distcore/1", "l": 2,\n "types": [{"preference": {"kind": "linear", "weights": ["1", "1/0"]},'
    text += ' "endowment": ["1", "1"], "mass": "1"}]}'
    with pytest.raises(dio.DocumentError) as err:
        dio.parse_document(text)
    assert err.value.line == 2 and "zero denominator" in str(err.value)
    assert text.splitlines()[1][err.value.col - 1 :].startswith('"1/0"')


def test_decimals_and_syntax_rejected():
    text = json.dumps({"format": "distcore/1", "l": 1, "types": [{"preference": {"kind": "linear", "weights": [1]}, "endowment": [0.5], "mass": 1}]})
    with pytest.raises(dio.DocumentError, match="decimal"):
        dio.parse_document(text)
    with pytest.raises(dio.DocumentError) as err:
        dio.parse_document('{"format": "distcore/1",\n  "l": }')
    assert err.value.line == 2
    with pytest.raises(dio.DocumentError, match="format"):
        dio.parse_document('{"format": "other", "l": 1, "types": []}')


def test_documents_keep_duplicates_for_validation():
    p = {"preference": {"kind": "linear", "weights": ["1", "1"]}, "endowment": ["1", "1"], "mass": "1/2"}
    doc = dio.parse_document(json.dumps({"format": "distcore/1", "l": 2, "types": [p, p]}))
    assert len(doc.economy.types) == 2


def test_artifacts_round_trip():
    E = edgeworth()
    a, b = E.profiles
    bad = Reallocation(((a, (1, 0), F(1, 2)), (b, (0, 1), F(1, 2))))
    w = blocking_search(bad, default_blocking_grid(bad)).witness
    mu = dio.parse_witness(dio.dumps(dio.witness_to_json(w)))
    assert mu == w.measure
    t = edgeworth_equilibrium(E)
    c = strassen_coupling(t, t).coupling
    assert dio.parse_coupling(dio.dumps(dio.coupling_to_json(c))) == c
    C = Coalition.of([Interval(F(0), F(1, 4)), Interval(F(1, 2), F(3, 4))])
    assert dio.parse_coalition(dio.dumps(dio.coalition_to_json(C))) == C
    f = StepAllocation(((Interval(F(0), F(1, 2)), (F(1), F(0))), (Interval(F(1, 2), F(1)), (F(0), F(1)))))
    assert dio.parse_step(dio.dumps(dio.step_to_json(f))) == f


def test_artifacts_revalidate():
    E = edgeworth()
    a, b = E.profiles
    bad = Reallocation(((a, (1, 0), F(1, 2)), (b, (0, 1), F(1, 2))))
    doc = dio.witness_to_json(blocking_search(bad, default_blocking_grid(bad)).witness)
    for atom in doc["atoms"]:
        atom["x_prime"] = ["5", "5"]  # breaks the resource identity
    with pytest.raises(dio.DocumentError, match="does not block"):
        dio.parse_witness(dio.dumps(doc))
    t = edgeworth_equilibrium(E)
    cdoc = dio.coupling_to_json(strassen_coupling(t, t).coupling)
    cdoc["atoms"][0]["x_prime"] = ["1", "1"]
    with pytest.raises(dio.DocumentError, match="strictly better"):
        dio.parse_coupling(dio.dumps(cdoc))


def test_core_coupling_artifact():
    p = TypeProfile(CobbDouglas((F(1, 2), F(1, 2))), (F(2), F(2)))
    mu = SubMeasure.from_atoms([(p, [(1, 1)], 1)])
    cc = core_coupling(mu, SubMeasure.from_atoms([(p, [(2, 2)], 1)]))
    assert dio.parse_core_coupling(dio.dumps(dio.core_coupling_to_json(cc))) == cc.measure


rationals = st.fractions(min_value=0, max_value=10, max_denominator=12)
weights = st.lists(st.integers(1, 9), min_size=2, max_size=2).map(lambda v: tuple(F(x, sum(v)) for x in v))


@st.composite
def preferences(draw):
    w = draw(weights)
    kind = draw(st.sampled_from(["cd", "lin", "leo", "ces", "explicit"]))
    if kind == "cd":
        return CobbDouglas(w)
    if kind == "lin":
        return Linear(w)
    if kind == "leo":
        return Leontief(w)
    if kind == "ces":
        return CES(w, draw(st.sampled_from([F(-2), F(1, 2), F(-1, 3)])))
    bundles = tuple(draw(st.lists(st.tuples(rationals, rationals), min_size=2, max_size=4, unique=True)))
    return ExplicitStrict.from_ranking([[b] for b in bundles])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(preferences(), st.tuples(rationals, rationals), st.integers(1, 5)), min_size=1, max_size=4))
def test_random_documents_round_trip(rows):
    total = sum(m for *_, m in rows)
    E = DistributionalEconomy(tuple((TypeProfile(p, e), F(m, total)) for p, e, m in rows), 2)
    doc = dio.EconomyDocument(E, allocations={"e": Reallocation(tuple((p, p.endowment, m) for p, m in E.types))})
    again = dio.parse_document(dio.dumps(dio.document_to_json(doc)))
    assert again.economy == E and again.allocations == doc.allocations
