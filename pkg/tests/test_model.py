import copy
import random

import pytest
from hypothesis import given, settings, strategies as st

from hybridocl.evaluator import evaluate
from hybridocl.loader import fixture_paths, load_model
from hybridocl.model import (
    DataModel,
    InstanceModel,
    ModelError,
    all_multiplicity_constraints,
    conforms_to,
    multiplicity_to_constraint,
    validate_model,
)
from hybridocl.values import NULL, EnumLit, Ref

from conftest import load_fixture
from oclgen import GEN_MODEL, random_instance


def _model(**changes):
    d = copy.deepcopy(GEN_MODEL)
    d.update(changes)
    return d


def test_running_example_model_is_valid():
    m, _, _ = load_fixture("tax")
    assert validate_model(m) == []


def test_inheritance_cycle_is_reported():
    d = _model()
    d["classes"][0]["superclass"] = "Item"
    diags = validate_model(DataModel.from_dict(d))
    assert any("inheritance cycle" in x for x in diags)


def test_unknown_attribute_type_is_reported():
    d = _model()
    d["classes"][1]["attributes"].append({"name": "w", "type": "Shade", "isStatic": False, "value": None})
    assert any("unknown type" in x for x in validate_model(DataModel.from_dict(d)))


def test_duplicate_names_and_bad_bounds():
    d = _model()
    d["classes"].append(copy.deepcopy(d["classes"][1]))
    d["associations"][0]["endA"]["lower"] = 3
    d["associations"][0]["endA"]["upper"] = 2
    diags = validate_model(DataModel.from_dict(d))
    assert any("duplicate class name" in x for x in diags)
    assert any("lower bound exceeds upper bound" in x for x in diags)


def test_dangling_association_end():
    d = _model()
    d["associations"][0]["endB"]["class"] = "Nowhere"
    assert any("unknown class 'Nowhere'" in x for x in validate_model(DataModel.from_dict(d)))


def test_load_model_rejects_invalid(tmp_path):
    d = _model()
    d["classes"][0]["superclass"] = "Item"
    p = tmp_path / "m.json"
    p.write_text(DataModel.from_dict(d).to_json())
    with pytest.raises(ModelError):
        load_model(str(p))


def test_model_json_round_trip():
    mp, _ = fixture_paths("tax")
    m = load_model(str(mp))
    again = DataModel.from_json(m.to_json())
    assert again.to_dict() == m.to_dict()


def test_empty_instance_conforms(tax):
    m, _, _ = tax
    assert conforms_to(InstanceModel(m), m) == []


def test_abstract_class_object_is_reported(tax):
    m, _, _ = tax
    inst = InstanceModel(m)
    inst.add_object("Income", {"isLocal": True})
    assert any("abstract class Income" in x for x in conforms_to(inst, m))


def test_supports_link_between_taxpayers_is_reported(tax):
    m, _, _ = tax
    inst = InstanceModel(m)
    a = inst.add_object("TaxPayer", {})
    b = inst.add_object("TaxPayer", {})
    inst.add_link("supports", a, b)
    assert any("does not conform to Child" in x for x in conforms_to(inst, m))


def test_multiplicity_constraints_per_bound(tax):
    m, _, _ = tax
    earns = m.assoc("earns")
    texts = [inv.text for inv in multiplicity_to_constraint(earns, m)]
    assert "self.incomes->size() >= 1" in texts
    assert "self.taxpayer->size() >= 1" in texts and "self.taxpayer->size() <= 1" in texts
    # 0..* emits nothing for that end
    supports = [inv.text for inv in multiplicity_to_constraint(m.assoc("supports"), m)]
    assert not any("children" in t for t in supports)
    assert sorted(t for t in supports) == ["self.supporters->size() <= 2", "self.supporters->size() >= 1"]


def test_exact_bound_gives_two_constraints():
    d = _model()
    d["associations"][0]["endB"].update(lower=2, upper=2)
    m = DataModel.from_dict(d)
    texts = [inv.text for inv in multiplicity_to_constraint(m.assoc("has"), m)]
    assert texts == ["self.parts->size() >= 2", "self.parts->size() <= 2"]


def test_instance_json_round_trip_keeps_values(tax):
    m, _, _ = tax
    inst = InstanceModel(m)
    t = inst.add_object("TaxPayer", {"birthYear": 1980, "disabilityType": EnumLit("Disability", "A"), "isResident": NULL})
    a = inst.add_object("Address", {"country": EnumLit("Country", "LU")})
    inst.add_link("residesAt", t, a)
    again = InstanceModel.from_json(inst.to_json(), m)
    assert again.to_json() == inst.to_json()


def test_malformed_instance_document(tax):
    m, _, _ = tax
    with pytest.raises(ModelError):
        InstanceModel.from_json("{not json", m)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.integers(0, 3))
def test_multiplicity_constraints_match_link_counts(seed, lo, span):
    d = _model()
    d["associations"][0]["endB"].update(lower=lo, upper=lo + span)
    m = DataModel.from_dict(d)
    rng = random.Random(seed)
    inst = random_instance(rng, m, max_objects=7)
    holds = all(
        evaluate(inv.body, inst, {"self": Ref(o)}) is True
        for inv in all_multiplicity_constraints(m)
        for o in inst.objects_of(inv.context)
    )
    oracle = all(lo <= len(inst.navigate(o, "parts")) <= lo + span for o in inst.objects_of("Item"))
    assert holds == oracle


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_deleting_objects_never_adds_abstract_diagnostics(seed):
    m, _, _ = load_fixture("tax")
    rng = random.Random(seed)
    inst = InstanceModel(m)
    for _ in range(rng.randint(1, 6)):
        inst.add_object(rng.choice(["Income", "TaxPayer", "Child", "PhysicalPerson"]), {})
    before = {x for x in conforms_to(inst, m) if "abstract" in x}
    inst.remove_object(rng.choice(sorted(inst.objects)))
    after = {x for x in conforms_to(inst, m) if "abstract" in x}
    assert after <= before
