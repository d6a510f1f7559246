import random

from hypothesis import given, settings, strategies as st

from hybridocl.evaluator import Evaluator, evaluate, evaluate_quantified_set, holds
from hybridocl.lang.parser import parse_constraint
from hybridocl.model import InstanceModel
from hybridocl.values import INVALID, NULL, BOOLEAN, INTEGER, Coll, EnumLit, Ref

from oclgen import ExprGen, gen_model, random_instance


def _person(inst, cls="TaxPayer", **attrs):
    base = {"birthYear": 1980, "disabilityType": EnumLit("Disability", "None"), "disabilityRate": 0}
    base.update(attrs)
    return inst.add_object(cls, base)


def test_size_on_empty_universe_is_false(tax):
    m, _, ne = tax
    assert evaluate(ne, InstanceModel(m)) is False


def test_c2_holds_for_non_disabled_with_zero_rate(tax):
    m, invs, _ = tax
    inst = InstanceModel(m)
    t = _person(inst)
    c2 = next(i for i in invs if i.name == "C2")
    assert evaluate(c2.body, inst, {"self": Ref(t)}) is True
    inst.set_attr(t, "disabilityRate", 1)
    assert evaluate(c2.body, inst, {"self": Ref(t)}) is False


def test_ocl_is_undefined_on_null():
    m = gen_model()
    n = parse_constraint("x.oclIsUndefined()", m, variables={"x": INTEGER})
    assert evaluate(n, InstanceModel(m), {"x": NULL}) is True
    assert evaluate(n, InstanceModel(m), {"x": 3}) is False


def test_boolean_connectives_are_non_strict():
    m = gen_model()
    env_t = {"a": BOOLEAN}
    inst = InstanceModel(m)
    assert evaluate(parse_constraint("true or a", m, variables=env_t), inst, {"a": INVALID}) is True
    assert evaluate(parse_constraint("false and a", m, variables=env_t), inst, {"a": INVALID}) is False
    assert evaluate(parse_constraint("false implies a", m, variables=env_t), inst, {"a": INVALID}) is True
    assert evaluate(parse_constraint("a and true", m, variables=env_t), inst, {"a": INVALID}) is INVALID


def test_invalid_sources():
    m = gen_model()
    inst = InstanceModel(m)
    assert evaluate(parse_constraint("1 / 0", m), inst) is INVALID
    assert evaluate(parse_constraint("x + 1", m, variables={"x": INTEGER}), inst, {"x": NULL}) is INVALID
    it = inst.add_object("Item", {"x": 1, "y": 2, "r": 0, "flag": True, "color": NULL})
    seq = parse_constraint("self.parts->asSequence()->at(1)", m, context="Item")
    assert evaluate(seq, inst, {"self": Ref(it)}) is INVALID


def test_integer_operations_follow_ocl():
    m = gen_model()
    inst = InstanceModel(m)
    assert evaluate(parse_constraint("-7 div 2", m), inst) == -3
    assert evaluate(parse_constraint("-7 mod 2", m), inst) == -1
    assert evaluate(parse_constraint("(-2.5).round()", m), inst) == -2
    assert evaluate(parse_constraint("(2.5).round()", m), inst) == 3
    assert evaluate(parse_constraint("(2.0).ceil()", m), inst) == 2


def test_quantified_set_of_abstract_class_is_union(tax):
    m, _, _ = tax
    inst = InstanceModel(m)
    t = _person(inst)
    c = _person(inst, "Child")
    src = parse_constraint("PhysicalPerson.allInstances()", m)
    got = evaluate_quantified_set(src, inst)
    assert isinstance(got, Coll) and {r.id for r in got.items} == {t, c}
    inc = parse_constraint("Income.allInstances()", m)
    e = inst.add_object("EmploymentIncome", {"isLocal": True})
    p = inst.add_object("PensionIncome", {"isLocal": False})
    assert [r.id for r in evaluate_quantified_set(inc, inst).items] == sorted([e, p])


def test_navigation_without_links_is_empty(tax):
    m, _, _ = tax
    inst = InstanceModel(m)
    t = _person(inst)
    nav = parse_constraint("self.addresses", m, context="TaxPayer")
    assert evaluate(nav, inst, {"self": Ref(t)}) == Coll("Set", ())


def test_holds_treats_invalid_as_unsatisfied():
    m = gen_model()
    assert holds(parse_constraint("1 / 0 > 0", m), InstanceModel(m)) is False


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_evaluation_is_deterministic(seed):
    rng = random.Random(seed)
    m = gen_model()
    inst = random_instance(rng, m)
    n = parse_constraint(ExprGen(rng).bool_expr({}, 3), m)
    assert Evaluator(inst).eval(n, {}) == Evaluator(inst.copy()).eval(n, {})


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_runtime_values_match_static_types(seed):
    rng = random.Random(seed)
    m = gen_model()
    inst = random_instance(rng, m)
    n = parse_constraint(ExprGen(rng).bool_expr({}, 3), m)
    v = evaluate(n, inst)
    assert v is True or v is False or v is INVALID or v is NULL
