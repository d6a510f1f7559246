import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from hybridocl.evaluator import evaluate
from hybridocl.lang.nodes import Iterate, Let, OpCall
from hybridocl.lang.parser import parse_constraint, parse_invariant_file
from hybridocl.lang.printer import pretty
from hybridocl.model import InstanceModel
from hybridocl.nnf import (
    NnfError,
    add_non_emptiness,
    binders_unique,
    conjoin,
    eliminate_secondary,
    expand_lets,
    explicit_quantification,
    is_nnf,
    push_negations,
    run_pipeline,
    split_conjuncts,
)
from hybridocl.values import BOOLEAN, Ref

from oclgen import ExprGen, gen_model, random_instance

NE = "Item.allInstances()->size() >= 1"


def original_value(invs, ne, inst):
    """Conjunction of the invariants over their context objects, plus `ne`; None if undefined."""
    vals = [evaluate(i.body, inst, {"self": Ref(o)}) for i in invs for o in inst.objects_of(i.context)]
    vals.append(evaluate(ne, inst))
    if any(v is not True and v is not False for v in vals):
        return None
    return all(vals)


def test_same_context_invariants_share_one_forall(tax):
    m, invs, _ = tax
    out = explicit_quantification(invs)
    assert len(out) == 3
    first = out[0]
    assert isinstance(first, Iterate) and first.source.cls == "PhysicalPerson"
    assert isinstance(first.body, OpCall) and first.body.op == "and"


def test_single_invariant_gets_single_wrapper():
    m = gen_model()
    invs = parse_invariant_file("context Item inv A: self.x > 0\n", m)
    out = explicit_quantification(invs)
    assert len(out) == 1 and out[0].kind == "forAll"
    assert pretty(out[0]) == "Item.allInstances()->forAll(_v1 | _v1.x > 0)"


def test_non_emptiness_accepted_and_rejected(tax):
    m, _, ne = tax
    assert add_non_emptiness([], ne, m) == [ne]
    with pytest.raises(NnfError):
        add_non_emptiness([], parse_constraint("true", m), m)
    bounded = parse_constraint("TaxPayer.allInstances()->size() >= 1 and Child.allInstances()->size() <= 3", m)
    assert add_non_emptiness([], bounded, m) == [bounded]


def test_let_inlined_at_every_use():
    m = gen_model()
    n = expand_lets(parse_constraint("let x : Integer = 1 in x + x", m))
    assert pretty(n) == "1 + 1"


def test_c1_let_is_inlined(tax):
    m, invs, ne = tax
    out = run_pipeline(invs[:1], m, ne, with_multiplicities=False).constraint
    assert not any(isinstance(x, Let) for x in out.walk())
    assert pretty(out).count("getAge()") == 2


def test_nested_let_shadowing():
    m = gen_model()
    n = parse_constraint("let x : Integer = 1 in (let x : Integer = x + 1 in x * 10) + x", m)
    out = run_pipeline([], m, parse_constraint(f"{NE} and ({pretty(n)}) = 21", m), with_multiplicities=False)
    inst = InstanceModel(m)
    inst.add_object("Item", {})
    assert evaluate(n, inst) == 21
    assert evaluate(out.constraint, inst) is True


def test_implies_becomes_disjunction(tax):
    m, invs, ne = tax
    c3 = next(i for i in invs if i.name == "C3")
    step4 = eliminate_secondary(c3.body)
    assert isinstance(step4, OpCall) and step4.op == "or"
    assert isinstance(step4.args[0], OpCall) and step4.args[0].op == "not"


def test_xor_truth_table():
    m = gen_model()
    env = {"a": BOOLEAN, "b": BOOLEAN}
    n = parse_constraint("a xor b", m, variables=env)
    rewritten = push_negations(eliminate_secondary(n))
    inst = InstanceModel(m)
    for a, b in itertools.product([False, True], repeat=2):
        assert evaluate(rewritten, inst, {"a": a, "b": b}) is (a != b)


def test_implies_with_false_premise():
    m = gen_model()
    n = parse_constraint("a implies b", m, variables={"a": BOOLEAN, "b": BOOLEAN})
    out = push_negations(eliminate_secondary(n))
    assert evaluate(out, InstanceModel(m), {"a": False, "b": False}) is True


def test_double_negation_and_quantifier_flip():
    m = gen_model()
    env = {"p": BOOLEAN}
    assert pretty(push_negations(parse_constraint("not not p", m, variables=env))) == "p"
    n = parse_constraint("not Item.allInstances()->forAll(i | i.x > 0)", m)
    assert pretty(push_negations(n)) == "Item.allInstances()->exists(i | i.x <= 0)"


def test_negated_type_test_is_kept_as_atom(tax):
    m, _, _ = tax
    n = push_negations(parse_constraint("not self.oclIsKindOf(TaxPayer)", m, context="PhysicalPerson"))
    assert isinstance(n, OpCall) and n.op == "not"


def test_non_boolean_if_survives():
    m = gen_model()
    n = parse_constraint("(if self.flag then self.x else self.y endif) > 2", m, context="Item")
    out = push_negations(eliminate_secondary(n))
    assert "if self.flag then" in pretty(out)


def test_running_example_has_five_kinds_of_part(tax):
    m, invs, ne = tax
    out = run_pipeline(invs, m, ne)
    parts = split_conjuncts(out.constraint)
    # PhysicalPerson, TaxPayer, Income contexts; multiplicity contexts; non-emptiness last
    assert pretty(parts[-1]) == "TaxPayer.allInstances()->size() >= 1"
    assert len(out.parts) >= 5


def test_conjoin_single_and_empty():
    m = gen_model()
    a = parse_constraint("true", m)
    assert conjoin([a]) is a
    with pytest.raises(NnfError):
        conjoin([])


def test_operation_bodies_go_through_steps(tax):
    m, invs, ne = tax
    out = run_pipeline(invs, m, ne)
    assert ("PhysicalPerson", "getAge") in out.ops
    assert all(is_nnf(b) for b in out.ops.values())


@settings(max_examples=400, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pipeline_preserves_truth(seed):
    rng = random.Random(seed)
    m = gen_model()
    text, _ = ExprGen(rng).invariant_file()
    invs = parse_invariant_file(text, m)
    ne = parse_constraint(NE, m)
    out = run_pipeline(invs, m, ne).constraint
    inst = random_instance(rng, m)
    want = original_value(invs, ne, inst)
    got = evaluate(out, inst)
    if want is None or got not in (True, False):
        return
    assert got is want


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_output_is_nnf_with_unique_binders(seed):
    rng = random.Random(seed)
    m = gen_model()
    text, _ = ExprGen(rng).invariant_file()
    out = run_pipeline(parse_invariant_file(text, m), m, parse_constraint(NE, m)).constraint
    assert is_nnf(out)
    assert binders_unique(out)
