import json
import random

from hypothesis import given, settings, strategies as st

from hybridocl.labels import Label, label_ast, label_counts, unlabeled_nonconstant
from hybridocl.lang.nodes import AttrCall, Literal, StaticAttr
from hybridocl.lang.parser import parse_constraint, parse_invariant_file
from hybridocl.nnf import run_pipeline
from hybridocl.orchestrator import prepare

from conftest import GOLDEN
from oclgen import ExprGen, gen_model


def _lab(text, m, ctx="PhysicalPerson"):
    return label_ast(parse_constraint(text, m, context=ctx), m)


def test_derived_attribute_inequality_is_smt(tax):
    m, _, _ = tax
    assert _lab("self.getAge() >= 0", m).label is Label.SMT


def test_cardinality_inequality_is_search(tax):
    m, _, _ = tax
    assert _lab("self.addresses->size() >= 1", m).label is Label.SEARCH


def test_mixed_conjunction_is_both(tax):
    m, _, _ = tax
    assert _lab("self.getAge() >= 0 and self.addresses->size() >= 1", m).label is Label.BOTH


def test_attribute_under_exists_is_both(tax):
    m, _, _ = tax
    n = _lab("self.addresses->exists(a | a.country = Country::LU)", m, "TaxPayer")
    inner = n.body.args[0]
    assert inner.label is Label.BOTH
    assert n.label is Label.SEARCH


def test_attribute_under_forall_is_smt(tax):
    m, _, _ = tax
    n = _lab("self.addresses->forAll(a | a.country = Country::LU)", m, "TaxPayer")
    assert n.body.label is Label.SMT


def test_constants_stay_unlabeled(tax):
    m, _, _ = tax
    n = _lab("Constants::YEAR >= 0", m)
    assert n.label is None and n.args[0].label is None


def test_get_age_body_from_smt_site(tax_problem):
    p = tax_problem
    op = p.m.operation("PhysicalPerson", "getAge")
    body = p.ops.get(op, smt_site=True)
    assert body is not None
    assert body.label is Label.SMT
    reads = [x for x in body.walk() if isinstance(x, AttrCall)]
    assert reads and all(x.label is Label.SMT for x in reads)


def _two_site_model():
    m = gen_model()
    text = (
        "context Item::f(): Integer body: self.x + 1\n"
        "context Item::g(n: Integer): Integer body: if n <= 0 then self.f() else self.g(n - 1) endif\n"
        "context Item inv A: self.f() >= 0 and self.g(2) >= 0\n"
    )
    return m, parse_invariant_file(text, m)


def test_recursive_operation_is_all_search():
    m, invs = _two_site_model()
    p = prepare(m, invs, parse_constraint("Item.allInstances()->size() >= 1", m))
    g = m.operation("Item", "g")
    assert p.ops.get(g, smt_site=True) is None
    body = p.ops.get(g, smt_site=False)
    assert all(x.label is Label.SEARCH for x in body.walk())


def test_operation_reached_both_ways_is_duplicated():
    m, invs = _two_site_model()
    p = prepare(m, invs, parse_constraint("Item.allInstances()->size() >= 1", m))
    f = m.operation("Item", "f")
    smt_copy = p.ops.get(f, smt_site=True)
    search_copy = p.ops.get(f, smt_site=False)
    assert smt_copy is not None and search_copy is not None
    assert smt_copy.label is Label.SMT and search_copy.label is Label.SEARCH


def test_running_example_counts_match_golden(tax_problem):
    want = json.loads((GOLDEN / "tax_label_counts.json").read_text())
    assert label_counts(tax_problem.labeled) == want


def test_labeling_does_not_touch_input(tax):
    m, invs, ne = tax
    nnf = run_pipeline(invs, m, ne).constraint
    label_ast(nnf, m)
    assert all(x.label is None for x in nnf.walk())


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_labeling_is_total_and_deterministic(seed):
    rng = random.Random(seed)
    m = gen_model()
    text, _ = ExprGen(rng).invariant_file()
    nnf = run_pipeline(parse_invariant_file(text, m), m, parse_constraint("Item.allInstances()->size() >= 1", m))
    a = label_ast(nnf.constraint, m)
    b = label_ast(nnf.constraint, m)
    assert unlabeled_nonconstant(a) == []
    assert [x.label for x in a.walk()] == [x.label for x in b.walk()]
    for x in a.walk():
        if isinstance(x, (Literal, StaticAttr)):
            assert x.label is None
