import random

from hypothesis import given, settings, strategies as st

from hybridocl.evaluator import evaluate
from hybridocl.fitness import K, Distance, Fitness, distance, distance_agrees_with_evaluate
from hybridocl.lang.parser import parse_constraint
from hybridocl.model import InstanceModel
from hybridocl.nnf import run_pipeline
from hybridocl.values import NULL, INTEGER, Ref

from oclgen import ExprGen, gen_model, random_instance


def _two_taxpayers(m):
    inst = InstanceModel(m)
    t1 = inst.add_object("TaxPayer", {})
    t2 = inst.add_object("TaxPayer", {})
    for t, n in ((t1, 1), (t2, 2)):
        for _ in range(n):
            inst.add_link("earns", t, inst.add_object("OtherIncome", {"isLocal": True}))
    return inst


def test_forall_averages_element_distances(tax):
    m, _, _ = tax
    inst = _two_taxpayers(m)
    c = parse_constraint("TaxPayer.allInstances()->forAll(t | t.incomes->size() <= 1)", m)
    assert distance(c, inst).raw == 0.5


def test_exists_takes_minimum(tax):
    m, _, _ = tax
    inst = _two_taxpayers(m)
    c = parse_constraint("TaxPayer.allInstances()->exists(t | t.incomes->size() <= 1)", m)
    assert distance(c, inst).raw == 0.0


def test_c1_on_150_year_old(tax):
    m, invs, ne = tax
    inst = InstanceModel(m)
    t = inst.add_object("TaxPayer", {"birthYear": 2018 - 150})
    c1 = next(i for i in invs if i.name == "C1")
    env = {"self": Ref(t)}
    assert evaluate(c1.body, inst, env) is False
    # age >= 0 contributes 0, age <= 100 contributes 150 - 100
    out = run_pipeline([c1], m, ne, with_multiplicities=False).constraint
    assert Fitness(inst).raw(out, {}) == 50.0


def test_vacuous_forall_is_zero(tax):
    m, _, _ = tax
    c = parse_constraint("TaxPayer.allInstances()->forAll(t | false)", m)
    assert distance(c, InstanceModel(m)).raw == 0.0


def test_invalid_root_scores_k():
    m = gen_model()
    c = parse_constraint("1 / 0 > 0", m)
    assert distance(c, InstanceModel(m)).raw == K == 1.0


def test_atom_distances():
    m = gen_model()
    inst = InstanceModel(m)
    v = {"a": INTEGER, "b": INTEGER}

    def d(text, a, b):
        return Fitness(inst).raw(parse_constraint(text, m, variables=v), {"a": a, "b": b})

    assert d("a = b", 3, 7) == 4
    assert d("a <> b", 3, 3) == 1 and d("a <> b", 3, 4) == 0
    assert d("a < b", 5, 5) == 1 and d("a < b", 7, 5) == 3
    assert d("a <= b", 7, 5) == 2 and d("a <= b", 5, 5) == 0
    assert d("a > b", 5, 5) == 1 and d("a >= b", 3, 5) == 2
    assert d("a = b", NULL, 5) == 1


def test_normalization():
    assert Distance.of(0.0).normalized == 0.0
    assert Distance.of(1.0).normalized == 0.5
    assert Distance.of(3.0).normalized == 0.75


def test_real_gap_is_never_rounded_to_zero():
    m = gen_model()
    inst = InstanceModel(m)
    assert Fitness(inst).raw(parse_constraint("0.0000000001 = 0.0", m), {}) > 0


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_zero_distance_iff_true(seed):
    rng = random.Random(seed)
    m = gen_model()
    inst = random_instance(rng, m)
    text, _ = ExprGen(rng).invariant_file()
    from hybridocl.lang.parser import parse_invariant_file

    out = run_pipeline(parse_invariant_file(text, m), m, parse_constraint("Item.allInstances()->size() >= 1", m))
    assert distance_agrees_with_evaluate(out.constraint, inst)


@settings(max_examples=100, deadline=None)
@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(1, 20))
def test_le_distance_monotone_in_left_operand(a, b, step):
    m = gen_model()
    inst = InstanceModel(m)
    n = parse_constraint("a <= b", m, variables={"a": INTEGER, "b": INTEGER})
    f = Fitness(inst)
    lo = f.raw(n, {"a": max(a, b), "b": b})
    hi = f.raw(n, {"a": max(a, b) + step, "b": b})
    assert hi >= lo


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_not_exists_matches_forall_not(seed):
    rng = random.Random(seed)
    m = gen_model()
    inst = random_instance(rng, m)
    body = ExprGen(rng).bool_expr({"o": "Item"}, 2)
    neg = parse_constraint(f"not Item.allInstances()->exists(o | {body})", m)
    pos = parse_constraint(f"Item.allInstances()->forAll(o | not ({body}))", m)
    from hybridocl.nnf import push_negations

    f = Fitness(inst)
    assert f.raw(push_negations(neg), {}) == f.raw(push_negations(pos), {})
