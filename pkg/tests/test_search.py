import random

import pytest
from hypothesis import given, settings, strategies as st

from hybridocl.fitness import Fitness
from hybridocl.lang.parser import parse_constraint, parse_invariant_file
from hybridocl.model import InstanceModel
from hybridocl.nnf import run_pipeline
from hybridocl.search import AvmSearch, Features, SearchConfig, all_features, hybrid_features
from hybridocl.smt.futile import search_reduce
from hybridocl.values import NULL

from conftest import fixture_problem
from oclgen import ExprGen, gen_model, random_instance

ONLY_X = Features(frozenset(), frozenset(), frozenset({("Item", "x")}))


def _single_x(start, target):
    m = gen_model()
    c = parse_constraint(f"Item.allInstances()->forAll(i | i.x = {target})", m)
    inst = InstanceModel(m)
    inst.add_object("Item", {"x": start, "y": 0, "r": 0, "flag": True, "color": NULL})
    trace = []

    def objective(i):
        trace.append(i.objects["Item1"].attrs["x"])
        return Fitness(i).raw(c, {})

    return m, c, inst, objective, trace


def test_ips_reaches_target_value():
    m, c, inst, objective, _ = _single_x(20, 100)
    s = AvmSearch(m, objective, ONLY_X, SearchConfig())
    inst, score, improved = s.iteration(inst, objective(inst))
    assert score == 0.0 and improved
    assert inst.objects["Item1"].attrs["x"] == 100
    # exhaustive oracle over [0, 200]: 100 is the only zero
    zeros = []
    for v in range(201):
        probe = inst.copy()
        probe.set_attr("Item1", "x", v)
        if Fitness(probe).raw(c, {}) == 0:
            zeros.append(v)
    assert zeros == [100]


def test_ips_overshoot_triggers_re_exploration():
    m, c, inst, objective, trace = _single_x(0, 21)
    s = AvmSearch(m, objective, ONLY_X, SearchConfig())
    s.iteration(inst, objective(inst))
    # steps 1, 2, 4, 8 then 16 overshoots past 21; exploration restarts at 15
    assert trace == [0, -1, 1, 3, 7, 15, 31, 14, 16, 18, 22, 30, 21, 23]


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(max_iterations=-1)
    with pytest.raises(ValueError):
        SearchConfig(nominal_sample_size=0)
    assert SearchConfig(class_caps={"Item": 2}).cap("Item") == 2


def test_count_move_respects_cap():
    m = gen_model()
    c = parse_constraint("Item.allInstances()->size() >= 10", m)
    s = AvmSearch(m, lambda i: Fitness(i).raw(c, {}), all_features(m), SearchConfig(class_cap=4))
    inst, score, _ = s.iteration(InstanceModel(m), 10.0)
    assert len(inst.objects_of("Item")) == 4 and score == 6.0


def test_new_objects_are_completed_to_lower_bounds(tax):
    m, _, _ = tax
    s = AvmSearch(m, lambda i: 0.0, all_features(m), SearchConfig(seed=3))
    inst = InstanceModel(m)
    oid = s.new_object(inst, "TaxPayer")
    s.complete(inst, oid, 2)
    assert len(inst.navigate(oid, "incomes")) >= 1
    assert len(inst.navigate(oid, "addresses")) >= 1


def _objective(seed):
    rng = random.Random(seed)
    m = gen_model()
    text, _ = ExprGen(rng).invariant_file()
    out = run_pipeline(parse_invariant_file(text, m), m, parse_constraint("Item.allInstances()->size() >= 1", m))
    return m, out.constraint, random_instance(rng, m)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_accepted_moves_never_worsen(seed):
    m, c, inst = _objective(seed)
    seen = []

    def objective(i):
        d = Fitness(i).raw(c, {})
        seen.append(d)
        return d

    s = AvmSearch(m, objective, all_features(m), SearchConfig(seed=seed, class_cap=4))
    start = objective(inst)
    score = start
    for _ in range(3):
        new_inst, new_score, improved = s.iteration(inst, score)
        assert new_score <= score
        assert improved == (new_score < score)
        assert Fitness(new_inst).raw(c, {}) == new_score
        inst, score = new_inst, new_score


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_search_is_deterministic_per_seed(seed):
    m, c, inst = _objective(seed)

    def run():
        s = AvmSearch(m, lambda i: Fitness(i).raw(c, {}), all_features(m), SearchConfig(seed=seed, class_cap=4))
        i, score = inst.copy(), Fitness(inst).raw(c, {})
        for _ in range(2):
            i, score, _ = s.iteration(i, score)
            i, _ = s.restart_if_stuck(i, False, score == 0)
        return i.to_json()

    assert run() == run()


@pytest.mark.parametrize("name", ["tax", "budget"])
def test_restricted_search_leaves_smt_attributes_alone(name):
    p = fixture_problem(name)
    feats = hybrid_features(p.labeled, p.ops, p.m)
    objective = search_reduce(p.labeled, p.m, lambda c, a: feats.attr_locked(p.m, c, a))
    s = AvmSearch(p.m, lambda i: Fitness(i).raw(objective, {}), feats, SearchConfig(seed=1))
    inst = s.random_instance()
    score = s.score(inst)
    for _ in range(5):
        inst, score, _ = s.iteration(inst, score)
    for oid, attr in s.touched:
        assert feats.attr_allowed(inst.objects[oid].cls, attr)


def test_budget_locks_arithmetic_attributes():
    p = fixture_problem("budget")
    feats = hybrid_features(p.labeled, p.ops, p.m)
    for attr in ("income", "rent", "savings", "score"):
        assert feats.attr_locked(p.m, "Household", attr)
    assert "Member" in feats.classes and "Household" in feats.classes


def test_restart_only_when_stuck():
    m = gen_model()
    s = AvmSearch(m, lambda i: 1.0, all_features(m), SearchConfig(seed=0))
    inst = InstanceModel(m)
    assert s.restart_if_stuck(inst, True, False) == (inst, False)
    assert s.restart_if_stuck(inst, False, True) == (inst, False)
    fresh, restarted = s.restart_if_stuck(inst, False, False)
    assert restarted and fresh is not inst
