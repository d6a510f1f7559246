"""Rewrite a set of invariants into one negation-normal-form constraint.

Steps, in order: explicit quantification per context class, the
non-emptiness constraint, let inlining, removal of implies/xor/Boolean-if,
negation pushing, and a final right-nested conjunction. Binders are renamed
to ``_v1``, ``_v2``, ... so no two binders in the output share a name.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .evaluator import evaluate
from .lang.nodes import (
    AllInstances,
    If,
    Iterate,
    Let,
    Literal,
    Node,
    OpCall,
    Var,
    substitute_var,
)
from .model import DataModel, InstanceModel, Invariant, all_multiplicity_constraints
from .values import BOOLEAN, ClassType, CollType

SIZE_GUARD = 50

_COMPLEMENT = {"=": "<>", "<>": "=", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}


class NnfError(Exception):
    pass


class Names:
    """Fresh binder names shared by all steps of one pipeline run."""

    def __init__(self, prefix: str = "_v") -> None:
        self.prefix = prefix
        self.n = 0

    def fresh(self) -> str:
        self.n += 1
        return f"{self.prefix}{self.n}"


def _bool(op: str, *args: Node) -> OpCall:
    return OpCall(op, list(args), type=BOOLEAN)


def conjoin(formulas: Sequence[Node]) -> Node:
    if not formulas:
        raise NnfError("nothing to conjoin")
    out = formulas[-1]
    for f in reversed(formulas[:-1]):
        out = _bool("and", f, out)
    return out


def freshen(n: Node, names: Names, mapping: Optional[Dict[str, str]] = None) -> Node:
    """Rename every binder to a fresh name."""
    mapping = mapping or {}
    if isinstance(n, Var):
        new = mapping.get(n.name)
        return replace(n, name=new) if new else n
    if isinstance(n, Iterate):
        v = names.fresh()
        return replace(
            n,
            source=freshen(n.source, names, mapping),
            var=v,
            body=freshen(n.body, names, {**mapping, n.var: v}),
        )
    if isinstance(n, Let):
        v = names.fresh()
        return replace(
            n,
            var=v,
            init=freshen(n.init, names, mapping),
            body=freshen(n.body, names, {**mapping, n.var: v}),
        )
    return n.map_children(lambda c: freshen(c, names, mapping))


# ---------------------------------------------------------------- step 1
def explicit_quantification(invs: Sequence[Invariant], names: Optional[Names] = None) -> List[Node]:
    """One ``C.allInstances()->forAll(v | ...)`` per context class, in first-seen order."""
    names = names or Names()
    groups: Dict[str, List[Node]] = {}
    for inv in invs:
        groups.setdefault(inv.context, []).append(inv.body)
    out = []
    for ctx, bodies in groups.items():
        v = names.fresh()
        ct = ClassType(ctx)
        var = Var(v, type=ct)
        parts = [freshen(substitute_var(b, "self", var), names) for b in bodies]
        out.append(
            Iterate(
                "forAll",
                AllInstances(ctx, type=CollType("Set", ct)),
                v,
                conjoin(parts),
                type=BOOLEAN,
                var_type=ct,
            )
        )
    return out


# ---------------------------------------------------------------- step 2
def add_non_emptiness(formulas: List[Node], ne: Node, m: DataModel) -> List[Node]:
    if evaluate(ne, InstanceModel(m)) is True:
        raise NnfError("non-emptiness constraint is satisfied by the empty instance model")
    return list(formulas) + [ne]


# ---------------------------------------------------------------- step 3
def expand_lets(n: Node) -> Node:
    """Inline let bindings, innermost first. Binders must already be unique."""
    if isinstance(n, Let):
        body = expand_lets(n.body)
        init = expand_lets(n.init)
        return substitute_var(body, n.var, init)
    return n.map_children(expand_lets)


# ---------------------------------------------------------------- step 4
def eliminate_secondary(n: Node) -> Node:
    n = n.map_children(eliminate_secondary)
    if isinstance(n, OpCall) and n.op == "implies":
        a, b = n.args
        return _bool("or", _bool("not", a), b)
    if isinstance(n, OpCall) and n.op == "xor":
        a, b = n.args
        return _bool("and", _bool("or", a, b), _bool("not", _bool("and", a, b)))
    if isinstance(n, If) and n.type == BOOLEAN:
        return _bool("or", _bool("and", n.cond, n.then), _bool("and", _bool("not", n.cond), n.orelse))
    return n


# ---------------------------------------------------------------- step 5
def push_negations(n: Node, negate: bool = False) -> Node:
    if isinstance(n, OpCall):
        if n.op == "not":
            return push_negations(n.args[0], not negate)
        if n.op in ("and", "or"):
            op = n.op if not negate else ("or" if n.op == "and" else "and")
            return _bool(op, push_negations(n.args[0], negate), push_negations(n.args[1], negate))
        if n.op in _COMPLEMENT and negate:
            return replace(n, op=_COMPLEMENT[n.op], args=[push_negations(a) for a in n.args])
    if isinstance(n, Iterate) and n.kind in ("forAll", "exists"):
        kind = n.kind if not negate else ("exists" if n.kind == "forAll" else "forAll")
        return replace(n, kind=kind, source=push_negations(n.source), body=push_negations(n.body, negate))
    if isinstance(n, Literal) and isinstance(n.value, bool):
        return replace(n, value=n.value != negate)
    inner = n.map_children(push_negations)
    return _bool("not", inner) if negate else inner


# ---------------------------------------------------------------- checks
_CONNECTIVES = ("and", "or", "not", "implies", "xor")


def is_nnf(n: Node) -> bool:
    for x in n.walk():
        if isinstance(x, Let):
            return False
        if isinstance(x, If) and x.type == BOOLEAN:
            return False
        if isinstance(x, OpCall) and x.op in ("implies", "xor"):
            return False
        if isinstance(x, OpCall) and x.op == "not":
            c = x.args[0]
            if isinstance(c, OpCall) and (c.op in _CONNECTIVES or c.op in _COMPLEMENT):
                return False
            if isinstance(c, Iterate) and c.kind in ("forAll", "exists"):
                return False
            if isinstance(c, Literal) and isinstance(c.value, bool):
                return False
    return True


def binders_unique(n: Node) -> bool:
    seen = set()
    for x in n.walk():
        if isinstance(x, (Iterate, Let)):
            if x.var in seen:
                return False
            seen.add(x.var)
    return True


def _steps_3_to_5(n: Node, names: Names) -> Node:
    n = expand_lets(freshen(n, names))
    before = n.size()
    n = eliminate_secondary(n)
    if n.size() > SIZE_GUARD * max(before, 1):
        raise NnfError(f"secondary-operator elimination grew the formula beyond {SIZE_GUARD}x ({before} -> {n.size()} nodes)")
    return push_negations(n)


# ---------------------------------------------------------------- pipeline
@dataclass
class NnfResult:
    constraint: Node
    parts: List[Node]
    # (context, name) -> operation body after steps 3 to 5
    ops: Dict[Tuple[str, str], Node] = field(default_factory=dict)


def run_pipeline(
    invs: Sequence[Invariant],
    m: DataModel,
    ne: Node,
    with_multiplicities: bool = True,
) -> NnfResult:
    names = Names()
    all_invs = list(invs)
    if with_multiplicities:
        all_invs += all_multiplicity_constraints(m)
    formulas = explicit_quantification(all_invs, names)
    formulas = add_non_emptiness(formulas, ne, m)
    parts = [_steps_3_to_5(f, names) for f in formulas]
    # Duplicated subtrees from step 4 share binder names; rename once more.
    final = Names()
    parts = [freshen(p, final) for p in parts]
    ops = {}
    for op in m.operations:
        if op.body is not None:
            ops[(op.context, op.name)] = _steps_3_to_5(op.body, Names("_p"))
    return NnfResult(conjoin(parts), parts, ops)


def split_conjuncts(n: Node) -> List[Node]:
    out = []
    while isinstance(n, OpCall) and n.op == "and":
        out.append(n.args[0])
        n = n.args[1]
    out.append(n)
    return out
