"""Reduced constraints in which SMT-owned parts are assumed satisfied."""

from __future__ import annotations

from dataclasses import replace
from typing import Callable, Dict

from ..evaluator import Evaluator
from ..labels import Label
from ..lang.nodes import AttrCall, Iterate, Literal, Node, OpCall, UserCall
from ..model import DataModel, InstanceModel
from ..values import BOOLEAN, ClassType, is_primitive


def _true() -> Literal:
    return Literal(True, type=BOOLEAN)


def smt_true(n: Node) -> Node:
    """Replace every SMT-labeled Boolean node with true, pruning below it."""
    if n.label is Label.SMT and n.type == BOOLEAN:
        return _true()
    return n.map_children(smt_true)


def reads_attributes(n: Node) -> bool:
    for x in n.walk():
        if isinstance(x, AttrCall) and x.type is not None and is_primitive(x.type):
            return True
        if isinstance(x, UserCall):
            return True
    return False


def _reduce(n: Node, reads: Callable[[Node], bool]) -> Node:
    if n.label is Label.SMT and n.type == BOOLEAN:
        return _true()
    if isinstance(n, OpCall) and n.op in ("and", "or"):
        return replace(n, args=[_reduce(a, reads) for a in n.args])
    if isinstance(n, Iterate) and n.kind in ("forAll", "exists"):
        if reads(n.source):
            return _true()
        return replace(n, body=_reduce(n.body, reads))
    if isinstance(n, Literal):
        return n
    return _true() if reads(n) else n


def conservative_reduce(n: Node) -> Node:
    """Reduction whose value cannot depend on primitive attribute values.

    Walks only positive positions of the NNF (and, or, quantifier bodies) and
    replaces with true every atom, and every quantifier whose source, reads a
    primitive attribute, in addition to every SMT-labeled Boolean node. The
    original constraint implies the result, so a false result proves that no
    attribute assignment can help.
    """
    return _reduce(n, reads_attributes)


def search_reduce(n: Node, m: DataModel, locked: Callable[[str, str], bool]) -> Node:
    """Objective for the restricted search step.

    Like `conservative_reduce`, but only atoms that read a locked attribute,
    one search may not assign, are replaced; the rest keep their distance.
    """
    bodies_seen: Dict[str, bool] = {}

    def op_reads(name: str) -> bool:
        if name not in bodies_seen:
            bodies_seen[name] = False
            bodies_seen[name] = any(
                reads(o.body) for o in m.operations if o.name == name and o.body is not None
            )
        return bodies_seen[name]

    def reads(x: Node) -> bool:
        for y in x.walk():
            if isinstance(y, AttrCall) and y.type is not None and is_primitive(y.type):
                st = y.source.type
                if not isinstance(st, ClassType) or locked(st.name, y.attr):
                    return True
            elif isinstance(y, UserCall) and op_reads(y.op):
                return True
        return False

    return _reduce(n, reads)


def futile_check(labeled: Node, inst: InstanceModel) -> bool:
    """True when invoking SMT may help, i.e. the reduced constraint holds."""
    return Evaluator(inst).eval(conservative_reduce(labeled), {}) is True
