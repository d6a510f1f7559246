"""Ground quantifiers over the current objects, then fold search-owned parts.

Both passes share one evaluator whose read log collects every attribute slot
the folded parts depended on; the translator pins those slots so the solver
cannot invalidate a folded value.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Any, Optional

from ..evaluator import EvalError, Evaluator
from ..labels import Label, _combine, _Labeler
from ..lang.nodes import AttrCall, Iterate, Literal, Node, OpCall, UserCall, Var, free_vars, substitute_var
from ..model import DataModel, InstanceModel
from ..nnf import Names
from ..values import BOOLEAN, INVALID, is_primitive
from .shortcuts import is_shortcut, rewrite_shortcut


class SmtAbort(Exception):
    """The SMT step cannot be built for the current instance."""


def has_primitive(n: Node) -> bool:
    """Does the subtree hold something the solver can assign?"""
    for x in n.walk():
        if isinstance(x, AttrCall) and x.type is not None and is_primitive(x.type):
            if x.label in (Label.SMT, Label.BOTH):
                return True
        elif isinstance(x, UserCall) and x.label in (Label.SMT, Label.BOTH):
            return True
        elif isinstance(x, Var) and x.label is Label.SMT:
            return True
    return False


def _fold(op: str, parts) -> Node:
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = OpCall(op, [p, out], type=BOOLEAN, label=_combine([p.label, out.label]))
    return out


class Grounder:
    def __init__(self, inst: InstanceModel, m: DataModel, params=()) -> None:
        self.inst = inst
        self.m = m
        self.ev = Evaluator(inst)
        self.ev.reads = set()
        self.names = Names("_x")
        self.params = set(params)

    def _eval(self, n: Node) -> Any:
        try:
            return self.ev.eval(n, {})
        except EvalError as e:
            raise SmtAbort(f"cannot evaluate a search-owned part: {e}") from None

    def _size(self, n: Node) -> Optional[int]:
        v = self.ev.as_coll(self._eval(n))
        return None if v is INVALID else len(v.items)

    # ------------------------------------------------------------ expand
    def expand(self, n: Node, blocked: frozenset = frozenset()) -> Node:
        """Expand primitive-carrying quantifiers; `blocked` holds binders of
        iterators left in place, whose values are unknown here."""
        if isinstance(n, Iterate) and n.kind in ("forAll", "exists") and not (free_vars(n.source) & blocked):
            if not has_primitive(n.body):
                return n
            coll = self.ev.as_coll(self._eval(n.source))
            if coll is INVALID:
                raise SmtAbort("quantified collection is invalid")
            if not coll.items:
                return Literal(n.kind == "forAll", type=BOOLEAN)
            copies = []
            for x in coll.items:
                lit = Literal(x, type=n.var_type)
                copies.append(self.expand(substitute_var(n.body, n.var, lit), blocked))
            return _fold("and" if n.kind == "forAll" else "or", copies)
        if is_shortcut(n) and has_primitive(n) and not (free_vars(n) & blocked):
            r = rewrite_shortcut(n, self.names, self._size)
            if r is not None:
                _Labeler(self.m, self.params).label(r, False)
                return self.expand(r, blocked)
        if isinstance(n, Iterate):
            inner = blocked | {n.var}
            return replace(n, source=self.expand(n.source, blocked), body=self.expand(n.body, inner))
        out = n.map_children(lambda c: self.expand(c, blocked))
        if isinstance(out, OpCall) and out.op in ("and", "or", "not") and out.args != n.args:
            # Expansion may have exposed solver-owned parts under a search label.
            out.label = _combine(a.label for a in out.args)
        return out

    # ------------------------------------------------------------ substitute
    def substitute(self, n: Node) -> Node:
        if n.label is Label.SEARCH and not (isinstance(n, Var) and n.name in self.params):
            if isinstance(n, Literal):
                return n
            v = self._eval(n)
            if v is INVALID:
                raise SmtAbort("a search-owned part evaluates to invalid")
            return Literal(v, type=n.type)
        if isinstance(n, Literal):
            return n
        return n.map_children(self.substitute)

    def process(self, n: Node) -> Node:
        return self.substitute(self.expand(n))


def expand(node: Node, inst: InstanceModel, m: DataModel) -> Node:
    return Grounder(inst, m).expand(node)


def substitute(node: Node, inst: InstanceModel, m: DataModel) -> Node:
    return Grounder(inst, m).substitute(node)
