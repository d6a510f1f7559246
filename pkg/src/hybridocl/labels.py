"""Delegation labels: which engine may act on each node of the NNF constraint.

Rule table (every non-constant node receives exactly one label):

  node kind                                   label
  ------------------------------------------  --------------------------------
  literal, static constant                     none (constant)
  variable: object, iterator, self             search
  variable: primitive operation parameter      smt
  attribute access, primitive or enum typed    smt; both under exists, select,
                                               reject, one or isUnique
  attribute access, collection typed           search
  navigation, allInstances, type tests,        search
  oclIsUndefined/oclIsInvalid, iterators,
  collection operations
  = / <> over objects or collections           search
  user operation call                          smt if non-recursive with a
                                               primitive return type, else search
  connectives, relational, arithmetic,         common label of the labeled
  scalar operations, if                        children; both when mixed; none
                                               when every child is constant
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .lang.nodes import (
    AllInstances,
    AttrCall,
    CollOp,
    If,
    Iterate,
    Let,
    Literal,
    Nav,
    Node,
    OpCall,
    StaticAttr,
    TypeOp,
    UserCall,
    Var,
    clone,
)
from .model import DataModel, UserOpDecl
from .values import ClassType, CollType, is_primitive


class Label(enum.Enum):
    SEARCH = "search"
    SMT = "smt"
    BOTH = "both"


BOTH_ANCESTORS = frozenset({"exists", "select", "reject", "one", "isUnique"})
_ALWAYS_SEARCH_OPS = ("oclIsUndefined", "oclIsInvalid")


def _combine(labels: Iterable[Optional[Label]]) -> Optional[Label]:
    got = {l for l in labels if l is not None}
    if not got:
        return None
    if len(got) == 1:
        return got.pop()
    return Label.BOTH


def _structural(t) -> bool:
    return isinstance(t, (ClassType, CollType))


def smt_callable(op: UserOpDecl, m: DataModel) -> bool:
    return not op.is_recursive and is_primitive(m.resolve_type(op.return_type))


def candidate_ops(m: DataModel, n: UserCall) -> List[UserOpDecl]:
    """Operations a call may dispatch to, given its static source type."""
    st = n.source.type
    src = st.name if isinstance(st, ClassType) else None
    out = []
    for op in m.operations:
        if op.name != n.op:
            continue
        if src is None or m.conforms(op.context, src) or m.conforms(src, op.context):
            out.append(op)
    return out


class _Labeler:
    def __init__(self, m: DataModel, params: Set[str]) -> None:
        self.m = m
        self.params = params

    def label(self, n: Node, under_both: bool) -> Optional[Label]:
        if isinstance(n, Iterate):
            self.label(n.source, under_both)
            self.label(n.body, under_both or n.kind in BOTH_ANCESTORS)
            lab: Optional[Label] = Label.SEARCH
        else:
            kids = [self.label(c, under_both) for c in n.children()]
            lab = self._own(n, kids, under_both)
        n.label = lab
        return lab

    def _own(self, n: Node, kids: List[Optional[Label]], under_both: bool) -> Optional[Label]:
        if isinstance(n, (Literal, StaticAttr)):
            return None
        if isinstance(n, Var):
            if n.name in self.params and n.type is not None and is_primitive(n.type):
                return Label.SMT
            return Label.SEARCH
        if isinstance(n, AttrCall):
            if n.type is not None and is_primitive(n.type):
                return Label.BOTH if under_both else Label.SMT
            return Label.SEARCH
        if isinstance(n, (Nav, AllInstances, TypeOp, CollOp)):
            return Label.SEARCH
        if isinstance(n, UserCall):
            ops = candidate_ops(self.m, n)
            if ops and all(smt_callable(o, self.m) for o in ops):
                return _combine([Label.SMT] + kids[1:])
            return Label.SEARCH
        if isinstance(n, OpCall):
            if n.op in _ALWAYS_SEARCH_OPS:
                return Label.SEARCH
            if n.op in ("=", "<>") and any(_structural(a.type) for a in n.args):
                return Label.SEARCH
            return _combine(kids)
        if isinstance(n, (If, Let)):
            return _combine(kids)
        return _combine(kids)


def label_ast(ast: Node, m: DataModel, params: Iterable[str] = ()) -> Node:
    """Labeled copy of `ast`; the input tree is left untouched."""
    out = clone(ast)
    _Labeler(m, set(params)).label(out, False)
    return out


def label_all(ast: Node, lab: Label) -> Node:
    out = clone(ast)
    for x in out.walk():
        x.label = lab
    return out


@dataclass
class LabeledOps:
    """Labeled operation bodies per (context, name) and call-site kind."""

    smt: Dict[Tuple[str, str], Node] = field(default_factory=dict)
    search: Dict[Tuple[str, str], Node] = field(default_factory=dict)

    def get(self, op: UserOpDecl, smt_site: bool) -> Optional[Node]:
        return (self.smt if smt_site else self.search).get((op.context, op.name))


def label_user_ops(bodies: Dict[Tuple[str, str], Node], ast: Node, m: DataModel) -> LabeledOps:
    """Label operation bodies reachable from the labeled `ast`.

    Operations reached through an SMT-labeled call are labeled with the
    ordinary rules; those reached through a search-labeled call get search on
    every node. An operation reached both ways is kept twice.
    """
    out = LabeledOps()
    decls = {(o.context, o.name): o for o in m.operations}
    work: List[Tuple[Node, bool]] = [(ast, False)]
    while work:
        tree, all_search = work.pop()
        for x in tree.walk():
            if not isinstance(x, UserCall):
                continue
            smt_site = x.label in (Label.SMT, Label.BOTH) and not all_search
            for op in candidate_ops(m, x):
                key = (op.context, op.name)
                table = out.smt if smt_site else out.search
                if key in table:
                    continue
                body = bodies.get(key, decls[key].body)
                if smt_site:
                    labeled = label_ast(body, m, params=[p for p, _ in op.params])
                else:
                    labeled = label_all(body, Label.SEARCH)
                table[key] = labeled
                work.append((labeled, not smt_site))
    return out


def label_counts(ast: Node) -> Dict[str, int]:
    c = Counter()
    for x in ast.walk():
        c[x.label.value if x.label is not None else "constant"] += 1
    return {k: c.get(k, 0) for k in ("search", "smt", "both", "constant")}


def unlabeled_nonconstant(ast: Node) -> List[Node]:
    """Totality check: nodes that should carry a label but do not."""
    bad = []
    for x in ast.walk():
        if x.label is None and not isinstance(x, (Literal, StaticAttr)):
            if any(isinstance(y, (Var, AttrCall, Nav, AllInstances, UserCall)) for y in x.walk()):
                bad.append(x)
    return bad
