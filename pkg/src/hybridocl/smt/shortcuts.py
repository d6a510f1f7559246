"""Collection operations that hide a quantifier, rewritten with explicit ones.

Departures from the naive expansions, each needed for the rewrite to
agree with OCL evaluation:

- ``one`` requires the other elements to fail the predicate:
  ``c->exists(i | P(i) and c->forAll(j | i = j or not P(j)))``.
- ``isUnique`` and ``one`` are only rewritten over duplicate-free sources;
  with duplicates ``i = j`` cannot tell two copies apart.
- Bag equality adds ``b1->size() = b2->size()`` so extra elements of ``b2``
  are not missed.
- Sequence and OrderedSet equality compare positions, using the evaluated
  sizes to know how many positions exist.
"""

from __future__ import annotations

from typing import Callable, Optional

from ..lang.nodes import CollOp, Iterate, Literal, Node, OpCall, Var, clone, substitute_var
from ..nnf import Names, conjoin, push_negations
from ..values import BOOLEAN, INTEGER, Coll, CollType

SHORTCUT_OPS = ("includes", "excludes", "includesAll", "excludesAll")
SHORTCUT_ITERATORS = ("isUnique", "one")

SizeFn = Callable[[Node], Optional[int]]


def _b(op: str, *args: Node) -> OpCall:
    return OpCall(op, list(args), type=BOOLEAN)


def _kind(n: Node) -> str:
    if isinstance(n.type, CollType):
        return n.type.kind
    if isinstance(n, Literal) and isinstance(n.value, Coll):
        return n.value.kind
    return "Set"


def _elem(n: Node):
    if isinstance(n.type, CollType):
        return n.type.elem
    return n.type


def _iter(kind: str, src: Node, var: str, body: Node) -> Iterate:
    et = _elem(src)
    return Iterate(kind, clone(src), var, body, type=BOOLEAN, var_type=et)


def _var(name: str, src: Node) -> Var:
    return Var(name, type=_elem(src))


def is_shortcut(n: Node) -> bool:
    if isinstance(n, CollOp) and n.op in SHORTCUT_OPS:
        return True
    if isinstance(n, Iterate) and n.kind in SHORTCUT_ITERATORS:
        return True
    if isinstance(n, OpCall) and n.op in ("=", "<>") and all(isinstance(a.type, CollType) for a in n.args):
        return True
    return False


def _set_equal(s1: Node, s2: Node, names: Names) -> Node:
    i, j, k, l = names.fresh(), names.fresh(), names.fresh(), names.fresh()
    left = _iter("forAll", s1, i, _iter("exists", s2, j, _b("=", _var(i, s1), _var(j, s2))))
    right = _iter("forAll", s2, k, _iter("exists", s1, l, _b("=", _var(k, s2), _var(l, s1))))
    return _b("and", left, right)


def _size(c: Node) -> CollOp:
    return CollOp("size", clone(c), [], type=INTEGER)


def _bag_equal(b1: Node, b2: Node, names: Names) -> Node:
    i, j = names.fresh(), names.fresh()
    vi, vj = _var(i, b1), _var(j, b2)
    counts = _b(
        "=",
        CollOp("count", clone(b1), [vi], type=INTEGER),
        CollOp("count", clone(b2), [vj], type=INTEGER),
    )
    body = _iter("exists", b2, j, _b("and", _b("=", vi, vj), counts))
    return _b("and", _b("=", _size(b1), _size(b2)), _iter("forAll", b1, i, body))


def _positional_equal(s1: Node, s2: Node, size_of: SizeFn) -> Node:
    n1, n2 = size_of(s1), size_of(s2)
    same_size = _b("=", _size(s1), _size(s2))
    if n1 is None or n2 is None or n1 != n2 or n1 == 0:
        return same_size
    parts = [same_size]
    for k in range(1, n1 + 1):
        parts.append(
            _b(
                "=",
                CollOp("at", clone(s1), [Literal(k, type=INTEGER)], type=_elem(s1)),
                CollOp("at", clone(s2), [Literal(k, type=INTEGER)], type=_elem(s2)),
            )
        )
    return conjoin(parts)


def _collection_equal(s1: Node, s2: Node, names: Names, size_of: SizeFn) -> Node:
    k1, k2 = _kind(s1), _kind(s2)
    if k1 == k2 and k1 in ("Sequence", "OrderedSet"):
        return _positional_equal(s1, s2, size_of)
    if k1 == k2 == "Bag":
        return _bag_equal(s1, s2, names)
    return _set_equal(s1, s2, names)


def rewrite_shortcut(n: Node, names: Names, size_of: SizeFn) -> Optional[Node]:
    """Explicitly quantified equivalent of `n`, or None when not rewritable."""
    if isinstance(n, CollOp) and n.op in SHORTCUT_OPS:
        c, x = n.source, n.args[0]
        if n.op in ("includes", "excludes"):
            i = names.fresh()
            ex = _iter("exists", c, i, _b("=", _var(i, c), clone(x)))
            return ex if n.op == "includes" else _b("not", ex)
        if n.op == "includesAll":
            j, i = names.fresh(), names.fresh()
            return _iter("forAll", x, j, _iter("exists", c, i, _b("=", _var(i, c), _var(j, x))))
        i, j = names.fresh(), names.fresh()
        return _iter("forAll", x, i, _b("not", _iter("exists", c, j, _b("=", _var(i, x), _var(j, c)))))
    if isinstance(n, Iterate) and n.kind in SHORTCUT_ITERATORS:
        if _kind(n.source) not in ("Set", "OrderedSet"):
            return None
        c = n.source
        i, j = names.fresh(), names.fresh()
        vi = Var(i, type=n.var_type)
        vj = Var(j, type=n.var_type)
        body_i = substitute_var(n.body, n.var, vi)
        body_j = substitute_var(n.body, n.var, vj)
        if n.kind == "isUnique":
            inner = _b("or", _b("=", vi, vj), _b("<>", body_i, body_j))
            return _iter("forAll", c, i, _iter("forAll", c, j, inner))
        inner = _b("or", _b("=", vi, vj), _b("not", body_j))
        return _iter("exists", c, i, _b("and", body_i, _iter("forAll", c, j, inner)))
    if isinstance(n, OpCall) and n.op in ("=", "<>") and all(isinstance(a.type, CollType) for a in n.args):
        eq = _collection_equal(n.args[0], n.args[1], names, size_of)
        return eq if n.op == "=" else push_negations(eq, True)
    return None
