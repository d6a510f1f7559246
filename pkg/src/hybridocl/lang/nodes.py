"""Typed AST for the supported OCL subset.

Structural equality (``==``) ignores source spans, resolved types and labels,
so a reparsed tree compares equal to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable, ClassVar, Iterator, List, Optional

from ..values import Type


@dataclass
class Node:
    type: Optional[Type] = field(default=None, compare=False, repr=False, kw_only=True)
    span: Optional[tuple] = field(default=None, compare=False, repr=False, kw_only=True)
    label: Any = field(default=None, compare=False, repr=False, kw_only=True)

    CHILD_FIELDS: ClassVar[tuple] = ()

    def children(self) -> List["Node"]:
        out: List[Node] = []
        for name in self.CHILD_FIELDS:
            v = getattr(self, name)
            if isinstance(v, list):
                out.extend(v)
            elif v is not None:
                out.append(v)
        return out

    def map_children(self, fn: Callable[["Node"], "Node"]) -> "Node":
        """Copy of this node with `fn` applied to each direct child."""
        changes = {}
        for name in self.CHILD_FIELDS:
            v = getattr(self, name)
            if isinstance(v, list):
                changes[name] = [fn(c) for c in v]
            elif v is not None:
                changes[name] = fn(v)
        return replace(self, **changes)

    def walk(self) -> Iterator["Node"]:
        stack = [self]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(reversed(n.children()))

    def size(self) -> int:
        return sum(1 for _ in self.walk())


@dataclass
class Literal(Node):
    """Constant of any runtime value (including object refs after expansion)."""

    value: Any


@dataclass
class Var(Node):
    name: str


@dataclass
class StaticAttr(Node):
    cls: str
    attr: str


@dataclass
class AttrCall(Node):
    source: Node
    attr: str
    CHILD_FIELDS = ("source",)


@dataclass
class Nav(Node):
    source: Node
    role: str
    CHILD_FIELDS = ("source",)


@dataclass
class OpCall(Node):
    """Built-in operation: connectives, relational, arithmetic and scalar ops."""

    op: str
    args: List[Node]
    CHILD_FIELDS = ("args",)


@dataclass
class TypeOp(Node):
    op: str  # oclIsTypeOf | oclIsKindOf | oclAsType
    source: Node
    cls: str
    CHILD_FIELDS = ("source",)


@dataclass
class AllInstances(Node):
    cls: str


@dataclass
class UserCall(Node):
    op: str
    source: Node
    args: List[Node]
    CHILD_FIELDS = ("source", "args")


@dataclass
class CollOp(Node):
    op: str
    source: Node
    args: List[Node]
    CHILD_FIELDS = ("source", "args")


@dataclass
class Iterate(Node):
    kind: str  # forAll | exists | select | reject | collect | isUnique | one
    source: Node
    var: str
    body: Node
    var_type: Optional[Type] = field(default=None, compare=False, repr=False, kw_only=True)
    CHILD_FIELDS = ("source", "body")


@dataclass
class If(Node):
    cond: Node
    then: Node
    orelse: Node
    CHILD_FIELDS = ("cond", "then", "orelse")


@dataclass
class Let(Node):
    var: str
    init: Node
    body: Node
    declared: Optional[str] = None
    CHILD_FIELDS = ("init", "body")


BOOL_BINARY = ("and", "or", "xor", "implies")
RELATIONAL = ("=", "<>", "<", ">", "<=", ">=")
ARITHMETIC = ("+", "-", "*", "/", "div", "mod")
ITERATORS = ("forAll", "exists", "select", "reject", "collect", "isUnique", "one")
COLLECTION_OPS = (
    "size",
    "isEmpty",
    "notEmpty",
    "includes",
    "excludes",
    "includesAll",
    "excludesAll",
    "count",
    "sum",
    "at",
    "indexOf",
    "asSet",
    "asSequence",
    "first",
)
# Dot-called scalar operations, with their arity excluding the source.
SCALAR_OPS = {
    "abs": 0,
    "max": 1,
    "min": 1,
    "floor": 0,
    "ceil": 0,
    "round": 0,
    "toInteger": 0,
    "toReal": 0,
    "size": 0,
    "concat": 1,
    "substring": 2,
    "oclIsUndefined": 0,
    "oclIsInvalid": 0,
    "div": 1,
    "mod": 1,
}
TYPE_OPS = ("oclIsTypeOf", "oclIsKindOf", "oclAsType")


def clone(n: Node) -> Node:
    return n.map_children(clone)


def transform(n: Node, fn: Callable[[Node], Optional[Node]]) -> Node:
    """Top-down rewrite: `fn` returns a replacement (not revisited) or None."""
    r = fn(n)
    if r is not None:
        return r
    return n.map_children(lambda c: transform(c, fn))


def free_vars(n: Node) -> set:
    if isinstance(n, Var):
        return {n.name}
    if isinstance(n, Iterate):
        return free_vars(n.source) | (free_vars(n.body) - {n.var})
    if isinstance(n, Let):
        return free_vars(n.init) | (free_vars(n.body) - {n.var})
    out: set = set()
    for c in n.children():
        out |= free_vars(c)
    return out


def substitute_var(n: Node, name: str, repl: Node) -> Node:
    """Capture-naive substitution; callers keep binder names unique."""

    def fn(x: Node) -> Optional[Node]:
        if isinstance(x, Var) and x.name == name:
            return clone(repl)
        if isinstance(x, Iterate) and x.var == name:
            return replace(x, source=substitute_var(x.source, name, repl))
        if isinstance(x, Let) and x.var == name:
            return replace(x, init=substitute_var(x.init, name, repl))
        return None

    return transform(n, fn)


def node_fields(n: Node) -> dict:
    return {f.name: getattr(n, f.name) for f in fields(n) if f.compare}
