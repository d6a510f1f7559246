"""Name resolution and static typing.

`check` rebuilds the tree: it fills every node's ``type``, turns provisional
attribute accesses into navigations where the name is an association role, and
turns dot-calls into built-in scalar operations unless a user operation of that
name exists on the source class.
"""

from __future__ import annotations

from dataclasses import replace
from fractions import Fraction
from typing import Dict, Optional

from ..model import DataModel
from ..values import (
    BOOLEAN,
    INTEGER,
    INVALID,
    INVALID_T,
    NULL,
    REAL,
    STRING,
    VOID,
    ClassType,
    CollType,
    EnumLit,
    EnumType,
    InvalidType,
    Ref,
    Coll,
    Type,
    VoidType,
)
from .lexer import OclError, UnresolvedName
from .nodes import (
    SCALAR_OPS,
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
)


class OclTypeError(OclError):
    pass


def conforms(m: DataModel, t: Type, target: Type) -> bool:
    if t == target:
        return True
    if isinstance(t, (VoidType, InvalidType)):
        return True
    if t == INTEGER and target == REAL:
        return True
    if isinstance(t, ClassType) and isinstance(target, ClassType):
        return m.conforms(t.name, target.name) or target.name == "OclAny"
    if isinstance(t, CollType) and isinstance(target, CollType):
        return t.kind == target.kind and conforms(m, t.elem, target.elem)
    return False


def common_type(m: DataModel, a: Type, b: Type) -> Optional[Type]:
    if conforms(m, a, b):
        return b
    if conforms(m, b, a):
        return a
    if isinstance(a, ClassType) and isinstance(b, ClassType):
        for c in m.ancestors(a.name):
            if m.conforms(b.name, c):
                return ClassType(c)
        return ClassType("OclAny")
    if isinstance(a, CollType) and isinstance(b, CollType) and a.kind == b.kind:
        e = common_type(m, a.elem, b.elem)
        return CollType(a.kind, e) if e is not None else None
    return None


def is_numeric_type(t: Type) -> bool:
    return t in (INTEGER, REAL) or isinstance(t, (VoidType, InvalidType))


def literal_type(v) -> Type:
    if isinstance(v, bool):
        return BOOLEAN
    if isinstance(v, int):
        return INTEGER
    if isinstance(v, Fraction):
        return REAL
    if isinstance(v, str):
        return STRING
    if isinstance(v, EnumLit):
        return EnumType(v.enum)
    if v is NULL:
        return VOID
    if v is INVALID:
        return INVALID_T
    if isinstance(v, Ref):
        return ClassType("OclAny")
    if isinstance(v, Coll):
        return CollType(v.kind, ClassType("OclAny"))
    raise TypeError(f"no literal type for {v!r}")


class _Checker:
    def __init__(self, m: DataModel, text: str) -> None:
        self.m = m
        self.text = text

    def err(self, node: Node, msg: str) -> OclTypeError:
        pos = node.span[0] if node.span else -1
        return OclTypeError(msg, pos, self.text)

    def expect(self, node: Node, target: Type, what: str) -> None:
        if not conforms(self.m, node.type, target):
            raise self.err(node, f"{what}: expected {target}, found {node.type}")

    def as_collection(self, node: Node) -> CollType:
        t = node.type
        if isinstance(t, CollType):
            return t
        # Implicit Set conversion of a single value (null gives the empty set).
        return CollType("Set", VOID if isinstance(t, VoidType) else t)

    def check(self, n: Node, env: Dict[str, Type]) -> Node:
        meth = getattr(self, "c_" + type(n).__name__)
        out = meth(n, env)
        assert out.type is not None, n
        return out

    # ------------------------------------------------------------ leaves
    def c_Literal(self, n: Literal, env) -> Node:
        return replace(n, type=n.type or literal_type(n.value))

    def c_Var(self, n: Var, env) -> Node:
        if n.name not in env:
            raise self.err(n, f"unbound variable '{n.name}'")
        return replace(n, type=env[n.name])

    def c_StaticAttr(self, n: StaticAttr, env) -> Node:
        a = self.m.attribute(n.cls, n.attr)
        return replace(n, type=self.m.resolve_type(a.type))

    def c_AllInstances(self, n: AllInstances, env) -> Node:
        return replace(n, type=CollType("Set", ClassType(n.cls)))

    # ------------------------------------------------------------ properties
    def c_AttrCall(self, n: AttrCall, env) -> Node:
        src = self.check(n.source, env)
        t = src.type
        owner = t.elem if isinstance(t, CollType) else t
        if not isinstance(owner, ClassType):
            raise self.err(n, f"property '{n.attr}' accessed on non-object type {t}")
        a = self.m.attribute(owner.name, n.attr)
        if a is not None:
            at = self.m.resolve_type(a.type)
            if a.is_static:
                return StaticAttr(self.m.ancestors(owner.name)[0], n.attr, type=at, span=n.span)
            if isinstance(t, CollType):
                kind = "Sequence" if t.kind in ("Sequence", "OrderedSet") else "Bag"
                return replace(n, source=src, type=CollType(kind, at))
            return replace(n, source=src, type=at)
        nav = self.m.navigation(owner.name, n.attr)
        if nav is None:
            raise UnresolvedName(
                f"class {owner.name} has no attribute or role '{n.attr}'",
                n.span[0] if n.span else -1,
                self.text,
            )
        far = ClassType(nav.far.cls)
        if isinstance(t, CollType):
            kind = "Sequence" if t.kind in ("Sequence", "OrderedSet") or nav.far.ordered else "Bag"
            rt: Type = CollType(kind, far)
        elif nav.far.upper == 1:
            rt = far
        else:
            rt = CollType("OrderedSet" if nav.far.ordered else "Set", far)
        return Nav(src, n.attr, type=rt, span=n.span)

    def c_Nav(self, n: Nav, env) -> Node:
        return self.c_AttrCall(AttrCall(n.source, n.role, span=n.span), env)

    # ------------------------------------------------------------ operations
    def c_UserCall(self, n: UserCall, env) -> Node:
        src = self.check(n.source, env)
        args = [self.check(a, env) for a in n.args]
        if isinstance(src.type, ClassType):
            op = self.m.operation(src.type.name, n.op)
            if op is not None:
                if len(args) != len(op.params):
                    raise self.err(n, f"operation {n.op} expects {len(op.params)} arguments, got {len(args)}")
                for a, (pn, pt) in zip(args, op.params):
                    self.expect(a, self.m.resolve_type(pt), f"argument '{pn}' of {n.op}")
                return replace(n, source=src, args=args, type=self.m.resolve_type(op.return_type))
        if n.op in SCALAR_OPS:
            if len(args) != SCALAR_OPS[n.op]:
                raise self.err(n, f"operation {n.op} expects {SCALAR_OPS[n.op]} arguments, got {len(args)}")
            return self.c_OpCall(OpCall(n.op, [src] + args, span=n.span), env, checked=True)
        owner = src.type
        raise UnresolvedName(
            f"no operation '{n.op}' on {owner}", n.span[0] if n.span else -1, self.text
        )

    def c_OpCall(self, n: OpCall, env, checked: bool = False) -> Node:
        args = n.args if checked else [self.check(a, env) for a in n.args]
        op = n.op
        ts = [a.type for a in args]

        def done(t: Type) -> Node:
            return replace(n, args=args, type=t)

        if op in ("and", "or", "xor", "implies"):
            for a in args:
                self.expect(a, BOOLEAN, f"operand of '{op}'")
            return done(BOOLEAN)
        if op == "not":
            self.expect(args[0], BOOLEAN, "operand of 'not'")
            return done(BOOLEAN)
        if op in ("=", "<>"):
            if common_type(self.m, ts[0], ts[1]) is None and not (
                isinstance(ts[0], ClassType) and isinstance(ts[1], ClassType)
            ):
                raise self.err(n, f"cannot compare {ts[0]} with {ts[1]}")
            return done(BOOLEAN)
        if op in ("<", ">", "<=", ">="):
            if not (all(is_numeric_type(t) for t in ts) or all(t in (STRING, VOID) for t in ts)):
                raise self.err(n, f"operator '{op}' needs numbers or strings, found {ts[0]} and {ts[1]}")
            return done(BOOLEAN)
        if op == "-" and len(args) == 1:
            if not is_numeric_type(ts[0]):
                raise self.err(n, f"unary minus needs a number, found {ts[0]}")
            return done(ts[0])
        if op in ("+", "-", "*", "max", "min"):
            for a in args:
                if not is_numeric_type(a.type):
                    raise self.err(a, f"operand of '{op}': expected a number, found {a.type}")
            return done(INTEGER if all(t == INTEGER for t in ts) else REAL)
        if op == "/":
            for a in args:
                if not is_numeric_type(a.type):
                    raise self.err(a, f"operand of '/': expected a number, found {a.type}")
            return done(REAL)
        if op in ("div", "mod"):
            for a in args:
                self.expect(a, INTEGER, f"operand of '{op}'")
            return done(INTEGER)
        if op == "abs":
            if not is_numeric_type(ts[0]):
                raise self.err(n, f"abs needs a number, found {ts[0]}")
            return done(ts[0])
        if op in ("floor", "ceil", "round"):
            if not is_numeric_type(ts[0]):
                raise self.err(n, f"{op} needs a number, found {ts[0]}")
            return done(INTEGER)
        if op == "toInteger":
            self.expect(args[0], STRING, "source of toInteger")
            return done(INTEGER)
        if op == "toReal":
            if ts[0] not in (INTEGER, STRING) and not isinstance(ts[0], (VoidType, InvalidType)):
                raise self.err(n, f"toReal needs an Integer or String, found {ts[0]}")
            return done(REAL)
        if op == "size":
            self.expect(args[0], STRING, "source of size()")
            return done(INTEGER)
        if op == "concat":
            for a in args:
                self.expect(a, STRING, "operand of concat")
            return done(STRING)
        if op == "substring":
            self.expect(args[0], STRING, "source of substring")
            self.expect(args[1], INTEGER, "lower index of substring")
            self.expect(args[2], INTEGER, "upper index of substring")
            return done(STRING)
        if op in ("oclIsUndefined", "oclIsInvalid"):
            return done(BOOLEAN)
        raise self.err(n, f"unsupported operation '{op}'")

    def c_TypeOp(self, n: TypeOp, env) -> Node:
        src = self.check(n.source, env)
        if not isinstance(src.type, (ClassType, VoidType, InvalidType)):
            raise self.err(n, f"{n.op} needs an object source, found {src.type}")
        t = BOOLEAN if n.op != "oclAsType" else ClassType(n.cls)
        return replace(n, source=src, type=t)

    def c_CollOp(self, n: CollOp, env) -> Node:
        src = self.check(n.source, env)
        args = [self.check(a, env) for a in n.args]
        ct = self.as_collection(src)
        op = n.op
        arity = {
            "includes": 1,
            "excludes": 1,
            "includesAll": 1,
            "excludesAll": 1,
            "count": 1,
            "at": 1,
            "indexOf": 1,
        }.get(op, 0)
        if len(args) != arity:
            raise self.err(n, f"{op} expects {arity} arguments, got {len(args)}")

        def done(t: Type) -> Node:
            return replace(n, source=src, args=args, type=t)

        if op in ("size", "count", "indexOf"):
            return done(INTEGER)
        if op in ("isEmpty", "notEmpty", "includes", "excludes"):
            return done(BOOLEAN)
        if op in ("includesAll", "excludesAll"):
            self.as_collection(args[0])
            return done(BOOLEAN)
        if op == "sum":
            if not is_numeric_type(ct.elem):
                raise self.err(n, f"sum needs numeric elements, found {ct.elem}")
            return done(ct.elem if ct.elem in (INTEGER, REAL) else INTEGER)
        if op in ("at", "first"):
            if op == "at":
                self.expect(args[0], INTEGER, "index of at()")
            if ct.kind not in ("Sequence", "OrderedSet"):
                raise self.err(n, f"{op} needs an ordered collection, found {ct.kind}")
            return done(ct.elem)
        if op == "asSet":
            return done(CollType("Set", ct.elem))
        if op == "asSequence":
            return done(CollType("Sequence", ct.elem))
        raise self.err(n, f"unsupported collection operation '{op}'")

    def c_Iterate(self, n: Iterate, env) -> Node:
        src = self.check(n.source, env)
        ct = self.as_collection(src)
        inner = dict(env)
        inner[n.var] = ct.elem
        body = self.check(n.body, inner)
        k = n.kind
        if k in ("forAll", "exists", "select", "reject", "one"):
            self.expect(body, BOOLEAN, f"body of {k}")
        if k in ("forAll", "exists", "isUnique", "one"):
            t: Type = BOOLEAN
        elif k in ("select", "reject"):
            t = ct
        else:  # collect flattens nested collections
            elem = body.type.elem if isinstance(body.type, CollType) else body.type
            t = CollType("Sequence" if ct.kind in ("Sequence", "OrderedSet") else "Bag", elem)
        return replace(n, source=src, body=body, type=t, var_type=ct.elem)

    def c_If(self, n: If, env) -> Node:
        c = self.check(n.cond, env)
        self.expect(c, BOOLEAN, "if condition")
        a = self.check(n.then, env)
        b = self.check(n.orelse, env)
        t = common_type(self.m, a.type, b.type)
        if t is None:
            raise self.err(n, f"if branches have incompatible types {a.type} and {b.type}")
        return replace(n, cond=c, then=a, orelse=b, type=t)

    def c_Let(self, n: Let, env) -> Node:
        init = self.check(n.init, env)
        vt = init.type
        if n.declared is not None:
            vt = self.m.resolve_type(n.declared)
            self.expect(init, vt, f"initializer of '{n.var}'")
        inner = dict(env)
        inner[n.var] = vt
        body = self.check(n.body, inner)
        return replace(n, init=init, body=body, type=body.type)


def check(n: Node, env: Dict[str, Type], m: DataModel, text: str = "", expected: Optional[Type] = None) -> Node:
    out = _Checker(m, text).check(n, env)
    if expected is not None and not conforms(m, out.type, expected):
        raise OclTypeError(f"expected {expected}, found {out.type}", n.span[0] if n.span else -1, text)
    return out


def compute_recursion(m: DataModel) -> None:
    """Set ``is_recursive`` for ops whose call graph reaches themselves."""
    graph: Dict[tuple, set] = {}
    for op in m.operations:
        callees = set()
        if op.body is not None:
            for node in op.body.walk():
                if isinstance(node, UserCall):
                    # Calls may dispatch to any override in a subclass.
                    for o in m.operations:
                        if o.name == node.op:
                            callees.add((o.context, o.name))
        graph[(op.context, op.name)] = callees
    for op in m.operations:
        start = (op.context, op.name)
        seen, stack = set(), list(graph[start])
        found = False
        while stack:
            k = stack.pop()
            if k == start:
                found = True
                break
            if k in seen:
                continue
            seen.add(k)
            stack.extend(graph.get(k, ()))
        op.is_recursive = found
