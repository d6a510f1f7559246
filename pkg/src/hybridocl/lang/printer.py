"""Pretty printer producing text the parser reads back to an equal tree."""

from __future__ import annotations

from fractions import Fraction

from ..values import INVALID, NULL, Coll, EnumLit, Ref, format_real
from .nodes import (
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

# Binding strength; larger binds tighter.
_BINARY = {
    "implies": 1,
    "xor": 2,
    "or": 3,
    "and": 4,
    "=": 5,
    "<>": 5,
    "<": 6,
    ">": 6,
    "<=": 6,
    ">=": 6,
    "+": 7,
    "-": 7,
    "*": 8,
    "/": 8,
    "div": 8,
    "mod": 8,
}
_UNARY = 9
_POSTFIX = 10
_ATOM = 11
_LET = 0


def _level(n: Node) -> int:
    if isinstance(n, OpCall):
        if len(n.args) == 2 and n.op in _BINARY:
            return _BINARY[n.op]
        if n.op in ("not", "-") and len(n.args) == 1:
            return _UNARY
        return _POSTFIX
    if isinstance(n, Let):
        return _LET
    if isinstance(n, Literal) and isinstance(n.value, (int, Fraction)) and not isinstance(n.value, bool):
        return _UNARY if n.value < 0 else _ATOM
    if isinstance(n, (AttrCall, Nav, CollOp, Iterate, UserCall, TypeOp, AllInstances)):
        return _POSTFIX
    return _ATOM


def _wrap(n: Node, min_level: int) -> str:
    s = pretty(n)
    return f"({s})" if _level(n) < min_level else s


def _string(s: str) -> str:
    return "'" + s.replace("\\", "\\\\").replace("'", "\\'").replace("\n", "\\n").replace("\t", "\\t") + "'"


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        return format_real(v)
    if isinstance(v, str):
        return _string(v)
    if isinstance(v, EnumLit):
        return f"{v.enum}::{v.literal}"
    if v is NULL:
        return "null"
    if v is INVALID:
        return "invalid"
    if isinstance(v, Ref):
        return v.id
    if isinstance(v, Coll):
        return v.kind + "{" + ", ".join(format_value(x) for x in v.items) + "}"
    return repr(v)


def pretty(n: Node) -> str:
    if isinstance(n, Literal):
        return format_value(n.value)
    if isinstance(n, Var):
        return n.name
    if isinstance(n, StaticAttr):
        return f"{n.cls}::{n.attr}"
    if isinstance(n, AllInstances):
        return f"{n.cls}.allInstances()"
    if isinstance(n, (AttrCall, Nav)):
        name = n.attr if isinstance(n, AttrCall) else n.role
        return f"{_wrap(n.source, _POSTFIX)}.{name}"
    if isinstance(n, TypeOp):
        return f"{_wrap(n.source, _POSTFIX)}.{n.op}({n.cls})"
    if isinstance(n, UserCall):
        args = ", ".join(pretty(a) for a in n.args)
        return f"{_wrap(n.source, _POSTFIX)}.{n.op}({args})"
    if isinstance(n, CollOp):
        args = ", ".join(pretty(a) for a in n.args)
        return f"{_wrap(n.source, _POSTFIX)}->{n.op}({args})"
    if isinstance(n, Iterate):
        return f"{_wrap(n.source, _POSTFIX)}->{n.kind}({n.var} | {pretty(n.body)})"
    if isinstance(n, If):
        return f"if {pretty(n.cond)} then {pretty(n.then)} else {pretty(n.orelse)} endif"
    if isinstance(n, Let):
        decl = f" : {n.declared}" if n.declared else ""
        return f"let {n.var}{decl} = {pretty(n.init)} in {pretty(n.body)}"
    if isinstance(n, OpCall):
        if len(n.args) == 2 and n.op in _BINARY:
            p = _BINARY[n.op]
            if n.op == "implies":
                left = _wrap(n.args[0], p + 1)
                right = _wrap(n.args[1], p)
            else:
                left = _wrap(n.args[0], p)
                right = _wrap(n.args[1], p + 1)
            return f"{left} {n.op} {right}"
        if n.op == "not":
            return f"not {_wrap(n.args[0], _UNARY)}"
        if n.op == "-" and len(n.args) == 1:
            inner = _wrap(n.args[0], _UNARY)
            if inner.startswith("-") or _level(n.args[0]) == _UNARY:
                inner = f"({pretty(n.args[0])})"
            return f"-{inner}"
        src = _wrap(n.args[0], _POSTFIX)
        rest = ", ".join(pretty(a) for a in n.args[1:])
        return f"{src}.{n.op}({rest})"
    raise TypeError(f"cannot print {type(n).__name__}")


def dump_tree(n: Node, indent: int = 0) -> str:
    """Indented one-node-per-line rendering including labels."""
    from .nodes import node_fields

    pad = "  " * indent
    label = n.label.value if n.label is not None else "-"
    attrs = []
    for k, v in node_fields(n).items():
        if isinstance(v, (Node, list)) and (not isinstance(v, list) or (v and isinstance(v[0], Node))):
            continue
        if isinstance(v, list):
            continue
        attrs.append(f"{k}={format_value(v) if k == 'value' else v}")
    line = f"{pad}{type(n).__name__}({', '.join(attrs)}) [{label}]"
    lines = [line]
    for c in n.children():
        lines.append(dump_tree(c, indent + 1))
    return "\n".join(lines)
