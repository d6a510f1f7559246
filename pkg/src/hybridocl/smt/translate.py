"""Emit an SMT-LIB v2 script from a grounded, folded constraint.

Every expression is translated together with its SMT sort so that Int and
Real operands can be reconciled explicitly with ``to_real``/``to_int``
instead of relying on solver-specific coercions.

The helper definitions for OCL operations without an SMT-LIB counterpart are
emitted verbatim in their customary form. Two of them disagree with OCL:
``ceil`` adds one even to integral inputs and ``round`` rounds halves down.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

from ..lang.nodes import AttrCall, If, Literal, Node, OpCall, StaticAttr, UserCall, Var
from ..model import DataModel, InstanceModel
from ..values import NULL, EnumLit, EnumType, PrimType, Ref, Type
from .expand import SmtAbort
from .operations import SmtFunction

BUILTIN_DEFS: Dict[str, str] = {
    "sizeString": "(define-fun sizeString ((a String)) Int (str.len a))",
    "toInteger": "(define-fun toInteger ((a String)) Int (str.to.int a))",
    "round": "(define-fun round ((a Real)) Real (ite (> (- a (floor a)) 0.5) (toReal (ceil a)) (toReal (floor a))))",
    "ceil": "(define-fun ceil ((x Real)) Int (+ (to_int x) 1))",
    "floor": "(define-fun floor ((x Real)) Int (to_int x))",
    "toReal": "(define-fun toReal ((a Int)) Real (* a 1.0))",
    "max": "(define-fun max ((a Real)(b Real)) Real (ite (>= a b) a b))",
    "min": "(define-fun min ((a Real)(b Real)) Real (ite (<= a b) a b))",
    "concatString": "(define-fun concatString ((a String)(b String)) String (str.++ a b))",
}
# Emission order; dependencies come first.
BUILTIN_ORDER = ["floor", "ceil", "toReal", "round", "max", "min", "sizeString", "toInteger", "concatString"]
BUILTIN_DEPS = {"round": ("floor", "ceil", "toReal")}
# name -> (parameter sorts, result sort)
BUILTIN_SIGS = {
    "sizeString": (("String",), "Int"),
    "toInteger": (("String",), "Int"),
    "round": (("Real",), "Real"),
    "ceil": (("Real",), "Int"),
    "floor": (("Real",), "Int"),
    "toReal": (("Int",), "Real"),
    "max": (("Real", "Real"), "Real"),
    "min": (("Real", "Real"), "Real"),
    "concatString": (("String", "String"), "String"),
}

PRODUCE_MODELS = "(set-option :produce-models true)"
_SYMBOL = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")
_NUMERAL = re.compile(r"^(\d+|\(- \d+\))$")


class Untranslatable(Exception):
    """A node that has no SMT-LIB counterpart survived grounding and folding."""


@dataclass
class Binding:
    var: str
    obj: str
    attr: str
    sort: str


@dataclass
class SmtJob:
    script: str
    bindings: List[Binding]
    enum_decls: List[str] = field(default_factory=list)
    op_decls: List[str] = field(default_factory=list)
    pins: List[str] = field(default_factory=list)
    # SMT symbol -> (enum, literal)
    enum_symbols: Dict[str, Tuple[str, str]] = field(default_factory=dict)

    def binding(self, var: str) -> Binding:
        for b in self.bindings:
            if b.var == var:
                return b
        raise KeyError(var)


def smt_sort(t: Type) -> str:
    if isinstance(t, PrimType):
        return {"Boolean": "Bool", "Integer": "Int", "Real": "Real", "String": "String"}[t.name]
    if isinstance(t, EnumType):
        return t.name
    raise Untranslatable(f"type {t} has no SMT-LIB sort")


def int_text(v: int) -> str:
    return str(v) if v >= 0 else f"(- {-v})"


def real_text(v: Fraction) -> str:
    neg = v < 0
    a = -v if neg else v
    d = a.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d == 1:
        whole, rem = divmod(a.numerator, a.denominator)
        digits = ""
        while rem:
            rem *= 10
            q, rem = divmod(rem, a.denominator)
            digits += str(q)
        body = f"{whole}.{digits or '0'}"
    else:
        body = f"(/ {a.numerator}.0 {a.denominator}.0)"
    return f"(- {body})" if neg else body


def string_text(s: str) -> str:
    out = []
    for ch in s:
        c = ord(ch)
        if ch == '"':
            out.append('""')
        elif ch == "\\" or c < 32 or c > 126:
            out.append("\\u{%x}" % c)
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


class Translator:
    def __init__(self, m: DataModel, inst: InstanceModel) -> None:
        self.m = m
        self.inst = inst
        self.bindings: Dict[Tuple[str, str], Binding] = {}
        self.enums: List[str] = []
        self.builtins: Set[str] = set()
        self.functions: Dict[str, SmtFunction] = {}
        self.enum_symbols: Dict[str, Tuple[str, str]] = {}
        shared: Dict[str, int] = {}
        for e in m.enumerations:
            for lit in e.literals:
                shared[lit] = shared.get(lit, 0) + 1
        self._shared = shared

    # ------------------------------------------------------------ names
    def _use_enum(self, name: str) -> None:
        if name not in self.enums:
            self.enums.append(name)

    def enum_symbol(self, enum: str, lit: str) -> str:
        reserved = lit in BUILTIN_DEFS or re.fullmatch(r"[XP]\d+", lit) or not _SYMBOL.match(lit)
        sym = f"{enum}_{lit}" if self._shared.get(lit, 0) > 1 or reserved or lit in self.functions else lit
        self.enum_symbols[sym] = (enum, lit)
        return sym

    def _slot(self, oid: str, attr: str, t: Type) -> Tuple[str, str]:
        b = self.bindings.get((oid, attr))
        if b is None:
            sort = smt_sort(t)
            if isinstance(t, EnumType):
                self._use_enum(t.name)
            b = Binding(f"X{len(self.bindings) + 1}", oid, attr, sort)
            self.bindings[(oid, attr)] = b
        return b.var, b.sort

    # ------------------------------------------------------------ coercion
    @staticmethod
    def coerce(text: str, have: str, want: str) -> str:
        if have == want:
            return text
        if have == "Int" and want == "Real":
            # A numeral already denotes a real in Real context.
            if _NUMERAL.match(text):
                return text
            return f"(to_real {text})"
        if have == "Real" and want == "Int":
            return f"(to_int {text})"
        raise Untranslatable(f"sort {have} where {want} is required")

    def _unify(self, parts: Sequence[Tuple[str, str]]) -> Tuple[List[str], str]:
        sorts = {s for _, s in parts}
        if sorts <= {"Int", "Real"} and len(sorts) == 2:
            return [self.coerce(t, s, "Real") for t, s in parts], "Real"
        if len(sorts) > 1:
            raise Untranslatable(f"mixed operand sorts {sorted(sorts)}")
        return [t for t, _ in parts], parts[0][1]

    def _builtin(self, name: str, args: Sequence[Tuple[str, str]]) -> Tuple[str, str]:
        self.builtins.add(name)
        for dep in BUILTIN_DEPS.get(name, ()):
            self.builtins.add(dep)
        psorts, ret = BUILTIN_SIGS[name]
        texts = [self.coerce(t, s, ps) for (t, s), ps in zip(args, psorts)]
        return f"({name} {' '.join(texts)})", ret

    # ------------------------------------------------------------ expressions
    def value(self, v) -> Tuple[str, str]:
        if isinstance(v, bool):
            return ("true" if v else "false"), "Bool"
        if isinstance(v, int):
            return int_text(v), "Int"
        if isinstance(v, Fraction):
            return real_text(v), "Real"
        if isinstance(v, str):
            return string_text(v), "String"
        if isinstance(v, EnumLit):
            self._use_enum(v.enum)
            return self.enum_symbol(v.enum, v.literal), v.enum
        raise Untranslatable(f"value {v!r} has no SMT-LIB form")

    def tr(self, n: Node, scope: Dict[str, str]) -> Tuple[str, str]:
        if isinstance(n, Literal):
            return self.value(n.value)
        if isinstance(n, StaticAttr):
            a = self.m.attribute(n.cls, n.attr)
            if a is None or a.value is None:
                raise Untranslatable(f"static attribute {n.cls}::{n.attr} has no constant value")
            return self.value(a.value)
        if isinstance(n, Var):
            if n.name in scope:
                return n.name, scope[n.name]
            raise Untranslatable(f"free variable {n.name}")
        if isinstance(n, AttrCall):
            src = n.source
            if isinstance(src, Literal) and isinstance(src.value, Ref) and n.type is not None:
                return self._slot(src.value.id, n.attr, n.type)
            if isinstance(src, Literal) and src.value is NULL:
                raise Untranslatable(f"attribute {n.attr} read on null")
            raise Untranslatable(f"attribute {n.attr} on an unresolved object")
        if isinstance(n, If):
            c, cs = self.tr(n.cond, scope)
            (t, e), s = self._unify([self.tr(n.then, scope), self.tr(n.orelse, scope)])
            return f"(ite {self.coerce(c, cs, 'Bool')} {t} {e})", s
        if isinstance(n, UserCall):
            return self._call(n, scope)
        if isinstance(n, OpCall):
            return self._op(n, scope)
        raise Untranslatable(f"{type(n).__name__} node has no SMT-LIB form")

    def _call(self, n: UserCall, scope) -> Tuple[str, str]:
        f = self.functions.get(n.op)
        if f is None:
            raise Untranslatable(f"call to unprepared operation {n.op}")
        args = [self.tr(a, scope) for a in n.args]
        if len(args) != len(f.params):
            raise Untranslatable(f"{n.op} expects {len(f.params)} arguments")
        texts = [self.coerce(t, s, smt_sort(pt)) for (t, s), (_, pt) in zip(args, f.params)]
        ret = smt_sort(f.ret)
        if not texts:
            return n.op, ret
        return f"({n.op} {' '.join(texts)})", ret

    def _op(self, n: OpCall, scope) -> Tuple[str, str]:
        op = n.op
        args = [self.tr(a, scope) for a in n.args]
        if op in ("and", "or", "xor", "implies"):
            texts = [self.coerce(t, s, "Bool") for t, s in args]
            sym = {"implies": "=>"}.get(op, op)
            return f"({sym} {' '.join(texts)})", "Bool"
        if op == "not":
            return f"(not {self.coerce(args[0][0], args[0][1], 'Bool')})", "Bool"
        if op in ("=", "<>"):
            texts, _ = self._unify(args)
            eq = f"(= {texts[0]} {texts[1]})"
            return (eq if op == "=" else f"(not {eq})"), "Bool"
        if op in ("<", ">", "<=", ">="):
            if args[0][1] == "String" and args[1][1] == "String":
                a, b = args[0][0], args[1][0]
                strict = {"<": f"(str.< {a} {b})", ">": f"(str.< {b} {a})"}
                loose = {"<=": f"(str.<= {a} {b})", ">=": f"(str.<= {b} {a})"}
                return {**strict, **loose}[op], "Bool"
            texts, _ = self._unify(args)
            return f"({op} {texts[0]} {texts[1]})", "Bool"
        if op in ("+", "*") or (op == "-" and len(args) == 2):
            texts, s = self._unify(args)
            return f"({op} {texts[0]} {texts[1]})", s
        if op == "-":
            return f"(- {args[0][0]})", args[0][1]
        if op == "/":
            texts = [self.coerce(t, s, "Real") for t, s in args]
            return f"(/ {texts[0]} {texts[1]})", "Real"
        if op in ("div", "mod"):
            texts = [self.coerce(t, s, "Int") for t, s in args]
            return f"({op} {texts[0]} {texts[1]})", "Int"
        if op == "abs":
            return f"(abs {args[0][0]})", args[0][1]
        if op in ("max", "min", "round", "ceil", "floor"):
            return self._builtin(op, args)
        if op == "toReal":
            if args[0][1] != "Int":
                raise Untranslatable("toReal of a String has no SMT-LIB form")
            return self._builtin("toReal", args)
        if op == "toInteger":
            return self._builtin("toInteger", args)
        if op == "size":
            return self._builtin("sizeString", args)
        if op == "concat":
            return self._builtin("concatString", args)
        if op == "substring":
            # OCL: 1-based, inclusive bounds; SMT-LIB: offset and length.
            s, lo, hi = args[0][0], self.coerce(*args[1], "Int"), self.coerce(*args[2], "Int")
            return f"(str.substr {s} (- {lo} 1) (+ (- {hi} {lo}) 1))", "String"
        raise Untranslatable(f"operation {op} has no SMT-LIB form")

    # ------------------------------------------------------------ script
    def function_text(self, f: SmtFunction) -> str:
        scope = {p: smt_sort(t) for p, t in f.params}
        body, s = self.tr(f.body, scope)
        ret = smt_sort(f.ret)
        params = "".join(f"({p} {smt_sort(t)})" for p, t in f.params)
        return f"(define-fun {f.name} ({params}) {ret} {self.coerce(body, s, ret)})"


def enum_decl_text(name: str, symbols: Sequence[str]) -> str:
    return "(declare-datatypes () ((" + name + "".join(f" ({s})" for s in symbols) + ")))"


def translate(
    root: Node,
    functions: Sequence[SmtFunction],
    inst: InstanceModel,
    m: DataModel,
    pinned: Optional[Set[Tuple[str, str]]] = None,
) -> SmtJob:
    t = Translator(m, inst)
    t.functions = {f.name: f for f in functions}
    assertion, s = t.tr(root, {})
    assertion = t.coerce(assertion, s, "Bool")
    fun_texts = [t.function_text(f) for f in functions]
    pins: List[str] = []
    pin_asserts: List[str] = []
    for (oid, attr), b in t.bindings.items():
        if pinned and (oid, attr) in pinned:
            v = inst.objects[oid].attrs[attr]
            if v is NULL:
                # A folded part read this null slot; no solver value can keep it null.
                raise SmtAbort(f"{oid}.{attr} is null but must keep its value")
            text, vs = t.value(v)
            pins.append(b.var)
            pin_asserts.append(f"(assert (= {b.var} {t.coerce(text, vs, b.sort)}))")
    enum_decls = []
    for name in t.enums:
        e = m.enum(name)
        enum_decls.append(enum_decl_text(name, [t.enum_symbol(name, lit) for lit in e.literals]))
    builtin_texts = [BUILTIN_DEFS[b] for b in BUILTIN_ORDER if b in t.builtins]
    bindings = list(t.bindings.values())
    lines = [PRODUCE_MODELS]
    lines += enum_decls
    lines += [f"(declare-const {b.var} {b.sort})" for b in bindings]
    lines += builtin_texts + fun_texts
    lines.append(f"(assert {assertion})")
    lines += pin_asserts
    lines.append("(check-sat)")
    if bindings:
        lines.append("(get-value (" + " ".join(b.var for b in bindings) + "))")
    return SmtJob(
        "\n".join(lines) + "\n",
        bindings,
        enum_decls,
        builtin_texts + fun_texts,
        pins,
        dict(t.enum_symbols),
    )
