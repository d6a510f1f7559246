"""OCL evaluation over an instance model.

Null and Invalid follow OCL: most operations are strict in Invalid and turn a
Null operand into Invalid. The Boolean connectives are the exception:
``false and X`` is false and ``true or X`` is true whatever X is, and
``false implies X`` is true.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Any, Dict, List, Optional

from .model import InstanceModel
from .values import (
    INVALID,
    NULL,
    REAL,
    ClassType,
    Coll,
    Ref,
    _hash_key,
    is_numeric,
    value_sort_key,
    values_equal,
)
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
)

MAX_CALL_DEPTH = 200
_INT_RE = re.compile(r"^[+-]?\d+$")
_REAL_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class EvalError(Exception):
    """Raised for programming errors such as an unbound variable, never for Invalid."""


def _undef(v: Any) -> bool:
    return v is NULL or v is INVALID


def _ocl_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


class Evaluator:
    def __init__(self, inst: InstanceModel) -> None:
        self.inst = inst
        self.m = inst.model
        self.depth = 0
        # When a set, every (object id, attribute) slot read is recorded here.
        self.reads: Optional[set] = None
        self._refs: Dict[str, Ref] = {}
        self._dispatch = {
            Literal: self._literal,
            Var: self._var,
            StaticAttr: self._static,
            AttrCall: self._attr,
            Nav: self._nav,
            OpCall: self._opcall,
            TypeOp: self._typeop,
            AllInstances: self._all,
            UserCall: self._usercall,
            CollOp: self._collop,
            Iterate: self._iterate,
            If: self._if,
            Let: self._let,
        }

    def ref(self, oid: str) -> Ref:
        r = self._refs.get(oid)
        if r is None:
            r = self._refs[oid] = Ref(oid)
        return r

    def eval(self, n: Node, env: Dict[str, Any]) -> Any:
        return self._dispatch[type(n)](n, env)

    # ------------------------------------------------------------ leaves
    def _literal(self, n: Literal, env):
        return n.value

    def _var(self, n: Var, env):
        try:
            return env[n.name]
        except KeyError:
            raise EvalError(f"unbound variable '{n.name}'") from None

    def _static(self, n: StaticAttr, env):
        a = self.m.attribute(n.cls, n.attr)
        return NULL if a.value is None else a.value

    def _all(self, n: AllInstances, env):
        return Coll("Set", tuple(self.ref(i) for i in self.inst.objects_of(n.cls)))

    # ------------------------------------------------------------ properties
    def _attr(self, n: AttrCall, env):
        src = self.eval(n.source, env)
        if isinstance(src, Ref):
            o = self.inst.objects.get(src.id)
            if o is None:
                return INVALID
            if self.reads is not None:
                self.reads.add((src.id, n.attr))
            return o.attrs.get(n.attr, INVALID)
        if isinstance(src, Coll):
            out = []
            for x in src.items:
                if not isinstance(x, Ref) or x.id not in self.inst.objects:
                    return INVALID
                if self.reads is not None:
                    self.reads.add((x.id, n.attr))
                out.append(self.inst.objects[x.id].attrs.get(n.attr, INVALID))
            kind = "Sequence" if src.kind in ("Sequence", "OrderedSet") else "Bag"
            return Coll.make(kind, out)
        return INVALID

    def _nav_ids(self, oid: str, role: str) -> Optional[List[str]]:
        o = self.inst.objects.get(oid)
        if o is None:
            return None
        nav = self.m.navigation(o.cls, role)
        if nav is None:
            return None
        return self.inst.far_ids(nav.assoc.name, nav.far_side, oid)

    def _nav(self, n: Nav, env):
        src = self.eval(n.source, env)
        single = isinstance(n.type, ClassType)
        if isinstance(src, Ref):
            ids = self._nav_ids(src.id, n.role)
            if ids is None:
                return INVALID
            if single:
                # More than one link on a to-one end is a multiplicity
                # violation; picking one target would hide it.
                if len(ids) > 1:
                    return INVALID
                return self.ref(ids[0]) if ids else NULL
            kind = n.type.kind if n.type is not None else "Set"
            if kind == "Set":
                return Coll("Set", tuple(self.ref(i) for i in sorted(set(ids))))
            return Coll.make(kind, [self.ref(i) for i in ids])
        if isinstance(src, Coll):
            out = []
            for x in src.items:
                if not isinstance(x, Ref):
                    return INVALID
                ids = self._nav_ids(x.id, n.role)
                if ids is None:
                    return INVALID
                out.extend(self.ref(i) for i in ids)
            kind = n.type.kind if n.type is not None else "Bag"
            return Coll.make(kind, out)
        return INVALID

    # ------------------------------------------------------------ operations
    def _opcall(self, n: OpCall, env):
        op = n.op
        args = n.args
        if op == "and":
            a = self.eval(args[0], env)
            if a is False:
                return False
            b = self.eval(args[1], env)
            if b is False:
                return False
            return True if (a is True and b is True) else INVALID
        if op == "or":
            a = self.eval(args[0], env)
            if a is True:
                return True
            b = self.eval(args[1], env)
            if b is True:
                return True
            return False if (a is False and b is False) else INVALID
        if op == "implies":
            a = self.eval(args[0], env)
            if a is False:
                return True
            b = self.eval(args[1], env)
            if b is True:
                return True
            return False if (a is True and b is False) else INVALID
        if op == "xor":
            a = self.eval(args[0], env)
            b = self.eval(args[1], env)
            if isinstance(a, bool) and isinstance(b, bool):
                return a != b
            return INVALID
        if op == "not":
            a = self.eval(args[0], env)
            return (not a) if isinstance(a, bool) else INVALID
        if op == "oclIsUndefined":
            return _undef(self.eval(args[0], env))
        if op == "oclIsInvalid":
            return self.eval(args[0], env) is INVALID
        vals = [self.eval(a, env) for a in args]
        if op == "=":
            if vals[0] is INVALID or vals[1] is INVALID:
                return INVALID
            return values_equal(vals[0], vals[1])
        if op == "<>":
            if vals[0] is INVALID or vals[1] is INVALID:
                return INVALID
            return not values_equal(vals[0], vals[1])
        for v in vals:
            if _undef(v):
                return INVALID
        r = self._scalar(op, vals)
        if n.type == REAL and isinstance(r, int) and not isinstance(r, bool):
            r = Fraction(r)
        return r

    def relational(self, op: str, a: Any, b: Any) -> Any:
        """A comparison applied to already evaluated operands."""
        if a is INVALID or b is INVALID:
            return INVALID
        if op == "=":
            return values_equal(a, b)
        if op == "<>":
            return not values_equal(a, b)
        if _undef(a) or _undef(b):
            return INVALID
        return self._scalar(op, [a, b])

    def _scalar(self, op: str, v: List[Any]) -> Any:
        if op in ("<", ">", "<=", ">="):
            a, b = v
            if not ((is_numeric(a) and is_numeric(b)) or (isinstance(a, str) and isinstance(b, str))):
                return INVALID
            if op == "<":
                return a < b
            if op == ">":
                return a > b
            if op == "<=":
                return a <= b
            return a >= b
        if op in ("+", "-", "*", "/", "div", "mod", "max", "min") and len(v) == 2:
            a, b = v
            if not (is_numeric(a) and is_numeric(b)):
                return INVALID
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if op == "/":
                return INVALID if b == 0 else Fraction(a) / Fraction(b)
            if op == "div":
                return INVALID if b == 0 else _ocl_div(a, b)
            if op == "mod":
                return INVALID if b == 0 else a - _ocl_div(a, b) * b
            if op == "max":
                return a if a >= b else b
            return a if a <= b else b
        if op == "-":
            return -v[0] if is_numeric(v[0]) else INVALID
        a = v[0]
        if op == "abs":
            return abs(a) if is_numeric(a) else INVALID
        if op == "floor":
            return math.floor(a) if is_numeric(a) else INVALID
        if op == "ceil":
            return math.ceil(a) if is_numeric(a) else INVALID
        if op == "round":
            return math.floor(Fraction(a) + Fraction(1, 2)) if is_numeric(a) else INVALID
        if op == "toInteger":
            return int(a) if isinstance(a, str) and _INT_RE.match(a) else INVALID
        if op == "toReal":
            if isinstance(a, bool):
                return INVALID
            if isinstance(a, int):
                return Fraction(a)
            if isinstance(a, str) and _REAL_RE.match(a):
                return Fraction(a)
            return INVALID
        if op == "size":
            return len(a) if isinstance(a, str) else INVALID
        if op == "concat":
            return a + v[1] if isinstance(a, str) and isinstance(v[1], str) else INVALID
        if op == "substring":
            lo, hi = v[1], v[2]
            if not isinstance(a, str) or not (1 <= lo <= hi + 1 and hi <= len(a)):
                return INVALID
            return a[lo - 1 : hi]
        return INVALID

    def _typeop(self, n: TypeOp, env):
        src = self.eval(n.source, env)
        if src is INVALID:
            return INVALID
        if src is NULL:
            return NULL if n.op == "oclAsType" else False
        if not isinstance(src, Ref) or src.id not in self.inst.objects:
            return INVALID
        cls = self.inst.objects[src.id].cls
        if n.op == "oclIsTypeOf":
            return cls == n.cls
        ok = self.m.conforms(cls, n.cls)
        if n.op == "oclIsKindOf":
            return ok
        return src if ok else INVALID

    def _usercall(self, n: UserCall, env):
        src = self.eval(n.source, env)
        if not isinstance(src, Ref) or src.id not in self.inst.objects:
            return INVALID
        op = self.m.operation(self.inst.objects[src.id].cls, n.op)
        if op is None or op.body is None:
            return INVALID
        args = [self.eval(a, env) for a in n.args]
        if any(a is INVALID for a in args):
            return INVALID
        if self.depth >= MAX_CALL_DEPTH:
            return INVALID
        local = {"self": src}
        for (pname, _), a in zip(op.params, args):
            local[pname] = a
        self.depth += 1
        try:
            return self.eval(op.body, local)
        finally:
            self.depth -= 1

    # ------------------------------------------------------------ collections
    def as_coll(self, v: Any) -> Any:
        if isinstance(v, Coll) or v is INVALID:
            return v
        if v is NULL:
            return Coll("Set", ())
        return Coll("Set", (v,))

    def _collop(self, n: CollOp, env):
        c = self.as_coll(self.eval(n.source, env))
        if c is INVALID:
            return INVALID
        op = n.op
        items = c.items
        if op == "size":
            return len(items)
        if op == "isEmpty":
            return not items
        if op == "notEmpty":
            return bool(items)
        if op in ("asSet", "asSequence"):
            if op == "asSet":
                return Coll.make("Set", items)
            if c.kind in ("Set", "Bag"):
                return Coll("Sequence", tuple(sorted(items, key=value_sort_key)))
            return Coll("Sequence", items)
        if op == "first":
            return items[0] if items else INVALID
        if op == "sum":
            total: Any = Fraction(0) if n.type == REAL else 0
            for x in items:
                if not is_numeric(x):
                    return INVALID
                total += x
            return total
        arg = self.eval(n.args[0], env)
        if arg is INVALID:
            return INVALID
        if op == "includes":
            return any(values_equal(x, arg) for x in items)
        if op == "excludes":
            return not any(values_equal(x, arg) for x in items)
        if op == "count":
            return sum(1 for x in items if values_equal(x, arg))
        if op == "at":
            if not isinstance(arg, int) or isinstance(arg, bool) or not (1 <= arg <= len(items)):
                return INVALID
            return items[arg - 1]
        if op == "indexOf":
            for k, x in enumerate(items):
                if values_equal(x, arg):
                    return k + 1
            return INVALID
        other = self.as_coll(arg)
        if op == "includesAll":
            return all(any(values_equal(x, y) for x in items) for y in other.items)
        if op == "excludesAll":
            return not any(any(values_equal(x, y) for x in items) for y in other.items)
        return INVALID

    def quantified(self, n: Node, env) -> Any:
        if isinstance(n, Iterate):
            return self.as_coll(self.eval(n.source, env))
        return self.as_coll(self.eval(n, env))

    def _iterate(self, n: Iterate, env):
        c = self.as_coll(self.eval(n.source, env))
        if c is INVALID:
            return INVALID
        kind = n.kind
        var = n.var
        body = n.body
        had = var in env
        saved = env.get(var)
        try:
            if kind == "forAll":
                seen_invalid = False
                for x in c.items:
                    env[var] = x
                    r = self.eval(body, env)
                    if r is False:
                        return False
                    if r is not True:
                        seen_invalid = True
                return INVALID if seen_invalid else True
            if kind == "exists":
                seen_invalid = False
                for x in c.items:
                    env[var] = x
                    r = self.eval(body, env)
                    if r is True:
                        return True
                    if r is not False:
                        seen_invalid = True
                return INVALID if seen_invalid else False
            if kind in ("select", "reject"):
                keep = []
                want = kind == "select"
                for x in c.items:
                    env[var] = x
                    r = self.eval(body, env)
                    if not isinstance(r, bool):
                        return INVALID
                    if r == want:
                        keep.append(x)
                return Coll(c.kind, tuple(keep))
            if kind == "collect":
                out = []
                for x in c.items:
                    env[var] = x
                    r = self.eval(body, env)
                    if r is INVALID:
                        return INVALID
                    if isinstance(r, Coll):
                        out.extend(r.items)
                    else:
                        out.append(r)
                return Coll.make("Sequence" if c.kind in ("Sequence", "OrderedSet") else "Bag", out)
            if kind == "isUnique":
                seen = []
                for x in c.items:
                    env[var] = x
                    r = self.eval(body, env)
                    if r is INVALID:
                        return INVALID
                    if any(values_equal(r, s) for s in seen):
                        return False
                    seen.append(r)
                return True
            if kind == "one":
                count = 0
                for x in c.items:
                    env[var] = x
                    r = self.eval(body, env)
                    if not isinstance(r, bool):
                        return INVALID
                    count += r
                return count == 1
        finally:
            if had:
                env[var] = saved
            else:
                env.pop(var, None)
        raise EvalError(f"unknown iterator {kind}")

    def _if(self, n: If, env):
        c = self.eval(n.cond, env)
        if c is True:
            return self.eval(n.then, env)
        if c is False:
            return self.eval(n.orelse, env)
        return INVALID

    def _let(self, n: Let, env):
        v = self.eval(n.init, env)
        had = n.var in env
        saved = env.get(n.var)
        env[n.var] = v
        try:
            return self.eval(n.body, env)
        finally:
            if had:
                env[n.var] = saved
            else:
                env.pop(n.var, None)


def evaluate(ast: Node, inst: InstanceModel, env: Optional[Dict[str, Any]] = None) -> Any:
    return Evaluator(inst).eval(ast, dict(env or {}))


def evaluate_quantified_set(q: Node, inst: InstanceModel, env: Optional[Dict[str, Any]] = None) -> Any:
    """The collection a quantifier (or a source expression) ranges over."""
    return Evaluator(inst).quantified(q, dict(env or {}))


def holds(ast: Node, inst: InstanceModel, env: Optional[Dict[str, Any]] = None) -> bool:
    """Validity: only a definite true counts as satisfied."""
    return evaluate(ast, inst, env) is True


__all__ = ["Evaluator", "evaluate", "evaluate_quantified_set", "holds", "EvalError", "_hash_key"]
