"""Branch distance of an NNF constraint over an instance model.

Composition: forAll averages its element distances, exists and ``or`` take
the minimum, ``and`` adds its children. Atoms use the usual branch distances
with K = 1. Any node without a dedicated rule scores 0 when it evaluates to
true and K otherwise, which keeps ``raw == 0`` equivalent to satisfaction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Optional

from .evaluator import Evaluator
from .lang.nodes import CollOp, Iterate, Node, OpCall
from .model import InstanceModel
from .values import INVALID, NULL, is_numeric

K = 1.0
_BIG = 1e300
_TINY = 1e-300


@dataclass(frozen=True)
class Distance:
    raw: float
    normalized: float

    @staticmethod
    def of(raw: float) -> "Distance":
        return Distance(raw, raw / (raw + 1.0))


def _gap(diff: Any) -> float:
    # Exact difference -> positive float; never rounds a nonzero gap to zero.
    if diff <= 0:
        return 0.0
    try:
        f = float(diff)
    except OverflowError:
        return _BIG
    return min(max(f, _TINY), _BIG)


class Fitness:
    def __init__(self, inst: InstanceModel) -> None:
        self.ev = Evaluator(inst)

    def raw(self, n: Node, env: Dict[str, Any]) -> float:
        if isinstance(n, OpCall):
            op = n.op
            if op == "and":
                return min(self.raw(n.args[0], env) + self.raw(n.args[1], env), _BIG)
            if op == "or":
                a = self.raw(n.args[0], env)
                return 0.0 if a == 0.0 else min(a, self.raw(n.args[1], env))
            if op in ("<", ">", "<=", ">=", "=", "<>"):
                return self._relational(n, env)
        elif isinstance(n, Iterate) and n.kind in ("forAll", "exists"):
            return self._quantifier(n, env)
        elif isinstance(n, CollOp) and n.op == "isEmpty":
            c = self.ev.as_coll(self.ev.eval(n.source, env))
            return K if c is INVALID else float(len(c.items))
        return 0.0 if self.ev.eval(n, env) is True else K

    def _relational(self, n: OpCall, env) -> float:
        a = self.ev.eval(n.args[0], env)
        b = self.ev.eval(n.args[1], env)
        if a is INVALID or b is INVALID:
            return K
        op = n.op
        if is_numeric(a) and is_numeric(b):
            if op == "=":
                return _gap(abs(a - b))
            if op == "<>":
                return K if a == b else 0.0
            if op == ">":
                a, b, op = b, a, "<"
            elif op == ">=":
                a, b, op = b, a, "<="
            if op == "<":
                return 0.0 if a < b else _gap(a - b + 1)
            return _gap(a - b)
        if a is NULL or b is NULL:
            if op in ("=", "<>"):
                return 0.0 if (a is b) == (op == "=") else K
            return K
        return 0.0 if self.ev.relational(op, a, b) is True else K

    def _quantifier(self, n: Iterate, env) -> float:
        c = self.ev.as_coll(self.ev.eval(n.source, env))
        if c is INVALID:
            return K
        items = c.items
        if not items:
            return 0.0 if n.kind == "forAll" else K
        had = n.var in env
        saved = env.get(n.var)
        try:
            if n.kind == "forAll":
                total = 0.0
                for x in items:
                    env[n.var] = x
                    total += self.raw(n.body, env)
                return min(total / len(items), _BIG)
            best = None
            for x in items:
                env[n.var] = x
                d = self.raw(n.body, env)
                if best is None or d < best:
                    best = d
                    if d == 0.0:
                        break
            return best
        finally:
            if had:
                env[n.var] = saved
            else:
                env.pop(n.var, None)


def distance(ast: Node, inst: InstanceModel, env: Optional[Dict[str, Any]] = None) -> Distance:
    return Distance.of(Fitness(inst).raw(ast, dict(env or {})))


def distance_agrees_with_evaluate(ast: Node, inst: InstanceModel, env: Optional[Dict[str, Any]] = None) -> bool:
    env = dict(env or {})
    d = Fitness(inst).raw(ast, dict(env))
    return (d == 0.0) == (Evaluator(inst).eval(ast, env) is True)
