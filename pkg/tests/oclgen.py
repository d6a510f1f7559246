"""Seeded generators for randomized models, instances and constraints.

Everything is driven by a `random.Random`, so a failing case is reproduced by
its seed alone.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from hybridocl.model import DataModel, InstanceModel
from hybridocl.values import NULL, EnumLit

# Two classes with integer, real, Boolean and enum attributes, linked many-to-many.
GEN_MODEL = {
    "enumerations": [{"name": "Color", "literals": ["Red", "Green", "Blue"]}],
    "classes": [
        {
            "name": "Item",
            "isAbstract": False,
            "superclass": None,
            "attributes": [
                {"name": "x", "type": "Integer", "isStatic": False, "value": None},
                {"name": "y", "type": "Integer", "isStatic": False, "value": None},
                {"name": "r", "type": "Real", "isStatic": False, "value": None},
                {"name": "flag", "type": "Boolean", "isStatic": False, "value": None},
                {"name": "color", "type": "Color", "isStatic": False, "value": None},
            ],
        },
        {
            "name": "Part",
            "isAbstract": False,
            "superclass": None,
            "attributes": [{"name": "z", "type": "Integer", "isStatic": False, "value": None}],
        },
    ],
    "associations": [
        {
            "name": "has",
            "endA": {"class": "Item", "role": "owners", "lower": 0, "upper": "*", "ordered": False},
            "endB": {"class": "Part", "role": "parts", "lower": 0, "upper": "*", "ordered": False},
        }
    ],
    "operations": [],
}

# One class with String attributes, for the string helper definitions.
STRING_MODEL = {
    "enumerations": [],
    "classes": [
        {
            "name": "Rec",
            "isAbstract": False,
            "superclass": None,
            "attributes": [
                {"name": "s", "type": "String", "isStatic": False, "value": None},
                {"name": "t", "type": "String", "isStatic": False, "value": None},
                {"name": "r", "type": "Real", "isStatic": False, "value": None},
                {"name": "n", "type": "Integer", "isStatic": False, "value": None},
            ],
        }
    ],
    "associations": [],
    "operations": [],
}

COLORS = ("Red", "Green", "Blue")
INT_ATTRS = {"Item": ("x", "y"), "Part": ("z",)}


def gen_model() -> DataModel:
    return DataModel.from_dict(GEN_MODEL)


def random_instance(
    rng: random.Random, m: DataModel, max_objects: int = 6, domain: int = 5, null_rate: float = 0.08
) -> InstanceModel:
    """At most `max_objects` objects; every attribute drawn from `domain` values or NULL."""
    inst = InstanceModel(m)

    def maybe(v):
        return NULL if rng.random() < null_rate else v

    n_items = rng.randint(0, max_objects // 2)
    n_parts = rng.randint(0, max_objects - n_items)
    items = [
        inst.add_object(
            "Item",
            {
                "x": maybe(rng.randrange(domain)),
                "y": maybe(rng.randrange(domain)),
                "r": maybe(Fraction(rng.randrange(domain), 2)),
                "flag": maybe(rng.random() < 0.5),
                "color": maybe(EnumLit("Color", rng.choice(COLORS[: max(1, min(3, domain))]))),
            },
        )
        for _ in range(n_items)
    ]
    parts = [inst.add_object("Part", {"z": maybe(rng.randrange(domain))}) for _ in range(n_parts)]
    for p in parts:
        for it in items:
            if rng.random() < 0.4:
                inst.add_link("has", it, p)
    return inst


class ExprGen:
    """Random well-typed Boolean expressions over `GEN_MODEL`."""

    def __init__(self, rng: random.Random, max_depth: int = 3) -> None:
        self.rng = rng
        self.max_depth = max_depth
        self.counter = 0

    def fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"

    # scope: variable name -> class name ("Integer" for let-bound integers)
    def int_term(self, scope: Dict[str, str], depth: int) -> str:
        rng = self.rng
        objs = [(v, c) for v, c in scope.items() if c in INT_ATTRS]
        ints = [v for v, c in scope.items() if c == "Integer"]
        choices = ["lit"]
        if objs:
            choices += ["attr", "attr", "size"]
        if ints:
            choices.append("var")
        if depth > 0:
            choices += ["arith", "max", "if"]
        k = rng.choice(choices)
        if k == "lit":
            return str(rng.randrange(5))
        if k == "var":
            return rng.choice(ints)
        if k == "attr":
            v, c = rng.choice(objs)
            return f"{v}.{rng.choice(INT_ATTRS[c])}"
        if k == "size":
            v, c = rng.choice(objs)
            role = "parts" if c == "Item" else "owners"
            return f"{v}.{role}->size()"
        if k == "arith":
            op = rng.choice(["+", "-", "*"])
            return f"({self.int_term(scope, depth - 1)} {op} {self.int_term(scope, depth - 1)})"
        if k == "max":
            fn = rng.choice(["max", "min"])
            return f"{self.int_term(scope, depth - 1)}.{fn}({self.int_term(scope, depth - 1)})"
        return f"(if {self.bool_expr(scope, depth - 1)} then {self.int_term(scope, depth - 1)} else {self.int_term(scope, depth - 1)} endif)"

    def atom(self, scope: Dict[str, str], depth: int) -> str:
        rng = self.rng
        items = [v for v, c in scope.items() if c == "Item"]
        objs = [(v, c) for v, c in scope.items() if c in INT_ATTRS]
        choices = ["rel", "rel", "rel", "const"]
        if items:
            choices += ["flag", "color", "real", "undef"]
        if objs and depth > 0:
            choices += ["quant", "quant", "select", "all"]
        k = rng.choice(choices)
        if k == "const":
            return rng.choice(["true", "false"])
        if k == "rel":
            op = rng.choice(["=", "<>", "<", "<=", ">", ">="])
            return f"{self.int_term(scope, 1)} {op} {self.int_term(scope, 1)}"
        if k == "flag":
            v = rng.choice(items)
            return rng.choice([f"{v}.flag", f"{v}.flag = true", f"{v}.flag = false"])
        if k == "color":
            return f"{rng.choice(items)}.color {rng.choice(['=', '<>'])} Color::{rng.choice(COLORS)}"
        if k == "real":
            v = rng.choice(items)
            op = rng.choice(["<", "<=", ">", ">=", "="])
            return f"{v}.r * 2 {op} {self.int_term(scope, 0)}"
        if k == "undef":
            v = rng.choice(items)
            return f"{v}.{rng.choice(['x', 'flag', 'color'])}.oclIsUndefined()"
        if k == "all":
            w = self.fresh("o")
            kind = rng.choice(["forAll", "exists"])
            return f"Item.allInstances()->{kind}({w} | {self.bool_expr({**scope, w: 'Item'}, depth - 1)})"
        v, c = rng.choice(objs)
        role, target = ("parts", "Part") if c == "Item" else ("owners", "Item")
        w = self.fresh("q")
        body = self.bool_expr({**scope, w: target}, depth - 1)
        if k == "select":
            sel = rng.choice(["select", "reject"])
            return f"{v}.{role}->{sel}({w} | {body})->size() {rng.choice(['>=', '<=', '='])} {rng.randrange(3)}"
        kind = rng.choice(["forAll", "exists", "exists", "one"])
        return f"{v}.{role}->{kind}({w} | {body})"

    def bool_expr(self, scope: Dict[str, str], depth: int) -> str:
        rng = self.rng
        if depth <= 0 or rng.random() < 0.3:
            return self.atom(scope, depth)
        k = rng.choice(["not", "and", "or", "implies", "xor", "if", "let"])
        if k == "not":
            return f"not ({self.bool_expr(scope, depth - 1)})"
        if k == "if":
            return (
                f"(if {self.bool_expr(scope, depth - 1)} then {self.bool_expr(scope, depth - 1)} "
                f"else {self.bool_expr(scope, depth - 1)} endif)"
            )
        if k == "let":
            v = self.fresh("v")
            t = self.int_term(scope, 1)
            return f"(let {v} : Integer = {t} in {self.bool_expr({**scope, v: 'Integer'}, depth - 1)})"
        return f"({self.bool_expr(scope, depth - 1)} {k} {self.bool_expr(scope, depth - 1)})"

    def invariant_file(self, count: Optional[int] = None) -> Tuple[str, List[Tuple[str, str]]]:
        """Text of 1..3 invariants and their (context, body text) pairs."""
        rng = self.rng
        n = count if count is not None else rng.randint(1, 3)
        parts, pairs = [], []
        for k in range(n):
            ctx = rng.choice(["Item", "Item", "Part"])
            body = self.bool_expr({"self": ctx}, self.max_depth)
            parts.append(f"context {ctx} inv G{k}:\n  {body}\n")
            pairs.append((ctx, body))
        return "\n".join(parts), pairs
