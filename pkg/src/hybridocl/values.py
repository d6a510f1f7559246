"""Runtime values and static types shared by every stage.

Integers are Python ``int``, reals are ``fractions.Fraction`` (exact, so values
lifted from the SMT solver round-trip without loss), strings are ``str`` and
Booleans are ``bool``.  ``bool`` is a subclass of ``int`` in Python, so code
that dispatches on numeric values must test for ``bool`` first.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Tuple


class _Singleton:
    __slots__ = ("_name",)

    def __init__(self, name: str) -> None:
        self._name = name

    def __repr__(self) -> str:
        return self._name

    def __reduce__(self):
        return self._name


NULL = _Singleton("NULL")
INVALID = _Singleton("INVALID")


@dataclass(frozen=True)
class EnumLit:
    enum: str
    literal: str

    def __str__(self) -> str:
        return f"{self.enum}::{self.literal}"


@dataclass(frozen=True, order=True)
class Ref:
    """Reference to an object of an instance model by id."""

    id: str

    def __str__(self) -> str:
        return self.id


COLLECTION_KINDS = ("Set", "Bag", "Sequence", "OrderedSet")


def value_sort_key(v: Any) -> tuple:
    # Total order used to canonicalise Set/Bag contents.
    if isinstance(v, bool):
        return (0, int(v))
    if isinstance(v, (int, Fraction)):
        return (1, v)
    if isinstance(v, str):
        return (2, v)
    if isinstance(v, EnumLit):
        return (3, v.enum, v.literal)
    if isinstance(v, Ref):
        return (4, v.id)
    if isinstance(v, Coll):
        return (5, v.kind, tuple(value_sort_key(x) for x in v.items))
    return (6, repr(v))


@dataclass(frozen=True)
class Coll:
    """Collection value; ``items`` is canonical for unordered kinds."""

    kind: str
    items: Tuple[Any, ...]

    @staticmethod
    def make(kind: str, items: Iterable[Any]) -> "Coll":
        items = list(items)
        if kind == "Set":
            seen = {}
            for x in items:
                seen.setdefault(_hash_key(x), x)
            items = sorted(seen.values(), key=value_sort_key)
        elif kind == "Bag":
            items = sorted(items, key=value_sort_key)
        elif kind == "OrderedSet":
            seen = set()
            out = []
            for x in items:
                k = _hash_key(x)
                if k not in seen:
                    seen.add(k)
                    out.append(x)
            items = out
        elif kind != "Sequence":
            raise ValueError(f"unknown collection kind {kind}")
        return Coll(kind, tuple(items))

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def _hash_key(v: Any) -> Any:
    # Keeps True and 1 apart inside sets.
    if isinstance(v, bool):
        return ("b", v)
    return v


def values_equal(a: Any, b: Any) -> bool:
    """OCL '=' on two defined values (neither Invalid)."""
    if a is NULL or b is NULL:
        return a is b
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if isinstance(a, Coll) and isinstance(b, Coll):
        return collections_equal(a, b)
    if isinstance(a, Coll) or isinstance(b, Coll):
        return False
    if _numeric(a) or _numeric(b):
        return _numeric(a) and _numeric(b) and a == b
    return type(a) is type(b) and a == b


def _numeric(v: Any) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


def _multiset(items) -> dict:
    out: dict = {}
    for x in items:
        k = _hash_key(x)
        out[k] = out.get(k, 0) + 1
    return out


def collections_equal(a: Coll, b: Coll) -> bool:
    ordered = ("Sequence", "OrderedSet")
    if a.kind in ordered and b.kind in ordered and a.kind == b.kind:
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a.items, b.items))
    if a.kind == "Bag" and b.kind == "Bag":
        return _multiset(a.items) == _multiset(b.items)
    if "Set" in (a.kind, b.kind) or a.kind != b.kind:
        # Set compared with OrderedSet (or mixed kinds): compare as sets.
        return set(map(_hash_key, a.items)) == set(map(_hash_key, b.items))
    return False


def is_numeric(v: Any) -> bool:
    return _numeric(v)


# ---------------------------------------------------------------- static types


@dataclass(frozen=True)
class Type:
    pass


@dataclass(frozen=True)
class PrimType(Type):
    name: str  # Boolean | Integer | Real | String

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class EnumType(Type):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ClassType(Type):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class CollType(Type):
    kind: str
    elem: Type

    def __str__(self) -> str:
        return f"{self.kind}({self.elem})"


@dataclass(frozen=True)
class VoidType(Type):
    def __str__(self) -> str:
        return "OclVoid"


@dataclass(frozen=True)
class InvalidType(Type):
    def __str__(self) -> str:
        return "OclInvalid"


BOOLEAN = PrimType("Boolean")
INTEGER = PrimType("Integer")
REAL = PrimType("Real")
STRING = PrimType("String")
VOID = VoidType()
INVALID_T = InvalidType()
PRIMITIVES = {"Boolean": BOOLEAN, "Integer": INTEGER, "Real": REAL, "String": STRING}


def is_primitive(t: Type) -> bool:
    """Primitive in the labeling sense: an SMT sort exists for it."""
    return isinstance(t, (PrimType, EnumType))


def is_object_like(t: Type) -> bool:
    return isinstance(t, (ClassType, CollType))


def to_real(v: Any) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def format_real(v: Fraction) -> str:
    """Decimal text when finite, otherwise ``p/q``."""
    d = v.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d != 1:
        return f"{v.numerator}/{v.denominator}"
    if v.denominator == 1:
        return f"{v.numerator}.0"
    sign = "-" if v < 0 else ""
    a = abs(v)
    whole = a.numerator // a.denominator
    frac = a - whole
    digits = []
    while frac:
        frac *= 10
        digit = frac.numerator // frac.denominator
        digits.append(str(digit))
        frac -= digit
    return f"{sign}{whole}." + "".join(digits)
