"""Class models (schemas) and instance models (candidate solutions)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Tuple

from .values import (
    BOOLEAN,
    COLLECTION_KINDS,
    INTEGER,
    NULL,
    PRIMITIVES,
    REAL,
    STRING,
    ClassType,
    CollType,
    EnumLit,
    EnumType,
    Type,
    format_real,
    is_numeric,
)

UNBOUNDED = None  # upper bound "*"


class ModelError(Exception):
    """Raised for malformed model or instance files."""


@dataclass
class Attribute:
    name: str
    type: str
    is_static: bool = False
    value: Any = None  # constant value of a static attribute


@dataclass
class ClassDecl:
    name: str
    is_abstract: bool = False
    superclass: Optional[str] = None
    attributes: List[Attribute] = field(default_factory=list)


@dataclass
class AssocEnd:
    cls: str
    role: str
    lower: int = 0
    upper: Optional[int] = UNBOUNDED
    ordered: bool = False

    def bound_text(self) -> str:
        up = "*" if self.upper is None else str(self.upper)
        return f"{self.lower}..{up}"


@dataclass
class AssocDecl:
    name: str
    end_a: AssocEnd
    end_b: AssocEnd


@dataclass
class EnumDecl:
    name: str
    literals: List[str]


@dataclass
class UserOpDecl:
    name: str
    context: str
    params: List[Tuple[str, str]]
    return_type: str
    body_text: str
    body: Any = None  # typed AST, filled by the parser
    is_recursive: bool = False


@dataclass
class Invariant:
    context: str
    name: str
    body: Any  # typed AST with implicit `self`
    text: str = ""


@dataclass(frozen=True)
class NavEnd:
    """Navigation from an object at `near` across `assoc` to the `far` end."""

    assoc: AssocDecl
    near: AssocEnd
    far: AssocEnd
    far_side: str  # "A" or "B"


class DataModel:
    def __init__(
        self,
        classes: Iterable[ClassDecl] = (),
        associations: Iterable[AssocDecl] = (),
        enumerations: Iterable[EnumDecl] = (),
        operations: Iterable[UserOpDecl] = (),
    ) -> None:
        self.classes: List[ClassDecl] = list(classes)
        self.associations: List[AssocDecl] = list(associations)
        self.enumerations: List[EnumDecl] = list(enumerations)
        self.operations: List[UserOpDecl] = list(operations)
        self._reindex()

    def _reindex(self) -> None:
        self._classes = {c.name: c for c in self.classes}
        self._assocs = {a.name: a for a in self.associations}
        self._enums = {e.name: e for e in self.enumerations}
        self._anc_cache: Dict[str, List[str]] = {}
        self._sub_cache: Dict[str, List[str]] = {}
        self._nav_cache: Dict[Tuple[str, str], Optional[NavEnd]] = {}

    # ------------------------------------------------------------ lookups
    def cls(self, name: str) -> Optional[ClassDecl]:
        return self._classes.get(name)

    def enum(self, name: str) -> Optional[EnumDecl]:
        return self._enums.get(name)

    def assoc(self, name: str) -> Optional[AssocDecl]:
        return self._assocs.get(name)

    def ancestors(self, name: str) -> List[str]:
        """`name` followed by its superclasses, nearest first."""
        if name in self._anc_cache:
            return self._anc_cache[name]
        out, seen, cur = [], set(), name
        while cur is not None and cur not in seen and cur in self._classes:
            out.append(cur)
            seen.add(cur)
            cur = self._classes[cur].superclass
        self._anc_cache[name] = out
        return out

    def conforms(self, sub: str, sup: str) -> bool:
        return sup in self.ancestors(sub)

    def subclasses(self, name: str) -> List[str]:
        """All classes conforming to `name`, in declaration order."""
        if name not in self._sub_cache:
            self._sub_cache[name] = [c.name for c in self.classes if self.conforms(c.name, name)]
        return self._sub_cache[name]

    def concrete_subclasses(self, name: str) -> List[str]:
        return [c for c in self.subclasses(name) if not self._classes[c].is_abstract]

    def attribute(self, cls: str, name: str) -> Optional[Attribute]:
        for c in self.ancestors(cls):
            for a in self._classes[c].attributes:
                if a.name == name:
                    return a
        return None

    def all_attributes(self, cls: str) -> List[Attribute]:
        out = []
        for c in reversed(self.ancestors(cls)):
            out.extend(self._classes[c].attributes)
        return out

    def navigation(self, cls: str, role: str) -> Optional[NavEnd]:
        key = (cls, role)
        if key not in self._nav_cache:
            found = None
            for a in self.associations:
                if a.end_b.role == role and self.conforms(cls, a.end_a.cls):
                    found = NavEnd(a, a.end_a, a.end_b, "B")
                    break
                if a.end_a.role == role and self.conforms(cls, a.end_b.cls):
                    found = NavEnd(a, a.end_b, a.end_a, "A")
                    break
            self._nav_cache[key] = found
        return self._nav_cache[key]

    def navigations_from(self, cls: str) -> List[NavEnd]:
        out = []
        for a in self.associations:
            if self.conforms(cls, a.end_a.cls):
                out.append(NavEnd(a, a.end_a, a.end_b, "B"))
            if self.conforms(cls, a.end_b.cls):
                out.append(NavEnd(a, a.end_b, a.end_a, "A"))
        return out

    def operation(self, cls: str, name: str) -> Optional[UserOpDecl]:
        for c in self.ancestors(cls):
            for op in self.operations:
                if op.context == c and op.name == name:
                    return op
        return None

    def resolve_type(self, text: str) -> Type:
        text = text.strip()
        if text in PRIMITIVES:
            return PRIMITIVES[text]
        if text in self._enums:
            return EnumType(text)
        if text in self._classes:
            return ClassType(text)
        for kind in COLLECTION_KINDS:
            if text.startswith(kind + "(") and text.endswith(")"):
                return CollType(kind, self.resolve_type(text[len(kind) + 1 : -1]))
        raise ModelError(f"unknown type '{text}'")

    # ------------------------------------------------------------ serialization
    def to_dict(self) -> dict:
        def end(e: AssocEnd) -> dict:
            return {
                "class": e.cls,
                "role": e.role,
                "lower": e.lower,
                "upper": "*" if e.upper is None else e.upper,
                "ordered": e.ordered,
            }

        return {
            "classes": [
                {
                    "name": c.name,
                    "isAbstract": c.is_abstract,
                    "superclass": c.superclass,
                    "attributes": [
                        {
                            "name": a.name,
                            "type": a.type,
                            "isStatic": a.is_static,
                            "value": encode_plain(a.value),
                        }
                        for a in c.attributes
                    ],
                }
                for c in self.classes
            ],
            "associations": [
                {"name": a.name, "endA": end(a.end_a), "endB": end(a.end_b)} for a in self.associations
            ],
            "enumerations": [{"name": e.name, "literals": list(e.literals)} for e in self.enumerations],
            "operations": [
                {
                    "name": o.name,
                    "context": o.context,
                    "params": [{"name": n, "type": t} for n, t in o.params],
                    "returnType": o.return_type,
                    "body": o.body_text,
                }
                for o in self.operations
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @staticmethod
    def from_dict(d: dict) -> "DataModel":
        try:
            classes = [
                ClassDecl(
                    name=c["name"],
                    is_abstract=bool(c.get("isAbstract", False)),
                    superclass=c.get("superclass"),
                    attributes=[
                        Attribute(
                            name=a["name"],
                            type=a["type"],
                            is_static=bool(a.get("isStatic", False)),
                            value=a.get("value"),
                        )
                        for a in c.get("attributes", [])
                    ],
                )
                for c in d.get("classes", [])
            ]

            def end(e: dict) -> AssocEnd:
                up = e.get("upper", "*")
                return AssocEnd(
                    cls=e["class"],
                    role=e["role"],
                    lower=int(e.get("lower", 0)),
                    upper=None if up in ("*", None) else int(up),
                    ordered=bool(e.get("ordered", False)),
                )

            assocs = [AssocDecl(a["name"], end(a["endA"]), end(a["endB"])) for a in d.get("associations", [])]
            enums = [EnumDecl(e["name"], list(e["literals"])) for e in d.get("enumerations", [])]
            ops = [
                UserOpDecl(
                    name=o["name"],
                    context=o["context"],
                    params=[(p["name"], p["type"]) for p in o.get("params", [])],
                    return_type=o["returnType"],
                    body_text=o["body"],
                )
                for o in d.get("operations", [])
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed model document: {exc}") from exc
        m = DataModel(classes, assocs, enums, ops)
        # Static constants are stored as typed values.
        for c in m.classes:
            for a in c.attributes:
                if a.is_static and a.value is not None:
                    a.value = decode_plain(a.value, a.type, m)
        return m

    @staticmethod
    def from_json(text: str) -> "DataModel":
        try:
            return DataModel.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ModelError(f"model file is not valid JSON: {exc}") from exc


def encode_plain(v: Any) -> Any:
    if v is None or v is NULL:
        return None
    if isinstance(v, Fraction):
        return format_real(v)
    if isinstance(v, EnumLit):
        return v.literal
    return v


def decode_plain(raw: Any, type_name: str, m: DataModel) -> Any:
    if raw is None:
        return NULL
    if type_name == "Real":
        return Fraction(str(raw))
    if type_name == "Integer":
        return int(raw)
    if type_name == "Boolean":
        return bool(raw)
    if type_name == "String":
        return str(raw)
    if m.enum(type_name) is not None:
        return EnumLit(type_name, str(raw))
    raise ModelError(f"cannot decode constant of type {type_name}")


# ---------------------------------------------------------------- validation


def validate_model(m: DataModel) -> List[str]:
    """Diagnostics for violated schema invariants; empty when the model is well formed."""
    diags: List[str] = []
    for kind, names in (
        ("class", [c.name for c in m.classes]),
        ("association", [a.name for a in m.associations]),
        ("enumeration", [e.name for e in m.enumerations]),
    ):
        seen = set()
        for n in names:
            if n in seen:
                diags.append(f"duplicate {kind} name: {n}")
            seen.add(n)
    for c in m.classes:
        if c.superclass is not None and m.cls(c.superclass) is None:
            diags.append(f"unknown superclass '{c.superclass}' of class {c.name}")
        cur, seen = c.name, set()
        while cur is not None and m.cls(cur) is not None:
            if cur in seen:
                diags.append(f"inheritance cycle through class {c.name}")
                break
            seen.add(cur)
            cur = m.cls(cur).superclass
        for a in c.attributes:
            if a.type not in PRIMITIVES and m.enum(a.type) is None:
                diags.append(f"unknown type '{a.type}' of attribute {c.name}.{a.name}")
            elif a.type in PRIMITIVES or m.enum(a.type) is not None:
                if m.enum(a.type) is not None and a.is_static and isinstance(a.value, EnumLit):
                    if a.value.literal not in m.enum(a.type).literals:
                        diags.append(f"unknown literal '{a.value.literal}' for {c.name}.{a.name}")
    for e in m.enumerations:
        if not e.literals:
            diags.append(f"enumeration {e.name} has no literals")
        if len(set(e.literals)) != len(e.literals):
            diags.append(f"duplicate literal in enumeration {e.name}")
    for a in m.associations:
        for e in (a.end_a, a.end_b):
            if m.cls(e.cls) is None:
                diags.append(f"association {a.name} references unknown class '{e.cls}'")
            if e.upper is not None and e.lower > e.upper:
                diags.append(f"association {a.name} end {e.role}: lower bound exceeds upper bound")
            if e.lower < 0:
                diags.append(f"association {a.name} end {e.role}: negative lower bound")
    for o in m.operations:
        if m.cls(o.context) is None:
            diags.append(f"operation {o.name} has unknown context class '{o.context}'")
    return diags


# ---------------------------------------------------------------- instances


@dataclass
class Obj:
    id: str
    cls: str
    attrs: Dict[str, Any]


class InstanceModel:
    """Objects, attribute slots and links, with navigation indexes.

    Adjacency lists double as link order, so positions on ordered ends are
    the list indexes.
    """

    def __init__(self, model: DataModel) -> None:
        self.model = model
        self.objects: Dict[str, Obj] = {}
        self._by_class: Dict[str, List[str]] = {}
        # (assoc name, far side) -> near object id -> far object ids
        self._adj: Dict[Tuple[str, str], Dict[str, List[str]]] = {}
        self._counters: Dict[str, int] = {}
        self.version = 0

    # ------------------------------------------------------------ objects
    def fresh_id(self, cls: str) -> str:
        n = self._counters.get(cls, 0) + 1
        while f"{cls}{n}" in self.objects:
            n += 1
        self._counters[cls] = n
        return f"{cls}{n}"

    def add_object(self, cls: str, attrs: Optional[Dict[str, Any]] = None, oid: Optional[str] = None) -> str:
        oid = oid or self.fresh_id(cls)
        if oid in self.objects:
            raise ModelError(f"duplicate object id {oid}")
        slots = {a.name: NULL for a in self.model.all_attributes(cls) if not a.is_static}
        if attrs:
            slots.update(attrs)
        self.objects[oid] = Obj(oid, cls, slots)
        self._by_class.setdefault(cls, []).append(oid)
        self.version += 1
        return oid

    def remove_object(self, oid: str) -> Tuple[Obj, List[Tuple[str, str, str, int]]]:
        """Delete an object and its links; returns what is needed to restore it."""
        obj = self.objects.pop(oid)
        self._by_class[obj.cls].remove(oid)
        removed: List[Tuple[str, str, str, int]] = []
        for a in self.model.associations:
            for far in list(self.far_ids(a.name, "B", oid)):
                removed.append((a.name, oid, far, self.remove_link(a.name, oid, far)))
            for near in list(self.far_ids(a.name, "A", oid)):
                removed.append((a.name, near, oid, self.remove_link(a.name, near, oid)))
        self.version += 1
        return obj, removed

    def restore_object(self, obj: Obj, links: List[Tuple[str, str, str, int]]) -> None:
        self.objects[obj.id] = obj
        self._by_class.setdefault(obj.cls, []).append(obj.id)
        self._by_class[obj.cls].sort()
        for assoc, a, b, pos in reversed(links):
            self.add_link(assoc, a, b, position=pos)
        self.version += 1

    def _position(self, assoc: str, a: str, b: str) -> int:
        lst = self._adj.get((assoc, "B"), {}).get(a, [])
        return lst.index(b) if b in lst else -1

    def objects_of(self, cls: str) -> List[str]:
        """Ids of objects conforming to `cls`, in id order."""
        out: List[str] = []
        for c in self.model.subclasses(cls):
            out.extend(self._by_class.get(c, ()))
        out.sort()
        return out

    def objects_exact(self, cls: str) -> List[str]:
        return sorted(self._by_class.get(cls, ()))

    def get(self, oid: str) -> Obj:
        return self.objects[oid]

    def set_attr(self, oid: str, name: str, value: Any) -> Any:
        slots = self.objects[oid].attrs
        old = slots[name]
        slots[name] = value
        self.version += 1
        return old

    # ------------------------------------------------------------ links
    def add_link(self, assoc: str, a: str, b: str, position: int = -1) -> None:
        fwd = self._adj.setdefault((assoc, "B"), {}).setdefault(a, [])
        bwd = self._adj.setdefault((assoc, "A"), {}).setdefault(b, [])
        if position is None or position < 0 or position > len(fwd):
            fwd.append(b)
        else:
            fwd.insert(position, b)
        bwd.append(a)
        self.version += 1

    def remove_link(self, assoc: str, a: str, b: str) -> int:
        fwd = self._adj[(assoc, "B")][a]
        pos = fwd.index(b)
        fwd.pop(pos)
        bwd = self._adj[(assoc, "A")][b]
        bwd.remove(a)
        self.version += 1
        return pos

    def has_link(self, assoc: str, a: str, b: str) -> bool:
        return b in self._adj.get((assoc, "B"), {}).get(a, ())

    def far_ids(self, assoc: str, far_side: str, near: str) -> List[str]:
        return self._adj.get((assoc, far_side), {}).get(near, [])

    def navigate(self, oid: str, role: str) -> List[str]:
        nav = self.model.navigation(self.objects[oid].cls, role)
        if nav is None:
            raise ModelError(f"no role '{role}' from {oid}")
        return list(self.far_ids(nav.assoc.name, nav.far_side, oid))

    def links(self) -> List[Tuple[str, str, str, int]]:
        out = []
        for (assoc, side), table in self._adj.items():
            if side != "B":
                continue
            for a in sorted(table):
                for pos, b in enumerate(table[a]):
                    out.append((assoc, a, b, pos))
        out.sort(key=lambda t: (t[0], t[1], t[3], t[2]))
        return out

    # ------------------------------------------------------------ misc
    def copy(self) -> "InstanceModel":
        c = InstanceModel(self.model)
        for oid in sorted(self.objects):
            o = self.objects[oid]
            c.objects[oid] = Obj(oid, o.cls, dict(o.attrs))
            c._by_class.setdefault(o.cls, []).append(oid)
        c._adj = {k: {n: list(v) for n, v in t.items()} for k, t in self._adj.items()}
        c._counters = dict(self._counters)
        return c

    def size(self) -> int:
        return len(self.objects)

    def to_dict(self) -> dict:
        objs = []
        for oid in sorted(self.objects):
            o = self.objects[oid]
            objs.append(
                {
                    "id": oid,
                    "class": o.cls,
                    "attributes": {k: encode_value(v) for k, v in sorted(o.attrs.items())},
                }
            )
        links = []
        for assoc, a, b, pos in self.links():
            ad = self.model.assoc(assoc)
            ordered = ad is not None and (ad.end_a.ordered or ad.end_b.ordered)
            links.append({"association": assoc, "source": a, "target": b, "position": pos if ordered else None})
        return {"objects": objs, "links": links}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_dict(d: dict, m: DataModel) -> "InstanceModel":
        inst = InstanceModel(m)
        try:
            for o in d.get("objects", []):
                attrs = {k: decode_value(v) for k, v in o.get("attributes", {}).items()}
                inst.add_object(o["class"], attrs, oid=o["id"])
            for ln in d.get("links", []):
                pos = ln.get("position")
                inst.add_link(ln["association"], ln["source"], ln["target"], position=-1 if pos is None else pos)
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed instance document: {exc}") from exc
        return inst

    @staticmethod
    def from_json(text: str, m: DataModel) -> "InstanceModel":
        try:
            return InstanceModel.from_dict(json.loads(text), m)
        except json.JSONDecodeError as exc:
            raise ModelError(f"instance file is not valid JSON: {exc}") from exc


def encode_value(v: Any) -> dict:
    if v is NULL:
        return {"type": "Null"}
    if isinstance(v, bool):
        return {"type": "Boolean", "value": v}
    if isinstance(v, int):
        return {"type": "Integer", "value": v}
    if isinstance(v, Fraction):
        return {"type": "Real", "value": format_real(v)}
    if isinstance(v, str):
        return {"type": "String", "value": v}
    if isinstance(v, EnumLit):
        return {"type": "Enum", "enum": v.enum, "value": v.literal}
    raise ModelError(f"cannot serialize attribute value {v!r}")


def decode_value(d: dict) -> Any:
    t = d.get("type")
    if t == "Null":
        return NULL
    if t == "Boolean":
        return bool(d["value"])
    if t == "Integer":
        return int(d["value"])
    if t == "Real":
        return Fraction(str(d["value"]))
    if t == "String":
        return str(d["value"])
    if t == "Enum":
        return EnumLit(d["enum"], d["value"])
    raise ModelError(f"unknown value tag {t!r}")


def value_fits(v: Any, type_name: str, m: DataModel) -> bool:
    if v is NULL:
        return True
    if type_name == "Boolean":
        return isinstance(v, bool)
    if type_name == "Integer":
        return isinstance(v, int) and not isinstance(v, bool)
    if type_name == "Real":
        return is_numeric(v)
    if type_name == "String":
        return isinstance(v, str)
    e = m.enum(type_name)
    return e is not None and isinstance(v, EnumLit) and v.enum == type_name and v.literal in e.literals


def conforms_to(i: InstanceModel, m: DataModel) -> List[str]:
    """Structural diagnostics; multiplicities are checked by the constraint instead."""
    diags: List[str] = []
    for oid in sorted(i.objects):
        o = i.objects[oid]
        decl = m.cls(o.cls)
        if decl is None:
            diags.append(f"object {oid}: unknown class {o.cls}")
            continue
        if decl.is_abstract:
            diags.append(f"object {oid}: instantiates abstract class {o.cls}")
        expected = {a.name: a for a in m.all_attributes(o.cls) if not a.is_static}
        for name in expected:
            if name not in o.attrs:
                diags.append(f"object {oid}: missing slot for attribute {name}")
            elif not value_fits(o.attrs[name], expected[name].type, m):
                diags.append(f"object {oid}: value {o.attrs[name]!r} does not fit {name}: {expected[name].type}")
        for name in o.attrs:
            if name not in expected:
                diags.append(f"object {oid}: unknown attribute {name}")
    seen = set()
    for assoc, a, b, _ in i.links():
        ad = m.assoc(assoc)
        if ad is None:
            diags.append(f"link {assoc}({a}, {b}): unknown association")
            continue
        for oid, end in ((a, ad.end_a), (b, ad.end_b)):
            if oid not in i.objects:
                diags.append(f"link {assoc}({a}, {b}): dangling endpoint {oid}")
            elif not m.conforms(i.objects[oid].cls, end.cls):
                diags.append(
                    f"link {assoc}({a}, {b}): {oid} of class {i.objects[oid].cls} does not conform to {end.cls}"
                )
        key = (assoc, a, b)
        if key in seen and not (ad.end_a.ordered or ad.end_b.ordered):
            diags.append(f"link {assoc}({a}, {b}): duplicate link")
        seen.add(key)
    return diags


def multiplicity_to_constraint(a: AssocDecl, m: DataModel) -> List[Invariant]:
    """One invariant per finite bound per end, over the role-navigation size."""
    from .lang.parser import parse_constraint

    out: List[Invariant] = []
    for near, far in ((a.end_a, a.end_b), (a.end_b, a.end_a)):
        bounds = []
        if far.lower > 0:
            bounds.append((">=", far.lower))
        if far.upper is not None:
            bounds.append(("<=", far.upper))
        for op, n in bounds:
            text = f"self.{far.role}->size() {op} {n}"
            tag = "min" if op == ">=" else "max"
            body = parse_constraint(text, m, context=near.cls)
            out.append(Invariant(near.cls, f"{a.name}_{far.role}_{tag}", body, text))
    return out


def all_multiplicity_constraints(m: DataModel) -> List[Invariant]:
    out: List[Invariant] = []
    for a in m.associations:
        out.extend(multiplicity_to_constraint(a, m))
    return out


def primitive_type_of(type_name: str, m: DataModel) -> Type:
    if type_name in PRIMITIVES:
        return PRIMITIVES[type_name]
    return EnumType(type_name)


__all__ = [
    "Attribute",
    "ClassDecl",
    "AssocEnd",
    "AssocDecl",
    "EnumDecl",
    "UserOpDecl",
    "Invariant",
    "DataModel",
    "InstanceModel",
    "Obj",
    "ModelError",
    "validate_model",
    "conforms_to",
    "multiplicity_to_constraint",
    "all_multiplicity_constraints",
    "encode_value",
    "decode_value",
    "BOOLEAN",
    "INTEGER",
    "REAL",
    "STRING",
]
