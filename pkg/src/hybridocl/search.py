"""Alternating variable method over instance models.

The search vector holds one object-count variable per concrete class, one
link-set variable per (object, association end) and one variable per
mutable attribute slot. Counts and numeric attributes are optimised with
iterated pattern search; link sets and nominal attributes try a sample of
alternatives and keep the best.

Every move is tried on a copy of the instance and kept only when it lowers
the objective strictly, so an accepted move never worsens the distance.
"""

from __future__ import annotations

import random
import re
import string
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

from .labels import Label, LabeledOps
from .lang.nodes import AllInstances, AttrCall, Nav, Node, TypeOp
from .model import DataModel, InstanceModel, NavEnd
from .values import NULL, ClassType, EnumLit, is_primitive

Objective = Callable[[InstanceModel], float]

INT_INIT = (0, 100)
STRING_ALPHABET = string.ascii_lowercase
STRING_MAX_LEN = 6


@dataclass
class SearchConfig:
    max_iterations: int = 1000
    seed: int = 0
    nominal_sample_size: int = 10
    restart_on_plateau: bool = True
    class_cap: int = 30
    # Per-class overrides of `class_cap`.
    class_caps: Dict[str, int] = field(default_factory=dict)
    # Objects created to satisfy one lower bound may themselves need links.
    completion_depth: int = 2

    def __post_init__(self) -> None:
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if self.nominal_sample_size < 1:
            raise ValueError("nominal_sample_size must be at least 1")
        if self.class_cap < 0:
            raise ValueError("class_cap must be non-negative")

    def cap(self, cls: str) -> int:
        return self.class_caps.get(cls, self.class_cap)


@dataclass(frozen=True)
class Features:
    """What search may change: classes to instantiate, association ends to
    link, attribute slots to assign (None means every attribute)."""

    classes: FrozenSet[str]
    ends: FrozenSet[Tuple[str, str]]
    attributes: Optional[FrozenSet[Tuple[str, str]]]

    def attr_allowed(self, cls: str, attr: str) -> bool:
        return self.attributes is None or (cls, attr) in self.attributes

    def attr_locked(self, m: DataModel, cls: str, attr: str) -> bool:
        """True when no object conforming to `cls` may have `attr` changed."""
        return not any(self.attr_allowed(c, attr) for c in m.concrete_subclasses(cls))


def all_features(m: DataModel) -> Features:
    classes = frozenset(c.name for c in m.classes if not c.is_abstract)
    ends = frozenset((a.name, s) for a in m.associations for s in ("A", "B"))
    return Features(classes, ends, None)


def search_features(trees: Sequence[Node], m: DataModel) -> Features:
    """Features referenced by search- or both-labeled nodes of `trees`."""
    classes = set()
    ends = set()
    attrs = set()
    for tree in trees:
        for n in tree.walk():
            if n.label not in (Label.SEARCH, Label.BOTH):
                continue
            if isinstance(n, AllInstances):
                classes.update(m.concrete_subclasses(n.cls))
            elif isinstance(n, TypeOp):
                classes.update(m.concrete_subclasses(n.cls))
            elif isinstance(n, Nav) and isinstance(n.source.type, ClassType):
                nav = m.navigation(n.source.type.name, n.role)
                if nav is not None:
                    ends.add((nav.assoc.name, "A"))
                    ends.add((nav.assoc.name, "B"))
                    classes.update(m.concrete_subclasses(nav.far.cls))
                    classes.update(m.concrete_subclasses(nav.near.cls))
            elif isinstance(n, AttrCall) and isinstance(n.source.type, ClassType):
                if n.type is not None and is_primitive(n.type):
                    for c in m.concrete_subclasses(n.source.type.name):
                        attrs.add((c, n.attr))
    return Features(frozenset(classes), frozenset(ends), frozenset(attrs))


def hybrid_features(labeled: Node, ops: LabeledOps, m: DataModel) -> Features:
    return search_features([labeled, *ops.smt.values(), *ops.search.values()], m)


def natural_key(oid: str) -> Tuple[str, int, str]:
    mt = re.match(r"^(.*?)(\d+)$", oid)
    if mt:
        return (mt.group(1), int(mt.group(2)), oid)
    return (oid, -1, oid)


# ------------------------------------------------------------ variables
@dataclass(frozen=True)
class CountVar:
    cls: str


@dataclass(frozen=True)
class LinkVar:
    oid: str
    assoc: str
    far_side: str


@dataclass(frozen=True)
class AttrVar:
    oid: str
    attr: str
    type_name: str


SearchVar = Any  # CountVar | LinkVar | AttrVar


class AvmSearch:
    def __init__(self, m: DataModel, objective: Objective, features: Features, cfg: SearchConfig) -> None:
        self.m = m
        self.objective = objective
        self.features = features
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.evaluations = 0
        self.moves_accepted = 0
        # Attribute slots written by search; used to check the restriction.
        self.touched: List[Tuple[str, str]] = []

    def score(self, inst: InstanceModel) -> float:
        self.evaluations += 1
        return self.objective(inst)

    # ------------------------------------------------------------ values
    def random_value(self, type_name: str) -> Any:
        r = self.rng
        if type_name == "Boolean":
            return r.random() < 0.5
        if type_name == "Integer":
            return r.randint(*INT_INIT)
        if type_name == "Real":
            return Fraction(r.randint(*INT_INIT))
        if type_name == "String":
            return "".join(r.choice(STRING_ALPHABET) for _ in range(r.randint(0, STRING_MAX_LEN)))
        e = self.m.enum(type_name)
        if e is None or not e.literals:
            return NULL
        return EnumLit(e.name, r.choice(e.literals))

    def nominal_domain(self, type_name: str) -> List[Any]:
        if type_name == "Boolean":
            return [False, True, NULL]
        if type_name == "String":
            pool = {""}
            while len(pool) < self.cfg.nominal_sample_size + 1:
                pool.add(self.random_value("String"))
            return sorted(pool) + [NULL]
        e = self.m.enum(type_name)
        return [EnumLit(e.name, lit) for lit in e.literals] + [NULL]

    # ------------------------------------------------------------ structure
    def _links_from(self, inst: InstanceModel, oid: str, nav: NavEnd) -> List[str]:
        return inst.far_ids(nav.assoc.name, nav.far_side, oid)

    def _reverse_count(self, inst: InstanceModel, nav: NavEnd, far_oid: str) -> int:
        near_side = "A" if nav.far_side == "B" else "B"
        return len(inst.far_ids(nav.assoc.name, near_side, far_oid))

    def _link(self, inst: InstanceModel, oid: str, nav: NavEnd, far_oid: str) -> None:
        if nav.far_side == "B":
            inst.add_link(nav.assoc.name, oid, far_oid)
        else:
            inst.add_link(nav.assoc.name, far_oid, oid)

    def _unlink(self, inst: InstanceModel, oid: str, nav: NavEnd, far_oid: str) -> None:
        if nav.far_side == "B":
            inst.remove_link(nav.assoc.name, oid, far_oid)
        else:
            inst.remove_link(nav.assoc.name, far_oid, oid)

    def _navs(self, cls: str) -> List[NavEnd]:
        return [n for n in self.m.navigations_from(cls) if (n.assoc.name, n.far_side) in self.features.ends]

    def _link_candidates(self, inst: InstanceModel, oid: str, nav: NavEnd) -> List[str]:
        linked = set(self._links_from(inst, oid, nav))
        out = []
        for c in inst.objects_of(nav.far.cls):
            if c in linked:
                continue
            if nav.near.upper is not None and self._reverse_count(inst, nav, c) >= nav.near.upper:
                continue
            out.append(c)
        return out

    def _creatable(self, inst: InstanceModel, cls: str) -> List[str]:
        return [
            c
            for c in self.m.concrete_subclasses(cls)
            if c in self.features.classes and len(inst.objects_exact(c)) < self.cfg.cap(c)
        ]

    def new_object(self, inst: InstanceModel, cls: str) -> str:
        attrs = {a.name: self.random_value(a.type) for a in self.m.all_attributes(cls) if not a.is_static}
        return inst.add_object(cls, attrs)

    def complete(self, inst: InstanceModel, oid: str, depth: int) -> None:
        """Greedily link `oid` up to the lower bound of each allowed end."""
        cls = inst.objects[oid].cls
        for nav in self._navs(cls):
            need = nav.far.lower - len(self._links_from(inst, oid, nav))
            while need > 0:
                cands = self._link_candidates(inst, oid, nav)
                if cands:
                    # Far objects still short of their own bound come first.
                    def key(c: str) -> Tuple[int, int, float]:
                        n = self._reverse_count(inst, nav, c)
                        return (0 if n < nav.near.lower else 1, n, self.rng.random())

                    far = min(cands, key=key)
                    self._link(inst, oid, nav, far)
                elif depth > 0 and self._creatable(inst, nav.far.cls):
                    far = self.new_object(inst, self.rng.choice(self._creatable(inst, nav.far.cls)))
                    self._link(inst, oid, nav, far)
                    self.complete(inst, far, depth - 1)
                else:
                    break
                need -= 1

    def random_instance(self) -> InstanceModel:
        inst = InstanceModel(self.m)
        created = []
        for cls in sorted(self.features.classes):
            for _ in range(self.rng.randint(0, min(self.cfg.cap(cls), 3))):
                created.append(self.new_object(inst, cls))
        for oid in created:
            self.complete(inst, oid, 0)
        return inst

    # ------------------------------------------------------------ vector
    def vector(self, inst: InstanceModel) -> List[SearchVar]:
        out: List[SearchVar] = [CountVar(c) for c in sorted(self.features.classes)]
        oids = sorted(inst.objects, key=natural_key)
        for oid in oids:
            for nav in self._navs(inst.objects[oid].cls):
                out.append(LinkVar(oid, nav.assoc.name, nav.far_side))
        for oid in oids:
            cls = inst.objects[oid].cls
            for a in self.m.all_attributes(cls):
                if not a.is_static and self.features.attr_allowed(cls, a.name):
                    out.append(AttrVar(oid, a.name, a.type))
        return out

    # ------------------------------------------------------------ IPS
    def _ips(
        self,
        inst: InstanceModel,
        score: float,
        value: Any,
        apply: Callable[[InstanceModel, Any], Optional[InstanceModel]],
        unit: Any,
    ) -> Tuple[InstanceModel, float, bool]:
        improved = False
        while score > 0:
            # Exploratory moves; on a tie the decrement wins.
            best: Optional[Tuple[float, int, InstanceModel]] = None
            for d in (-1, 1):
                trial = apply(inst, value + d * unit)
                if trial is None:
                    continue
                s = self.score(trial)
                if s < score and (best is None or s < best[0]):
                    best = (s, d, trial)
            if best is None:
                break
            score, d, inst = best
            value = value + d * unit
            improved = True
            self.moves_accepted += 1
            # Pattern moves: double the step while it keeps improving.
            amp = 2
            while score > 0:
                trial = apply(inst, value + d * amp * unit)
                if trial is None:
                    break
                s = self.score(trial)
                if s >= score:
                    break  # overshoot: explore again from here
                score, inst = s, trial
                value = value + d * amp * unit
                self.moves_accepted += 1
                amp *= 2
        return inst, score, improved

    def _sampled_best(
        self, inst: InstanceModel, score: float, moves: List[Callable[[InstanceModel], None]]
    ) -> Tuple[InstanceModel, float, bool]:
        k = self.cfg.nominal_sample_size
        if len(moves) > k:
            moves = self.rng.sample(moves, k)
        best: Optional[Tuple[float, InstanceModel]] = None
        for mv in moves:
            trial = inst.copy()
            mv(trial)
            s = self.score(trial)
            if s < score and (best is None or s < best[0]):
                best = (s, trial)
        if best is None:
            return inst, score, False
        self.moves_accepted += 1
        return best[1], best[0], True

    # ------------------------------------------------------------ per-variable
    def _count(self, inst: InstanceModel, score: float, v: CountVar):
        cls = v.cls
        cap = self.cfg.cap(cls)

        def apply(base: InstanceModel, target: int) -> Optional[InstanceModel]:
            cur = len(base.objects_exact(cls))
            target = max(0, min(target, cap))
            if target == cur:
                return None
            trial = base.copy()
            if target > cur:
                for _ in range(target - cur):
                    oid = self.new_object(trial, cls)
                    self.complete(trial, oid, self.cfg.completion_depth)
            else:
                victims = sorted(trial.objects_exact(cls), key=natural_key)[target:]
                for oid in victims:
                    trial.remove_object(oid)
            return trial

        return self._ips(inst, score, len(inst.objects_exact(cls)), apply, 1)

    def _links(self, inst: InstanceModel, score: float, v: LinkVar):
        if v.oid not in inst.objects:
            return inst, score, False
        nav = next(n for n in self._navs(inst.objects[v.oid].cls) if (n.assoc.name, n.far_side) == (v.assoc, v.far_side))
        linked = list(self._links_from(inst, v.oid, nav))
        cands = self._link_candidates(inst, v.oid, nav)
        full = nav.far.upper is not None and len(linked) >= nav.far.upper
        moves: List[Callable[[InstanceModel], None]] = []
        for x in linked:
            moves.append(lambda t, x=x: self._unlink(t, v.oid, nav, x))
            for y in cands:
                moves.append(lambda t, x=x, y=y: (self._unlink(t, v.oid, nav, x), self._link(t, v.oid, nav, y)))
        if not full:
            for y in cands:
                moves.append(lambda t, y=y: self._link(t, v.oid, nav, y))
            for c in self._creatable(inst, nav.far.cls):

                def create(t: InstanceModel, c: str = c) -> None:
                    far = self.new_object(t, c)
                    self._link(t, v.oid, nav, far)
                    self.complete(t, far, self.cfg.completion_depth - 1)

                moves.append(create)
        return self._sampled_best(inst, score, moves)

    def _attr(self, inst: InstanceModel, score: float, v: AttrVar):
        if v.oid not in inst.objects:
            return inst, score, False
        cur = inst.objects[v.oid].attrs[v.attr]

        def setter(val: Any) -> Callable[[InstanceModel], None]:
            return lambda t: t.set_attr(v.oid, v.attr, val)

        if v.type_name in ("Integer", "Real") and cur is not NULL:
            unit = 1 if v.type_name == "Integer" else Fraction(1)

            def apply(base: InstanceModel, val: Any) -> InstanceModel:
                trial = base.copy()
                trial.set_attr(v.oid, v.attr, val)
                return trial

            out = self._ips(inst, score, cur, apply, unit)
        elif v.type_name in ("Integer", "Real"):
            zero = 0 if v.type_name == "Integer" else Fraction(0)
            out = self._sampled_best(inst, score, [setter(zero)])
        else:
            dom = [x for x in self.nominal_domain(v.type_name) if not (x == cur and type(x) is type(cur))]
            out = self._sampled_best(inst, score, [setter(x) for x in dom])
        if out[2]:
            self.touched.append((v.oid, v.attr))
        return out

    # ------------------------------------------------------------ iteration
    def iteration(self, inst: InstanceModel, score: float) -> Tuple[InstanceModel, float, bool]:
        """One pass of the alternating variable method over the vector."""
        improved = False
        vec = self.vector(inst)
        k = 0
        while k < len(vec) and score > 0:
            v = vec[k]
            if isinstance(v, CountVar):
                inst, score, imp = self._count(inst, score, v)
            elif isinstance(v, LinkVar):
                inst, score, imp = self._links(inst, score, v)
            else:
                inst, score, imp = self._attr(inst, score, v)
            if imp:
                improved = True
                if not isinstance(v, AttrVar):
                    # Structure changed: rebuild, keep the position.
                    vec = self.vector(inst)
            k += 1
        return inst, score, improved

    def restart_if_stuck(self, inst: InstanceModel, improved: bool, valid: bool) -> Tuple[InstanceModel, bool]:
        if improved or valid or not self.cfg.restart_on_plateau:
            return inst, False
        return self.random_instance(), True
