"""Prepare user operations reached from solver-owned call sites.

Reads of ``self.<attr>`` outside search-owned parts become extra parameters
(named P1, P2, ... after the declared ones) and every call site passes the
caller's attributes. An operation whose body still needs the caller object,
for grounding or folding, is cloned per caller as ``<op>_for_<object id>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Set, Tuple

from ..labels import Label, LabeledOps, candidate_ops, label_ast
from ..lang.nodes import AttrCall, Literal, Node, UserCall, Var, substitute_var, transform
from ..model import DataModel, InstanceModel, UserOpDecl
from ..values import ClassType, Ref, Type, is_primitive
from .expand import Grounder, SmtAbort

Key = Tuple[str, str]


class OperationCycle(Exception):
    """Operations reached by the solver call each other in a cycle."""


@dataclass
class SmtFunction:
    name: str
    params: List[Tuple[str, Type]]
    ret: Type
    body: Node
    calls: Set[str] = field(default_factory=set)


def _smt_site(n: Node) -> bool:
    return isinstance(n, UserCall) and n.label in (Label.SMT, Label.BOTH)


def _is_self(n: Node) -> bool:
    return isinstance(n, Var) and n.name == "self"


class OperationProcessor:
    def __init__(self, grounder: Grounder, ops: LabeledOps, m: DataModel, inst: InstanceModel) -> None:
        self.g = grounder
        self.ops = ops
        self.m = m
        self.inst = inst
        self.decls: Dict[Key, UserOpDecl] = {(o.context, o.name): o for o in m.operations}
        self.ext_attrs: Dict[Key, List[str]] = {}
        self.ext_params: Dict[Key, List[Tuple[str, Type]]] = {}
        self.ext_body: Dict[Key, Node] = {}
        self.needs_clone: Dict[Key, bool] = {}
        self.functions: Dict[str, SmtFunction] = {}
        self._building: Set[str] = set()

    # ------------------------------------------------------------ lookup
    def _labeled_body(self, key: Key) -> Node:
        body = self.ops.smt.get(key)
        if body is None:
            d = self.decls[key]
            body = label_ast(d.body, self.m, params=[p for p, _ in d.params])
            self.ops.smt[key] = body
        return body

    def _runtime_key(self, source: Node, name: str, ctx: Optional[str]) -> Key:
        if isinstance(source, Literal) and isinstance(source.value, Ref):
            obj = self.inst.objects.get(source.value.id)
            if obj is None:
                raise SmtAbort(f"call on unknown object {source.value.id}")
            d = self.m.operation(obj.cls, name)
        elif _is_self(source) and ctx is not None:
            d = self.m.operation(ctx, name)
        else:
            raise SmtAbort(f"call to {name} on an undefined or unresolved object")
        if d is None:
            raise SmtAbort(f"no operation {name} for the calling object")
        return (d.context, d.name)

    # ------------------------------------------------------------ externalize
    def _reachable(self, root: Node) -> List[Key]:
        seen: List[Key] = []
        work: List[Key] = []
        for x in root.walk():
            if _smt_site(x):
                k = self._runtime_key(x.source, x.op, None)
                if k not in seen:
                    seen.append(k)
                    work.append(k)
        while work:
            k = work.pop()
            for x in self._labeled_body(k).walk():
                if _smt_site(x):
                    for d in candidate_ops(self.m, x):
                        k2 = (d.context, d.name)
                        if k2 not in seen:
                            seen.append(k2)
                            work.append(k2)
        return seen

    def _callees(self, key: Key) -> List[Key]:
        out = []
        for x in self._labeled_body(key).walk():
            if _smt_site(x):
                out.extend((d.context, d.name) for d in candidate_ops(self.m, x))
        return out

    def _order(self, keys: List[Key]) -> List[Key]:
        order: List[Key] = []
        state: Dict[Key, int] = {}

        def visit(k: Key) -> None:
            s = state.get(k, 0)
            if s == 2:
                return
            if s == 1:
                raise OperationCycle(f"operation {k[0]}::{k[1]} depends on itself")
            state[k] = 1
            for c in self._callees(k):
                visit(c)
            state[k] = 2
            order.append(k)

        for k in keys:
            visit(k)
        return order

    def _externalize(self, key: Key) -> None:
        d = self.decls[key]
        body = self._labeled_body(key)
        taken = {p for p, _ in d.params}
        attrs: List[str] = []
        params: List[Tuple[str, Type]] = [(p, self.m.resolve_type(t)) for p, t in d.params]
        names: Dict[str, str] = {}

        def extend_self_calls(x: Node) -> Optional[Node]:
            if _smt_site(x) and _is_self(x.source):
                k2 = self._runtime_key(x.source, x.op, d.context)
                ext_types = self.ext_params[k2][len(self.decls[k2].params) :]
                me = Var("self", type=ClassType(d.context), label=Label.SEARCH)
                extra = [
                    AttrCall(me, a, type=t, label=Label.SMT) for a, (_, t) in zip(self.ext_attrs[k2], ext_types)
                ]
                args = [transform(a, extend_self_calls) for a in x.args]
                return replace(x, args=args + extra)
            return None

        def externalize(x: Node) -> Optional[Node]:
            if isinstance(x, AttrCall) and _is_self(x.source) and x.type is not None and is_primitive(x.type):
                if x.label in (Label.SMT, Label.BOTH):
                    if x.attr not in names:
                        k = len(names) + 1
                        while f"P{k}" in taken:
                            k += 1
                        pname = f"P{k}"
                        taken.add(pname)
                        names[x.attr] = pname
                        attrs.append(x.attr)
                        params.append((pname, x.type))
                    return Var(names[x.attr], type=x.type, label=Label.SMT)
            if x.label is Label.SEARCH:
                return x
            return None

        body = transform(body, extend_self_calls)
        body = transform(body, externalize)
        self.ext_attrs[key] = attrs
        self.ext_params[key] = params
        self.ext_body[key] = body
        clone_needed = any(x.label is Label.SEARCH and not _is_self_call_source(x, body) for x in body.walk())
        for x in body.walk():
            if _smt_site(x) and _is_self(x.source):
                if self.needs_clone[self._runtime_key(x.source, x.op, d.context)]:
                    clone_needed = True
        self.needs_clone[key] = clone_needed

    # ------------------------------------------------------------ call sites
    def _smt_base_name(self, key: Key) -> str:
        same = [k for k in self.decls if k[1] == key[1]]
        return key[1] if len(same) == 1 else f"{key[0]}_{key[1]}"

    def _rewrite_calls(self, tree: Node, ctx: Optional[str], calls: Set[str]) -> Node:
        def fn(x: Node) -> Optional[Node]:
            if not _smt_site(x):
                return None
            key = self._runtime_key(x.source, x.op, ctx)
            d = self.decls[key]
            args = [self._rewrite_calls(a, ctx, calls) for a in x.args]
            if len(args) == len(d.params):
                extra_types = self.ext_params[key][len(d.params) :]
                args += [
                    AttrCall(x.source, a, type=t, label=Label.SMT)
                    for a, (_, t) in zip(self.ext_attrs[key], extra_types)
                ]
            if self.needs_clone[key]:
                if not (isinstance(x.source, Literal) and isinstance(x.source.value, Ref)):
                    raise SmtAbort(f"cannot specialise {d.name} for an unknown caller")
                name = self._instantiate(key, x.source.value)
            else:
                name = self._instantiate(key, None)
            calls.add(name)
            return replace(x, op=name, args=args)

        return transform(tree, fn)

    def _instantiate(self, key: Key, caller: Optional[Ref]) -> str:
        base = self._smt_base_name(key)
        name = base if caller is None else f"{base}_for_{caller.id}"
        if name in self.functions or name in self._building:
            return name
        self._building.add(name)
        d = self.decls[key]
        params = self.ext_params[key]
        calls: Set[str] = set()
        if caller is None:
            body = self._rewrite_calls(self.ext_body[key], d.context, calls)
        else:
            cls = self.inst.objects[caller.id].cls
            body = substitute_var(self.ext_body[key], "self", Literal(caller, type=ClassType(cls)))
            saved = self.g.params
            self.g.params = {p for p, _ in params}
            try:
                body = self.g.process(body)
            finally:
                self.g.params = saved
            body = self._rewrite_calls(body, d.context, calls)
        self.functions[name] = SmtFunction(name, params, self.m.resolve_type(d.return_type), body, calls)
        self._building.discard(name)
        return name

    # ------------------------------------------------------------ driver
    def run(self, root: Node) -> Tuple[Node, List[SmtFunction]]:
        keys = self._order(self._reachable(root))
        for k in keys:
            self._externalize(k)
        calls: Set[str] = set()
        root = self._rewrite_calls(root, None, calls)
        return root, self._sorted()

    def _sorted(self) -> List[SmtFunction]:
        out: List[SmtFunction] = []
        state: Dict[str, int] = {}

        def visit(n: str) -> None:
            s = state.get(n, 0)
            if s == 2:
                return
            if s == 1:
                raise OperationCycle(f"function {n} depends on itself")
            state[n] = 1
            for c in sorted(self.functions[n].calls):
                visit(c)
            state[n] = 2
            out.append(self.functions[n])

        for n in sorted(self.functions):
            visit(n)
        return out


def _is_self_call_source(x: Node, body: Node) -> bool:
    # `self` as the receiver of a call stays symbolic: the call is translated
    # by name and arguments only.
    if not _is_self(x):
        return False
    for y in body.walk():
        if isinstance(y, UserCall) and y.source is x:
            return True
    return False


def process_operations(
    root: Node, ops: LabeledOps, inst: InstanceModel, m: DataModel, grounder: Optional[Grounder] = None
) -> Tuple[Node, List[SmtFunction]]:
    g = grounder or Grounder(inst, m)
    return OperationProcessor(g, ops, m, inst).run(root)
