"""Recursive-descent parser for constraints, invariants and operation bodies.

Precedence, loosest first: implies (right-assoc), xor, or, and, equality,
comparison, additive, multiplicative, unary (not, minus), postfix (. and ->).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from ..model import DataModel, Invariant, UserOpDecl
from ..values import INVALID, NULL, EnumLit, Type
from .checker import check, compute_recursion
from .lexer import OclError, Token, UnresolvedName, tokenize
from .nodes import (
    COLLECTION_OPS,
    ITERATORS,
    TYPE_OPS,
    AllInstances,
    AttrCall,
    CollOp,
    If,
    Iterate,
    Let,
    Literal,
    Node,
    OpCall,
    StaticAttr,
    TypeOp,
    UserCall,
    Var,
)


class ParseError(OclError):
    pass


class UnsupportedFeature(ParseError):
    pass


# Constructs recognised so they can be rejected with a clear diagnostic.
_UNSUPPORTED = {
    "closure",
    "sortedBy",
    "iterate",
    "any",
    "union",
    "intersection",
    "including",
    "excluding",
    "flatten",
    "last",
    "append",
    "prepend",
    "oclInState",
    "product",
    "symmetricDifference",
    "subOrderedSet",
    "subSequence",
    "insertAt",
    "reverse",
    "asBag",
    "asOrderedSet",
}


class _Parser:
    def __init__(self, text: str, toks: List[Token], m: DataModel, scope: List[str]) -> None:
        self.text = text
        self.toks = toks
        self.i = 0
        self.m = m
        self.scope = list(scope)
        self._fresh = 0

    # ------------------------------------------------------------ helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "keyword") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise ParseError(f"expected '{text}', found {self.tok}", self.tok.pos, self.text)
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            raise ParseError(f"expected {what}, found {self.tok}", self.tok.pos, self.text)
        return self.advance()

    def span(self, start: int) -> tuple:
        end = self.toks[self.i - 1].pos + len(self.toks[self.i - 1].text) if self.i > 0 else start
        return (start, end)

    # ------------------------------------------------------------ grammar
    def expr(self) -> Node:
        return self.implies()

    def implies(self) -> Node:
        start = self.tok.pos
        left = self.xor()
        if self.accept("implies"):
            right = self.implies()
            return OpCall("implies", [left, right], span=self.span(start))
        return left

    def _left_assoc(self, sub, ops) -> Node:
        start = self.tok.pos
        left = sub()
        while self.tok.kind in ("sym", "keyword") and self.tok.text in ops:
            op = self.advance().text
            right = sub()
            left = OpCall(op, [left, right], span=self.span(start))
        return left

    def xor(self) -> Node:
        return self._left_assoc(self.or_, ("xor",))

    def or_(self) -> Node:
        return self._left_assoc(self.and_, ("or",))

    def and_(self) -> Node:
        return self._left_assoc(self.equality, ("and",))

    def equality(self) -> Node:
        return self._left_assoc(self.comparison, ("=", "<>"))

    def comparison(self) -> Node:
        return self._left_assoc(self.additive, ("<", ">", "<=", ">="))

    def additive(self) -> Node:
        return self._left_assoc(self.multiplicative, ("+", "-"))

    def multiplicative(self) -> Node:
        return self._left_assoc(self.unary, ("*", "/", "div", "mod"))

    def unary(self) -> Node:
        start = self.tok.pos
        if self.accept("not"):
            return OpCall("not", [self.unary()], span=self.span(start))
        if self.accept("-"):
            operand = self.unary()
            if isinstance(operand, Literal) and _is_number(operand.value) and not _negative(operand.value):
                return Literal(-operand.value, span=self.span(start))
            return OpCall("-", [operand], span=self.span(start))
        return self.postfix()

    def postfix(self) -> Node:
        start = self.tok.pos
        node = self.primary()
        while True:
            if self.accept("."):
                name = self.ident("property or operation name")
                if self.at("("):
                    node = self.dot_call(node, name, start)
                else:
                    node = AttrCall(node, name.text, span=self.span(start))
            elif self.accept("->"):
                name = self.ident("collection operation name")
                node = self.arrow_call(node, name, start)
            else:
                return node

    def args(self) -> List[Node]:
        self.expect("(")
        out: List[Node] = []
        if not self.at(")"):
            out.append(self.expr())
            while self.accept(","):
                out.append(self.expr())
        self.expect(")")
        return out

    def dot_call(self, source: Node, name: Token, start: int) -> Node:
        n = name.text
        if n in _UNSUPPORTED:
            raise UnsupportedFeature(f"unsupported operation '{n}'", name.pos, self.text)
        if n in TYPE_OPS:
            self.expect("(")
            cls = self.ident("class name")
            if self.m.cls(cls.text) is None:
                raise UnresolvedName(f"unknown class '{cls.text}'", cls.pos, self.text)
            self.expect(")")
            return TypeOp(n, source, cls.text, span=self.span(start))
        if n == "allInstances":
            raise ParseError("allInstances() must be applied to a class name", name.pos, self.text)
        args = self.args()
        # User operations take precedence; resolution happens in the checker.
        return UserCall(n, source, args, span=self.span(start))

    def arrow_call(self, source: Node, name: Token, start: int) -> Node:
        n = name.text
        if n in ITERATORS:
            self.expect("(")
            names: List[Tuple[str, Optional[str]]] = []
            # Lookahead for an explicit iterator declaration `v [: T] (, w)* |`.
            j = self.i
            decl = False
            while self.toks[j].kind == "ident":
                j += 1
                if self.toks[j].kind == "sym" and self.toks[j].text == ":":
                    j += 1
                    depth = 0
                    while not (self.toks[j].kind == "sym" and self.toks[j].text in ("|", ",") and depth == 0):
                        if self.toks[j].kind == "eof":
                            break
                        if self.toks[j].text == "(":
                            depth += 1
                        if self.toks[j].text == ")":
                            if depth == 0:
                                break
                            depth -= 1
                        j += 1
                if self.toks[j].kind == "sym" and self.toks[j].text == "|":
                    decl = True
                    break
                if self.toks[j].kind == "sym" and self.toks[j].text == ",":
                    j += 1
                    continue
                break
            if not decl:
                raise ParseError(f"iterator '{n}' needs an explicit variable, e.g. x | ...", self.tok.pos, self.text)
            while True:
                v = self.ident("iterator variable").text
                tname = None
                if self.accept(":"):
                    tname = self.type_name()
                names.append((v, tname))
                if self.accept("|"):
                    break
                self.expect(",")
            if len(names) > 1 and n not in ("forAll", "exists"):
                raise ParseError(f"'{n}' takes a single iterator variable", name.pos, self.text)
            self.scope.extend(v for v, _ in names)
            body = self.expr()
            del self.scope[len(self.scope) - len(names) :]
            self.expect(")")
            for v, _ in reversed(names[1:]):
                body = Iterate(n, source, v, body, span=self.span(start))
            return Iterate(n, source, names[0][0], body, span=self.span(start))
        if n in COLLECTION_OPS:
            return CollOp(n, source, self.args(), span=self.span(start))
        if n in _UNSUPPORTED or n in ("oclIsUndefined",):
            raise UnsupportedFeature(f"unsupported collection operation '{n}'", name.pos, self.text)
        raise UnsupportedFeature(f"unknown collection operation '{n}'", name.pos, self.text)

    def type_name(self) -> str:
        t = self.ident("type name").text
        if self.at("("):
            self.advance()
            inner = self.type_name()
            self.expect(")")
            return f"{t}({inner})"
        return t

    def primary(self) -> Node:
        t = self.tok
        start = t.pos
        if t.kind == "int":
            self.advance()
            return Literal(int(t.text), span=self.span(start))
        if t.kind == "real":
            self.advance()
            return Literal(Fraction(t.text), span=self.span(start))
        if t.kind == "string":
            self.advance()
            return Literal(t.value, span=self.span(start))
        if t.kind == "keyword":
            kw = t.text
            if kw in ("true", "false"):
                self.advance()
                return Literal(kw == "true", span=self.span(start))
            if kw == "null":
                self.advance()
                return Literal(NULL, span=self.span(start))
            if kw == "invalid":
                self.advance()
                return Literal(INVALID, span=self.span(start))
            if kw == "self":
                self.advance()
                if "self" not in self.scope:
                    raise UnresolvedName("'self' used outside a context", start, self.text)
                return Var("self", span=self.span(start))
            if kw == "if":
                self.advance()
                c = self.expr()
                self.expect("then")
                a = self.expr()
                self.expect("else")
                b = self.expr()
                self.expect("endif")
                return If(c, a, b, span=self.span(start))
            if kw == "let":
                self.advance()
                return self.let_rest(start)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            return self.name_primary()
        if t.kind == "sym" and t.text == "{" or (t.kind == "ident" and t.text in ("Set", "Bag", "Sequence")):
            raise UnsupportedFeature("collection literals are not supported", start, self.text)
        raise ParseError(f"expected expression, found {t}", t.pos, self.text)

    def let_rest(self, start: int) -> Node:
        binds = []
        while True:
            v = self.ident("let variable").text
            tname = None
            if self.accept(":"):
                tname = self.type_name()
            self.expect("=")
            init = self.expr()
            binds.append((v, tname, init))
            self.scope.append(v)
            if not self.accept(","):
                break
        self.expect("in")
        body = self.expr()
        del self.scope[len(self.scope) - len(binds) :]
        for v, tname, init in reversed(binds):
            body = Let(v, init, body, tname, span=self.span(start))
        return body

    def name_primary(self) -> Node:
        t = self.advance()
        start = t.pos
        name = t.text
        if name in self.scope:
            return Var(name, span=self.span(start))
        if self.accept("::"):
            second = self.ident("literal or attribute name")
            e = self.m.enum(name)
            if e is not None:
                if second.text not in e.literals:
                    raise UnresolvedName(f"enumeration {name} has no literal '{second.text}'", second.pos, self.text)
                return Literal(EnumLit(name, second.text), span=self.span(start))
            c = self.m.cls(name)
            if c is not None:
                a = self.m.attribute(name, second.text)
                if a is None or not a.is_static:
                    raise UnresolvedName(f"class {name} has no static attribute '{second.text}'", second.pos, self.text)
                return StaticAttr(name, second.text, span=self.span(start))
            raise UnresolvedName(f"unknown enumeration or class '{name}'", start, self.text)
        if self.m.cls(name) is not None and self.at("."):
            nxt = self.peek()
            if nxt.kind == "ident" and nxt.text == "allInstances":
                self.advance()
                self.advance()
                self.expect("(")
                self.expect(")")
                return AllInstances(name, span=self.span(start))
        if "self" in self.scope:
            # Implicit self: attribute, navigation or operation of the context.
            src = Var("self", span=(start, start))
            if self.at("("):
                return UserCall(name, src, self.args(), span=self.span(start))
            return AttrCall(src, name, span=self.span(start))
        raise UnresolvedName(f"unresolved name '{name}'", start, self.text)


def _is_number(v) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


def _negative(v) -> bool:
    return v < 0


def _parse_expr_tokens(text: str, toks: List[Token], m: DataModel, scope: List[str]) -> Node:
    p = _Parser(text, toks, m, scope)
    node = p.expr()
    if p.tok.kind != "eof":
        raise ParseError(f"unexpected {p.tok} after expression", p.tok.pos, text)
    return node


def parse_untyped(text: str, m: DataModel, scope: List[str]) -> Node:
    return _parse_expr_tokens(text, tokenize(text), m, scope)


def parse_constraint(
    text: str,
    m: DataModel,
    context: Optional[str] = None,
    variables: Optional[Dict[str, Type]] = None,
) -> Node:
    """Parse and type-check one expression.

    `context` binds `self`; `variables` binds further free names to types.
    """
    env: Dict[str, Type] = dict(variables or {})
    if context is not None:
        from ..values import ClassType

        if m.cls(context) is None:
            raise UnresolvedName(f"unknown context class '{context}'")
        env["self"] = ClassType(context)
    node = parse_untyped(text, m, list(env))
    return check(node, env, m, text)


def load_operations(m: DataModel) -> None:
    """Parse and type-check every operation body and derive recursion flags."""
    from ..values import ClassType

    for op in m.operations:
        env: Dict[str, Type] = {"self": ClassType(op.context)}
        for pname, ptype in op.params:
            env[pname] = m.resolve_type(ptype)
        node = parse_untyped(op.body_text, m, list(env))
        op.body = check(node, env, m, op.body_text, expected=m.resolve_type(op.return_type))
    compute_recursion(m)


def parse_invariant_file(text: str, m: DataModel) -> List[Invariant]:
    """Parse `context C inv name: expr` and `context C::op(..): T body: expr` blocks.

    Operation definitions are added to `m`; invariants are returned in file order.
    """
    toks = tokenize(text)
    # Header positions: every `context` keyword starts a block.
    starts = [k for k, t in enumerate(toks) if t.kind == "keyword" and t.text == "context"]
    if toks[0].kind != "eof" and (not starts or starts[0] != 0):
        raise ParseError(f"expected 'context', found {toks[0]}", toks[0].pos, text)
    inv_blocks: List[Tuple[str, str, List[Token], int]] = []
    op_blocks: List[UserOpDecl] = []
    for b, k in enumerate(starts):
        end = starts[b + 1] if b + 1 < len(starts) else len(toks) - 1
        block = toks[k:end]
        p = _Parser(text, block + [Token("eof", "", toks[end].pos)], m, [])
        p.expect("context")
        cls = p.ident("context class")
        if m.cls(cls.text) is None:
            raise UnresolvedName(f"unknown context class '{cls.text}'", cls.pos, text)
        if p.accept("::"):
            opname = p.ident("operation name").text
            p.expect("(")
            params: List[Tuple[str, str]] = []
            if not p.at(")"):
                while True:
                    pn = p.ident("parameter name").text
                    p.expect(":")
                    params.append((pn, p.type_name()))
                    if not p.accept(","):
                        break
            p.expect(")")
            p.expect(":")
            rtype = p.type_name()
            kw = p.ident("'body'")
            if kw.text != "body":
                raise ParseError(f"expected 'body', found {kw}", kw.pos, text)
            p.expect(":")
            body_toks = p.toks[p.i :]
            body_text = text[body_toks[0].pos : toks[end].pos].strip() if body_toks[0].kind != "eof" else ""
            if not body_text:
                raise ParseError("empty operation body", kw.pos, text)
            decl = UserOpDecl(opname, cls.text, params, rtype, body_text)
            op_blocks.append(decl)
            continue
        # One or more invariants for this context.
        while True:
            p.expect("inv")
            name = None
            if p.tok.kind == "ident":
                name = p.advance().text
            colon = p.expect(":")
            j = p.i
            while not (p.toks[j].kind == "eof" or (p.toks[j].kind == "keyword" and p.toks[j].text == "inv")):
                j += 1
            body = p.toks[p.i : j] + [Token("eof", "", p.toks[j].pos)]
            if len(body) == 1:
                raise ParseError("empty invariant body", colon.pos, text)
            inv_blocks.append((cls.text, name or f"inv{len(inv_blocks) + 1}", body, colon.pos))
            p.i = j
            if p.tok.kind == "eof":
                break
    for decl in op_blocks:
        if any(o.context == decl.context and o.name == decl.name for o in m.operations):
            raise ParseError(f"duplicate operation {decl.context}::{decl.name}")
        m.operations.append(decl)
    m._reindex()
    load_operations(m)
    seen = set()
    out: List[Invariant] = []
    from ..values import ClassType

    for cls, name, body, pos in inv_blocks:
        if name in seen:
            raise ParseError(f"duplicate invariant name '{name}'", pos, text)
        seen.add(name)
        node = _parse_expr_tokens(text, body, m, ["self"])
        typed = check(node, {"self": ClassType(cls)}, m, text)
        src = text[body[0].pos : body[-2].pos + len(body[-2].text)]
        out.append(Invariant(cls, name, typed, src))
    return out
