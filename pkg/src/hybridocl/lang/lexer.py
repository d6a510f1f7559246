"""Tokenizer for OCL constraint text."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List


class OclError(Exception):
    """Base class of front-end diagnostics; carries a character offset."""

    def __init__(self, message: str, pos: int = -1, text: str = "") -> None:
        self.pos = pos
        self.message = message
        if pos >= 0 and text:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            message = f"{line}:{col}: {message}"
        super().__init__(message)


class LexError(OclError):
    pass


class UnresolvedName(OclError):
    pass


KEYWORDS = {
    "and",
    "or",
    "xor",
    "not",
    "implies",
    "if",
    "then",
    "else",
    "endif",
    "let",
    "in",
    "true",
    "false",
    "null",
    "invalid",
    "self",
    "div",
    "mod",
    "context",
    "inv",
}

SYMBOLS = ["->", "::", "<>", "<=", ">=", "(", ")", "{", "}", ".", ",", ":", "|", "=", "<", ">", "+", "-", "*", "/"]


@dataclass
class Token:
    kind: str  # ident | keyword | int | real | string | sym | eof
    text: str
    pos: int
    value: object = None

    def __str__(self) -> str:
        return "end of input" if self.kind == "eof" else repr(self.text)


_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "'": "'", '"': '"', "\\": "\\"}


def tokenize(text: str) -> List[Token]:
    toks: List[Token] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if text.startswith("--", i):
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if c.isalpha() or c == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            toks.append(Token("keyword" if word in KEYWORDS else "ident", word, i))
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            is_real = False
            # `1..5` is not a real; require a digit after the point.
            if j + 1 < n and text[j] == "." and text[j + 1].isdigit():
                is_real = True
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE" and (
                (j + 1 < n and text[j + 1].isdigit())
                or (j + 2 < n and text[j + 1] in "+-" and text[j + 2].isdigit())
            ):
                is_real = True
                j += 2
                while j < n and text[j].isdigit():
                    j += 1
            lit = text[i:j]
            toks.append(Token("real" if is_real else "int", lit, i))
            i = j
            continue
        if c == "'":
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise LexError("unterminated string literal", i, text)
                ch = text[j]
                if ch == "\\":
                    if j + 1 >= n or text[j + 1] not in _ESCAPES:
                        raise LexError("bad escape in string literal", j, text)
                    buf.append(_ESCAPES[text[j + 1]])
                    j += 2
                    continue
                if ch == "'":
                    break
                buf.append(ch)
                j += 1
            toks.append(Token("string", text[i : j + 1], i, "".join(buf)))
            i = j + 1
            continue
        for s in SYMBOLS:
            if text.startswith(s, i):
                toks.append(Token("sym", s, i))
                i += len(s)
                break
        else:
            raise LexError(f"unexpected character {c!r}", i, text)
    toks.append(Token("eof", "", n))
    return toks
