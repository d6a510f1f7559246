"""Run an external SMT-LIB solver on a script and read its model back."""

from __future__ import annotations

import os
import re
import shutil
import subprocess
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Union

from ..model import InstanceModel
from ..values import EnumLit
from .translate import SmtJob

DEFAULT_SOLVER = "z3"
DEFAULT_TIMEOUT = 30.0

SExp = Union[str, "Quoted", list]


class SolverNotFound(Exception):
    """The configured solver executable cannot be started."""


class SolverProtocolError(Exception):
    """The solver answered with something that is not a usable result."""


class Quoted(str):
    """A string literal from solver output, already unescaped."""


@dataclass
class SolverResult:
    status: str  # sat | unsat | unknown | timeout | error
    values: Dict[str, Any] = field(default_factory=dict)
    detail: str = ""
    raw: str = ""


def resolve_solver(path: Optional[str]) -> str:
    exe = path or DEFAULT_SOLVER
    found = shutil.which(exe) if os.sep not in exe else (exe if os.access(exe, os.X_OK) else None)
    if not found:
        raise SolverNotFound(f"SMT solver '{exe}' not found or not executable")
    return found


# ------------------------------------------------------------ s-expressions
_TOKEN = re.compile(r'\s*(?:(\()|(\))|("(?:[^"]|"")*")|([^\s()"]+))')
_UNICODE = re.compile(r"\\u\{([0-9a-fA-F]{1,5})\}|\\u([0-9a-fA-F]{4})")


def _unescape(body: str) -> str:
    body = body.replace('""', '"')
    return _UNICODE.sub(lambda mt: chr(int(mt.group(1) or mt.group(2), 16)), body)


def parse_sexps(text: str) -> List[SExp]:
    out: List[SExp] = []
    stack: List[list] = []
    pos = 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            if text[pos:].strip():
                raise SolverProtocolError(f"unreadable solver output near {text[pos:pos + 30]!r}")
            break
        pos = mt.end()
        if mt.group(1):
            stack.append([])
            continue
        if mt.group(2):
            if not stack:
                raise SolverProtocolError("unbalanced ')' in solver output")
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
            continue
        atom: SExp = Quoted(_unescape(mt.group(3)[1:-1])) if mt.group(3) else mt.group(4)
        (stack[-1] if stack else out).append(atom)
    if stack:
        raise SolverProtocolError("unbalanced '(' in solver output")
    return out


# ------------------------------------------------------------ values
def _number(e: SExp) -> Fraction:
    if isinstance(e, str) and not isinstance(e, Quoted):
        try:
            return Fraction(e)
        except ValueError:
            pass
    if isinstance(e, list) and len(e) == 2 and e[0] == "-":
        return -_number(e[1])
    if isinstance(e, list) and len(e) == 3 and e[0] == "/":
        den = _number(e[2])
        if den == 0:
            raise SolverProtocolError("division by zero in solver value")
        return _number(e[1]) / den
    raise SolverProtocolError(f"not a numeric value: {e!r}")


def decode_value(e: SExp, sort: str, job: SmtJob) -> Any:
    if sort == "Bool":
        if e in ("true", "false") and not isinstance(e, Quoted):
            return e == "true"
    elif sort == "Int":
        v = _number(e)
        if v.denominator == 1:
            return int(v)
    elif sort == "Real":
        return _number(e)
    elif sort == "String":
        if isinstance(e, Quoted):
            return str(e)
    elif isinstance(e, str) and e in job.enum_symbols:
        enum, lit = job.enum_symbols[e]
        if enum == sort:
            return EnumLit(enum, lit)
    raise SolverProtocolError(f"cannot read {e!r} as {sort}")


def parse_response(out: str, job: SmtJob) -> SolverResult:
    items = parse_sexps(out)
    if items and items[0] in ("unsat", "unknown"):
        # get-value after a non-sat answer is an expected solver error.
        return SolverResult(str(items[0]), raw=out)
    for it in items:
        if isinstance(it, list) and it and it[0] == "error":
            return SolverResult("error", detail=" ".join(str(x) for x in it[1:]), raw=out)
    if not items or items[0] not in ("sat", "unsat", "unknown"):
        return SolverResult("error", detail="missing check-sat answer", raw=out)
    status = str(items[0])
    if status != "sat":
        return SolverResult(status, raw=out)
    values: Dict[str, Any] = {}
    if job.bindings:
        if len(items) < 2 or not isinstance(items[1], list):
            return SolverResult("error", detail="missing get-value answer", raw=out)
        try:
            for pair in items[1]:
                if not (isinstance(pair, list) and len(pair) == 2 and isinstance(pair[0], str)):
                    raise SolverProtocolError(f"malformed model entry {pair!r}")
                b = job.binding(pair[0])
                values[b.var] = decode_value(pair[1], b.sort, job)
        except (SolverProtocolError, KeyError) as e:
            return SolverResult("error", detail=str(e), raw=out)
        missing = [b.var for b in job.bindings if b.var not in values]
        if missing:
            return SolverResult("error", detail=f"no value for {', '.join(missing)}", raw=out)
    return SolverResult("sat", values, raw=out)


def run_solver(job: SmtJob, solver: Optional[str] = None, timeout: float = DEFAULT_TIMEOUT) -> SolverResult:
    exe = resolve_solver(solver)
    try:
        proc = subprocess.run([exe, "-in"], input=job.script, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return SolverResult("timeout", detail=f"no answer within {timeout:g} s")
    except OSError as e:
        raise SolverNotFound(f"cannot start solver '{exe}': {e}") from None
    result = parse_response(proc.stdout, job)
    if result.status == "error" and proc.stderr.strip():
        result.detail = f"{result.detail}; {proc.stderr.strip()}"
    return result


def lift(job: SmtJob, values: Dict[str, Any], inst: InstanceModel) -> int:
    """Write solver values into their slots; returns the number of changed slots."""
    changed = 0
    for b in job.bindings:
        v = values[b.var]
        if inst.objects[b.obj].attrs[b.attr] != v or type(inst.objects[b.obj].attrs[b.attr]) is not type(v):
            inst.set_attr(b.obj, b.attr, v)
            changed += 1
    return changed
