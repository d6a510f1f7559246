"""Reading models, constraint files and non-emptiness requests."""

from __future__ import annotations

import re
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .lang.nodes import Node
from .lang.parser import parse_constraint, parse_invariant_file
from .model import DataModel, Invariant, ModelError, validate_model

DATA_DIR = Path(__file__).resolve().parent / "data"
FIXTURES = ("tax", "budget", "simple")

_ROOT = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?::\s*(\d+))?\s*$")


def fixture_paths(name: str) -> Tuple[Path, Path]:
    if name not in FIXTURES:
        raise ValueError(f"unknown fixture '{name}'")
    return DATA_DIR / f"{name}.json", DATA_DIR / f"{name}.ocl"


def load_model(path: str) -> DataModel:
    m = DataModel.from_json(Path(path).read_text(encoding="utf-8"))
    diags = validate_model(m)
    if diags:
        raise ModelError("invalid data model: " + "; ".join(diags))
    return m


def parse_root(text: str, default_count: int = 1) -> Tuple[str, int]:
    """`CLASS` or `CLASS:N`."""
    mt = _ROOT.match(text)
    if mt is None:
        raise ValueError(f"malformed root request '{text}', expected CLASS:N")
    return mt.group(1), int(mt.group(2)) if mt.group(2) else default_count


def roots_to_text(roots: Sequence[Tuple[str, int]]) -> str:
    return " and ".join(f"{c}.allInstances()->size() >= {n}" for c, n in roots)


def load_problem_inputs(
    model_path: str, constraints_path: Optional[str], ne_text: str
) -> Tuple[DataModel, List[Invariant], Node]:
    m = load_model(model_path)
    invs: List[Invariant] = []
    if constraints_path:
        invs = parse_invariant_file(Path(constraints_path).read_text(encoding="utf-8"), m)
    ne = parse_constraint(ne_text, m)
    return m, invs, ne
