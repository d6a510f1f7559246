import shutil
from pathlib import Path

import pytest

from hybridocl.loader import fixture_paths, load_problem_inputs, roots_to_text
from hybridocl.orchestrator import prepare

GOLDEN = Path(__file__).parent / "golden"

requires_z3 = pytest.mark.skipif(shutil.which("z3") is None, reason="z3 not on PATH")


def load_fixture(name, roots=None):
    """(model, invariants, non-emptiness) of a bundled fixture."""
    mp, cp = fixture_paths(name)
    default = {"tax": "TaxPayer", "budget": "Household", "simple": "Library"}[name]
    return load_problem_inputs(str(mp), str(cp), roots_to_text(roots or [(default, 1)]))


def fixture_problem(name, roots=None):
    return prepare(*load_fixture(name, roots))


def golden(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")


def squash(text: str) -> str:
    """Whitespace-insensitive form for golden comparisons."""
    return " ".join(text.replace("(", " ( ").replace(")", " ) ").split())


@pytest.fixture
def tax():
    return load_fixture("tax")


@pytest.fixture
def tax_problem():
    return fixture_problem("tax")
