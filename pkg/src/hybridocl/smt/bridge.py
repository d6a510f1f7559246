"""One SMT step: build the quantifier-free job, solve it, lift the model back."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from ..labels import LabeledOps
from ..lang.nodes import Literal, Node
from ..model import DataModel, InstanceModel
from .expand import Grounder, SmtAbort
from .operations import OperationCycle, process_operations
from .solver import DEFAULT_TIMEOUT, lift, run_solver
from .translate import SmtJob, Untranslatable, translate

OUTCOMES = ("updated", "unsat", "unknown", "timeout", "error", "aborted", "trivial")


@dataclass
class SmtSettings:
    solver: Optional[str] = None
    timeout: float = DEFAULT_TIMEOUT
    dump_dir: Optional[str] = None


@dataclass
class SmtOutcome:
    kind: str
    instance: Optional[InstanceModel] = None
    job: Optional[SmtJob] = None
    detail: str = ""
    timings: Dict[str, float] = field(default_factory=dict)


def build_job(labeled: Node, ops: LabeledOps, inst: InstanceModel, m: DataModel) -> Optional[SmtJob]:
    """The SMT job for `inst`, or None when grounding folds it to a constant.

    Raises SmtAbort when a search-owned part cannot be evaluated.
    """
    g = Grounder(inst, m)
    root = g.process(labeled)
    if isinstance(root, Literal) and isinstance(root.value, bool):
        return None
    root, functions = process_operations(root, ops, inst, m, g)
    return translate(root, functions, inst, m, pinned=g.ev.reads)


class SmtBridge:
    def __init__(self, m: DataModel, labeled: Node, ops: LabeledOps, settings: Optional[SmtSettings] = None) -> None:
        self.m = m
        self.labeled = labeled
        self.ops = ops
        self.settings = settings or SmtSettings()
        self.calls = 0

    def _dump(self, job: SmtJob) -> None:
        if self.settings.dump_dir:
            d = Path(self.settings.dump_dir)
            d.mkdir(parents=True, exist_ok=True)
            (d / f"job_{self.calls:04d}.smt2").write_text(job.script)

    def step(self, inst: InstanceModel) -> SmtOutcome:
        timings = {"smt_build": 0.0, "smt_solve": 0.0, "lift": 0.0}
        t0 = time.perf_counter()
        try:
            job = build_job(self.labeled, self.ops, inst, self.m)
        except SmtAbort as e:
            timings["smt_build"] = time.perf_counter() - t0
            return SmtOutcome("aborted", detail=str(e), timings=timings)
        except (Untranslatable, OperationCycle) as e:
            timings["smt_build"] = time.perf_counter() - t0
            return SmtOutcome("error", detail=str(e), timings=timings)
        timings["smt_build"] = time.perf_counter() - t0
        if job is None:
            return SmtOutcome("trivial", timings=timings)
        self.calls += 1
        self._dump(job)
        t1 = time.perf_counter()
        res = run_solver(job, self.settings.solver, self.settings.timeout)
        timings["smt_solve"] = time.perf_counter() - t1
        if res.status != "sat":
            return SmtOutcome(res.status, job=job, detail=res.detail, timings=timings)
        t2 = time.perf_counter()
        out = inst.copy()
        lift(job, res.values, out)
        timings["lift"] = time.perf_counter() - t2
        return SmtOutcome("updated", out, job, timings=timings)
