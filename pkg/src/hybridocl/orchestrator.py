"""The hybrid solving loop and its pure-search baseline.

Labels are computed once. Each iteration then runs one search pass, checks
validity, asks the futile check whether the solver can help and, if so,
runs one SMT step and checks validity again. The loop stops on a valid
instance, on the iteration budget or on the wall-clock budget.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from .evaluator import Evaluator
from .fitness import Fitness
from .labels import LabeledOps, label_ast, label_user_ops
from .lang.nodes import Node
from .model import DataModel, InstanceModel, Invariant, conforms_to
from .nnf import NnfResult, run_pipeline
from .search import AvmSearch, SearchConfig, all_features, hybrid_features
from .smt.bridge import SmtBridge, SmtSettings
from .smt.futile import futile_check, search_reduce
from .smt.solver import resolve_solver

SOLVED = "Solved"
BUDGET_EXHAUSTED = "BudgetExhausted"
ERROR = "Error"
TIMING_KEYS = ("search", "check", "smt_build", "smt_solve", "lift")


@dataclass
class SolveConfig:
    search: SearchConfig = field(default_factory=SearchConfig)
    smt: SmtSettings = field(default_factory=SmtSettings)
    timeout: Optional[float] = None  # wall-clock seconds
    initial: Optional[InstanceModel] = None


@dataclass
class Problem:
    m: DataModel
    invariants: List[Invariant]
    ne: Node
    nnf: NnfResult
    labeled: Node
    ops: LabeledOps

    @property
    def constraint(self) -> Node:
        return self.nnf.constraint


def prepare(m: DataModel, invs: Sequence[Invariant], ne: Node) -> Problem:
    nnf = run_pipeline(invs, m, ne)
    labeled = label_ast(nnf.constraint, m)
    ops = label_user_ops(nnf.ops, labeled, m)
    return Problem(m, list(invs), ne, nnf, labeled, ops)


@dataclass
class TracePoint:
    iteration: int
    raw: float
    objects: int


@dataclass
class SolveReport:
    status: str
    mode: str
    iterations: int = 0
    timings: Dict[str, float] = field(default_factory=lambda: {k: 0.0 for k in TIMING_KEYS})
    smt_invocations: int = 0
    smt_sat_count: int = 0
    restarts: int = 0
    final_instance: Optional[InstanceModel] = None
    final_distance: float = 0.0
    detail: str = ""
    trace: List[TracePoint] = field(default_factory=list)
    wall_time: float = 0.0

    def to_dict(self, include_timings: bool = False) -> Dict[str, Any]:
        d: Dict[str, Any] = {
            "status": self.status,
            "mode": self.mode,
            "iterations": self.iterations,
            "smt_invocations": self.smt_invocations,
            "smt_sat_count": self.smt_sat_count,
            "restarts": self.restarts,
            "final_distance": self.final_distance,
            "detail": self.detail,
            "instance": self.final_instance.to_dict() if self.final_instance is not None else None,
        }
        if include_timings:
            d["timings"] = {k: round(v, 6) for k, v in self.timings.items()}
            d["wall_time"] = round(self.wall_time, 6)
        return d

    def to_json(self, include_timings: bool = False) -> str:
        return json.dumps(self.to_dict(include_timings), indent=2, sort_keys=True) + "\n"


def _objective(ast: Node):
    return lambda inst: Fitness(inst).raw(ast, {})


def is_valid(p: Problem, inst: InstanceModel) -> bool:
    """Fresh evaluator pass over the NNF constraint plus structural checks."""
    return Evaluator(inst).eval(p.constraint, {}) is True and not conforms_to(inst, p.m)


def _run(p: Problem, cfg: SolveConfig, hybrid: bool) -> SolveReport:
    start = time.perf_counter()
    rep = SolveReport(BUDGET_EXHAUSTED, "hybrid" if hybrid else "baseline")
    if hybrid:
        resolve_solver(cfg.smt.solver)
        features = hybrid_features(p.labeled, p.ops, p.m)
        objective = _objective(search_reduce(p.labeled, p.m, lambda c, a: features.attr_locked(p.m, c, a)))
        bridge: Optional[SmtBridge] = SmtBridge(p.m, p.labeled, p.ops, cfg.smt)
    else:
        features = all_features(p.m)
        objective = _objective(p.constraint)
        bridge = None
    full = _objective(p.constraint)
    search = AvmSearch(p.m, objective, features, cfg.search)
    inst = cfg.initial.copy() if cfg.initial is not None else InstanceModel(p.m)
    t = rep.timings

    def finish(status: str, detail: str = "") -> SolveReport:
        rep.status = status
        rep.detail = detail
        rep.final_instance = inst
        rep.final_distance = full(inst)
        rep.wall_time = time.perf_counter() - start
        return rep

    t0 = time.perf_counter()
    valid = is_valid(p, inst)
    t["check"] += time.perf_counter() - t0
    if valid:
        return finish(SOLVED)
    score = search.score(inst)
    for it in range(1, cfg.search.max_iterations + 1):
        if cfg.timeout is not None and time.perf_counter() - start > cfg.timeout:
            return finish(BUDGET_EXHAUSTED, f"wall-clock budget of {cfg.timeout:g} s exhausted")
        rep.iterations = it
        t0 = time.perf_counter()
        inst, score, improved = search.iteration(inst, score)
        t["search"] += time.perf_counter() - t0
        t0 = time.perf_counter()
        valid = is_valid(p, inst)
        t["check"] += time.perf_counter() - t0
        if valid:
            rep.trace.append(TracePoint(it, 0.0, inst.size()))
            return finish(SOLVED)
        if bridge is not None:
            t0 = time.perf_counter()
            go = futile_check(p.labeled, inst)
            t["check"] += time.perf_counter() - t0
            if go:
                before = full(inst)
                out = bridge.step(inst)
                for k, v in out.timings.items():
                    t[k] += v
                if out.kind not in ("aborted", "trivial") and out.job is not None:
                    rep.smt_invocations += 1
                if out.kind == "error":
                    return finish(ERROR, f"SMT step failed: {out.detail}")
                if out.kind == "updated":
                    rep.smt_sat_count += 1
                    inst = out.instance
                    t0 = time.perf_counter()
                    valid = is_valid(p, inst)
                    t["check"] += time.perf_counter() - t0
                    if valid:
                        rep.trace.append(TracePoint(it, 0.0, inst.size()))
                        return finish(SOLVED)
                    if full(inst) < before:
                        improved = True
                score = search.score(inst)
        rep.trace.append(TracePoint(it, full(inst), inst.size()))
        inst, restarted = search.restart_if_stuck(inst, improved, valid)
        if restarted:
            rep.restarts += 1
            score = search.score(inst)
    return finish(BUDGET_EXHAUSTED, f"no valid instance within {cfg.search.max_iterations} iterations")


def solve(p: Problem, cfg: Optional[SolveConfig] = None) -> SolveReport:
    return _run(p, cfg or SolveConfig(), hybrid=True)


def solve_baseline(p: Problem, cfg: Optional[SolveConfig] = None) -> SolveReport:
    return _run(p, cfg or SolveConfig(), hybrid=False)
