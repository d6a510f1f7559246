"""Seeded multi-run driver, CSV output and a two-proportion comparison."""

from __future__ import annotations

import csv
import io
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .orchestrator import SOLVED, TIMING_KEYS, SolveConfig, prepare, solve, solve_baseline
from .search import SearchConfig
from .smt.bridge import SmtSettings

CSV_COLUMNS = ("mode", "size", "seed", "status", "seconds", "iterations", "objects", "restarts", "smt_invocations") + TIMING_KEYS


@dataclass(frozen=True)
class RunSpec:
    model_path: str
    constraints_path: str
    ne_text: str
    mode: str  # hybrid | baseline
    size: int
    seed: int
    max_iterations: int
    class_cap: int
    timeout: Optional[float]
    smt_solver: Optional[str]
    smt_timeout: float


@dataclass
class RunResult:
    mode: str
    size: int
    seed: int
    status: str
    seconds: float
    iterations: int
    objects: int
    restarts: int
    smt_invocations: int
    search: float
    check: float
    smt_build: float
    smt_solve: float
    lift: float


def run_one(spec: RunSpec) -> RunResult:
    from .loader import load_problem_inputs

    m, invs, ne = load_problem_inputs(spec.model_path, spec.constraints_path, spec.ne_text)
    p = prepare(m, invs, ne)
    cfg = SolveConfig(
        SearchConfig(max_iterations=spec.max_iterations, seed=spec.seed, class_cap=spec.class_cap),
        SmtSettings(spec.smt_solver, spec.smt_timeout),
        spec.timeout,
    )
    rep = solve(p, cfg) if spec.mode == "hybrid" else solve_baseline(p, cfg)
    t = rep.timings
    return RunResult(
        spec.mode,
        spec.size,
        spec.seed,
        rep.status,
        rep.wall_time,
        rep.iterations,
        rep.final_instance.size() if rep.final_instance is not None else 0,
        rep.restarts,
        rep.smt_invocations,
        *(t[k] for k in TIMING_KEYS),
    )


def run_all(specs: Sequence[RunSpec], jobs: int = 1) -> List[RunResult]:
    if jobs <= 1:
        return [run_one(s) for s in specs]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(run_one, specs))


def to_csv(results: Iterable[RunResult]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in results:
        row = asdict(r)
        for k in ("seconds",) + TIMING_KEYS:
            row[k] = f"{row[k]:.6f}"
        w.writerow(row)
    return buf.getvalue()


@dataclass
class GroupSummary:
    mode: str
    size: int
    runs: int
    solved: int
    median_seconds: float
    median_iterations: float
    mean_timings: Dict[str, float]

    @property
    def success_rate(self) -> float:
        return self.solved / self.runs if self.runs else 0.0


def summarize(results: Sequence[RunResult]) -> List[GroupSummary]:
    groups: Dict[Tuple[str, int], List[RunResult]] = {}
    for r in results:
        groups.setdefault((r.mode, r.size), []).append(r)
    out = []
    for (mode, size), rs in sorted(groups.items()):
        out.append(
            GroupSummary(
                mode,
                size,
                len(rs),
                sum(r.status == SOLVED for r in rs),
                statistics.median(r.seconds for r in rs),
                statistics.median(r.iterations for r in rs),
                {k: statistics.fmean(getattr(r, k) for r in rs) for k in TIMING_KEYS},
            )
        )
    return out


@dataclass
class ProportionTest:
    successes_a: int
    runs_a: int
    successes_b: int
    runs_b: int
    z: float
    p_value: float  # one-sided, alternative: rate_a > rate_b

    def report(self, name_a: str = "hybrid", name_b: str = "baseline") -> str:
        return (
            f"two-proportion z-test ({name_a} > {name_b}): "
            f"{name_a} {self.successes_a}/{self.runs_a}, {name_b} {self.successes_b}/{self.runs_b}, "
            f"z = {self.z:.4f}, one-sided p = {self.p_value:.4g}"
        )


def two_proportion_test(s1: int, n1: int, s2: int, n2: int) -> ProportionTest:
    """Pooled two-proportion z-test of H1: p1 > p2."""
    if n1 <= 0 or n2 <= 0:
        raise ValueError("both samples need at least one run")
    pooled = (s1 + s2) / (n1 + n2)
    se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    diff = s1 / n1 - s2 / n2
    if se == 0:
        # Both samples all-success or all-failure: no evidence either way.
        return ProportionTest(s1, n1, s2, n2, 0.0, 0.5 if diff == 0 else (0.0 if diff > 0 else 1.0))
    z = diff / se
    return ProportionTest(s1, n1, s2, n2, z, 0.5 * math.erfc(z / math.sqrt(2)))
