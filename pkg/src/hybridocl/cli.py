"""Command-line front end.

Exit codes: 0 solved or valid, 1 budget exhausted or invalid, 2 usage or
configuration error, 3 environment error (SMT solver missing).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .evaluator import Evaluator
from .labels import label_counts
from .lang.lexer import OclError
from .lang.printer import dump_tree, pretty
from .loader import load_problem_inputs, parse_root, roots_to_text
from .nnf import NnfError
from .model import InstanceModel, ModelError, all_multiplicity_constraints, conforms_to
from .orchestrator import SOLVED, SolveConfig, SolveReport, prepare, solve, solve_baseline
from .search import SearchConfig
from .smt.bridge import SmtSettings, build_job
from .smt.expand import SmtAbort
from .smt.solver import DEFAULT_TIMEOUT, SolverNotFound
from .smt.translate import Untranslatable

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ENV = 0, 1, 2, 3

# Settings a config file may hold; command-line flags take precedence.
DEFAULTS: Dict[str, Any] = {
    "model": None,
    "constraints": None,
    "non_emptiness": None,
    "root": None,
    "seed": 0,
    "max_iterations": 1000,
    "timeout": None,
    "smt_solver": None,
    "smt_timeout": DEFAULT_TIMEOUT,
    "class_cap": 30,
    "jobs": 1,
    "out": None,
    "dump_nnf": None,
    "dump_labels": None,
    "dump_smt": None,
    "report": None,
    "trace": None,
    "instance": None,
    "sizes": None,
    "runs": 10,
    "mode": "both",
}
_PATH_KEYS = ("model", "constraints", "out", "dump_nnf", "dump_labels", "dump_smt", "report", "trace", "instance")


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", help="JSON file with default settings; flags override it")
    p.add_argument("--model", default=S, help="data model JSON")
    p.add_argument("--constraints", default=S, help="OCL invariants and operation definitions")
    ne = p.add_mutually_exclusive_group()
    ne.add_argument("--non-emptiness", dest="non_emptiness", default=S, help="OCL non-emptiness constraint")
    ne.add_argument("--root", action="append", default=S, metavar="CLASS:N", help="require N instances of CLASS")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--max-iterations", dest="max_iterations", type=int, default=S)
    p.add_argument("--timeout", type=float, default=S, help="wall-clock budget in seconds")
    p.add_argument("--smt-solver", dest="smt_solver", default=S, help="SMT-LIB solver executable (default z3)")
    p.add_argument("--smt-timeout", dest="smt_timeout", type=float, default=S, help="seconds per solver call")
    p.add_argument("--class-cap", dest="class_cap", type=int, default=S, help="max objects per class")
    p.add_argument("--jobs", type=int, default=S)
    p.add_argument("--out", default=S)
    p.add_argument("--dump-nnf", dest="dump_nnf", default=S, metavar="PATH")
    p.add_argument("--dump-labels", dest="dump_labels", default=S, metavar="PATH")
    p.add_argument("--dump-smt", dest="dump_smt", default=S, metavar="DIR")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hybridocl", description="Generate instance models satisfying OCL invariants.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_text in (("generate", "hybrid search + SMT solve"), ("baseline", "pure search solve")):
        p = sub.add_parser(name, help=help_text)
        _common(p)
        p.add_argument("--report", default=argparse.SUPPRESS, help="write the solve report JSON here")
        p.add_argument("--report-timings", action="store_true", help="include timings in the report")
        p.add_argument("--trace", default=argparse.SUPPRESS, help="per-iteration CSV trace")
    p = sub.add_parser("bench", help="seeded runs over several sizes, CSV out")
    _common(p)
    p.add_argument("--sizes", default=argparse.SUPPRESS, help="comma-separated root counts")
    p.add_argument("--runs", type=int, default=argparse.SUPPRESS, help="seeds per size")
    p.add_argument("--mode", choices=("hybrid", "baseline", "both"), default=argparse.SUPPRESS)
    p.add_argument("--report", default=argparse.SUPPRESS, help="write the summary text here")
    p = sub.add_parser("check", help="validate an instance model")
    _common(p)
    p.add_argument("--instance", default=argparse.SUPPRESS, required=False)
    p = sub.add_parser("dump", help="print the NNF constraint, its labels or an SMT-LIB script")
    p.add_argument("what", choices=("nnf", "labels", "smt"))
    _common(p)
    p.add_argument("--instance", default=argparse.SUPPRESS, help="instance for the SMT script")
    return ap


def resolve_settings(ns: argparse.Namespace) -> Dict[str, Any]:
    cfg = dict(DEFAULTS)
    given = vars(ns)
    if given.get("config"):
        path = Path(given["config"])
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config file {path}: {e}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        for k, v in data.items():
            key = k.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key '{k}'")
            if key in _PATH_KEYS and isinstance(v, str):
                v = str((path.parent / v).resolve()) if not Path(v).is_absolute() else v
            cfg[key] = v
    for k, v in given.items():
        if k in DEFAULTS:
            cfg[k] = v
    if isinstance(cfg["root"], str):
        cfg["root"] = [cfg["root"]]
    if cfg["model"] is None:
        raise UsageError("--model is required")
    if cfg["max_iterations"] < 0 or cfg["class_cap"] < 0 or cfg["jobs"] < 1:
        raise UsageError("--max-iterations and --class-cap must be >= 0 and --jobs >= 1")
    return cfg


def _roots(cfg: Dict[str, Any]) -> List[Tuple[str, int]]:
    try:
        return [parse_root(r) for r in (cfg["root"] or [])]
    except ValueError as e:
        raise UsageError(str(e)) from None


def _ne_text(cfg: Dict[str, Any], default_true: bool = False) -> str:
    if cfg["non_emptiness"]:
        return cfg["non_emptiness"]
    roots = _roots(cfg)
    if roots:
        return roots_to_text(roots)
    if default_true:
        return "true"
    raise UsageError("a non-emptiness constraint is required: use --root CLASS:N or --non-emptiness EXPR")


def effective_cap(cap: int, roots: Sequence[Tuple[str, int]]) -> int:
    """The class cap never blocks the requested number of root objects."""
    return max([cap] + [n for _, n in roots])


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


def _load(cfg: Dict[str, Any], default_true: bool = False):
    return load_problem_inputs(cfg["model"], cfg["constraints"], _ne_text(cfg, default_true))


# ------------------------------------------------------------ commands
def cmd_solve(cfg: Dict[str, Any], hybrid: bool, report_timings: bool) -> int:
    m, invs, ne = _load(cfg)
    p = prepare(m, invs, ne)
    if cfg["dump_nnf"]:
        _write(cfg["dump_nnf"], pretty(p.constraint) + "\n")
    if cfg["dump_labels"]:
        _write(cfg["dump_labels"], dump_tree(p.labeled) + "\n")
    sc = SolveConfig(
        SearchConfig(
            max_iterations=cfg["max_iterations"],
            seed=cfg["seed"],
            class_cap=effective_cap(cfg["class_cap"], _roots(cfg)),
        ),
        SmtSettings(cfg["smt_solver"], cfg["smt_timeout"], cfg["dump_smt"]),
        cfg["timeout"],
    )
    rep: SolveReport = solve(p, sc) if hybrid else solve_baseline(p, sc)
    if rep.final_instance is not None and rep.status == SOLVED:
        _write(cfg["out"], rep.final_instance.to_json())
    if cfg["report"]:
        _write(cfg["report"], rep.to_json(report_timings))
    if cfg["trace"]:
        lines = ["iteration,rawDistance,objectCount"]
        lines += [f"{t.iteration},{t.raw!r},{t.objects}" for t in rep.trace]
        _write(cfg["trace"], "\n".join(lines) + "\n")
    print(
        f"{rep.status} ({rep.mode}): {rep.iterations} iterations, {rep.restarts} restarts, "
        f"{rep.smt_invocations} SMT calls, {rep.wall_time:.3f} s" + (f"; {rep.detail}" if rep.detail else ""),
        file=sys.stderr,
    )
    return EXIT_OK if rep.status == SOLVED else EXIT_FAIL


def violations(m, invs, ne, inst: InstanceModel) -> List[str]:
    """Names of violated invariants with the offending objects."""
    out = [f"structure: {d}" for d in conforms_to(inst, m)]
    ev = Evaluator(inst)
    for inv in list(invs) + all_multiplicity_constraints(m):
        bad = [oid for oid in inst.objects_of(inv.context) if ev.eval(inv.body, {"self": ev.ref(oid)}) is not True]
        if bad:
            out.append(f"{inv.context}::{inv.name} violated by {', '.join(bad)}")
    if ev.eval(ne, {}) is not True:
        out.append("non-emptiness constraint violated")
    return out


def cmd_check(cfg: Dict[str, Any]) -> int:
    if not cfg["instance"]:
        raise UsageError("check needs --instance")
    m, invs, ne = _load(cfg, default_true=True)
    inst = InstanceModel.from_json(Path(cfg["instance"]).read_text(encoding="utf-8"), m)
    bad = violations(m, invs, ne, inst)
    for line in bad:
        print(line)
    if not bad:
        print("valid")
    return EXIT_FAIL if bad else EXIT_OK


def cmd_dump(cfg: Dict[str, Any], what: str) -> int:
    m, invs, ne = _load(cfg)
    p = prepare(m, invs, ne)
    if what == "nnf":
        _write(cfg["out"], pretty(p.constraint) + "\n")
    elif what == "labels":
        counts = label_counts(p.labeled)
        text = dump_tree(p.labeled) + "\n" + " ".join(f"{k}={v}" for k, v in counts.items()) + "\n"
        _write(cfg["out"], text)
    else:
        inst = InstanceModel(m)
        if cfg["instance"]:
            inst = InstanceModel.from_json(Path(cfg["instance"]).read_text(encoding="utf-8"), m)
        try:
            job = build_job(p.labeled, p.ops, inst, m)
        except (SmtAbort, Untranslatable) as e:
            print(f"no SMT script: {e}", file=sys.stderr)
            return EXIT_FAIL
        if job is None:
            print("no SMT script: the constraint folds to a constant on this instance", file=sys.stderr)
            return EXIT_FAIL
        _write(cfg["out"], job.script)
    return EXIT_OK


def cmd_bench(cfg: Dict[str, Any]) -> int:
    from .bench import RunSpec, run_all, summarize, to_csv, two_proportion_test

    roots = _roots(cfg)
    if len(roots) != 1:
        raise UsageError("bench needs exactly one --root CLASS[:N]")
    cls, n = roots[0]
    try:
        sizes = [int(s) for s in str(cfg["sizes"]).split(",")] if cfg["sizes"] else [n]
    except ValueError:
        raise UsageError("--sizes must be comma-separated integers") from None
    modes = ("hybrid", "baseline") if cfg["mode"] == "both" else (cfg["mode"],)
    specs = [
        RunSpec(
            cfg["model"],
            cfg["constraints"],
            roots_to_text([(cls, size)]),
            mode,
            size,
            cfg["seed"] + k,
            cfg["max_iterations"],
            effective_cap(cfg["class_cap"], [(cls, size)]),
            cfg["timeout"],
            cfg["smt_solver"],
            cfg["smt_timeout"],
        )
        for mode in modes
        for size in sizes
        for k in range(cfg["runs"])
    ]
    # Fail fast on a bad model or constraint file before forking workers.
    load_problem_inputs(cfg["model"], cfg["constraints"], specs[0].ne_text)
    if "hybrid" in modes:
        from .smt.solver import resolve_solver

        resolve_solver(cfg["smt_solver"])
    results = run_all(specs, cfg["jobs"])
    _write(cfg["out"], to_csv(results))
    lines = ["mode size runs solved median_s median_iter search check smt_build smt_solve lift"]
    summary = summarize(results)
    for g in summary:
        t = g.mean_timings
        lines.append(
            f"{g.mode} {g.size} {g.runs} {g.solved} {g.median_seconds:.4f} {g.median_iterations:g} "
            + " ".join(f"{t[k]:.4f}" for k in ("search", "check", "smt_build", "smt_solve", "lift"))
        )
    if len(modes) == 2:
        for size in sizes:
            h = next(g for g in summary if g.mode == "hybrid" and g.size == size)
            b = next(g for g in summary if g.mode == "baseline" and g.size == size)
            lines.append(f"size {size}: " + two_proportion_test(h.solved, h.runs, b.solved, b.runs).report())
    text = "\n".join(lines) + "\n"
    if cfg["report"]:
        _write(cfg["report"], text)
    print(text, end="", file=sys.stderr if cfg["out"] in (None, "-") else sys.stdout)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    try:
        cfg = resolve_settings(ns)
        if ns.command in ("generate", "baseline"):
            return cmd_solve(cfg, ns.command == "generate", ns.report_timings)
        if ns.command == "check":
            return cmd_check(cfg)
        if ns.command == "dump":
            return cmd_dump(cfg, ns.what)
        return cmd_bench(cfg)
    except SolverNotFound as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ENV
    except (UsageError, OclError, ModelError, NnfError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
