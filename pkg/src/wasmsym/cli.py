"""Command line interface.

    wasmsym run <file.wat>                 concrete execution
    wasmsym sym <file.wat> [options]       symbolic exploration
    wasmsym replay <file.wat> --model M    concrete replay of a model

Findings print as atomic blocks on stdout; diagnostics and statistics go to
stderr. Exit codes: 0 no problem, 13 problem reached, 1 load errors,
2 configuration errors, 3 internal engine errors.
"""

from __future__ import annotations

import argparse
import shlex
import sys
import threading
import time

from wasmsym.errors import (
    ConfigError,
    InternalEngineError,
    LinkError,
    ParseError,
    ValidationError,
)
from wasmsym.interp import run_concrete, run_symbolic
from wasmsym.interp.outcomes import OUTCOME_ASSERT, OUTCOME_OK, OUTCOME_TRAP
from wasmsym.solver.backends import (
    BruteForceBackend,
    ExternalBackend,
    default_solver_command,
)
from wasmsym.solver.smtlib import parse_model_text, render_model
from wasmsym.wat import link, parse_module, validate
from wasmsym.wat.link import find_main

EXIT_OK = 0
EXIT_PROBLEM = 13
EXIT_LOAD = 1
EXIT_CONFIG = 2
EXIT_INTERNAL = 3


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from None
    inst = link(validate(parse_module(text)))
    find_main(inst)
    return inst


def _solver_factory(spec: str | None, timeout_ms: int, incremental: bool):
    """A picklable-under-fork factory for per-worker backends."""
    if spec in ("brute", "bruteforce", "brute-force"):
        def make_brute():
            return BruteForceBackend()
        return make_brute
    command = shlex.split(spec) if spec else default_solver_command()

    def make_external():
        return ExternalBackend(command, timeout_ms=timeout_ms, incremental=incremental)
    return make_external


class Report:
    """Serializes finding blocks produced concurrently by workers."""

    def __init__(self, out, assertions_only: bool):
        self.out = out
        self.assertions_only = assertions_only
        self.lock = threading.Lock()
        self.reported = 0

    def finding(self, result) -> None:
        outcome = result.outcome
        if self.assertions_only and outcome.kind != OUTCOME_ASSERT:
            return
        block = [outcome.message(), "Model:", render_model(result.model or {})]
        text = "\n".join(block) + "\n"
        with self.lock:
            self.reported += 1
            self.out.write(text)
            self.out.flush()


def cmd_run(args) -> int:
    inst = _load(args.file)
    outcome = run_concrete(inst, fuel=args.fuel)
    if outcome.kind == OUTCOME_OK:
        return EXIT_OK
    print(outcome.message())
    return EXIT_PROBLEM


def cmd_replay(args) -> int:
    inst = _load(args.file)
    with open(args.model, encoding="utf-8") as fh:
        model = parse_model_text(fh.read())
    outcome = run_concrete(inst, fuel=args.fuel, model=model)
    print(outcome.message() if outcome.kind != OUTCOME_OK else "All OK")
    if outcome.kind in (OUTCOME_TRAP, OUTCOME_ASSERT):
        if outcome.kind == OUTCOME_TRAP and outcome.trap_kind == "fuel-exhausted":
            return EXIT_PROBLEM
        return EXIT_PROBLEM
    return EXIT_OK


def cmd_sym(args) -> int:
    inst = _load(args.file)
    workers = args.workers
    deterministic = args.deterministic
    if deterministic:
        workers = 1
    yield_interval = 0 if deterministic else 10_000
    report = Report(sys.stdout, args.fail_on_assertion_only)

    def on_result(result):
        if result.outcome.is_problem:
            report.finding(result)

    process_workers = False
    if args.parallel == "process":
        process_workers = True
    elif args.parallel == "auto":
        process_workers = workers > 1

    t0 = time.monotonic()
    stats = run_symbolic(
        inst,
        workers=workers,
        fuel=args.fuel,
        yield_interval=yield_interval,
        solver_factory=_solver_factory(args.solver, args.solver_timeout, True),
        on_result=on_result,
        process_workers=process_workers,
        fail_fast=args.fail_fast,
        wall_timeout=args.timeout,
    )
    wall = time.monotonic() - t0
    if report.reported:
        print("Reached problem!")
        code = EXIT_PROBLEM
    else:
        print("All OK")
        code = EXIT_OK
    if args.stats:
        sch = stats.scheduler
        print(
            f"paths: completed={stats.paths_ok} findings={stats.findings} "
            f"pruned={stats.pruned} incomplete={stats.incomplete} "
            f"fuel-exhausted={stats.fuel_exhausted}",
            file=sys.stderr,
        )
        solver_line = (
            f"solver: queries={stats.solver_queries} sat={stats.solver_sat} "
            f"unsat={stats.solver_unsat} unknown={stats.solver_unknown}"
            if not process_workers
            else "solver: per-query counters live in worker processes"
        )
        print(solver_line, file=sys.stderr)
        print(
            f"engine: steps={sch.steps} forks={sch.forks} yields={sch.yields} "
            f"finals={sch.finals} concretized-addrs={stats.concretized}",
            file=sys.stderr,
        )
        print(f"wall: {wall:.3f}s workers={workers} "
              f"mode={'process' if process_workers else 'thread'}", file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wasmsym",
        description="Symbolic execution for the core integer subset of WebAssembly",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="concrete execution of an exported main")
    run_p.add_argument("file")
    run_p.add_argument("--fuel", type=int, default=1_000_000,
                       help="instruction budget per path")
    run_p.set_defaults(fn=cmd_run)

    sym_p = sub.add_parser("sym", help="symbolic exploration of every feasible path")
    sym_p.add_argument("file")
    sym_p.add_argument("-w", "--workers", type=int, default=None,
                       help="worker count (default: available parallelism)")
    sym_p.add_argument("--fuel", type=int, default=1_000_000)
    sym_p.add_argument("--timeout", type=float, default=0.0,
                       help="global wall clock limit in seconds (0 = none)")
    sym_p.add_argument("--solver", default=None,
                       help='solver command (e.g. "z3 -in"), or "brute"')
    sym_p.add_argument("--solver-timeout", type=int, default=10_000,
                       help="per-query timeout in milliseconds")
    sym_p.add_argument("--fail-fast", action="store_true",
                       help="stop exploring after the first finding")
    sym_p.add_argument("--fail-on-assertion-only", action="store_true",
                       help="report assertion failures only, not traps")
    sym_p.add_argument("--stats", action="store_true",
                       help="print run statistics to stderr")
    sym_p.add_argument("--deterministic", action="store_true",
                       help="single worker, no time-slicing: byte-stable output")
    sym_p.add_argument("--parallel", choices=("auto", "thread", "process"),
                       default="auto",
                       help="worker backend; process sidesteps the GIL")
    sym_p.set_defaults(fn=cmd_sym)

    replay_p = sub.add_parser("replay", help="re-run concretely with a reported model")
    replay_p.add_argument("file")
    replay_p.add_argument("--model", required=True, help="model file (report format)")
    replay_p.add_argument("--fuel", type=int, default=1_000_000)
    replay_p.set_defaults(fn=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", None) is None and args.command == "sym":
        from wasmsym.choice.scheduler import available_parallelism
        args.workers = available_parallelism()
    if args.command == "sym" and args.workers < 1:
        print("error: worker count must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "fuel", 1) < 1:
        print("error: fuel must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(args)
    except (ParseError, ValidationError, LinkError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_LOAD
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InternalEngineError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
