"""Symbolic instantiation: forking coroutines driven by the scheduler.

Each undecided branch becomes choose(check(c), check(not c)) where both
sides yield first, solver-check their conjunct against the path condition,
and either continue interpreting inline or stop. Findings carry a model for
the leaf's full path condition, validated by the engine before reporting.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from wasmsym.choice.core import Choice, Coroutine, Now, STOP, Yield
from wasmsym.choice.queue import WorkQueue
from wasmsym.choice.scheduler import (
    LocalStepExecutor,
    ProcessStepExecutor,
    SchedulerStats,
    run_scheduler,
)
from wasmsym.errors import (
    TRAP_DIV_BY_ZERO,
    TRAP_FUEL,
    TRAP_INT_OVERFLOW,
    TRAP_OOB_MEMORY,
    InternalEngineError,
    TrapSignal,
)
from wasmsym.interp import core
from wasmsym.interp.concrete import ConcreteHost
from wasmsym.interp.core import (
    Incomplete,
    OutcomeSignal,
    PathStop,
    Suspend,
    advance,
    call_function_or_intrinsic,
    start_state,
    validate_table_call,
)
from wasmsym.interp.outcomes import (
    OUTCOME_ASSERT,
    OUTCOME_INCOMPLETE,
    OUTCOME_OK,
    OUTCOME_TRAP,
    EvalOutcome,
    PathResult,
)
from wasmsym.interp.state import ThreadState
from wasmsym.solver.backends import SolverHandle
from wasmsym.values import concrete
from wasmsym.values.symbolic import (
    Const,
    bits_of,
    evaluate,
    render_condition,
    sym_binop,
    sym_extend,
    sym_not,
    sym_relop,
    truthiness,
)
from wasmsym.wat.link import Instance, find_main

_DIV_FAMILY = ("div_s", "div_u", "rem_s", "rem_u")


class SymbolicHost:
    __slots__ = ("wls",)

    def __init__(self, wls):
        self.wls = wls

    # -- branching

    def select(self, state, cond, pending) -> bool:
        t = truthiness(cond)
        if t is not None:
            return t
        state.pending = pending
        raise Suspend()

    # -- values

    def binop(self, state, op, width, a, b):
        if op not in _DIV_FAMILY:
            if isinstance(a, int) and isinstance(b, int):
                return concrete.binop(op, width, a, b)
            return sym_binop(op, width, a, b)
        zb = bits_of(b)
        if zb is not None:
            # constant divisor: the zero select is bypassed by folding
            if zb == 0:
                raise TrapSignal(TRAP_DIV_BY_ZERO, "")
            if isinstance(a, int):
                return concrete.binop(op, width, a, b)
            if op == "div_s" and zb == (1 << width) - 1:  # divisor == -1
                return _divide_after_zero_check(state, op, width, a, b)
            return sym_binop(op, width, a, b)
        zero_cond = sym_relop("eq", width, b, Const(width, 0))
        state.pending = ("div0", zero_cond, op, width, a, b)
        raise Suspend()

    def fresh(self, state, width):
        from wasmsym.values.symbolic import Symbol

        s = Symbol(state.sym_count, width)
        state.sym_count += 1
        state.sym_widths.append(width)
        return s

    # -- path condition

    def assume(self, state, v):
        t = truthiness(v)
        if t is True:
            return
        if t is False:
            raise PathStop()
        res = self.wls.solver.check(state.pc + (v,))
        if res.is_sat:
            state.pc = state.pc + (v,)
        elif res.is_unsat:
            raise PathStop()
        else:
            raise Incomplete(f"assume undecided: {res.reason}")

    def assert_(self, state, v):
        t = truthiness(v)
        if t is True:
            return
        if t is False:
            raise OutcomeSignal(EvalOutcome(OUTCOME_ASSERT, rendered="false"))
        state.pending = ("assert", v)
        raise Suspend()

    # -- calls and memory

    def call_indirect(self, state, type_idx, idx):
        if isinstance(idx, int):
            return idx
        table = state.inst.module.table
        if table is None or table.size == 0:
            raise core.trap("undefined-table-element")
        cond = sym_relop("eq", 32, idx, Const(32, 0))
        state.pending = ("callind", cond, type_idx, idx, 0, table.size)
        raise Suspend()

    def concretize(self, state, v, width):
        if isinstance(v, int):
            return v
        res = self.wls.solver.check(state.pc)
        if not res.is_sat:
            raise Incomplete(f"cannot concretize: {res.reason or res.status}")
        env = {i: bits for i, (w, bits) in res.model.items()}
        val = evaluate(v, env)
        state.pc = state.pc + (sym_relop("eq", width, v, Const(width, val)),)
        state.concretized += 1
        return val

    def mem_load(self, state, info, offset, addr):
        if isinstance(addr, int):
            return ConcreteHost.mem_load(self, state, info, offset, addr)
        self._mem_suspend(state, "load", info, offset, addr, None)

    def mem_store(self, state, info, offset, addr, value):
        if isinstance(addr, int):
            return ConcreteHost.mem_store(self, state, info, offset, addr, value)
        self._mem_suspend(state, "store", info, offset, addr, value)

    def _mem_suspend(self, state, mode, info, offset, addr, value):
        width_bytes = info[1]
        ea = sym_binop("add", 64, sym_extend("u", 64, addr), offset)
        oob = sym_relop("gt_u", 64, sym_binop("add", 64, ea, width_bytes),
                        state.mem.size)
        state.pending = ("mem", oob, mode, info, ea, value)
        raise Suspend()


def _divide_after_zero_check(state, op, width, a, b):
    """div_s overflow select once the divisor is known nonzero."""
    int_min = 1 << (width - 1)
    ov = sym_binop(
        "and", 32,
        sym_relop("eq", width, a, Const(width, int_min)),
        sym_relop("eq", width, b, Const(width, (1 << width) - 1)),
    )
    t = truthiness(ov)
    if t is True:
        raise TrapSignal(TRAP_INT_OVERFLOW, "")
    if t is None:
        state.pending = ("div_ov", ov, op, width, a, b)
        raise Suspend()
    return sym_binop(op, width, a, b)


# ---------------------------------------------------------------------------
# Resume records


def pending_branches(pending):
    """(true-branch conjunct+token, false-branch conjunct+token)."""
    if pending[0] == "assert":
        v = pending[1]
        return (sym_not(v), ("fail",)), (v, ("ok",))
    cond = pending[1]
    return (cond, ("bool", True)), (sym_not(cond), ("bool", False))


def apply_resume(state: ThreadState, token, model, host) -> EvalOutcome | None:
    """Deliver a branch decision into the suspended instruction.

    Returns an outcome for leaf-producing decisions, None to continue; may
    raise Suspend again for staged decisions (div overflow, table scans).
    """
    pending = state.pending
    state.pending = None
    kind = pending[0]
    if kind == "assert":
        if token[0] == "fail":
            return EvalOutcome(OUTCOME_ASSERT, rendered=render_condition(pending[1]))
        return None
    answer = token[1]
    if kind == "if":
        _, _, then_b, else_b, result = pending
        body = then_b if answer else else_b
        state.ctrl.append([body, 0, "if", 1 if result else 0, len(state.stack)])
        return None
    if kind == "br_if":
        if answer:
            results = core._do_branch(state, pending[2])
            if results is not None:
                return EvalOutcome(OUTCOME_OK, results=tuple(results))
        return None
    if kind == "select":
        _, _, v1, v2 = pending
        state.stack.append(v1 if answer else v2)
        return None
    if kind == "div0":
        _, _, op, width, a, b = pending
        if answer:
            return EvalOutcome(OUTCOME_TRAP, trap_kind=TRAP_DIV_BY_ZERO)
        if op == "div_s":
            result = _divide_after_zero_check(state, op, width, a, b)
        else:
            result = sym_binop(op, width, a, b)
        state.stack.append(result)
        return None
    if kind == "div_ov":
        _, _, op, width, a, b = pending
        if answer:
            return EvalOutcome(OUTCOME_TRAP, trap_kind=TRAP_INT_OVERFLOW)
        state.stack.append(sym_binop(op, width, a, b))
        return None
    if kind == "callind":
        _, _, type_idx, idx_expr, k, size = pending
        if answer:
            func_idx = validate_table_call(state, type_idx, k)
            call_function_or_intrinsic(state, func_idx, host)
            return None
        if k + 1 < size:
            cond = sym_relop("eq", 32, idx_expr, Const(32, k + 1))
            state.pending = ("callind", cond, type_idx, idx_expr, k + 1, size)
            raise Suspend()
        return EvalOutcome(OUTCOME_TRAP, trap_kind="undefined-table-element")
    if kind == "mem":
        _, _, mode, info, ea_expr, value = pending
        if answer:
            return EvalOutcome(OUTCOME_TRAP, trap_kind=TRAP_OOB_MEMORY)
        env = {i: bits for i, (w, bits) in (model or {}).items()}
        ea = evaluate(ea_expr, env)
        state.pc = state.pc + (sym_relop("eq", 64, ea_expr, Const(64, ea)),)
        state.concretized += 1
        if mode == "load":
            _, width_bytes, sign, result_width = info
            state.stack.append(state.mem.load(ea, width_bytes, sign, result_width))
        else:
            state.mem.store(ea, value, info[1])
        return None
    raise InternalEngineError(f"unknown pending record {kind!r}")


# ---------------------------------------------------------------------------
# Coroutine steps (picklable: plain classes over picklable state)


_PRIO = None  # set lazily to the default Priority to keep pickles small


def _prio():
    global _PRIO
    if _PRIO is None:
        from wasmsym.choice.core import DEFAULT_PRIO
        _PRIO = DEFAULT_PRIO
    return _PRIO


def _full_model(state: ThreadState, model: dict) -> dict:
    """Reports cover every symbol minted on the path; symbols the path
    condition never constrained get a fixed value of zero."""
    out = dict(model)
    for ident, width in enumerate(state.sym_widths):
        out.setdefault(ident, (width, 0))
    return out


def _leaf(state: ThreadState, outcome: EvalOutcome, wls) -> Now:
    model = None
    if outcome.is_problem:
        res = wls.solver.check(state.pc)
        if res.is_unsat:
            raise InternalEngineError("feasible path re-checked unsat at leaf")
        if res.is_unknown:
            outcome = EvalOutcome(
                OUTCOME_INCOMPLETE,
                rendered=f"finding withheld, model undecided: {res.reason}",
            )
        else:
            model = _full_model(state, res.model)
    return Now(PathResult(outcome, model=model, pc_len=len(state.pc),
                          symbols=state.sym_count, concretized=state.concretized))


def _branch_choice(state: ThreadState):
    (conj_t, tok_t), (conj_f, tok_f) = pending_branches(state.pending)
    state_t, state_f = state.fork_pair()
    prio = _prio()
    return Choice(
        Yield(prio, Coroutine(_CheckStep(state_t, conj_t, tok_t))),
        Yield(prio, Coroutine(_CheckStep(state_f, conj_f, tok_f))),
    )


def _drive(state: ThreadState, wls, resume=None, model=None):
    host = SymbolicHost(wls)
    if resume is not None:
        try:
            outcome = apply_resume(state, resume, model, host)
        except Suspend:
            return _branch_choice(state)
        except OutcomeSignal as sig:
            return _leaf(state, sig.outcome, wls)
        except TrapSignal as sig:
            return _leaf(state, EvalOutcome(OUTCOME_TRAP, trap_kind=sig.kind), wls)
        except PathStop:
            return STOP
        except Incomplete as inc:
            return Now(PathResult(EvalOutcome(OUTCOME_INCOMPLETE, rendered=inc.reason)))
        if outcome is not None:
            return _leaf_with_model(state, outcome, model, wls)
    kind, payload = advance(state, host)
    if kind == "done":
        return _leaf(state, payload, wls)
    if kind == "suspended":
        return _branch_choice(state)
    if kind == "yield":
        return Yield(_prio(), Coroutine(_StateStep(state)))
    if kind == "stopped":
        return STOP
    if kind == "incomplete":
        return Now(PathResult(EvalOutcome(OUTCOME_INCOMPLETE, rendered=payload)))
    raise InternalEngineError(f"unexpected event {kind!r}")


def _leaf_with_model(state, outcome, model, wls):
    """A resume decision ended the path; the branch-check model is exactly a
    model of the leaf's path condition."""
    if outcome.is_problem and model is not None:
        return Now(PathResult(outcome, model=_full_model(state, model),
                              pc_len=len(state.pc), symbols=state.sym_count,
                              concretized=state.concretized))
    return _leaf(state, outcome, wls)


class _StateStep:
    __slots__ = ("state",)

    def __init__(self, state: ThreadState):
        self.state = state

    def __call__(self, wls):
        return _drive(self.state, wls)

    def __reduce__(self):
        return (_StateStep, (self.state,))


class _CheckStep:
    """yield -> feasibility check -> record -> resume (the paper's
    check_and_record, with the yield already consumed by the enclosing
    Yield node)."""

    __slots__ = ("state", "conjunct", "token")

    def __init__(self, state: ThreadState, conjunct, token):
        self.state = state
        self.conjunct = conjunct
        self.token = token

    def __call__(self, wls):
        state = self.state
        res = wls.solver.check(state.pc + (self.conjunct,))
        if res.is_unsat:
            return STOP
        if res.is_unknown:
            return Now(PathResult(EvalOutcome(
                OUTCOME_INCOMPLETE, rendered=f"branch undecided: {res.reason}")))
        state.pc = state.pc + (self.conjunct,)
        return _drive(state, wls, resume=self.token, model=res.model)

    def __reduce__(self):
        return (_CheckStep, (self.state, self.conjunct, self.token))


# ---------------------------------------------------------------------------
# Entry point


@dataclass
class RunStats:
    paths_ok: int = 0
    findings: int = 0
    pruned: int = 0
    incomplete: int = 0
    fuel_exhausted: int = 0
    solver_queries: int = 0
    solver_sat: int = 0
    solver_unsat: int = 0
    solver_unknown: int = 0
    concretized: int = 0
    executed: int = 0
    scheduler: SchedulerStats = field(default_factory=SchedulerStats)


def run_symbolic(
    inst: Instance,
    *,
    workers: int = 1,
    fuel: int = 1_000_000,
    yield_interval: int = 10_000,
    solver_factory=None,
    on_result=None,
    process_workers: bool = False,
    fail_fast: bool = False,
    wall_timeout: float = 0.0,
) -> RunStats:
    """Explore every feasible path of main; on_result(PathResult) fires once
    per leaf, possibly concurrently."""
    main_idx = find_main(inst)
    root = Coroutine(_StateStep(start_state(inst, main_idx, fuel, yield_interval)))
    stats = RunStats()
    lock = threading.Lock()
    queue = WorkQueue()

    handles: list[SolverHandle] = []

    def wls_init():
        handle = SolverHandle(solver_factory()) if solver_factory else SolverHandle()
        if not process_workers:
            with lock:
                handles.append(handle)
        return _Wls(handle)

    def on_final(result: PathResult):
        outcome = result.outcome
        with lock:
            stats.concretized += result.concretized
            if outcome.kind == OUTCOME_OK:
                stats.paths_ok += 1
            elif outcome.kind == OUTCOME_INCOMPLETE:
                stats.incomplete += 1
            elif outcome.kind == OUTCOME_TRAP and outcome.trap_kind == TRAP_FUEL:
                stats.fuel_exhausted += 1
            elif outcome.is_problem:
                stats.findings += 1
        if on_result is not None:
            on_result(result)
        if fail_fast and outcome.is_problem:
            queue.close()

    executor = ProcessStepExecutor() if process_workers else LocalStepExecutor()
    timer = None
    if wall_timeout:
        timer = threading.Timer(wall_timeout, queue.close)
        timer.daemon = True
        timer.start()
    try:
        sched = run_scheduler(
            [root], workers=workers, wls_init=wls_init, on_final=on_final,
            step_executor=executor, queue=queue,
        )
    finally:
        if timer is not None:
            timer.cancel()
        for h in handles:
            h.close()
    stats.scheduler = sched
    stats.pruned = sched.stops
    for h in handles:
        stats.solver_queries += h.queries
        stats.solver_sat += h.sat
        stats.solver_unsat += h.unsat
        stats.solver_unknown += h.unknown
    return stats


class _Wls:
    """Worker-local storage: the solver session."""

    __slots__ = ("solver",)

    def __init__(self, solver: SolverHandle):
        self.solver = solver
