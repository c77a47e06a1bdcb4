"""The generic evaluator: one instruction-stepping loop shared by the
concrete and symbolic instantiations, parameterized by an effect host.

The host decides what a condition means (values are plain ints concretely,
int | SymExpr symbolically), how fresh symbols are minted, and what happens
on assume/assert and on trapping arithmetic. When the symbolic host cannot
decide a branch locally it parks a resume record in state.pending and raises
Suspend; the coroutine driver in interp.symbolic turns that into a fork.
"""

from __future__ import annotations

from wasmsym.errors import (
    TRAP_CALL_TYPE,
    TRAP_FUEL,
    TRAP_UNDEF_ELEM,
    TRAP_UNREACHABLE,
    InternalEngineError,
    TrapSignal,
)
from wasmsym.interp.outcomes import (
    OUTCOME_OK,
    OUTCOME_TRAP,
    EvalOutcome,
)
from wasmsym.interp.state import K_ARITY, K_BASE, K_CODE, K_IP, K_KIND, Frame, ThreadState
from wasmsym.values.symbolic import sym_eqz, sym_extend, sym_extract, sym_relop
from wasmsym.wat.ast import BINOP_NAMES, LOAD_OPS, RELOP_NAMES, STORE_OPS


class Suspend(Exception):
    """state.pending holds the resume record; the driver forks."""


class PathStop(Exception):
    """Silently prune this path (infeasible assume)."""


class Incomplete(Exception):
    """Solver could not decide; the path is reported incomplete."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class OutcomeSignal(Exception):
    """Non-local exit with a final outcome (traps, assertion failures)."""

    def __init__(self, outcome: EvalOutcome):
        self.outcome = outcome
        super().__init__(outcome.kind)


def trap(kind: str) -> OutcomeSignal:
    return OutcomeSignal(EvalOutcome(OUTCOME_TRAP, trap_kind=kind))


# -- opcode classification, computed once

C_BINOP, C_RELOP, C_EQZ, C_CONST, C_LGET, C_LSET, C_LTEE, C_GGET, C_GSET, \
    C_BLOCK, C_LOOP, C_IF, C_BR, C_BRIF, C_RET, C_CALL, C_CALLIND, C_DROP, \
    C_SELECT, C_NOP, C_UNREACH, C_LOAD, C_STORE, C_MEMSIZE, C_MEMGROW, \
    C_WRAP, C_EXT = range(27)

OPS: dict[str, tuple] = {}
for _w, _p in ((32, "i32"), (64, "i64")):
    for _name in BINOP_NAMES:
        OPS[f"{_p}.{_name}"] = (C_BINOP, _w, _name)
    for _name in RELOP_NAMES:
        OPS[f"{_p}.{_name}"] = (C_RELOP, _w, _name)
    OPS[f"{_p}.eqz"] = (C_EQZ, _w)
    OPS[f"{_p}.const"] = (C_CONST, _w)
OPS["local.get"] = (C_LGET,)
OPS["local.set"] = (C_LSET,)
OPS["local.tee"] = (C_LTEE,)
OPS["global.get"] = (C_GGET,)
OPS["global.set"] = (C_GSET,)
OPS["block"] = (C_BLOCK,)
OPS["loop"] = (C_LOOP,)
OPS["if"] = (C_IF,)
OPS["br"] = (C_BR,)
OPS["br_if"] = (C_BRIF,)
OPS["return"] = (C_RET,)
OPS["call"] = (C_CALL,)
OPS["call_indirect"] = (C_CALLIND,)
OPS["drop"] = (C_DROP,)
OPS["select"] = (C_SELECT,)
OPS["nop"] = (C_NOP,)
OPS["unreachable"] = (C_UNREACH,)
OPS["i32.wrap_i64"] = (C_WRAP,)
OPS["i64.extend_i32_s"] = (C_EXT, "s")
OPS["i64.extend_i32_u"] = (C_EXT, "u")
for _op, (_wb, _rt, _sg) in LOAD_OPS.items():
    OPS[_op] = (C_LOAD, _wb, _sg, 32 if _rt == "i32" else 64)
for _op, (_wb, _rt) in STORE_OPS.items():
    OPS[_op] = (C_STORE, _wb)
OPS["memory.size"] = (C_MEMSIZE,)
OPS["memory.grow"] = (C_MEMGROW,)


def enter_function(state: ThreadState, func_idx: int) -> None:
    """Push a call frame; args are popped from the operand stack."""
    inst = state.inst
    module = inst.module
    n_imports = len(module.imports)
    f = module.funcs[func_idx - n_imports]
    ft = module.types[f.type_idx]
    stack = state.stack
    n = len(ft.params)
    if n:
        args = stack[len(stack) - n:]
        del stack[len(stack) - n:]
    else:
        args = []
    args.extend(0 for _ in f.locals)
    state.frames.append(
        Frame(func_idx, args, len(ft.results), len(stack), len(state.ctrl))
    )
    state.ctrl.append([f.body, 0, "func", len(ft.results), len(stack)])


def _function_return(state: ThreadState):
    """Pop the top frame; returns the final results list when main exits."""
    frame = state.frames[-1]
    stack = state.stack
    arity = frame.ret_arity
    results = stack[len(stack) - arity:] if arity else []
    del stack[frame.stack_base:]
    stack.extend(results)
    del state.ctrl[frame.ctrl_base:]
    state.frames.pop()
    if not state.frames:
        return results
    return None


def _do_branch(state: ThreadState, depth: int):
    ctrl = state.ctrl
    stack = state.stack
    target_idx = len(ctrl) - 1 - depth
    entry = ctrl[target_idx]
    kind = entry[K_KIND]
    if kind == "func":
        return _function_return(state)
    if kind == "loop":
        del ctrl[target_idx + 1:]
        del stack[entry[K_BASE]:]
        entry[K_IP] = 0
        return None
    arity = entry[K_ARITY]
    vals = stack[len(stack) - arity:] if arity else []
    del stack[entry[K_BASE]:]
    stack.extend(vals)
    del ctrl[target_idx:]
    return None


def validate_table_call(state: ThreadState, type_idx: int, k: int) -> int:
    """Concrete indirect-call index checking; raises trap signals."""
    module = state.inst.module
    table = module.table
    if table is None or k >= table.size or k < 0:
        raise trap(TRAP_UNDEF_ELEM)
    func_idx = table.elems[k]
    if func_idx is None:
        raise trap(TRAP_UNDEF_ELEM)
    if module.func_type(func_idx) != module.types[type_idx]:
        raise trap(TRAP_CALL_TYPE)
    return func_idx


def call_function_or_intrinsic(state: ThreadState, func_idx: int, host) -> None:
    intr = state.inst.intrinsics.get(func_idx)
    if intr is None:
        enter_function(state, func_idx)
    elif intr == "i32_symbol":
        state.stack.append(host.fresh(state, 32))
    elif intr == "i64_symbol":
        state.stack.append(host.fresh(state, 64))
    elif intr == "assume":
        host.assume(state, state.stack.pop())
    else:  # assert
        host.assert_(state, state.stack.pop())


def advance(state: ThreadState, host):
    """Run until this path produces an event.

    Returns ("done", EvalOutcome) | ("suspended", None) | ("yield", None) |
    ("stopped", None) | ("incomplete", reason).
    """
    stack = state.stack
    fuel = state.fuel
    start_fuel = fuel
    next_yield = state.next_yield
    try:
        while True:
            ctrl = state.ctrl
            entry = ctrl[-1]
            code = entry[K_CODE]
            ip = entry[K_IP]
            if ip == len(code):
                if entry[K_KIND] == "func":
                    results = _function_return(state)
                    if results is not None:
                        return ("done", EvalOutcome(OUTCOME_OK, results=tuple(results)))
                else:
                    ctrl.pop()
                continue
            # clean instruction boundary: yield before touching ip or fuel
            if fuel == next_yield:
                state.next_yield = next_yield = fuel - state.yield_interval
                return ("yield", None)
            fuel -= 1
            if fuel <= 0:
                return ("done", EvalOutcome(OUTCOME_TRAP, trap_kind=TRAP_FUEL))
            entry[K_IP] = ip + 1
            instr = code[ip]
            info = OPS[instr.op]
            cat = info[0]

            if cat == C_LGET:
                stack.append(state.frames[-1].locals[instr.args[0]])
            elif cat == C_CONST:
                stack.append(instr.args[0])
            elif cat == C_BINOP:
                b = stack.pop()
                a = stack.pop()
                stack.append(host.binop(state, info[2], info[1], a, b))
            elif cat == C_RELOP:
                b = stack.pop()
                a = stack.pop()
                stack.append(sym_relop(info[2], info[1], a, b))
            elif cat == C_LSET:
                state.frames[-1].locals[instr.args[0]] = stack.pop()
            elif cat == C_LTEE:
                state.frames[-1].locals[instr.args[0]] = stack[-1]
            elif cat == C_GGET:
                stack.append(state.globals[instr.args[0]])
            elif cat == C_GSET:
                state.globals[instr.args[0]] = stack.pop()
            elif cat == C_BRIF:
                cond = stack.pop()
                if host.select(state, cond, ("br_if", cond, instr.args[0])):
                    results = _do_branch(state, instr.args[0])
                    if results is not None:
                        return ("done", EvalOutcome(OUTCOME_OK, results=tuple(results)))
            elif cat == C_BR:
                results = _do_branch(state, instr.args[0])
                if results is not None:
                    return ("done", EvalOutcome(OUTCOME_OK, results=tuple(results)))
            elif cat == C_IF:
                result, then_b, else_b = instr.args
                cond = stack.pop()
                taken = host.select(state, cond, ("if", cond, then_b, else_b, result))
                body = then_b if taken else else_b
                ctrl.append([body, 0, "if", 1 if result else 0, len(stack)])
            elif cat == C_BLOCK or cat == C_LOOP:
                result, body = instr.args
                ctrl.append([body, 0, "block" if cat == C_BLOCK else "loop",
                             1 if result else 0, len(stack)])
            elif cat == C_EQZ:
                stack.append(sym_eqz(info[1], stack.pop()))
            elif cat == C_CALL:
                call_function_or_intrinsic(state, instr.args[0], host)
            elif cat == C_CALLIND:
                idx = stack.pop()
                k = host.call_indirect(state, instr.args[0], idx)
                call_function_or_intrinsic(
                    state, validate_table_call(state, instr.args[0], k), host)
            elif cat == C_RET:
                results = _function_return(state)
                if results is not None:
                    return ("done", EvalOutcome(OUTCOME_OK, results=tuple(results)))
            elif cat == C_DROP:
                stack.pop()
            elif cat == C_SELECT:
                cond = stack.pop()
                v2 = stack.pop()
                v1 = stack.pop()
                taken = host.select(state, cond, ("select", cond, v1, v2))
                stack.append(v1 if taken else v2)
            elif cat == C_LOAD:
                addr = stack.pop()
                host.mem_load(state, info, instr.args[0], addr)
            elif cat == C_STORE:
                value = stack.pop()
                addr = stack.pop()
                host.mem_store(state, info, instr.args[0], addr, value)
            elif cat == C_MEMSIZE:
                stack.append(state.mem.pages())
            elif cat == C_MEMGROW:
                delta = stack.pop()
                grown = state.mem.grow(host.concretize(state, delta, 32))
                stack.append(grown & 0xFFFFFFFF)
            elif cat == C_WRAP:
                stack.append(sym_extract(stack.pop(), 3, 0, 64))
            elif cat == C_EXT:
                stack.append(sym_extend(info[1], 64, stack.pop()))
            elif cat == C_NOP:
                pass
            elif cat == C_UNREACH:
                return ("done", EvalOutcome(OUTCOME_TRAP, trap_kind=TRAP_UNREACHABLE))
            else:
                raise InternalEngineError(f"unhandled opcode {instr.op}")
    except OutcomeSignal as sig:
        return ("done", sig.outcome)
    except TrapSignal as sig:
        return ("done", EvalOutcome(OUTCOME_TRAP, trap_kind=sig.kind))
    except Suspend:
        return ("suspended", None)
    except PathStop:
        return ("stopped", None)
    except Incomplete as inc:
        return ("incomplete", inc.reason)
    finally:
        state.fuel = fuel
        state.executed += start_fuel - fuel


def start_state(inst, main_idx: int, fuel: int, yield_interval: int) -> ThreadState:
    state = ThreadState(inst, fuel=fuel, yield_interval=yield_interval)
    enter_function(state, main_idx)
    return state
