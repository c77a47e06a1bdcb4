"""Concrete instantiation: the identity effect.

Every operation answers immediately; no coroutines, no scheduler, no solver.
Replay mode feeds fresh-symbol requests from a model, in mint order, which
is how reported findings are validated end to end.
"""

from __future__ import annotations

from wasmsym.errors import TRAP_MESSAGES, TRAP_OOB_MEMORY, ConfigError
from wasmsym.interp import core
from wasmsym.interp.core import advance, start_state, trap
from wasmsym.interp.outcomes import (
    OUTCOME_ASSERT,
    OUTCOME_ASSUME_DIVERGED,
    EvalOutcome,
)
from wasmsym.values import concrete
from wasmsym.wat.link import Instance, find_main


class ConcreteHost:
    """Identity effect: conditions are ints, arithmetic traps immediately."""

    def __init__(self, model: dict | None = None):
        self.model = model  # replay source, or None

    def select(self, state, cond, pending) -> bool:
        return cond != 0

    def binop(self, state, op, width, a, b):
        return concrete.binop(op, width, a, b)

    def fresh(self, state, width):
        if self.model is None:
            raise ConfigError(
                "symbolic intrinsics need the sym command (or replay with a model)"
            )
        ident = state.sym_count
        state.sym_count += 1
        if ident not in self.model:
            raise ConfigError(f"model has no value for symbol_{ident}")
        got_width, bits = self.model[ident]
        if got_width != width:
            raise ConfigError(
                f"model width mismatch for symbol_{ident}: "
                f"declared i{got_width}, program wants i{width}"
            )
        return bits

    def assume(self, state, v):
        if v == 0:
            raise core.OutcomeSignal(EvalOutcome(OUTCOME_ASSUME_DIVERGED))

    def assert_(self, state, v):
        if v == 0:
            raise core.OutcomeSignal(EvalOutcome(OUTCOME_ASSERT, rendered="false"))

    def call_indirect(self, state, type_idx, idx):
        return idx

    def concretize(self, state, v, width):
        return v

    def mem_load(self, state, info, offset, addr):
        _, width_bytes, sign, result_width = info
        ea = addr + offset
        mem = state.mem
        if ea + width_bytes > mem.size:
            raise trap(TRAP_OOB_MEMORY)
        state.stack.append(mem.load(ea, width_bytes, sign, result_width))

    def mem_store(self, state, info, offset, addr, value):
        width_bytes = info[1]
        ea = addr + offset
        mem = state.mem
        if ea + width_bytes > mem.size:
            raise trap(TRAP_OOB_MEMORY)
        mem.store(ea, value, width_bytes)


def run_concrete(inst: Instance, *, fuel: int = 1_000_000,
                 model: dict | None = None) -> EvalOutcome:
    """Execute exactly one path of main; returns its outcome."""
    if model is None and inst.intrinsics:
        raise ConfigError(
            "module imports symbolic intrinsics; use the sym command, or "
            "replay with a model"
        )
    main_idx = find_main(inst)
    state = start_state(inst, main_idx, fuel, yield_interval=0)
    host = ConcreteHost(model)
    kind, payload = advance(state, host)
    if kind != "done":
        raise ConfigError(f"concrete execution cannot {kind}")
    return payload
