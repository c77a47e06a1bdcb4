"""Per-path machine state.

A ThreadState is owned by exactly one worker at a time; cloning at a choice
point copies stacks and locals eagerly (they are small) and forks the memory
snapshot in O(1). For cross-process transfers the instance travels as a
registry token: worker processes are forked from the parent after the
instance is registered, so they resolve the token locally.
"""

from __future__ import annotations

import itertools

from wasmsym.errors import InternalEngineError
from wasmsym.memory import MemorySnapshot
from wasmsym.wat.link import Instance

_REGISTRY: dict[int, Instance] = {}
_TOKENS = itertools.count(1)


def register_instance(inst: Instance) -> int:
    for token, existing in _REGISTRY.items():
        if existing is inst:
            return token
    token = next(_TOKENS)
    _REGISTRY[token] = inst
    return token


def resolve_instance(token: int) -> Instance:
    try:
        return _REGISTRY[token]
    except KeyError:
        raise InternalEngineError(
            "instance token not registered in this process (worker not forked "
            "from the registering parent?)"
        ) from None


class Frame:
    __slots__ = ("func_idx", "locals", "ret_arity", "stack_base", "ctrl_base")

    def __init__(self, func_idx, locals_, ret_arity, stack_base, ctrl_base):
        self.func_idx = func_idx
        self.locals = locals_
        self.ret_arity = ret_arity
        self.stack_base = stack_base
        self.ctrl_base = ctrl_base

    def clone(self) -> "Frame":
        return Frame(self.func_idx, list(self.locals), self.ret_arity,
                     self.stack_base, self.ctrl_base)


# Control stack entries are mutable lists:
#   [code: tuple[Instr], ip: int, kind: str, arity: int, stack_base: int]
K_CODE, K_IP, K_KIND, K_ARITY, K_BASE = range(5)


class ThreadState:
    __slots__ = (
        "inst_token", "inst", "globals", "stack", "frames", "ctrl", "mem",
        "pc", "sym_count", "sym_widths", "fuel", "next_yield", "yield_interval",
        "pending", "concretized", "executed",
    )

    def __init__(self, inst: Instance, fuel: int = 1_000_000,
                 yield_interval: int = 10_000):
        self.inst_token = register_instance(inst)
        self.inst = inst
        self.globals = [g.init for g in inst.module.globals]
        self.stack: list = []
        self.frames: list[Frame] = []
        self.ctrl: list[list] = []
        mem = inst.module.memory
        self.mem = MemorySnapshot.new(mem.min_pages, mem.max_pages) if mem else None
        self.pc: tuple = ()
        self.sym_count = 0
        self.sym_widths: list[int] = []
        self.fuel = fuel
        self.yield_interval = yield_interval
        self.next_yield = (fuel - yield_interval) if yield_interval else -1
        self.pending: tuple | None = None
        self.concretized = 0
        self.executed = 0

    def clone(self) -> "ThreadState":
        other = object.__new__(ThreadState)
        other.inst_token = self.inst_token
        other.inst = self.inst
        other.globals = list(self.globals)
        other.stack = list(self.stack)
        other.frames = [f.clone() for f in self.frames]
        other.ctrl = [entry.copy() for entry in self.ctrl]
        other.mem = self.mem  # callers re-point both sides after mem.fork()
        other.pc = self.pc
        other.sym_count = self.sym_count
        other.sym_widths = list(self.sym_widths)
        other.fuel = self.fuel
        other.yield_interval = self.yield_interval
        other.next_yield = self.next_yield
        other.pending = self.pending
        other.concretized = self.concretized
        other.executed = self.executed
        return other

    def fork_pair(self) -> "tuple[ThreadState, ThreadState]":
        """Two isolated successors of this state (self must not be reused)."""
        twin = self.clone()
        if self.mem is not None:
            ma, mb = self.mem.fork()
            twin.mem = ma
            self.mem = mb
        return twin, self

    def __reduce__(self):
        payload = (
            self.inst_token, self.globals, self.stack,
            [(f.func_idx, f.locals, f.ret_arity, f.stack_base, f.ctrl_base)
             for f in self.frames],
            self.ctrl, self.mem, self.pc, self.sym_count, self.sym_widths,
            self.fuel, self.yield_interval, self.next_yield, self.pending,
            self.concretized, self.executed,
        )
        return (_rebuild_state, payload)


def _rebuild_state(inst_token, globals_, stack, frames, ctrl, mem, pc, sym_count,
                   sym_widths, fuel, yield_interval, next_yield, pending,
                   concretized, executed):
    st = object.__new__(ThreadState)
    st.inst_token = inst_token
    st.inst = resolve_instance(inst_token)
    st.globals = globals_
    st.stack = stack
    st.frames = [Frame(*f) for f in frames]
    st.ctrl = ctrl
    st.mem = mem
    st.pc = pc
    st.sym_count = sym_count
    st.sym_widths = sym_widths
    st.fuel = fuel
    st.yield_interval = yield_interval
    st.next_yield = next_yield
    st.pending = pending
    st.concretized = concretized
    st.executed = executed
    return st
