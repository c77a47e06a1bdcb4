"""Stack type-checking for the supported subset.

Standard Wasm validation algorithm restricted to i32/i64 and block types
[] -> [] / [] -> [t]; the unreachable flag per control frame implements the
usual stack polymorphism after br/return/unreachable.
"""

from __future__ import annotations

from dataclasses import dataclass

from wasmsym.errors import ValidationError
from wasmsym.wat.ast import (
    BINOP_NAMES,
    I32,
    I64,
    LOAD_OPS,
    RELOP_NAMES,
    STORE_OPS,
    Instr,
    Module,
)

UNKNOWN = "unknown"


@dataclass(frozen=True)
class ValidatedModule:
    module: Module


class _Ctrl:
    __slots__ = ("opcode", "results", "height", "unreachable")

    def __init__(self, opcode: str, results: tuple[str, ...], height: int):
        self.opcode = opcode
        self.results = results
        self.height = height
        self.unreachable = False

    def label_types(self) -> tuple[str, ...]:
        # loops branch to their start, which takes no values in this subset
        return () if self.opcode == "loop" else self.results


class _FuncChecker:
    def __init__(self, module: Module, func_idx: int):
        self.m = module
        self.func_idx = func_idx
        self.vals: list[str] = []
        self.ctrls: list[_Ctrl] = []
        self.path: list[int] = []

    def err(self, msg: str):
        offset = ".".join(str(p) for p in self.path)
        raise ValidationError(msg, self.func_idx, offset)

    # -- operand stack

    def push(self, t: str):
        self.vals.append(t)

    def pop(self, expect: str | None = None) -> str:
        frame = self.ctrls[-1]
        if len(self.vals) == frame.height:
            if frame.unreachable:
                return expect or UNKNOWN
            self.err(f"stack underflow, expected {expect or 'a value'}")
        got = self.vals.pop()
        if expect is not None and got != UNKNOWN and got != expect:
            self.err(f"type mismatch: expected {expect}, found {got}")
        return got

    def push_ctrl(self, opcode: str, results: tuple[str, ...]):
        self.ctrls.append(_Ctrl(opcode, results, len(self.vals)))

    def pop_ctrl(self) -> tuple[str, ...]:
        frame = self.ctrls[-1]
        for t in reversed(frame.results):
            self.pop(t)
        if len(self.vals) != frame.height:
            self.err("values left on stack at end of block")
        self.ctrls.pop()
        return frame.results

    def set_unreachable(self):
        frame = self.ctrls[-1]
        del self.vals[frame.height:]
        frame.unreachable = True

    # -- instruction dispatch

    def check_func(self, ftype, local_types: tuple[str, ...], body: tuple[Instr, ...]):
        self.locals = tuple(ftype.params) + local_types
        self.results = ftype.results
        self.push_ctrl("func", ftype.results)
        self.check_body(body)
        self.pop_ctrl()

    def check_body(self, body: tuple[Instr, ...]):
        for i, ins in enumerate(body):
            self.path.append(i)
            self.check_instr(ins)
            self.path.pop()

    def check_instr(self, ins: Instr):
        op = ins.op
        m = self.m
        if "." in op:
            prefix, _, name = op.partition(".")
            if prefix in (I32, I64) and name in BINOP_NAMES:
                self.pop(prefix)
                self.pop(prefix)
                self.push(prefix)
                return
            if prefix in (I32, I64) and name in RELOP_NAMES:
                self.pop(prefix)
                self.pop(prefix)
                self.push(I32)
                return
            if prefix in (I32, I64) and name == "eqz":
                self.pop(prefix)
                self.push(I32)
                return
            if op in ("i32.const", "i64.const"):
                self.push(prefix)
                return
            if op == "i32.wrap_i64":
                self.pop(I64)
                self.push(I32)
                return
            if op in ("i64.extend_i32_s", "i64.extend_i32_u"):
                self.pop(I32)
                self.push(I64)
                return
            if op in LOAD_OPS:
                self.need_memory(op)
                self.pop(I32)
                self.push(LOAD_OPS[op][1])
                return
            if op in STORE_OPS:
                self.need_memory(op)
                self.pop(STORE_OPS[op][1])
                self.pop(I32)
                return
            if op == "memory.size":
                self.need_memory(op)
                self.push(I32)
                return
            if op == "memory.grow":
                self.need_memory(op)
                self.pop(I32)
                self.push(I32)
                return
            if op in ("local.get", "local.set", "local.tee"):
                idx = ins.args[0]
                if idx >= len(self.locals):
                    self.err(f"local index {idx} out of range")
                t = self.locals[idx]
                if op == "local.get":
                    self.push(t)
                elif op == "local.set":
                    self.pop(t)
                else:
                    self.pop(t)
                    self.push(t)
                return
            if op in ("global.get", "global.set"):
                idx = ins.args[0]
                if idx >= len(m.globals):
                    self.err(f"global index {idx} out of range")
                g = m.globals[idx]
                if op == "global.get":
                    self.push(g.type)
                else:
                    if not g.mutable:
                        self.err(f"global {idx} is immutable")
                    self.pop(g.type)
                return
        if op == "nop":
            return
        if op == "drop":
            self.pop()
            return
        if op == "select":
            self.pop(I32)
            t1 = self.pop()
            t2 = self.pop()
            if t1 == UNKNOWN:
                t1 = t2
            if t2 != UNKNOWN and t1 != t2:
                self.err(f"select operands disagree: {t1} vs {t2}")
            self.push(t1)
            return
        if op == "unreachable":
            self.set_unreachable()
            return
        if op == "block" or op == "loop":
            result, body = ins.args
            self.push_ctrl(op, (result,) if result else ())
            self.check_body(body)
            for t in self.pop_ctrl():
                self.push(t)
            return
        if op == "if":
            result, then_b, else_b = ins.args
            results = (result,) if result else ()
            if result and not else_b:
                self.err("if with a result needs an else arm")
            self.pop(I32)
            height = len(self.vals)
            self.push_ctrl("if", results)
            self.check_body(then_b)
            self.pop_ctrl()
            self.push_ctrl("if", results)
            self.check_body(else_b)
            for t in self.pop_ctrl():
                self.push(t)
            return
        if op == "br" or op == "br_if":
            depth = ins.args[0]
            if depth >= len(self.ctrls):
                self.err(f"branch depth {depth} out of range")
            target = self.ctrls[-1 - depth]
            if op == "br_if":
                self.pop(I32)
                for t in reversed(target.label_types()):
                    self.pop(t)
                for t in target.label_types():
                    self.push(t)
            else:
                for t in reversed(target.label_types()):
                    self.pop(t)
                self.set_unreachable()
            return
        if op == "return":
            for t in reversed(self.results):
                self.pop(t)
            self.set_unreachable()
            return
        if op == "call":
            idx = ins.args[0]
            n_space = len(m.imports) + len(m.funcs)
            if idx >= n_space:
                self.err(f"function index {idx} out of range")
            ft = m.func_type(idx)
            for t in reversed(ft.params):
                self.pop(t)
            for t in ft.results:
                self.push(t)
            return
        if op == "call_indirect":
            if m.table is None:
                self.err("call_indirect without a table")
            tidx = ins.args[0]
            if tidx >= len(m.types):
                self.err(f"type index {tidx} out of range")
            ft = m.types[tidx]
            self.pop(I32)
            for t in reversed(ft.params):
                self.pop(t)
            for t in ft.results:
                self.push(t)
            return
        self.err(f"unknown opcode {op!r}")

    def need_memory(self, op: str):
        if self.m.memory is None:
            self.err(f"{op} without a memory")


def validate(m: Module) -> ValidatedModule:
    """Type-check every function body; returns the module tagged validated."""
    for imp_or_func in m.imports:
        if imp_or_func.type_idx >= len(m.types):
            raise ValidationError("import type index out of range")
    if m.table is not None:
        n_space = len(m.imports) + len(m.funcs)
        for e in m.table.elems:
            if e is not None and e >= n_space:
                raise ValidationError("table element out of function index range")
    for e in m.exports:
        if e.func_idx >= len(m.imports) + len(m.funcs):
            raise ValidationError(f"export {e.name!r} references unknown function")
    for i, f in enumerate(m.funcs):
        if f.type_idx >= len(m.types):
            raise ValidationError("function type index out of range", i)
        checker = _FuncChecker(m, len(m.imports) + i)
        checker.check_func(m.types[f.type_idx], f.locals, f.body)
    return ValidatedModule(m)
