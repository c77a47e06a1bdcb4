"""Pretty-printer producing canonical .wat text that parses back to an
identical Module (names kept, labels and param names dropped as they are
already resolved to indices)."""

from __future__ import annotations

from wasmsym.values.concrete import to_signed
from wasmsym.wat.ast import Func, FuncType, Instr, Module


def _sig(ft: FuncType) -> str:
    parts = []
    if ft.params:
        parts.append("(param " + " ".join(ft.params) + ")")
    if ft.results:
        parts.append("(result " + " ".join(ft.results) + ")")
    return " ".join(parts)


def _instrs(body: tuple[Instr, ...], indent: str, out: list[str]):
    for ins in body:
        op = ins.op
        if op in ("block", "loop"):
            result, inner = ins.args
            rt = f" (result {result})" if result else ""
            out.append(f"{indent}{op}{rt}")
            _instrs(inner, indent + "  ", out)
            out.append(f"{indent}end")
        elif op == "if":
            result, then_b, else_b = ins.args
            rt = f" (result {result})" if result else ""
            out.append(f"{indent}if{rt}")
            _instrs(then_b, indent + "  ", out)
            if else_b:
                out.append(f"{indent}else")
                _instrs(else_b, indent + "  ", out)
            out.append(f"{indent}end")
        elif op in ("i32.const", "i64.const"):
            width = 32 if op == "i32.const" else 64
            out.append(f"{indent}{op} {to_signed(width, ins.args[0])}")
        elif op == "call_indirect":
            out.append(f"{indent}call_indirect (type {ins.args[0]})")
        elif op.endswith((".load", ".store")) or ".load" in op or ".store" in op:
            off = ins.args[0]
            out.append(f"{indent}{op}" + (f" offset={off}" if off else ""))
        elif ins.args:
            out.append(f"{indent}{op} " + " ".join(str(a) for a in ins.args))
        else:
            out.append(f"{indent}{op}")


def print_module(m: Module) -> str:
    out: list[str] = ["(module"]
    for ft in m.types:
        body = _sig(ft)
        out.append(f"  (type (func{' ' + body if body else ''}))")
    for imp in m.imports:
        out.append(f'  (import "{imp.module}" "{imp.name}" (func (type {imp.type_idx})))')
    for f in m.funcs:
        name = f" ${f.name}" if f.name else ""
        out.append(f"  (func{name} (type {f.type_idx})")
        if f.locals:
            out.append("    (local " + " ".join(f.locals) + ")")
        _instrs(f.body, "    ", out)
        out.append("  )")
    for g in m.globals:
        name = f" ${g.name}" if g.name else ""
        ty = f"(mut {g.type})" if g.mutable else g.type
        width = 32 if g.type == "i32" else 64
        out.append(f"  (global{name} {ty} ({g.type}.const {to_signed(width, g.init)}))")
    if m.memory is not None:
        mx = f" {m.memory.max_pages}" if m.memory.max_pages is not None else ""
        out.append(f"  (memory {m.memory.min_pages}{mx})")
    if m.table is not None:
        out.append(f"  (table {m.table.size} funcref)")
        run_start = None
        elems = m.table.elems
        k = 0
        while k < len(elems):
            if elems[k] is None:
                k += 1
                continue
            start = k
            while k < len(elems) and elems[k] is not None:
                k += 1
            seg = " ".join(str(e) for e in elems[start:k])
            out.append(f"  (elem (i32.const {start}) {seg})")
    for e in m.exports:
        out.append(f'  (export "{e.name}" (func {e.func_idx}))')
    out.append(")")
    return "\n".join(out) + "\n"
