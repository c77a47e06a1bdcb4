"""Module structure for the supported subset.

Instruction immediates live in ``Instr.args``:

    i32.const / i64.const      (bits,)            canonical unsigned
    local.* / global.*         (index,)
    call                       (func_index,)
    call_indirect              (type_index,)
    br / br_if                 (label_depth,)
    loads / stores             (byte_offset,)
    block / loop               (result, body)     result: "i32" | "i64" | None
    if                         (result, then_body, else_body)

Structured bodies are tuples of Instr; there are no flat jump targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

I32 = "i32"
I64 = "i64"
PAGE_SIZE = 65536


@dataclass(frozen=True)
class FuncType:
    params: tuple[str, ...]
    results: tuple[str, ...]


@dataclass(frozen=True)
class Instr:
    op: str
    args: tuple = ()


@dataclass(frozen=True)
class Func:
    name: str | None
    type_idx: int
    locals: tuple[str, ...]
    body: tuple[Instr, ...]


@dataclass(frozen=True)
class Import:
    module: str
    name: str
    type_idx: int


@dataclass(frozen=True)
class Global:
    name: str | None
    type: str
    mutable: bool
    init: int  # canonical unsigned bits


@dataclass(frozen=True)
class MemoryDecl:
    min_pages: int
    max_pages: int | None = None


@dataclass(frozen=True)
class TableDecl:
    size: int
    elems: tuple[int | None, ...]  # function indices; None = uninitialized slot


@dataclass(frozen=True)
class Export:
    name: str
    func_idx: int


@dataclass(frozen=True)
class Module:
    types: tuple[FuncType, ...] = ()
    imports: tuple[Import, ...] = ()
    funcs: tuple[Func, ...] = ()
    globals: tuple[Global, ...] = ()
    memory: MemoryDecl | None = None
    table: TableDecl | None = None
    exports: tuple[Export, ...] = ()

    def func_type(self, func_idx: int) -> FuncType:
        """Type of a function in the combined import+local index space."""
        n = len(self.imports)
        if func_idx < n:
            return self.types[self.imports[func_idx].type_idx]
        return self.types[self.funcs[func_idx - n].type_idx]


BINOP_NAMES = (
    "add", "sub", "mul", "div_s", "div_u", "rem_s", "rem_u",
    "and", "or", "xor", "shl", "shr_s", "shr_u",
)
RELOP_NAMES = ("eq", "ne", "lt_s", "lt_u", "gt_s", "gt_u", "le_s", "le_u", "ge_s", "ge_u")

# op -> (width_bytes, result_type, sign) for loads; stores analogous.
LOAD_OPS = {
    "i32.load": (4, I32, None),
    "i64.load": (8, I64, None),
    "i32.load8_s": (1, I32, "s"),
    "i32.load8_u": (1, I32, "u"),
    "i32.load16_s": (2, I32, "s"),
    "i32.load16_u": (2, I32, "u"),
}
STORE_OPS = {
    "i32.store": (4, I32),
    "i64.store": (8, I64),
    "i32.store8": (1, I32),
    "i32.store16": (2, I32),
}
