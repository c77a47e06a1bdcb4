"""Import resolution against the symbolic intrinsic namespace.

The only importable module is "owi":

    "i32_symbol" : [] -> [i32]     mint a fresh 32-bit symbol
    "i64_symbol" : [] -> [i64]     mint a fresh 64-bit symbol
    "assume"     : [i32] -> []     constrain the current path
    "assert"     : [i32] -> []     check a property on the current path
"""

from __future__ import annotations

from dataclasses import dataclass, field

from wasmsym.errors import LinkError
from wasmsym.wat.ast import PAGE_SIZE, FuncType, Module
from wasmsym.wat.validate import ValidatedModule

I32_SYMBOL = "i32_symbol"
I64_SYMBOL = "i64_symbol"
ASSUME = "assume"
ASSERT = "assert"

INTRINSIC_MODULE = "owi"
INTRINSIC_SIGNATURES = {
    I32_SYMBOL: FuncType((), ("i32",)),
    I64_SYMBOL: FuncType((), ("i64",)),
    ASSUME: FuncType(("i32",), ()),
    ASSERT: FuncType(("i32",), ()),
}


@dataclass(frozen=True)
class Instance:
    """An executable module: imports bound, initial state materialized.

    Shared read-only between workers; all mutable run state (globals,
    memory content, stacks) lives in per-path thread state.
    """

    module: Module
    intrinsics: dict[int, str]  # function index -> intrinsic id
    exports: dict[str, int] = field(default_factory=dict)

    @property
    def memory_min_bytes(self) -> int:
        return self.module.memory.min_pages * PAGE_SIZE if self.module.memory else 0

    def func_type(self, idx: int) -> FuncType:
        return self.module.func_type(idx)


def link(vm: ValidatedModule) -> Instance:
    """Bind every import to an intrinsic; reject anything else."""
    m = vm.module
    intrinsics: dict[int, str] = {}
    for i, imp in enumerate(m.imports):
        if imp.module != INTRINSIC_MODULE or imp.name not in INTRINSIC_SIGNATURES:
            raise LinkError(f'unknown import "{imp.module}" "{imp.name}"')
        expected = INTRINSIC_SIGNATURES[imp.name]
        if m.types[imp.type_idx] != expected:
            raise LinkError(
                f'import "{imp.module}" "{imp.name}" signature mismatch: '
                f"expected {expected.params} -> {expected.results}"
            )
        intrinsics[i] = imp.name
    exports = {e.name: e.func_idx for e in m.exports}
    return Instance(module=m, intrinsics=intrinsics, exports=exports)


def find_main(inst: Instance) -> int:
    """Entry point: an exported parameterless function named main."""
    if "main" not in inst.exports:
        raise LinkError('no exported function named "main"')
    idx = inst.exports["main"]
    if idx in inst.intrinsics:
        raise LinkError('exported "main" must be a defined function')
    ft = inst.func_type(idx)
    if ft.params:
        raise LinkError('exported "main" must take no parameters')
    return idx
