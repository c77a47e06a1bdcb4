"""Linear memory as chained copy-on-write snapshots.

A snapshot stores only the bytes written since its parent; reads walk the
chain and bottom out at zero (Wasm memory is zero-initialized, so the root
needs no backing array at all). Forking freezes the current snapshot and
hands out two empty children: O(1) in memory size.

Byte values are plain ints 0..255 for concrete data, or width-8 symbolic
expressions. Multi-byte accesses are little-endian.
"""

from __future__ import annotations

from wasmsym.errors import InternalEngineError
from wasmsym.values.symbolic import (
    Const,
    SymExpr,
    sym_concat,
    sym_extend,
    sym_extract,
    width_of,
)

PAGE_SIZE = 65536


class MemorySnapshot:
    __slots__ = ("parent", "mods", "size", "max_pages", "frozen")

    def __init__(self, size: int, max_pages: int | None = None,
                 parent: "MemorySnapshot | None" = None):
        self.parent = parent
        self.mods: dict[int, int | SymExpr] = {}
        self.size = size
        self.max_pages = max_pages
        self.frozen = False

    # -- construction

    @staticmethod
    def new(min_pages: int, max_pages: int | None = None) -> "MemorySnapshot":
        if max_pages is not None and max_pages < min_pages:
            raise InternalEngineError("memory max below min")
        return MemorySnapshot(min_pages * PAGE_SIZE, max_pages)

    def fork(self) -> "tuple[MemorySnapshot, MemorySnapshot]":
        """Freeze this snapshot and return two isolated children."""
        self.frozen = True
        # A snapshot with no writes of its own adds nothing to the chain.
        base = self.parent if (not self.mods and self.parent is not None) else self
        a = MemorySnapshot(self.size, self.max_pages, base)
        b = MemorySnapshot(self.size, self.max_pages, base)
        return a, b

    # -- byte access (bounds are the interpreter's responsibility)

    def _byte(self, addr: int) -> int | SymExpr:
        m: MemorySnapshot | None = self
        while m is not None:
            v = m.mods.get(addr)
            if v is not None:
                return v
            m = m.parent
        return 0

    def load(self, addr: int, width_bytes: int, sign: str | None, result_width: int):
        """Load width_bytes little-endian, then zero/sign extend to result_width."""
        if addr < 0 or addr + width_bytes > self.size:
            raise InternalEngineError("unchecked out-of-bounds load")
        value = self._byte(addr)
        if width_bytes > 1:
            all_int = isinstance(value, int)
            acc = value
            for k in range(1, width_bytes):
                b = self._byte(addr + k)
                if all_int and isinstance(b, int):
                    acc = acc | (b << (8 * k))
                else:
                    all_int = False
                    acc = sym_concat(b, acc, 8, 8 * k)
            value = acc
        loaded_width = 8 * width_bytes
        if loaded_width == result_width:
            return value
        return sym_extend(sign or "u", result_width, _at_width(value, loaded_width))

    def store(self, addr: int, value, width_bytes: int):
        """Write the low width_bytes of value at addr."""
        if self.frozen:
            raise InternalEngineError("write into a frozen memory snapshot")
        if addr < 0 or addr + width_bytes > self.size:
            raise InternalEngineError("unchecked out-of-bounds store")
        mods = self.mods
        if isinstance(value, int):
            for k in range(width_bytes):
                mods[addr + k] = (value >> (8 * k)) & 0xFF
        else:
            src_width = width_of(value)
            for k in range(width_bytes):
                mods[addr + k] = sym_extract(value, k, k, src_width)

    # -- size management

    def pages(self) -> int:
        return self.size // PAGE_SIZE

    def grow(self, delta_pages: int) -> int:
        """Returns the old size in pages, or -1 if the growth is refused."""
        if self.frozen:
            raise InternalEngineError("grow of a frozen memory snapshot")
        old = self.pages()
        new = old + delta_pages
        if delta_pages < 0 or new > 65536:
            return -1
        if self.max_pages is not None and new > self.max_pages:
            return -1
        self.size = new * PAGE_SIZE
        return old

    # -- serialization: chains flatten to a single root-level snapshot,
    #    preserving every lookup (checked against the naive oracle in tests)

    def _flat_mods(self) -> dict[int, int | SymExpr]:
        chain = []
        m: MemorySnapshot | None = self
        while m is not None:
            chain.append(m)
            m = m.parent
        merged: dict[int, int | SymExpr] = {}
        for m in reversed(chain):
            merged.update(m.mods)
        return merged

    def __reduce__(self):
        return (_rebuild_snapshot, (self.size, self.max_pages, self._flat_mods(), self.frozen))

    def retained_bytes(self) -> int:
        """Distinct bytes stored along this chain (cost accounting)."""
        return len(self._flat_mods())


def _rebuild_snapshot(size, max_pages, mods, frozen):
    m = MemorySnapshot(size, max_pages)
    m.mods = mods
    m.frozen = frozen
    return m


def _at_width(value, width: int):
    """Tag a plain int with a width for extend's benefit (no-op for exprs)."""
    if isinstance(value, int):
        return Const(width, value)
    return value
