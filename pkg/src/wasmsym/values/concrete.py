"""Concrete two's-complement integer semantics for the supported opcodes.

Values are canonical unsigned Python ints in [0, 2**width). Signedness is a
view applied per opcode, exactly as in Wasm.
"""

from wasmsym.errors import (
    TRAP_DIV_BY_ZERO,
    TRAP_INT_OVERFLOW,
    TRAP_MESSAGES,
    TrapSignal,
)

BINOPS = (
    "add", "sub", "mul", "div_s", "div_u", "rem_s", "rem_u",
    "and", "or", "xor", "shl", "shr_s", "shr_u",
)
RELOPS = ("eq", "ne", "lt_s", "lt_u", "gt_s", "gt_u", "le_s", "le_u", "ge_s", "ge_u")

# Ops that can never trap (div/rem excluded).
TOTAL_BINOPS = ("add", "sub", "mul", "and", "or", "xor", "shl", "shr_s", "shr_u")


def mask(width: int, v: int) -> int:
    return v & ((1 << width) - 1)


def to_signed(width: int, bits: int) -> int:
    if bits >= 1 << (width - 1):
        return bits - (1 << width)
    return bits


def to_unsigned(width: int, v: int) -> int:
    return v & ((1 << width) - 1)


def binop(op: str, width: int, a: int, b: int) -> int:
    """Apply a Wasm integer binop; a is second-from-top, b is top of stack.

    Raises TrapSignal for division by zero and div_s overflow.
    """
    m = (1 << width) - 1
    if op == "add":
        return (a + b) & m
    if op == "sub":
        return (a - b) & m
    if op == "mul":
        return (a * b) & m
    if op == "and":
        return a & b
    if op == "or":
        return a | b
    if op == "xor":
        return a ^ b
    if op == "shl":
        return (a << (b % width)) & m
    if op == "shr_u":
        return a >> (b % width)
    if op == "shr_s":
        return to_unsigned(width, to_signed(width, a) >> (b % width))
    if op == "div_u":
        if b == 0:
            raise TrapSignal(TRAP_DIV_BY_ZERO, TRAP_MESSAGES[TRAP_DIV_BY_ZERO])
        return a // b
    if op == "rem_u":
        if b == 0:
            raise TrapSignal(TRAP_DIV_BY_ZERO, TRAP_MESSAGES[TRAP_DIV_BY_ZERO])
        return a % b
    if op == "div_s":
        if b == 0:
            raise TrapSignal(TRAP_DIV_BY_ZERO, TRAP_MESSAGES[TRAP_DIV_BY_ZERO])
        sa, sb = to_signed(width, a), to_signed(width, b)
        if sa == -(1 << (width - 1)) and sb == -1:
            raise TrapSignal(TRAP_INT_OVERFLOW, TRAP_MESSAGES[TRAP_INT_OVERFLOW])
        # Wasm div_s truncates toward zero; Python // floors.
        q = abs(sa) // abs(sb)
        if (sa < 0) != (sb < 0):
            q = -q
        return to_unsigned(width, q)
    if op == "rem_s":
        if b == 0:
            raise TrapSignal(TRAP_DIV_BY_ZERO, TRAP_MESSAGES[TRAP_DIV_BY_ZERO])
        sa, sb = to_signed(width, a), to_signed(width, b)
        r = abs(sa) % abs(sb)
        if sa < 0:
            r = -r
        return to_unsigned(width, r)
    raise ValueError(f"unknown binop {op!r}")


def relop(op: str, width: int, a: int, b: int) -> int:
    """Apply a Wasm comparison; returns 1 or 0 (an i32 value)."""
    if op == "eq":
        return 1 if a == b else 0
    if op == "ne":
        return 1 if a != b else 0
    if op in ("lt_u", "gt_u", "le_u", "ge_u"):
        x, y = a, b
    else:
        x, y = to_signed(width, a), to_signed(width, b)
    base = op[:2]
    if base == "lt":
        return 1 if x < y else 0
    if base == "gt":
        return 1 if x > y else 0
    if base == "le":
        return 1 if x <= y else 0
    if base == "ge":
        return 1 if x >= y else 0
    raise ValueError(f"unknown relop {op!r}")


def eqz(width: int, a: int) -> int:
    return 1 if a == 0 else 0


def total_binop(op: str, width: int, a: int, b: int) -> int:
    """Like binop but total: division edge cases get SMT-LIB bitvector results.

    Used by expression evaluation (folding oracle, model validation, brute
    force enumeration) which must never trap; the interpreter itself forks
    on the trapping cases before any division expression is built.
    """
    if b == 0 and op in ("div_u", "div_s", "rem_u", "rem_s"):
        m = (1 << width) - 1
        if op == "div_u":
            return m
        if op == "rem_u" or op == "rem_s":
            return a
        # bvsdiv x 0 is -1 for non-negative x, 1 otherwise
        return m if to_signed(width, a) >= 0 else 1
    if op == "div_s" and to_signed(width, a) == -(1 << (width - 1)) and to_signed(width, b) == -1:
        return a  # bvsdiv INT_MIN -1 = INT_MIN
    return binop(op, width, a, b)
