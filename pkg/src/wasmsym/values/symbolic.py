"""Symbolic bitvector expressions with constant folding.

Expression nodes are immutable and structurally shared across execution
branches. Throughout the engine a plain Python int stands for a fully folded
constant; ``Const`` nodes only appear as operands of unfolded operator nodes.
The smart constructors below accept ``int | SymExpr`` operands and return an
int whenever the result folds.

Enabled rewrites (each one is checked against brute-force evaluation in the
test suite before being relied on): full constant folding, x+0, x-0, x*1,
x*0, x^x, x&x, eqz of a constant, and boolean negation of a comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

from wasmsym.values import concrete
from wasmsym.values.concrete import mask, to_signed, total_binop


class SymExpr:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Const(SymExpr):
    width: int
    bits: int  # canonical unsigned


@dataclass(frozen=True, slots=True)
class Symbol(SymExpr):
    ident: int
    width: int


@dataclass(frozen=True, slots=True)
class Binop(SymExpr):
    op: str
    width: int
    lhs: SymExpr
    rhs: SymExpr


@dataclass(frozen=True, slots=True)
class Relop(SymExpr):
    # width is the operand width; the result is always a width-32 0/1 value.
    op: str
    width: int
    lhs: SymExpr
    rhs: SymExpr


@dataclass(frozen=True, slots=True)
class Eqz(SymExpr):
    arg: SymExpr  # result is width-32


@dataclass(frozen=True, slots=True)
class Not(SymExpr):
    arg: SymExpr  # boolean negation of a width-32 truthiness value


@dataclass(frozen=True, slots=True)
class Extract(SymExpr):
    # hi and lo are byte indices, inclusive; width = 8 * (hi - lo + 1)
    arg: SymExpr
    hi: int
    lo: int


@dataclass(frozen=True, slots=True)
class Concat(SymExpr):
    hi: SymExpr
    lo: SymExpr


@dataclass(frozen=True, slots=True)
class Extend(SymExpr):
    kind: str  # "s" or "u"
    width: int  # target width
    arg: SymExpr


RELOP_NEGATION = {
    "eq": "ne", "ne": "eq",
    "lt_s": "ge_s", "ge_s": "lt_s", "gt_s": "le_s", "le_s": "gt_s",
    "lt_u": "ge_u", "ge_u": "lt_u", "gt_u": "le_u", "le_u": "gt_u",
}


def width_of(e: SymExpr) -> int:
    k = type(e)
    if k is Const:
        return e.width
    if k is Symbol:
        return e.width
    if k is Binop:
        return e.width
    if k is Relop or k is Eqz or k is Not:
        return 32
    if k is Extract:
        return 8 * (e.hi - e.lo + 1)
    if k is Concat:
        return width_of(e.hi) + width_of(e.lo)
    if k is Extend:
        return e.width
    raise TypeError(f"not a SymExpr: {e!r}")


def as_expr(width: int, v) -> SymExpr:
    if isinstance(v, int):
        return Const(width, v & ((1 << width) - 1))
    return v


def bits_of(v) -> int | None:
    """Constant bits of an int or Const node, else None."""
    if isinstance(v, int):
        return v
    if type(v) is Const:
        return v.bits
    return None


def sym_binop(op: str, width: int, a, b):
    """Build (or fold) a binary arithmetic node; operands are int | SymExpr."""
    ca, cb = bits_of(a), bits_of(b)
    if ca is not None and cb is not None:
        # Fold with total division semantics; the interpreter forks trapping
        # cases away before building division expressions.
        return total_binop(op, width, ca, cb)
    if op == "add":
        if cb == 0:
            return a
        if ca == 0:
            return b
        # reassociate constant chains: (x + c1) + c2 -> x + (c1 + c2);
        # keeps loop counters flat instead of nesting one add per iteration
        if cb is not None and type(a) is Binop and a.op == "add":
            inner = bits_of(a.rhs)
            if inner is not None:
                folded = (inner + cb) & ((1 << width) - 1)
                if folded == 0:
                    return a.lhs
                return Binop("add", width, a.lhs, Const(width, folded))
    elif op == "sub":
        if cb == 0:
            return a
    elif op == "mul":
        if cb == 1:
            return a
        if ca == 1:
            return b
        if cb == 0 or ca == 0:
            return 0
    elif op == "xor":
        if a is b or a == b:
            return 0
    elif op == "and":
        if a is b or a == b:
            return a
    return Binop(op, width, as_expr(width, a), as_expr(width, b))


def sym_relop(op: str, width: int, a, b):
    ca, cb = bits_of(a), bits_of(b)
    if ca is not None and cb is not None:
        return concrete.relop(op, width, ca, cb)
    return Relop(op, width, as_expr(width, a), as_expr(width, b))


def sym_eqz(width: int, a):
    c = bits_of(a)
    if c is not None:
        return 1 if c == 0 else 0
    return Eqz(as_expr(width, a))


def sym_not(b):
    """Boolean negation of a width-32 truthiness value."""
    c = bits_of(b)
    if c is not None:
        return 0 if c != 0 else 1
    if type(b) is Relop:
        return Relop(RELOP_NEGATION[b.op], b.width, b.lhs, b.rhs)
    if type(b) is Not:
        return b.arg
    return Not(b)


def sym_extend(kind: str, to_width: int, a):
    c = bits_of(a)
    from_width = 32 if isinstance(a, int) else width_of(a)
    if c is not None:
        if kind == "s":
            return to_signed(from_width, c) & ((1 << to_width) - 1)
        return c
    return Extend(kind, to_width, as_expr(from_width, a))


def sym_extract(a, hi: int, lo: int, src_width: int):
    """Extract bytes hi..lo (inclusive) of a value of byte width src_width/8."""
    c = bits_of(a)
    if c is not None:
        return (c >> (8 * lo)) & ((1 << (8 * (hi - lo + 1))) - 1)
    if type(a) is Extract:
        return sym_extract(a.arg, a.lo + hi, a.lo + lo, width_of(a.arg))
    return Extract(as_expr(src_width, a), hi, lo)


def sym_concat(hi, lo, hi_width: int, lo_width: int):
    ch, cl = bits_of(hi), bits_of(lo)
    if ch is not None and cl is not None:
        return (ch << lo_width) | cl
    return Concat(as_expr(hi_width, hi), as_expr(lo_width, lo))


def truthiness(v) -> bool | None:
    """Concrete truth value of an int | SymExpr condition, or None if symbolic."""
    c = bits_of(v)
    if c is None:
        return None
    return c != 0


def iter_symbols(e: SymExpr, acc: dict[int, int] | None = None) -> dict[int, int]:
    """Collect symbol id -> width over an expression DAG."""
    if acc is None:
        acc = {}
    stack = [e]
    seen: set[int] = set()
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        k = type(n)
        if k is Symbol:
            acc[n.ident] = n.width
        elif k is Binop or k is Relop:
            stack.append(n.lhs)
            stack.append(n.rhs)
        elif k is Eqz or k is Not:
            stack.append(n.arg)
        elif k is Extract or k is Extend:
            stack.append(n.arg)
        elif k is Concat:
            stack.append(n.hi)
            stack.append(n.lo)
    return acc


def evaluate(e: SymExpr | int, assignment: dict[int, int]) -> int:
    """Concretely evaluate an expression under a symbol assignment.

    Total: division edge cases use the same fixed semantics as total_binop,
    so enumeration over arbitrary assignments never traps.
    """
    if isinstance(e, int):
        return e
    k = type(e)
    if k is Const:
        return e.bits
    if k is Symbol:
        return assignment[e.ident] & ((1 << e.width) - 1)
    if k is Binop:
        return total_binop(e.op, e.width, evaluate(e.lhs, assignment), evaluate(e.rhs, assignment))
    if k is Relop:
        return concrete.relop(e.op, e.width, evaluate(e.lhs, assignment), evaluate(e.rhs, assignment))
    if k is Eqz:
        return 1 if evaluate(e.arg, assignment) == 0 else 0
    if k is Not:
        return 0 if evaluate(e.arg, assignment) != 0 else 1
    if k is Extract:
        v = evaluate(e.arg, assignment)
        return (v >> (8 * e.lo)) & ((1 << (8 * (e.hi - e.lo + 1))) - 1)
    if k is Concat:
        lo_w = width_of(e.lo)
        return (evaluate(e.hi, assignment) << lo_w) | evaluate(e.lo, assignment)
    if k is Extend:
        v = evaluate(e.arg, assignment)
        src = width_of(e.arg)
        if e.kind == "s":
            return to_signed(src, v) & ((1 << e.width) - 1)
        return v
    raise TypeError(f"not a SymExpr: {e!r}")


_COMPILE_BINOP = {
    "add": "(({a} + {b}) & {m})",
    "sub": "(({a} - {b}) & {m})",
    "mul": "(({a} * {b}) & {m})",
    "and": "({a} & {b})",
    "or": "({a} | {b})",
    "xor": "({a} ^ {b})",
    "shl": "((({a}) << ({b} % {w})) & {m})",
    "shr_u": "(({a}) >> ({b} % {w}))",
    "shr_s": "((((({a}) ^ {h}) - {h}) >> ({b} % {w})) & {m})",
}
_COMPILE_RELOP = {
    "eq": "({a} == {b})", "ne": "({a} != {b})",
    "lt_u": "({a} < {b})", "gt_u": "({a} > {b})",
    "le_u": "({a} <= {b})", "ge_u": "({a} >= {b})",
    "lt_s": "(((({a}) ^ {h}) - {h}) < ((({b}) ^ {h}) - {h}))",
    "gt_s": "(((({a}) ^ {h}) - {h}) > ((({b}) ^ {h}) - {h}))",
    "le_s": "(((({a}) ^ {h}) - {h}) <= ((({b}) ^ {h}) - {h}))",
    "ge_s": "(((({a}) ^ {h}) - {h}) >= ((({b}) ^ {h}) - {h}))",
}


def _compile_src(e: SymExpr) -> str:
    k = type(e)
    if k is Const:
        return str(e.bits)
    if k is Symbol:
        return f"s{e.ident}"
    if k is Binop:
        m = (1 << e.width) - 1
        h = 1 << (e.width - 1)
        tmpl = _COMPILE_BINOP.get(e.op)
        a, b = _compile_src(e.lhs), _compile_src(e.rhs)
        if tmpl is None:  # div/rem fall back to the reference helper
            return f"_tb({e.op!r}, {e.width}, {a}, {b})"
        return tmpl.format(a=a, b=b, m=m, w=e.width, h=h)
    if k is Relop:
        h = 1 << (e.width - 1)
        tmpl = _COMPILE_RELOP[e.op]
        return "(1 if %s else 0)" % tmpl.format(
            a=_compile_src(e.lhs), b=_compile_src(e.rhs), h=h)
    if k is Eqz:
        return f"(1 if {_compile_src(e.arg)} == 0 else 0)"
    if k is Not:
        return f"(0 if {_compile_src(e.arg)} != 0 else 1)"
    if k is Extract:
        m = (1 << (8 * (e.hi - e.lo + 1))) - 1
        return f"((({_compile_src(e.arg)}) >> {8 * e.lo}) & {m})"
    if k is Concat:
        lo_w = width_of(e.lo)
        return f"((({_compile_src(e.hi)}) << {lo_w}) | ({_compile_src(e.lo)}))"
    if k is Extend:
        src = width_of(e.arg)
        if e.kind == "u":
            return _compile_src(e.arg)
        h = 1 << (src - 1)
        m = (1 << e.width) - 1
        return f"(((({_compile_src(e.arg)}) ^ {h}) - {h}) & {m})"
    raise TypeError(f"not a SymExpr: {e!r}")


def compile_expr(e: SymExpr, params: list[int]):
    """Compile to a Python callable over symbol values, positionally in the
    order of ``params`` (symbol ids). Semantics identical to evaluate(),
    which the test suite checks by sampling."""
    args = ", ".join(f"s{i}" for i in params)
    src = f"lambda {args}: {_compile_src(e)}"
    return eval(src, {"_tb": total_binop})  # noqa: S307 - engine-generated source


def render(e: SymExpr | int, width: int = 32) -> str:
    """S-expression rendering used in reports and models.

    Constants print as signed decimals; eq/ne comparisons use the bool.*
    mnemonics, every other operator uses its Wasm mnemonic.
    """
    if isinstance(e, int):
        return f"(i{width} {to_signed(width, mask(width, e))})"
    k = type(e)
    if k is Const:
        return f"(i{e.width} {to_signed(e.width, e.bits)})"
    if k is Symbol:
        return f"symbol_{e.ident}"
    if k is Binop:
        return f"(i{e.width}.{e.op} {render(e.lhs)} {render(e.rhs)})"
    if k is Relop:
        if e.op in ("eq", "ne"):
            return f"(bool.{e.op} {render(e.lhs)} {render(e.rhs)})"
        return f"(i{e.width}.{e.op} {render(e.lhs)} {render(e.rhs)})"
    if k is Eqz:
        return f"(i{width_of(e.arg)}.eqz {render(e.arg)})"
    if k is Not:
        return f"(bool.not {render(e.arg)})"
    if k is Extract:
        if e.hi == 3 and e.lo == 0 and width_of(e.arg) == 64:
            return f"(i32.wrap_i64 {render(e.arg)})"
        return f"(extract {render(e.arg)} {e.hi} {e.lo})"
    if k is Concat:
        return f"(concat {render(e.hi)} {render(e.lo)})"
    if k is Extend:
        if width_of(e.arg) == 32 and e.width == 64:
            return f"(i64.extend_i32_{e.kind} {render(e.arg)})"
        return f"(extend_{e.kind} {e.width} {render(e.arg)})"
    raise TypeError(f"not a SymExpr: {e!r}")


def render_condition(e: SymExpr | int) -> str:
    """Rendering used for assertion failure messages: bare booleans print
    as true/false, everything else as the expression."""
    c = bits_of(e)
    if c is not None:
        return "true" if c != 0 else "false"
    return render(e)
