"""SMT-LIB2 rendering of path conditions and the textual model formats.

A Model is a plain dict: symbol id -> (width, unsigned bits).
"""

from __future__ import annotations

from wasmsym.errors import ConfigError
from wasmsym.values.concrete import to_signed
from wasmsym.values.symbolic import (
    Binop,
    Concat,
    Const,
    Eqz,
    Extend,
    Extract,
    Not,
    Relop,
    SymExpr,
    Symbol,
    iter_symbols,
    width_of,
)

Model = dict[int, tuple[int, int]]

_BV_BINOP = {
    "add": "bvadd", "sub": "bvsub", "mul": "bvmul",
    "div_s": "bvsdiv", "div_u": "bvudiv", "rem_s": "bvsrem", "rem_u": "bvurem",
    "and": "bvand", "or": "bvor", "xor": "bvxor",
}
_BV_SHIFT = {"shl": "bvshl", "shr_s": "bvashr", "shr_u": "bvlshr"}
_BV_CMP = {
    "lt_s": "bvslt", "lt_u": "bvult", "gt_s": "bvsgt", "gt_u": "bvugt",
    "le_s": "bvsle", "le_u": "bvule", "ge_s": "bvsge", "ge_u": "bvuge",
}


def _hex(width: int, bits: int) -> str:
    return f"#x{bits & ((1 << width) - 1):0{width // 4}x}"


def term(e: SymExpr) -> str:
    """Value-position translation (always bitvector sorted)."""
    k = type(e)
    if k is Const:
        return _hex(e.width, e.bits)
    if k is Symbol:
        return f"symbol_{e.ident}"
    if k is Binop:
        a, b = term(e.lhs), term(e.rhs)
        if e.op in _BV_SHIFT:
            # Wasm masks shift amounts modulo the width; SMT-LIB does not
            mask = _hex(e.width, e.width - 1)
            return f"({_BV_SHIFT[e.op]} {a} (bvand {b} {mask}))"
        return f"({_BV_BINOP[e.op]} {a} {b})"
    if k is Relop or k is Eqz or k is Not:
        return f"(ite {formula(e)} {_hex(32, 1)} {_hex(32, 0)})"
    if k is Extract:
        return f"((_ extract {8 * e.hi + 7} {8 * e.lo}) {term(e.arg)})"
    if k is Concat:
        return f"(concat {term(e.hi)} {term(e.lo)})"
    if k is Extend:
        n = e.width - width_of(e.arg)
        op = "sign_extend" if e.kind == "s" else "zero_extend"
        return f"((_ {op} {n}) {term(e.arg)})"
    raise TypeError(f"not a SymExpr: {e!r}")


def formula(e: SymExpr) -> str:
    """Boolean-position translation (nonzero means true)."""
    k = type(e)
    if k is Relop:
        a, b = term(e.lhs), term(e.rhs)
        if e.op == "eq":
            return f"(= {a} {b})"
        if e.op == "ne":
            return f"(distinct {a} {b})"
        return f"({_BV_CMP[e.op]} {a} {b})"
    if k is Eqz:
        return f"(= {term(e.arg)} {_hex(width_of(e.arg), 0)})"
    if k is Not:
        return f"(not {formula(e.arg)})"
    if k is Const:
        return "true" if e.bits != 0 else "false"
    return f"(distinct {term(e)} {_hex(width_of(e), 0)})"


def declarations(conjuncts) -> list[str]:
    syms: dict[int, int] = {}
    for c in conjuncts:
        iter_symbols(c, syms)
    return [f"(declare-const symbol_{i} (_ BitVec {w}))" for i, w in sorted(syms.items())]


def render_smtlib(conjuncts) -> str:
    """Complete single-shot script for a path condition."""
    lines = ["(set-logic QF_BV)", "(set-option :produce-models true)"]
    lines.extend(declarations(conjuncts))
    for c in conjuncts:
        lines.append(f"(assert {formula(c)})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Model text formats


def render_model(model: Model) -> str:
    """The report block, two-space outer indent:

      (model
        (symbol_0 (i32 2147483646))
        (symbol_1 (i32 -2147483647)))
    """
    if not model:
        return "  (model)"
    lines = ["  (model"]
    for ident, (width, bits) in sorted(model.items()):
        lines.append(f"    (symbol_{ident} (i{width} {to_signed(width, bits)}))")
    return "\n".join(lines) + ")"


# -- tiny s-expression reader for solver replies and model files


def _sexp_tokens(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c in "()":
            yield c
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n()":
                j += 1
            yield text[i:j]
            i = j


def parse_sexp(text: str):
    toks = list(_sexp_tokens(text))
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(toks):
            raise ConfigError("truncated s-expression")
        t = toks[pos]
        pos += 1
        if t == "(":
            items = []
            while pos < len(toks) and toks[pos] != ")":
                items.append(read())
            if pos >= len(toks):
                raise ConfigError("unbalanced s-expression")
            pos += 1
            return items
        if t == ")":
            raise ConfigError("unexpected ')'")
        return t

    out = []
    while pos < len(toks):
        out.append(read())
    return out


def parse_get_model_reply(text: str) -> dict[str, tuple[int, int]]:
    """name -> (width, bits) from a get-model response; tolerates both the
    classic (model (define-fun ...)) and bare ((define-fun ...)) shapes."""
    nodes = parse_sexp(text)
    if not nodes:
        return {}
    body = nodes[0]
    if isinstance(body, list) and body and body[0] == "model":
        entries = body[1:]
    else:
        entries = body
    out: dict[str, tuple[int, int]] = {}
    for entry in entries:
        if not (isinstance(entry, list) and len(entry) >= 5 and entry[0] == "define-fun"):
            continue
        name = entry[1]
        sort = entry[3]
        value = entry[4]
        if not (isinstance(sort, list) and len(sort) == 3 and sort[1] == "BitVec"):
            continue
        width = int(sort[2])
        out[name] = (width, _parse_bv_value(value, width))
    return out


def _parse_bv_value(node, width: int) -> int:
    if isinstance(node, str):
        if node.startswith("#x"):
            return int(node[2:], 16)
        if node.startswith("#b"):
            return int(node[2:], 2)
    if isinstance(node, list) and len(node) == 3 and node[0] == "_" and node[1].startswith("bv"):
        return int(node[1][2:]) & ((1 << width) - 1)
    raise ConfigError(f"cannot parse bitvector value {node!r}")


def parse_model_text(text: str) -> Model:
    """Parse the render_model report format (an optional Model: header is
    tolerated so whole report blocks can be fed back in)."""
    lines = [ln for ln in text.splitlines() if ln.strip() and ln.strip() != "Model:"]
    nodes = parse_sexp("\n".join(lines))
    for node in nodes:
        if isinstance(node, list) and node and node[0] == "model":
            model: Model = {}
            for entry in node[1:]:
                if (not isinstance(entry, list) or len(entry) != 2
                        or not isinstance(entry[0], str)
                        or not entry[0].startswith("symbol_")):
                    raise ConfigError(f"bad model entry {entry!r}")
                ident = int(entry[0][len("symbol_"):])
                tagged = entry[1]
                if (not isinstance(tagged, list) or len(tagged) != 2
                        or tagged[0] not in ("i32", "i64")):
                    raise ConfigError(f"bad model value {entry!r}")
                width = 32 if tagged[0] == "i32" else 64
                value = int(tagged[1])
                lo, hi = -(1 << (width - 1)), (1 << width) - 1
                if not lo <= value <= hi:
                    raise ConfigError(f"model value out of range in {entry!r}")
                model[ident] = (width, value & ((1 << width) - 1))
            return model
    raise ConfigError("no (model ...) block found")
