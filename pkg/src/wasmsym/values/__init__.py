"""Value realizations: concrete machine integers and symbolic bitvector expressions."""

from wasmsym.values.concrete import binop, relop, eqz, mask, to_signed, to_unsigned
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
    evaluate,
    render,
    sym_binop,
    sym_eqz,
    sym_not,
    sym_relop,
    width_of,
)

__all__ = [
    "binop", "relop", "eqz", "mask", "to_signed", "to_unsigned",
    "SymExpr", "Const", "Symbol", "Binop", "Relop", "Eqz", "Not",
    "Extract", "Concat", "Extend",
    "sym_binop", "sym_relop", "sym_eqz", "sym_not",
    "evaluate", "render", "width_of",
]
