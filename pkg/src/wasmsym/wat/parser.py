"""Parser for the .wat text format, folded and flat instruction forms.

Recognized-but-unsupported Wasm constructs (floats, SIMD, br_table, data
segments, ...) raise ParseError with ``feature`` set, distinct from plain
syntax errors.
"""

from __future__ import annotations

from wasmsym.errors import ParseError
from wasmsym.wat import ast
from wasmsym.wat.ast import (
    BINOP_NAMES,
    I32,
    I64,
    LOAD_OPS,
    RELOP_NAMES,
    STORE_OPS,
    Export,
    Func,
    FuncType,
    Global,
    Import,
    Instr,
    MemoryDecl,
    Module,
    TableDecl,
)

# ---------------------------------------------------------------------------
# Tokenizer


class Tok:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind: str, text: str, line: int, col: int):
        self.kind = kind  # "(" ")" "atom" "str"
        self.text = text
        self.line = line
        self.col = col


def _tokenize(src: str) -> list[Tok]:
    toks: list[Tok] = []
    i, line, col = 0, 1, 1
    n = len(src)

    def err(msg):
        raise ParseError(msg, line, col)

    while i < n:
        c = src[i]
        if c in " \t\r":
            i += 1
            col += 1
        elif c == "\n":
            i += 1
            line += 1
            col = 1
        elif c == ";" and i + 1 < n and src[i + 1] == ";":
            while i < n and src[i] != "\n":
                i += 1
        elif c == "(" and i + 1 < n and src[i + 1] == ";":
            depth, i, col = 1, i + 2, col + 2
            while i < n and depth:
                if src.startswith("(;", i):
                    depth += 1
                    i += 2
                    col += 2
                elif src.startswith(";)", i):
                    depth -= 1
                    i += 2
                    col += 2
                elif src[i] == "\n":
                    i += 1
                    line += 1
                    col = 1
                else:
                    i += 1
                    col += 1
            if depth:
                err("unterminated block comment")
        elif c == "(":
            toks.append(Tok("(", "(", line, col))
            i += 1
            col += 1
        elif c == ")":
            toks.append(Tok(")", ")", line, col))
            i += 1
            col += 1
        elif c == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            out = []
            while i < n and src[i] != '"':
                ch = src[i]
                if ch == "\n":
                    err("unterminated string")
                if ch == "\\":
                    if i + 1 >= n:
                        err("bad escape")
                    esc = src[i + 1]
                    if esc == "n":
                        out.append("\n")
                    elif esc == "t":
                        out.append("\t")
                    elif esc == "r":
                        out.append("\r")
                    elif esc in ('"', "'", "\\"):
                        out.append(esc)
                    elif esc in "0123456789abcdefABCDEF" and i + 2 < n:
                        out.append(chr(int(src[i + 1 : i + 3], 16)))
                        i += 1
                        col += 1
                    else:
                        err(f"bad escape \\{esc}")
                    i += 2
                    col += 2
                else:
                    out.append(ch)
                    i += 1
                    col += 1
            if i >= n:
                err("unterminated string")
            i += 1
            col += 1
            toks.append(Tok("str", "".join(out), start_line, start_col))
        else:
            start, start_col = i, col
            while i < n and src[i] not in ' \t\r\n();"':
                i += 1
                col += 1
            toks.append(Tok("atom", src[start:i], line, start_col))
    return toks


# S-expression nodes: Tok (atom/str) or SList.
class SList:
    __slots__ = ("items", "line", "col")

    def __init__(self, items, line, col):
        self.items = items
        self.line = line
        self.col = col


def _read_sexprs(toks: list[Tok]) -> list:
    pos = 0

    def read():
        nonlocal pos
        t = toks[pos]
        if t.kind == "(":
            pos += 1
            items = []
            while pos < len(toks) and toks[pos].kind != ")":
                items.append(read())
            if pos >= len(toks):
                raise ParseError("unbalanced parenthesis", t.line, t.col)
            pos += 1
            return SList(items, t.line, t.col)
        if t.kind == ")":
            raise ParseError("unexpected ')'", t.line, t.col)
        pos += 1
        return t

    out = []
    while pos < len(toks):
        out.append(read())
    return out


def _is_atom(node, text=None) -> bool:
    return isinstance(node, Tok) and node.kind == "atom" and (text is None or node.text == text)


def _head(node) -> str | None:
    if isinstance(node, SList) and node.items and _is_atom(node.items[0]):
        return node.items[0].text
    return None


def _loc(node) -> tuple[int, int]:
    return (node.line, node.col)


# ---------------------------------------------------------------------------
# Feature gate

UNSUPPORTED_TYPES = {"f32", "f64", "v128", "funcref", "externref"}

UNSUPPORTED_OPS = {
    "br_table", "return_call", "return_call_indirect", "memory.copy",
    "memory.fill", "memory.init", "table.get", "table.set", "table.grow",
    "table.size", "ref.null", "ref.func", "ref.is_null", "select_t",
    "i64.load8_s", "i64.load8_u", "i64.load16_s", "i64.load16_u",
    "i64.load32_s", "i64.load32_u", "i64.store8", "i64.store16",
    "i64.store32", "i32.clz", "i32.ctz", "i32.popcnt", "i64.clz",
    "i64.ctz", "i64.popcnt", "i32.rotl", "i32.rotr", "i64.rotl",
    "i64.rotr", "i32.extend8_s", "i32.extend16_s", "i64.extend8_s",
    "i64.extend16_s", "i64.extend32_s",
}

UNSUPPORTED_FIELDS = {"data", "start", "tag", "rec"}


def _check_feature_atom(text: str, line: int, col: int):
    if text.startswith(("f32", "f64")) or text.startswith("v128"):
        raise ParseError(f'unsupported feature "{text.split(".")[0]}"', line, col,
                         feature=text.split(".")[0])
    if text in UNSUPPORTED_OPS:
        raise ParseError(f'unsupported feature "{text}"', line, col, feature=text)


def _parse_valtype(node) -> str:
    if _is_atom(node):
        t = node.text
        if t in (I32, I64):
            return t
        if t in UNSUPPORTED_TYPES:
            raise ParseError(f'unsupported feature "{t}"', node.line, node.col, feature=t)
    line, col = _loc(node) if isinstance(node, (Tok, SList)) else (0, 0)
    raise ParseError("expected a value type", line, col)


def _parse_int(tok, width: int) -> int:
    if not _is_atom(tok):
        raise ParseError("expected an integer literal", *_loc(tok))
    text = tok.text.replace("_", "")
    neg = text.startswith("-")
    if text.startswith(("+", "-")):
        text = text[1:]
    try:
        v = int(text, 16) if text.lower().startswith("0x") else int(text, 10)
    except ValueError:
        raise ParseError(f"bad integer literal {tok.text!r}", tok.line, tok.col) from None
    if neg:
        v = -v
    lo, hi = -(1 << (width - 1)), (1 << width) - 1
    if not lo <= v <= hi:
        raise ParseError(f"integer literal {tok.text!r} out of i{width} range", tok.line, tok.col)
    return v & ((1 << width) - 1)


def _parse_index_u(tok) -> int:
    if not _is_atom(tok):
        raise ParseError("expected an index", *_loc(tok))
    try:
        v = int(tok.text)
    except ValueError:
        raise ParseError(f"expected an index, got {tok.text!r}", tok.line, tok.col) from None
    if v < 0:
        raise ParseError("negative index", tok.line, tok.col)
    return v


class _Env:
    """Name resolution context assembled before bodies are parsed."""

    def __init__(self):
        self.types: list[FuncType] = []
        self.type_names: dict[str, int] = {}
        self.func_names: dict[str, int] = {}
        self.global_names: dict[str, int] = {}
        self.n_imports = 0
        self.n_funcs = 0
        self.n_globals = 0

    def intern_type(self, ft: FuncType) -> int:
        for i, t in enumerate(self.types):
            if t == ft:
                return i
        self.types.append(ft)
        return len(self.types) - 1

    def resolve(self, tok, names: dict[str, int], space: str, count: int) -> int:
        if _is_atom(tok) and tok.text.startswith("$"):
            if tok.text not in names:
                raise ParseError(f"unknown {space} {tok.text}", tok.line, tok.col)
            return names[tok.text]
        idx = _parse_index_u(tok)
        if idx >= count:
            raise ParseError(f"{space} index {idx} out of range", tok.line, tok.col)
        return idx


# ---------------------------------------------------------------------------
# Signature clauses (param/result/local)


def _take_sig(items, i, keyword, names: dict[str, int] | None, base: int):
    """Consume consecutive (keyword ...) clauses; returns (types, next_i)."""
    out: list[str] = []
    while i < len(items) and _head(items[i]) == keyword:
        clause = items[i].items
        if len(clause) == 3 and _is_atom(clause[1]) and clause[1].text.startswith("$"):
            if names is not None:
                names[clause[1].text] = base + len(out)
            out.append(_parse_valtype(clause[2]))
        else:
            for t in clause[1:]:
                out.append(_parse_valtype(t))
        i += 1
    return out, i


def _parse_functype(items, i, env: _Env):
    """Parse optional (type $t) + param/result clauses; returns (type_idx, param_names, next_i)."""
    explicit = None
    if i < len(items) and _head(items[i]) == "type":
        tnode = items[i].items
        if len(tnode) != 2:
            raise ParseError("malformed type use", *_loc(items[i]))
        explicit = env.resolve(tnode[1], env.type_names, "type", len(env.types))
        i += 1
    param_names: dict[str, int] = {}
    params, i = _take_sig(items, i, "param", param_names, 0)
    results, i = _take_sig(items, i, "result", None, 0)
    if len(results) > 1:
        raise ParseError('unsupported feature "multi-value"', 0, 0, feature="multi-value")
    ft = FuncType(tuple(params), tuple(results))
    if explicit is not None:
        if (params or results) and env.types[explicit] != ft:
            raise ParseError("inline signature disagrees with type use", 0, 0)
        return explicit, param_names, i
    return env.intern_type(ft), param_names, i


# ---------------------------------------------------------------------------
# Instruction parsing

# Immediate shapes for plain (non-structured) opcodes.
_IMM_NONE = 0
_IMM_LOCAL = 1
_IMM_GLOBAL = 2
_IMM_FUNC = 3
_IMM_DEPTH = 4
_IMM_CONST = 5
_IMM_MEMARG = 6
_IMM_TYPEUSE = 7

_PLAIN_OPS: dict[str, int] = {}
for _t in (I32, I64):
    for _name in BINOP_NAMES + RELOP_NAMES:
        _PLAIN_OPS[f"{_t}.{_name}"] = _IMM_NONE
    _PLAIN_OPS[f"{_t}.eqz"] = _IMM_NONE
    _PLAIN_OPS[f"{_t}.const"] = _IMM_CONST
for _op in ("drop", "select", "nop", "unreachable", "return"):
    _PLAIN_OPS[_op] = _IMM_NONE
_PLAIN_OPS["i32.wrap_i64"] = _IMM_NONE
_PLAIN_OPS["i64.extend_i32_s"] = _IMM_NONE
_PLAIN_OPS["i64.extend_i32_u"] = _IMM_NONE
for _op in ("local.get", "local.set", "local.tee"):
    _PLAIN_OPS[_op] = _IMM_LOCAL
for _op in ("global.get", "global.set"):
    _PLAIN_OPS[_op] = _IMM_GLOBAL
_PLAIN_OPS["call"] = _IMM_FUNC
_PLAIN_OPS["call_indirect"] = _IMM_TYPEUSE
for _op in ("br", "br_if"):
    _PLAIN_OPS[_op] = _IMM_DEPTH
for _op in LOAD_OPS:
    _PLAIN_OPS[_op] = _IMM_MEMARG
for _op in STORE_OPS:
    _PLAIN_OPS[_op] = _IMM_MEMARG
_PLAIN_OPS["memory.size"] = _IMM_NONE
_PLAIN_OPS["memory.grow"] = _IMM_NONE


class _BodyParser:
    def __init__(self, env: _Env, locals_names: dict[str, int], n_locals: int):
        self.env = env
        self.local_names = locals_names
        self.n_locals = n_locals
        self.labels: list[str | None] = []

    # -- helpers

    def _label_depth(self, tok) -> int:
        if _is_atom(tok) and tok.text.startswith("$"):
            for d, name in enumerate(reversed(self.labels)):
                if name == tok.text:
                    return d
            raise ParseError(f"unknown label {tok.text}", tok.line, tok.col)
        return _parse_index_u(tok)

    def _memarg(self, items, i):
        offset = 0
        while i < len(items) and _is_atom(items[i]) and "=" in items[i].text:
            key, _, val = items[i].text.partition("=")
            if key == "offset":
                offset = int(val.replace("_", ""), 0)
                if offset < 0 or offset >= 1 << 32:
                    raise ParseError("offset out of range", *_loc(items[i]))
            elif key == "align":
                align = int(val.replace("_", ""), 0)
                if align & (align - 1):
                    raise ParseError("alignment must be a power of two", *_loc(items[i]))
            else:
                raise ParseError(f"unknown memarg {items[i].text!r}", *_loc(items[i]))
            i += 1
        return offset, i

    def _blocktype(self, items, i):
        if i < len(items) and _head(items[i]) == "result":
            results, i = _take_sig(items, i, "result", None, 0)
            if len(results) > 1:
                raise ParseError('unsupported feature "multi-value"', 0, 0, feature="multi-value")
            return (results[0] if results else None), i
        if i < len(items) and _head(items[i]) == "param":
            raise ParseError('unsupported feature "block-params"', *_loc(items[i]),
                             feature="block-params")
        return None, i

    def _opt_label(self, items, i):
        if i < len(items) and _is_atom(items[i]) and items[i].text.startswith("$"):
            return items[i].text, i + 1
        return None, i

    def _plain(self, op_tok, items, i, out: list[Instr]):
        """Immediates of a plain opcode starting after the opcode atom."""
        op = op_tok.text
        kind = _PLAIN_OPS[op]
        env = self.env
        if kind == _IMM_NONE:
            out.append(Instr(op))
        elif kind == _IMM_CONST:
            if i >= len(items):
                raise ParseError(f"{op} needs a literal", op_tok.line, op_tok.col)
            width = 32 if op.startswith("i32") else 64
            out.append(Instr(op, (_parse_int(items[i], width),)))
            i += 1
        elif kind == _IMM_LOCAL:
            if i >= len(items):
                raise ParseError(f"{op} needs a local index", op_tok.line, op_tok.col)
            idx = env.resolve(items[i], self.local_names, "local", self.n_locals)
            out.append(Instr(op, (idx,)))
            i += 1
        elif kind == _IMM_GLOBAL:
            if i >= len(items):
                raise ParseError(f"{op} needs a global index", op_tok.line, op_tok.col)
            idx = env.resolve(items[i], env.global_names, "global", env.n_globals)
            out.append(Instr(op, (idx,)))
            i += 1
        elif kind == _IMM_FUNC:
            if i >= len(items):
                raise ParseError("call needs a function index", op_tok.line, op_tok.col)
            idx = env.resolve(items[i], env.func_names, "function",
                              env.n_imports + env.n_funcs)
            out.append(Instr(op, (idx,)))
            i += 1
        elif kind == _IMM_DEPTH:
            if i >= len(items):
                raise ParseError(f"{op} needs a label", op_tok.line, op_tok.col)
            out.append(Instr(op, (self._label_depth(items[i]),)))
            i += 1
        elif kind == _IMM_MEMARG:
            offset, i = self._memarg(items, i)
            out.append(Instr(op, (offset,)))
        elif kind == _IMM_TYPEUSE:
            type_idx, _, i = _parse_functype(items, i, env)
            out.append(Instr(op, (type_idx,)))
        return i

    # -- folded form

    def _folded(self, node: SList, out: list[Instr]):
        items = node.items
        if not items or not _is_atom(items[0]):
            raise ParseError("expected an instruction", node.line, node.col)
        op_tok = items[0]
        op = op_tok.text
        _check_feature_atom(op, op_tok.line, op_tok.col)
        if op == "block" or op == "loop":
            label, i = self._opt_label(items, 1)
            result, i = self._blocktype(items, i)
            self.labels.append(label)
            body: list[Instr] = []
            self._seq(items, i, body)
            self.labels.pop()
            out.append(Instr(op, (result, tuple(body))))
            return
        if op == "if":
            label, i = self._opt_label(items, 1)
            result, i = self._blocktype(items, i)
            # condition expressions come before (then ...)
            while i < len(items) and _head(items[i]) not in ("then", "else"):
                self._folded(items[i], out)
                i += 1
            if i >= len(items) or _head(items[i]) != "then":
                raise ParseError("folded if needs a (then ...) clause", node.line, node.col)
            self.labels.append(label)
            then_body: list[Instr] = []
            self._seq(items[i].items, 1, then_body)
            i += 1
            else_body: list[Instr] = []
            if i < len(items) and _head(items[i]) == "else":
                self._seq(items[i].items, 1, else_body)
                i += 1
            self.labels.pop()
            if i != len(items):
                raise ParseError("junk after folded if", node.line, node.col)
            out.append(Instr("if", (result, tuple(then_body), tuple(else_body))))
            return
        if op in _PLAIN_OPS:
            tail: list[Instr] = []
            i = self._plain(op_tok, items, 1, tail)
            # remaining items are folded operand expressions, emitted first
            while i < len(items):
                if not isinstance(items[i], SList):
                    raise ParseError(f"unexpected token {items[i].text!r} in folded form",
                                     *_loc(items[i]))
                self._folded(items[i], out)
                i += 1
            out.extend(tail)
            return
        raise ParseError(f"unknown opcode {op!r}", op_tok.line, op_tok.col)

    # -- flat form (atoms with block/end keywords)

    def _seq(self, items, i, out: list[Instr]):
        """Parse instructions until the end of the item list."""
        while i < len(items):
            node = items[i]
            if isinstance(node, SList):
                self._folded(node, out)
                i += 1
                continue
            i = self._flat(items, i, out)
        return i

    def _flat(self, items, i, out: list[Instr]):
        op_tok = items[i]
        op = op_tok.text
        _check_feature_atom(op, op_tok.line, op_tok.col)
        if op in ("block", "loop", "if"):
            label, j = self._opt_label(items, i + 1)
            result, j = self._blocktype(items, j)
            self.labels.append(label)
            body: list[Instr] = []
            else_body: list[Instr] = []
            cur = body
            while True:
                if j >= len(items):
                    raise ParseError(f"missing 'end' for {op}", op_tok.line, op_tok.col)
                node = items[j]
                if _is_atom(node, "end"):
                    j += 1
                    _, j = self._opt_label(items, j)
                    break
                if _is_atom(node, "else") and op == "if":
                    cur = else_body
                    j += 1
                    _, j = self._opt_label(items, j)
                    continue
                if isinstance(node, SList):
                    self._folded(node, cur)
                    j += 1
                else:
                    j = self._flat(items, j, cur)
            self.labels.pop()
            if op == "if":
                out.append(Instr("if", (result, tuple(body), tuple(else_body))))
            else:
                out.append(Instr(op, (result, tuple(body))))
            return j
        if op in ("end", "else", "then"):
            raise ParseError(f"unexpected {op!r}", op_tok.line, op_tok.col)
        if op in _PLAIN_OPS:
            return self._plain(op_tok, items, i + 1, out)
        raise ParseError(f"unknown opcode {op!r}", op_tok.line, op_tok.col)


# ---------------------------------------------------------------------------
# Module fields


def parse_module(text: str) -> Module:
    """Parse a .wat module source into a structured Module."""
    sexprs = _read_sexprs(_tokenize(text))
    if len(sexprs) != 1 or _head(sexprs[0]) != "module":
        loc = _loc(sexprs[0]) if sexprs else (1, 1)
        raise ParseError("expected a single (module ...) form", *loc)
    fields = sexprs[0].items[1:]
    i = 0
    if fields and _is_atom(fields[0]) and fields[0].text.startswith("$"):
        i = 1  # module name, ignored

    env = _Env()
    imports: list[Import] = []
    func_nodes: list[tuple] = []  # (name, sig_items_start_index, SList, export_names)
    globals_: list[Global] = []
    memory: MemoryDecl | None = None
    table_node = None
    elem_nodes: list[SList] = []
    exports: list[tuple[str, object]] = []  # (name, tok)
    table_size: int | None = None
    table_max: int | None = None

    # pass 1: declarations and name spaces
    for node in fields[i:]:
        h = _head(node)
        if h is None:
            raise ParseError("expected a module field", *_loc(node))
        if h in UNSUPPORTED_FIELDS:
            raise ParseError(f'unsupported feature "{h}"', *_loc(node), feature=h)
        items = node.items
        if h == "type":
            j = 1
            name = None
            if _is_atom(items[j]) and items[j].text.startswith("$"):
                name = items[j].text
                j += 1
            if _head(items[j]) != "func":
                raise ParseError("type must wrap a (func ...) signature", *_loc(node))
            params, k = _take_sig(items[j].items, 1, "param", None, 0)
            results, k = _take_sig(items[j].items, k, "result", None, 0)
            if len(results) > 1:
                raise ParseError('unsupported feature "multi-value"', *_loc(node),
                                 feature="multi-value")
            env.types.append(FuncType(tuple(params), tuple(results)))
            if name:
                env.type_names[name] = len(env.types) - 1
        elif h == "import":
            if len(items) != 4 or not isinstance(items[3], SList):
                raise ParseError("malformed import", *_loc(node))
            desc = items[3]
            if _head(desc) != "func":
                raise ParseError(f'unsupported feature "non-function import"', *_loc(node),
                                 feature="import-kind")
            j = 1
            name = None
            if j < len(desc.items) and _is_atom(desc.items[j]) and desc.items[j].text.startswith("$"):
                name = desc.items[j].text
                j += 1
            if name:
                env.func_names[name] = len(imports)
            imports.append((items[1], items[2], desc.items, j, node))  # resolved in pass 2
            env.n_imports += 1
        elif h == "func":
            j = 1
            name = None
            if j < len(items) and _is_atom(items[j]) and items[j].text.startswith("$"):
                name = items[j].text
                j += 1
            export_names = []
            while j < len(items) and _head(items[j]) == "export":
                export_names.append(items[j].items[1])
                j += 1
            if j < len(items) and _head(items[j]) == "import":
                # inline import form
                imp = items[j].items
                if name:
                    env.func_names.pop(name, None)
                raise ParseError("inline function imports must use (import ...) at module level",
                                 *_loc(node))
            if name:
                if name in env.func_names:
                    raise ParseError(f"duplicate function name {name}", *_loc(node))
                # defined functions come after all imports in the index space;
                # patched once imports are counted (pass 1 sees all imports
                # before bodies are parsed, order fixed below).
                env.func_names[name] = ("func", len(func_nodes))
            func_nodes.append((name, j, node, export_names))
            env.n_funcs += 1
        elif h == "global":
            j = 1
            name = None
            if _is_atom(items[j]) and items[j].text.startswith("$"):
                name = items[j].text
                j += 1
            gt = items[j]
            if _head(gt) == "mut":
                mutable = True
                vt = _parse_valtype(gt.items[1])
            else:
                mutable = False
                vt = _parse_valtype(gt)
            j += 1
            init_node = items[j]
            ih = _head(init_node)
            if ih not in ("i32.const", "i64.const"):
                if ih and ih.startswith(("f32", "f64")):
                    raise ParseError(f'unsupported feature "{ih.split(".")[0]}"',
                                     *_loc(init_node), feature=ih.split(".")[0])
                raise ParseError("global initializer must be a const", *_loc(init_node))
            width = 32 if ih == "i32.const" else 64
            if (ih == "i32.const") != (vt == I32):
                raise ParseError("global initializer type mismatch", *_loc(init_node))
            init = _parse_int(init_node.items[1], width)
            if name:
                env.global_names[name] = len(globals_)
            globals_.append(Global(name[1:] if name else None, vt, mutable, init))
            env.n_globals += 1
        elif h == "memory":
            if memory is not None:
                raise ParseError("at most one memory", *_loc(node))
            j = 1
            if _is_atom(items[j]) and items[j].text.startswith("$"):
                j += 1
            mn = _parse_index_u(items[j])
            mx = None
            if j + 1 < len(items):
                mx = _parse_index_u(items[j + 1])
                if mx < mn:
                    raise ParseError("memory max below min", *_loc(node))
            memory = MemoryDecl(mn, mx)
        elif h == "table":
            if table_node is not None:
                raise ParseError("at most one table", *_loc(node))
            table_node = node
            j = 1
            if _is_atom(items[j]) and items[j].text.startswith("$"):
                j += 1
            if _is_atom(items[j]) and items[j].text.isdigit():
                table_size = _parse_index_u(items[j])
                j += 1
                if _is_atom(items[j]) and items[j].text.isdigit():
                    table_max = _parse_index_u(items[j])
                    j += 1
            if not _is_atom(items[j], "funcref"):
                raise ParseError("table element type must be funcref", *_loc(node))
            j += 1
            if j < len(items) and _head(items[j]) == "elem":
                elem_nodes.append(("inline", items[j]))
        elif h == "elem":
            elem_nodes.append(("segment", node))
        elif h == "export":
            if len(items) != 3 or not isinstance(items[2], SList):
                raise ParseError("malformed export", *_loc(node))
            if _head(items[2]) != "func":
                raise ParseError('unsupported feature "non-function export"', *_loc(node),
                                 feature="export-kind")
            exports.append((items[1], items[2].items[1]))
        else:
            _check_feature_atom(h, *_loc(node))
            raise ParseError(f"unknown module field {h!r}", *_loc(node))

    # fix function name indices now that the import count is known
    n_imports = len(imports)
    for k, v in list(env.func_names.items()):
        if isinstance(v, tuple):
            env.func_names[k] = n_imports + v[1]

    # pass 2: imports (type uses)
    resolved_imports: list[Import] = []
    for mod_tok, name_tok, desc_items, j, node in imports:
        if not (isinstance(mod_tok, Tok) and mod_tok.kind == "str"):
            raise ParseError("import module name must be a string", *_loc(node))
        if not (isinstance(name_tok, Tok) and name_tok.kind == "str"):
            raise ParseError("import item name must be a string", *_loc(node))
        type_idx, _, end = _parse_functype(desc_items, j, env)
        if end != len(desc_items):
            raise ParseError("junk in import signature", *_loc(node))
        resolved_imports.append(Import(mod_tok.text, name_tok.text, type_idx))

    # pass 2: function bodies
    funcs: list[Func] = []
    export_list: list[Export] = []
    for fi, (name, j, node, export_names) in enumerate(func_nodes):
        items = node.items
        type_idx, param_names, j = _parse_functype(items, j, env)
        ft = env.types[type_idx]
        local_names = dict(param_names)
        locals_types, j = _take_sig(items, j, "local", local_names, len(ft.params))
        bp = _BodyParser(env, local_names, len(ft.params) + len(locals_types))
        bp.labels.append(None)  # implicit function label
        body: list[Instr] = []
        bp._seq(items, j, body)
        funcs.append(Func(name[1:] if name else None, type_idx, tuple(locals_types), tuple(body)))
        for en in export_names:
            if not (isinstance(en, Tok) and en.kind == "str"):
                raise ParseError("export name must be a string", *_loc(node))
            export_list.append(Export(en.text, n_imports + fi))

    # pass 2: exports
    n_func_space = n_imports + len(funcs)
    for name_tok, target in exports:
        idx = env.resolve(target, env.func_names, "function", n_func_space)
        export_list.append(Export(name_tok.text, idx))

    # pass 2: table elements
    elems: dict[int, int] = {}
    inferred_size = 0
    for kind, node in elem_nodes:
        items = node.items
        if kind == "inline":
            offset = 0
            j = 1
        else:
            if table_node is None:
                raise ParseError("elem segment without a table", *_loc(node))
            j = 1
            if _is_atom(items[j]) and items[j].text.isdigit():
                j += 1  # table index, single table only
            off_node = items[j]
            if _head(off_node) == "offset":
                off_node = off_node.items[1]
            if _head(off_node) != "i32.const":
                raise ParseError("elem offset must be an i32.const", *_loc(node))
            offset = _parse_int(off_node.items[1], 32)
            j += 1
        if j < len(items) and _is_atom(items[j], "func"):
            j += 1
        for k, ftok in enumerate(items[j:]):
            idx = env.resolve(ftok, env.func_names, "function", n_func_space)
            elems[offset + k] = idx
            inferred_size = max(inferred_size, offset + k + 1)

    table = None
    if table_node is not None:
        size = table_size if table_size is not None else inferred_size
        if elems and max(elems) >= size:
            raise ParseError("table element index out of declared bounds", *_loc(table_node))
        table = TableDecl(size, tuple(elems.get(k) for k in range(size)))
    elif elem_nodes:
        raise ParseError("elem segment without a table", 0, 0)

    return Module(
        types=tuple(env.types),
        imports=tuple(resolved_imports),
        funcs=tuple(funcs),
        globals=tuple(globals_),
        memory=memory,
        table=table,
        exports=tuple(export_list),
    )
