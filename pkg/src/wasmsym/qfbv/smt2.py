"""SMT-LIB2 front matter for the QF_BV solver: s-expression reading, term
evaluation over concrete bitvectors, and sort inference."""

from __future__ import annotations


class SmtError(Exception):
    pass


# ---------------------------------------------------------------------------
# Reading


def tokenize(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield c
            i += 1
        elif c == '"':
            j = i + 1
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        j += 2
                        continue
                    break
                j += 1
            yield text[i : j + 1]
            i = j + 1
        elif c == "|":
            j = text.index("|", i + 1)
            yield text[i : j + 1]
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in ' \t\r\n();"|':
                j += 1
            yield text[i:j]
            i = j


def parse_sexpr(tokens: list[str], pos: int = 0):
    """One s-expression from a token list; returns (node, next_pos)."""
    if pos >= len(tokens):
        raise SmtError("unexpected end of input")
    t = tokens[pos]
    if t == "(":
        items = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            node, pos = parse_sexpr(tokens, pos)
            items.append(node)
        if pos >= len(tokens):
            raise SmtError("unbalanced parenthesis")
        return items, pos + 1
    if t == ")":
        raise SmtError("unexpected ')'")
    return t, pos + 1


def parse_all(text: str) -> list:
    tokens = list(tokenize(text))
    out = []
    pos = 0
    while pos < len(tokens):
        node, pos = parse_sexpr(tokens, pos)
        out.append(node)
    return out


def read_command(stream) -> str | None:
    """Read one balanced command from a text stream, None at EOF."""
    buf = []
    depth = 0
    started = False
    while True:
        ch = stream.read(1)
        if ch == "":
            return None if not started else "".join(buf)
        if ch == ";" and depth == 0 and not started:
            while ch not in ("", "\n"):
                ch = stream.read(1)
            continue
        if ch == "(":
            depth += 1
            started = True
        elif ch == ")":
            depth -= 1
        buf.append(ch)
        if started and depth == 0:
            return "".join(buf)


# ---------------------------------------------------------------------------
# Literals and sorts


def parse_bv_literal(node) -> tuple[int, int] | None:
    """Returns (width, value) for #x / #b / (_ bvN w) literals, else None."""
    if isinstance(node, str):
        if node.startswith("#x"):
            return (4 * (len(node) - 2), int(node[2:], 16))
        if node.startswith("#b"):
            return (len(node) - 2, int(node[2:], 2))
        return None
    if (isinstance(node, list) and len(node) == 3 and node[0] == "_"
            and isinstance(node[1], str) and node[1].startswith("bv")):
        return (int(node[2]), int(node[1][2:]) & ((1 << int(node[2])) - 1))
    return None


def parse_sort(node) -> int:
    """Bitvector sort width; Bool is width 0 by convention here."""
    if node == "Bool":
        return 0
    if isinstance(node, list) and len(node) == 3 and node[0] == "_" and node[1] == "BitVec":
        return int(node[2])
    raise SmtError(f"unsupported sort {node!r}")


def _sext(width: int, v: int) -> int:
    return v - (1 << width) if v >= (1 << (width - 1)) else v


BV_BINOPS = {
    "bvadd": lambda w, a, b: (a + b) & ((1 << w) - 1),
    "bvsub": lambda w, a, b: (a - b) & ((1 << w) - 1),
    "bvmul": lambda w, a, b: (a * b) & ((1 << w) - 1),
    "bvand": lambda w, a, b: a & b,
    "bvor": lambda w, a, b: a | b,
    "bvxor": lambda w, a, b: a ^ b,
}

BV_CMPS = {
    "bvult": lambda w, a, b: a < b,
    "bvule": lambda w, a, b: a <= b,
    "bvugt": lambda w, a, b: a > b,
    "bvuge": lambda w, a, b: a >= b,
    "bvslt": lambda w, a, b: _sext(w, a) < _sext(w, b),
    "bvsle": lambda w, a, b: _sext(w, a) <= _sext(w, b),
    "bvsgt": lambda w, a, b: _sext(w, a) > _sext(w, b),
    "bvsge": lambda w, a, b: _sext(w, a) >= _sext(w, b),
}


def bv_udiv(w, a, b):
    return ((1 << w) - 1) if b == 0 else a // b


def bv_urem(w, a, b):
    return a if b == 0 else a % b


def bv_sdiv(w, a, b):
    sa, sb = _sext(w, a), _sext(w, b)
    if sb == 0:
        return 1 if sa < 0 else (1 << w) - 1
    q = abs(sa) // abs(sb)
    if (sa < 0) != (sb < 0):
        q = -q
    return q & ((1 << w) - 1)


def bv_srem(w, a, b):
    sa, sb = _sext(w, a), _sext(w, b)
    if sb == 0:
        return a
    r = abs(sa) % abs(sb)
    if sa < 0:
        r = -r
    return r & ((1 << w) - 1)


def bv_shl(w, a, b):
    return 0 if b >= w else (a << b) & ((1 << w) - 1)


def bv_lshr(w, a, b):
    return 0 if b >= w else a >> b


def bv_ashr(w, a, b):
    sa = _sext(w, a)
    if b >= w:
        return ((1 << w) - 1) if sa < 0 else 0
    return (sa >> b) & ((1 << w) - 1)


BV_SHIFTS = {"bvshl": bv_shl, "bvlshr": bv_lshr, "bvashr": bv_ashr}
BV_DIVS = {"bvudiv": bv_udiv, "bvurem": bv_urem, "bvsdiv": bv_sdiv, "bvsrem": bv_srem}


class Evaluator:
    """Concrete evaluation of terms under an assignment name -> (width, value)."""

    def __init__(self, env: dict[str, tuple[int, int]]):
        self.env = env

    def eval(self, term):
        """Returns ('bool', b) or ('bv', width, value)."""
        lit = parse_bv_literal(term)
        if lit is not None:
            return ("bv", lit[0], lit[1])
        if isinstance(term, str):
            if term == "true":
                return ("bool", True)
            if term == "false":
                return ("bool", False)
            if term in self.env:
                w, v = self.env[term]
                return ("bv", w, v)
            raise SmtError(f"unknown symbol {term!r}")
        if not isinstance(term, list) or not term:
            raise SmtError(f"bad term {term!r}")
        head = term[0]
        if isinstance(head, list):
            # indexed operator ((_ extract hi lo) x) etc.
            if head[0] == "_" and head[1] == "extract":
                hi, lo = int(head[2]), int(head[3])
                _, w, v = self._bv(term[1])
                return ("bv", hi - lo + 1, (v >> lo) & ((1 << (hi - lo + 1)) - 1))
            if head[0] == "_" and head[1] == "zero_extend":
                n = int(head[2])
                _, w, v = self._bv(term[1])
                return ("bv", w + n, v)
            if head[0] == "_" and head[1] == "sign_extend":
                n = int(head[2])
                _, w, v = self._bv(term[1])
                return ("bv", w + n, _sext(w, v) & ((1 << (w + n)) - 1))
            raise SmtError(f"unsupported indexed op {head!r}")
        if head == "not":
            return ("bool", not self._bool(term[1]))
        if head == "and":
            return ("bool", all(self._bool(t) for t in term[1:]))
        if head == "or":
            return ("bool", any(self._bool(t) for t in term[1:]))
        if head == "xor":
            vals = [self._bool(t) for t in term[1:]]
            out = False
            for v in vals:
                out ^= v
            return ("bool", out)
        if head == "=>":
            return ("bool", (not self._bool(term[1])) or self._bool(term[2]))
        if head == "=":
            a = self.eval(term[1])
            b = self.eval(term[2])
            return ("bool", a == b)
        if head == "distinct":
            a = self.eval(term[1])
            b = self.eval(term[2])
            return ("bool", a != b)
        if head == "ite":
            return self.eval(term[2]) if self._bool(term[1]) else self.eval(term[3])
        if head in BV_CMPS:
            _, w, a = self._bv(term[1])
            _, _, b = self._bv(term[2])
            return ("bool", BV_CMPS[head](w, a, b))
        if head in BV_BINOPS:
            _, w, a = self._bv(term[1])
            acc = a
            for t in term[2:]:
                _, _, b = self._bv(t)
                acc = BV_BINOPS[head](w, acc, b)
            return ("bv", w, acc)
        if head in BV_SHIFTS:
            _, w, a = self._bv(term[1])
            _, _, b = self._bv(term[2])
            return ("bv", w, BV_SHIFTS[head](w, a, b))
        if head in BV_DIVS:
            _, w, a = self._bv(term[1])
            _, _, b = self._bv(term[2])
            return ("bv", w, BV_DIVS[head](w, a, b))
        if head == "bvnot":
            _, w, a = self._bv(term[1])
            return ("bv", w, a ^ ((1 << w) - 1))
        if head == "bvneg":
            _, w, a = self._bv(term[1])
            return ("bv", w, (-a) & ((1 << w) - 1))
        if head == "concat":
            _, wh, vh = self._bv(term[1])
            _, wl, vl = self._bv(term[2])
            return ("bv", wh + wl, (vh << wl) | vl)
        raise SmtError(f"unsupported operator {head!r}")

    def _bool(self, term) -> bool:
        r = self.eval(term)
        if r[0] != "bool":
            raise SmtError(f"expected Bool term, got {term!r}")
        return r[1]

    def _bv(self, term):
        r = self.eval(term)
        if r[0] != "bv":
            raise SmtError(f"expected BitVec term, got {term!r}")
        return r


def collect_symbols(term, declared: dict[str, int], acc: set[str]):
    if isinstance(term, str):
        if term in declared:
            acc.add(term)
        return
    if isinstance(term, list):
        for t in term:
            collect_symbols(t, declared, acc)
