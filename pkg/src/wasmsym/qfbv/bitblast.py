"""Tseitin bit-blasting of QF_BV terms onto the CDCL core.

Bit vectors are little-endian lists of literals. The constant true literal
is variable 1, pinned by a unit clause.
"""

from __future__ import annotations

from wasmsym.qfbv.sat import CDCL
from wasmsym.qfbv.smt2 import SmtError, parse_bv_literal


class Blaster:
    def __init__(self, solver: CDCL, declared: dict[str, int]):
        self.sat = solver
        self.declared = declared
        self.TRUE = solver.new_var()
        solver.add_clause([self.TRUE])
        self.FALSE = -self.TRUE
        self.sym_bits: dict[str, list[int]] = {}

    # -- gates

    def _new(self) -> int:
        return self.sat.new_var()

    def g_not(self, a: int) -> int:
        return -a

    def g_and(self, a: int, b: int) -> int:
        if a == self.FALSE or b == self.FALSE:
            return self.FALSE
        if a == self.TRUE:
            return b
        if b == self.TRUE:
            return a
        if a == b:
            return a
        if a == -b:
            return self.FALSE
        g = self._new()
        add = self.sat.add_clause
        add([-g, a])
        add([-g, b])
        add([g, -a, -b])
        return g

    def g_or(self, a: int, b: int) -> int:
        return -self.g_and(-a, -b)

    def g_xor(self, a: int, b: int) -> int:
        if a == self.FALSE:
            return b
        if b == self.FALSE:
            return a
        if a == self.TRUE:
            return -b
        if b == self.TRUE:
            return -a
        if a == b:
            return self.FALSE
        if a == -b:
            return self.TRUE
        g = self._new()
        add = self.sat.add_clause
        add([-g, a, b])
        add([-g, -a, -b])
        add([g, -a, b])
        add([g, a, -b])
        return g

    def g_mux(self, s: int, a: int, b: int) -> int:
        """s ? a : b"""
        if s == self.TRUE:
            return a
        if s == self.FALSE:
            return b
        if a == b:
            return a
        g = self._new()
        add = self.sat.add_clause
        add([-s, -a, g])
        add([-s, a, -g])
        add([s, -b, g])
        add([s, b, -g])
        return g

    def g_and_many(self, lits) -> int:
        out = self.TRUE
        for l in lits:
            out = self.g_and(out, l)
        return out

    def g_or_many(self, lits) -> int:
        out = self.FALSE
        for l in lits:
            out = self.g_or(out, l)
        return out

    # -- vectors

    def const_bits(self, width: int, value: int) -> list[int]:
        return [self.TRUE if (value >> i) & 1 else self.FALSE for i in range(width)]

    def symbol_bits(self, name: str) -> list[int]:
        bits = self.sym_bits.get(name)
        if bits is None:
            bits = [self._new() for _ in range(self.declared[name])]
            self.sym_bits[name] = bits
        return bits

    def v_add(self, a, b, cin: int | None = None):
        out = []
        c = cin if cin is not None else self.FALSE
        for x, y in zip(a, b):
            s = self.g_xor(self.g_xor(x, y), c)
            c = self.g_or(self.g_and(x, y), self.g_and(c, self.g_xor(x, y)))
            out.append(s)
        return out, c

    def v_sub(self, a, b):
        out, carry = self.v_add(a, [-y for y in b], cin=self.TRUE)
        return out, carry  # carry==1 means no borrow (a >= b unsigned)

    def v_neg(self, a):
        out, _ = self.v_add([-x for x in a], self.const_bits(len(a), 1))
        return out

    def v_mul(self, a, b):
        w = len(a)
        acc = self.const_bits(w, 0)
        for i in range(w):
            row = [self.FALSE] * i + [self.g_and(b[i], a[k]) for k in range(w - i)]
            acc, _ = self.v_add(acc, row)
        return acc

    def v_eq(self, a, b) -> int:
        return self.g_and_many(-self.g_xor(x, y) for x, y in zip(a, b))

    def v_ult(self, a, b) -> int:
        _, carry = self.v_sub(a, b)
        return -carry

    def v_slt(self, a, b) -> int:
        af = a[:-1] + [-a[-1]]
        bf = b[:-1] + [-b[-1]]
        return self.v_ult(af, bf)

    def v_mux(self, s: int, a, b):
        return [self.g_mux(s, x, y) for x, y in zip(a, b)]

    def v_shift(self, a, amount, kind: str):
        w = len(a)
        fill = a[-1] if kind == "ashr" else self.FALSE
        stages = []
        k = 0
        while (1 << k) < w:
            stages.append(k)
            k += 1
        cur = list(a)
        for k in stages:
            sh = 1 << k
            if kind == "shl":
                shifted = [self.FALSE] * sh + cur[: w - sh]
            else:
                shifted = cur[sh:] + [fill] * sh
            cur = self.v_mux(amount[k], shifted, cur)
        # amount >= w (any higher bit set) pushes everything out
        over = self.g_or_many(amount[len(stages):])
        return self.v_mux(over, [fill] * w, cur)

    def v_udivrem(self, a, b):
        """Restoring division; returns (quotient, remainder) with the
        SMT-LIB b=0 convention (q = all ones, r = a)."""
        w = len(a)
        ext = w + 1
        rem = self.const_bits(ext, 0)
        bx = list(b) + [self.FALSE]
        q = [self.FALSE] * w
        for i in range(w - 1, -1, -1):
            rem = [a[i]] + rem[:-1]
            diff, carry = self.v_sub(rem, bx)
            ge = carry  # rem >= b
            rem = self.v_mux(ge, diff, rem)
            q[i] = ge
        is_zero = self.v_eq(b, self.const_bits(w, 0))
        q = self.v_mux(is_zero, self.const_bits(w, (1 << w) - 1), q)
        r = self.v_mux(is_zero, a, rem[:w])
        return q, r

    def v_sdivrem(self, a, b):
        w = len(a)
        sa, sb = a[-1], b[-1]
        abs_a = self.v_mux(sa, self.v_neg(a), a)
        abs_b = self.v_mux(sb, self.v_neg(b), b)
        q, r = self.v_udivrem(abs_a, abs_b)
        qsign = self.g_xor(sa, sb)
        qq = self.v_mux(qsign, self.v_neg(q), q)
        rr = self.v_mux(sa, self.v_neg(r), r)
        # SMT-LIB: x sdiv 0 = (x < 0 ? 1 : -1); x srem 0 = x. The unsigned
        # circuit already yields q=ones r=abs(x) for b=0; fix the signs up.
        is_zero = self.v_eq(b, self.const_bits(w, 0))
        sdiv_zero = self.v_mux(sa, self.const_bits(w, 1), self.const_bits(w, (1 << w) - 1))
        qq = self.v_mux(is_zero, sdiv_zero, qq)
        rr = self.v_mux(is_zero, a, rr)
        return qq, rr

    # -- terms

    def bv(self, term) -> list[int]:
        lit = parse_bv_literal(term)
        if lit is not None:
            return self.const_bits(lit[0], lit[1])
        if isinstance(term, str):
            if term in self.declared:
                return self.symbol_bits(term)
            raise SmtError(f"unknown symbol {term!r}")
        head = term[0]
        if isinstance(head, list):
            if head[0] == "_" and head[1] == "extract":
                hi, lo = int(head[2]), int(head[3])
                return self.bv(term[1])[lo : hi + 1]
            if head[0] == "_" and head[1] == "zero_extend":
                n = int(head[2])
                return self.bv(term[1]) + [self.FALSE] * n
            if head[0] == "_" and head[1] == "sign_extend":
                n = int(head[2])
                bits = self.bv(term[1])
                return bits + [bits[-1]] * n
            raise SmtError(f"unsupported indexed op {head!r}")
        if head == "concat":
            hi = self.bv(term[1])
            lo = self.bv(term[2])
            return lo + hi
        if head == "bvnot":
            return [-x for x in self.bv(term[1])]
        if head == "bvneg":
            return self.v_neg(self.bv(term[1]))
        if head == "ite":
            return self.v_mux(self.bool(term[1]), self.bv(term[2]), self.bv(term[3]))
        if head in ("bvadd", "bvsub", "bvmul", "bvand", "bvor", "bvxor"):
            acc = self.bv(term[1])
            for t in term[2:]:
                b = self.bv(t)
                if head == "bvadd":
                    acc, _ = self.v_add(acc, b)
                elif head == "bvsub":
                    acc, _ = self.v_sub(acc, b)
                elif head == "bvmul":
                    acc = self.v_mul(acc, b)
                elif head == "bvand":
                    acc = [self.g_and(x, y) for x, y in zip(acc, b)]
                elif head == "bvor":
                    acc = [self.g_or(x, y) for x, y in zip(acc, b)]
                else:
                    acc = [self.g_xor(x, y) for x, y in zip(acc, b)]
            return acc
        if head in ("bvshl", "bvlshr", "bvashr"):
            kind = {"bvshl": "shl", "bvlshr": "lshr", "bvashr": "ashr"}[head]
            return self.v_shift(self.bv(term[1]), self.bv(term[2]), kind)
        if head == "bvudiv":
            return self.v_udivrem(self.bv(term[1]), self.bv(term[2]))[0]
        if head == "bvurem":
            return self.v_udivrem(self.bv(term[1]), self.bv(term[2]))[1]
        if head == "bvsdiv":
            return self.v_sdivrem(self.bv(term[1]), self.bv(term[2]))[0]
        if head == "bvsrem":
            return self.v_sdivrem(self.bv(term[1]), self.bv(term[2]))[1]
        raise SmtError(f"unsupported bv operator {head!r}")

    def bool(self, term) -> int:
        if term == "true":
            return self.TRUE
        if term == "false":
            return self.FALSE
        if isinstance(term, str):
            raise SmtError(f"boolean symbol {term!r} not supported")
        head = term[0]
        if head == "not":
            return -self.bool(term[1])
        if head == "and":
            return self.g_and_many(self.bool(t) for t in term[1:])
        if head == "or":
            return self.g_or_many(self.bool(t) for t in term[1:])
        if head == "xor":
            out = self.FALSE
            for t in term[1:]:
                out = self.g_xor(out, self.bool(t))
            return out
        if head == "=>":
            return self.g_or(-self.bool(term[1]), self.bool(term[2]))
        if head == "=":
            if self._is_bool(term[1]):
                return -self.g_xor(self.bool(term[1]), self.bool(term[2]))
            return self.v_eq(self.bv(term[1]), self.bv(term[2]))
        if head == "distinct":
            if self._is_bool(term[1]):
                return self.g_xor(self.bool(term[1]), self.bool(term[2]))
            return -self.v_eq(self.bv(term[1]), self.bv(term[2]))
        if head == "ite":
            s = self.bool(term[1])
            return self.g_or(self.g_and(s, self.bool(term[2])),
                             self.g_and(-s, self.bool(term[3])))
        if head in ("bvult", "bvule", "bvugt", "bvuge", "bvslt", "bvsle", "bvsgt", "bvsge"):
            a = self.bv(term[1])
            b = self.bv(term[2])
            if head == "bvult":
                return self.v_ult(a, b)
            if head == "bvugt":
                return self.v_ult(b, a)
            if head == "bvule":
                return -self.v_ult(b, a)
            if head == "bvuge":
                return -self.v_ult(a, b)
            if head == "bvslt":
                return self.v_slt(a, b)
            if head == "bvsgt":
                return self.v_slt(b, a)
            if head == "bvsle":
                return -self.v_slt(b, a)
            return -self.v_slt(a, b)
        raise SmtError(f"unsupported boolean operator {head!r}")

    def _is_bool(self, term) -> bool:
        """Cheap sort inference: is this term Bool-sorted?"""
        if term in ("true", "false"):
            return True
        if isinstance(term, str):
            return term not in self.declared and parse_bv_literal(term) is None
        if isinstance(term, list):
            head = term[0]
            if isinstance(head, list):
                return False  # indexed ops are bv-sorted
            if head in ("not", "and", "or", "xor", "=>", "=", "distinct"):
                return True
            if head in ("bvult", "bvule", "bvugt", "bvuge", "bvslt", "bvsle", "bvsgt", "bvsge"):
                return True
            if head == "ite":
                return self._is_bool(term[2])
            return False
        return False

    def assert_term(self, term):
        self.sat.add_clause([self.bool(term)])

    def model(self) -> dict[str, int]:
        out = {}
        for name, bits in self.sym_bits.items():
            v = 0
            for i, lit in enumerate(bits):
                bit = self.sat.model_value(abs(lit))
                if lit < 0:
                    bit = not bit
                if bit:
                    v |= 1 << i
            out[name] = v
        return out
