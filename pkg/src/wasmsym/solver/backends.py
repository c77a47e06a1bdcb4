"""Feasibility backends: an external SMT-LIB2 process and brute-force
enumeration. One SolverHandle per worker; it is the worker-local storage.

Every Sat model is re-evaluated against the queried conjuncts with the
engine's own concrete evaluator before it is trusted.
"""

from __future__ import annotations

import os
import select
import shlex
import shutil
import subprocess
import sys
import time

from wasmsym.errors import InternalEngineError
from wasmsym.solver import smtlib
from wasmsym.solver.smtlib import Model
from wasmsym.values.symbolic import SymExpr, compile_expr, evaluate, iter_symbols


class SatResult:
    __slots__ = ("status", "model", "reason")

    def __init__(self, status: str, model: Model | None = None, reason: str = ""):
        self.status = status  # "sat" | "unsat" | "unknown"
        self.model = model
        self.reason = reason

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"

    @property
    def is_unknown(self) -> bool:
        return self.status == "unknown"

    def __repr__(self):
        return f"SatResult({self.status}, {self.model}, {self.reason!r})"


def default_solver_command() -> list[str]:
    """A usable external command on this machine: a system z3 if present,
    otherwise the bundled QF_BV solver (always executable)."""
    z3 = shutil.which("z3")
    if z3:
        return [z3, "-in"]
    return [sys.executable, "-m", "wasmsym.qfbv.server"]


class BruteForceBackend:
    """Exhaustive enumeration over the symbols' joint domain, capped at
    2**max_bits assignments; beyond the cap the verdict is unknown.

    Conjuncts are compiled to Python callables and checked as soon as all
    their symbols are bound, pruning whole subtrees of the assignment space.
    """

    kind = "brute-force"

    def __init__(self, max_bits: int = 24):
        self.max_bits = max_bits

    def check(self, conjuncts: tuple[SymExpr, ...], timeout_ms=None) -> SatResult:
        syms: dict[int, int] = {}
        for c in conjuncts:
            iter_symbols(c, syms)
        total_bits = sum(syms.values())
        if total_bits > self.max_bits:
            return SatResult("unknown", reason=f"domain of {total_bits} bits exceeds cap")
        idents = sorted(syms)
        pos = {ident: k for k, ident in enumerate(idents)}
        # bucket conjuncts by the last symbol (in enumeration order) they need
        groups: list[list] = [[] for _ in range(len(idents) + 1)]
        for c in conjuncts:
            support: dict[int, int] = {}
            iter_symbols(c, support)
            level = max((pos[i] + 1 for i in support), default=0)
            params = idents[:level]
            groups[level].append(compile_expr(c, params))
        for f in groups[0]:
            if not f():
                return SatResult("unsat")

        n = len(idents)
        ranges = [range(1 << syms[i]) for i in idents]

        def descend(level: int, prefix: tuple) -> tuple | None:
            if level == n:
                return prefix
            for v in ranges[level]:
                vals = prefix + (v,)
                if all(f(*vals) for f in groups[level + 1]):
                    hit = descend(level + 1, vals)
                    if hit is not None:
                        return hit
            return None

        hit = descend(0, ())
        if hit is None:
            return SatResult("unsat")
        return SatResult("sat", {i: (syms[i], hit[k]) for k, i in enumerate(idents)})

    def close(self):
        pass


class _Session:
    """One external solver process with its assertion/declaration stack."""

    def __init__(self, command: list[str], timeout_ms: int):
        self.proc = subprocess.Popen(
            command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
        )
        self._buf = ""
        self.levels: list[tuple[SymExpr | None, set[int]]] = []  # per pushed conjunct
        self.declared: set[int] = set()
        self.send("(set-logic QF_BV)")
        self.send("(set-option :produce-models true)")
        if timeout_ms:
            self.send(f"(set-option :timeout {int(timeout_ms)})")

    def send(self, line: str) -> None:
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def read_line(self, deadline: float) -> str | None:
        while True:
            while "\n" not in self._buf:
                if not self._fill(deadline):
                    return None
            line, _, self._buf = self._buf.partition("\n")
            line = line.strip()
            if line:
                return line

    def read_balanced(self, deadline: float) -> str | None:
        """Read one complete s-expression (multi-line tolerant)."""
        depth = 0
        seen_any = False
        out = []
        pos = 0
        while True:
            while pos >= len(self._buf):
                if not self._fill(deadline):
                    return None
            ch = self._buf[pos]
            pos += 1
            out.append(ch)
            if ch == "(":
                depth += 1
                seen_any = True
            elif ch == ")":
                depth -= 1
            if seen_any and depth == 0:
                self._buf = self._buf[pos:]
                return "".join(out)

    def _fill(self, deadline: float) -> bool:
        fd = self.proc.stdout.fileno()
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            return False
        ready, _, _ = select.select([fd], [], [], remaining)
        if not ready:
            return False
        chunk = os.read(fd, 65536)
        if not chunk:
            return False  # process died
        self._buf += chunk.decode()
        return True

    def kill(self):
        try:
            self.proc.kill()
            self.proc.wait(timeout=5)
        except Exception:
            pass


class ExternalBackend:
    """Textual SMT-LIB2 over a child process's standard streams.

    With incremental=True the session mirrors the path condition with one
    push level per conjunct, popping back to the common prefix between
    consecutive queries; the non-incremental reference path resets and
    re-asserts everything per query.
    """

    kind = "external"

    def __init__(self, command: list[str] | None = None, timeout_ms: int = 10_000,
                 incremental: bool = True):
        self.command = command or default_solver_command()
        self.timeout_ms = timeout_ms
        self.incremental = incremental
        self._session: _Session | None = None

    def _ensure_session(self) -> _Session:
        if self._session is None or self._session.proc.poll() is not None:
            self._session = _Session(self.command, self.timeout_ms)
        return self._session

    def _abandon_session(self):
        if self._session is not None:
            self._session.kill()
            self._session = None

    def check(self, conjuncts: tuple[SymExpr, ...], timeout_ms=None) -> SatResult:
        budget = (timeout_ms or self.timeout_ms or 10_000) / 1000.0
        deadline = time.monotonic() + budget * 1.5 + 2.0
        try:
            s = self._ensure_session()
        except OSError as e:
            return SatResult("unknown", reason=f"cannot start solver: {e}")
        try:
            if self.incremental:
                self._sync_incremental(s, conjuncts)
            else:
                s.send("(reset)")
                s.levels = []
                s.declared = set()
                s.send("(set-logic QF_BV)")
                s.send("(set-option :produce-models true)")
                if self.timeout_ms:
                    s.send(f"(set-option :timeout {int(self.timeout_ms)})")
                for line in smtlib.declarations(conjuncts):
                    s.send(line)
                for c in conjuncts:
                    s.send(f"(assert {smtlib.formula(c)})")
            s.send("(check-sat)")
            verdict = s.read_line(deadline)
        except (OSError, ValueError) as e:
            self._abandon_session()
            return SatResult("unknown", reason=f"solver i/o failed: {e}")
        if verdict is None:
            self._abandon_session()
            return SatResult("unknown", reason="solver timeout")
        if verdict == "unsat":
            return SatResult("unsat")
        if verdict != "sat":
            if verdict.startswith("(error"):
                self._abandon_session()
            return SatResult("unknown", reason=f"solver said {verdict!r}")
        try:
            s.send("(get-model)")
            reply = s.read_balanced(deadline)
        except (OSError, ValueError) as e:
            self._abandon_session()
            return SatResult("unknown", reason=f"solver i/o failed: {e}")
        if reply is None:
            self._abandon_session()
            return SatResult("unknown", reason="solver timeout in get-model")
        named = smtlib.parse_get_model_reply(reply)
        model: Model = {}
        for name, (width, bits) in named.items():
            if name.startswith("symbol_"):
                model[int(name[len("symbol_"):])] = (width, bits)
        return SatResult("sat", model)

    def _sync_incremental(self, s: _Session, conjuncts: tuple[SymExpr, ...]):
        target = list(conjuncts)
        have = [c for c, _ in s.levels]
        common = 0
        while common < len(have) and common < len(target) and have[common] is target[common]:
            common += 1
        for _ in range(len(have) - common):
            s.send("(pop 1)")
            _, names = s.levels.pop()
            s.declared -= names
        for c in target[common:]:
            s.send("(push 1)")
            syms: dict[int, int] = {}
            iter_symbols(c, syms)
            new_names = {i for i in syms if i not in s.declared}
            for i in sorted(new_names):
                s.send(f"(declare-const symbol_{i} (_ BitVec {syms[i]}))")
            s.declared |= new_names
            s.levels.append((c, new_names))
            s.send(f"(assert {smtlib.formula(c)})")

    def close(self):
        if self._session is not None:
            try:
                self._session.send("(exit)")
            except (OSError, ValueError):
                pass
            self._session.kill()
            self._session = None


class SolverHandle:
    """Per-worker solver session with query counters and model validation."""

    def __init__(self, backend=None):
        self.backend = backend if backend is not None else ExternalBackend()
        self.queries = 0
        self.sat = 0
        self.unsat = 0
        self.unknown = 0

    def check(self, conjuncts) -> SatResult:
        conjuncts = tuple(conjuncts)
        if not conjuncts:
            return SatResult("sat", {})
        self.queries += 1
        res = self.backend.check(conjuncts)
        if res.is_sat:
            self.sat += 1
            res = SatResult("sat", self._validate(conjuncts, res.model or {}))
        elif res.is_unsat:
            self.unsat += 1
        else:
            self.unknown += 1
        return res

    def _validate(self, conjuncts, model: Model) -> Model:
        syms: dict[int, int] = {}
        for c in conjuncts:
            iter_symbols(c, syms)
        full = dict(model)
        for i, w in syms.items():
            entry = full.get(i)
            if entry is None or entry[0] != w:
                full[i] = (w, 0 if entry is None else entry[1] & ((1 << w) - 1))
        env = {i: bits for i, (w, bits) in full.items()}
        for c in conjuncts:
            if evaluate(c, env) == 0:
                raise InternalEngineError(
                    f"backend {getattr(self.backend, 'kind', '?')} returned a model "
                    f"that does not satisfy the path condition"
                )
        return {i: full[i] for i in syms}

    def close(self):
        self.backend.close()
