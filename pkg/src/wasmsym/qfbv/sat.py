"""A small CDCL SAT solver: two-watched literals, 1UIP learning, VSIDS-style
activities with phase saving, geometric restarts.

Literals are nonzero ints, negative for negation; variables are 1-based.
"""

from __future__ import annotations

import heapq
import time


class SatTimeout(Exception):
    pass


class CDCL:
    def __init__(self):
        self.n_vars = 0
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[list[int]]] = {}
        self.assign: dict[int, bool] = {}
        self.level: dict[int, int] = {}
        self.reason: dict[int, list[int] | None] = {}
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.activity: dict[int, float] = {}
        self.phase: dict[int, bool] = {}
        self.heap: list[tuple[float, int]] = []
        self.var_inc = 1.0
        self.ok = True
        self._qhead = 0

    def new_var(self) -> int:
        self.n_vars += 1
        v = self.n_vars
        self.activity[v] = 0.0
        heapq.heappush(self.heap, (0.0, v))
        return v

    # -- clause management

    def add_clause(self, lits: list[int]) -> None:
        if not self.ok:
            return
        lits = sorted(set(lits), key=abs)
        # tautology?
        for i in range(len(lits) - 1):
            if lits[i] == -lits[i + 1]:
                return
        if not lits:
            self.ok = False
            return
        if len(lits) == 1:
            if not self._enqueue(lits[0], None):
                self.ok = False
            return
        clause = lits
        self.clauses.append(clause)
        self._watch(clause[0], clause)
        self._watch(clause[1], clause)

    def _watch(self, lit: int, clause: list[int]) -> None:
        self.watches.setdefault(-lit, []).append(clause)

    # -- assignment

    def _value(self, lit: int):
        v = self.assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def _enqueue(self, lit: int, reason) -> bool:
        val = self._value(lit)
        if val is not None:
            return val
        var = abs(lit)
        self.assign[var] = lit > 0
        self.level[var] = len(self.trail_lim)
        self.reason[var] = reason
        self.trail.append(lit)
        return True

    def _propagate(self):
        """Returns a conflicting clause or None."""
        qhead = self._qhead
        while qhead < len(self.trail):
            lit = self.trail[qhead]
            qhead += 1
            watchlist = self.watches.get(lit)
            if not watchlist:
                continue
            keep: list[list[int]] = []
            j = 0
            while j < len(watchlist):
                clause = watchlist[j]
                j += 1
                # ensure clause[0]/clause[1] are the watched ones; -lit is one
                if clause[0] == -lit:
                    clause[0], clause[1] = clause[1], clause[0]
                first = clause[0]
                if self._value(first) is True:
                    keep.append(clause)
                    continue
                # find a new watch
                found = False
                for k in range(2, len(clause)):
                    if self._value(clause[k]) is not False:
                        clause[1], clause[k] = clause[k], clause[1]
                        self._watch(clause[1], clause)
                        found = True
                        break
                if found:
                    continue
                keep.append(clause)
                if self._value(first) is False:
                    # conflict
                    keep.extend(watchlist[j:])
                    self.watches[lit] = keep
                    self._qhead = len(self.trail)
                    return clause
                self._enqueue(first, clause)
            self.watches[lit] = keep
        self._qhead = qhead
        return None

    # -- learning

    def _bump(self, var: int) -> None:
        a = self.activity[var] = self.activity.get(var, 0.0) + self.var_inc
        if a > 1e100:
            for v in self.activity:
                self.activity[v] *= 1e-100
            self.var_inc *= 1e-100
        heapq.heappush(self.heap, (-self.activity[var], var))

    def _analyze(self, conflict: list[int]):
        learnt = []
        seen: set[int] = set()
        counter = 0
        p = None  # the literal whose reason we are resolving on
        reason = conflict
        idx = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        while True:
            for q in reason:
                if q == p:
                    continue
                var = abs(q)
                if var in seen or self.level[var] == 0:
                    continue
                seen.add(var)
                self._bump(var)
                if self.level[var] == cur_level:
                    counter += 1
                else:
                    learnt.append(q)
            while True:
                p = self.trail[idx]
                idx -= 1
                if abs(p) in seen:
                    break
            seen.discard(abs(p))
            counter -= 1
            if counter == 0:
                break
            reason = self.reason[abs(p)]
        learnt.insert(0, -p)
        if len(learnt) == 1:
            bt = 0
        else:
            bt = max(self.level[abs(q)] for q in learnt[1:])
        return learnt, bt

    def _backtrack(self, level: int) -> None:
        while len(self.trail_lim) > level:
            lim = self.trail_lim.pop()
            while len(self.trail) > lim:
                lit = self.trail.pop()
                var = abs(lit)
                self.phase[var] = self.assign[var]
                del self.assign[var]
                del self.level[var]
                self.reason.pop(var, None)
                heapq.heappush(self.heap, (-self.activity.get(var, 0.0), var))
        self._qhead = min(self._qhead, len(self.trail))

    def _decide(self):
        while self.heap:
            _, var = heapq.heappop(self.heap)
            if var not in self.assign:
                return var
        for var in range(1, self.n_vars + 1):
            if var not in self.assign:
                return var
        return None

    def solve(self, deadline: float | None = None) -> bool:
        """True = sat, False = unsat; raises SatTimeout past the deadline."""
        if not self.ok:
            return False
        self._qhead = 0
        if self._propagate() is not None:
            return False
        conflicts_until_restart = 100
        conflicts = 0
        checked = 0
        while True:
            conflict = self._propagate()
            if conflict is not None:
                conflicts += 1
                if not self.trail_lim:
                    return False
                learnt, bt = self._analyze(conflict)
                self._backtrack(bt)
                if len(learnt) == 1:
                    if not self._enqueue(learnt[0], None):
                        return False
                else:
                    # second watch must sit at the backjump level, otherwise
                    # the clause can go dormant while violated
                    ml = max(range(1, len(learnt)),
                             key=lambda i: self.level.get(abs(learnt[i]), 0))
                    learnt[1], learnt[ml] = learnt[ml], learnt[1]
                    self.clauses.append(learnt)
                    self._watch(learnt[0], learnt)
                    self._watch(learnt[1], learnt)
                    self._enqueue(learnt[0], learnt)
                self.var_inc *= 1.05
                if conflicts >= conflicts_until_restart:
                    conflicts = 0
                    conflicts_until_restart = int(conflicts_until_restart * 1.5)
                    self._backtrack(0)
                continue
            checked += 1
            if deadline is not None and checked % 64 == 0 and time.monotonic() > deadline:
                raise SatTimeout()
            var = self._decide()
            if var is None:
                return True
            self.trail_lim.append(len(self.trail))
            want = self.phase.get(var, False)
            self._enqueue(var if want else -var, None)

    def model_value(self, var: int) -> bool:
        return self.assign.get(var, False)
