"""Decision procedure: fast randomized model search, then complete
bit-blasting with the CDCL core."""

from __future__ import annotations

import random
import time

from wasmsym.qfbv.bitblast import Blaster
from wasmsym.qfbv.sat import CDCL, SatTimeout
from wasmsym.qfbv.smt2 import Evaluator, SmtError, collect_symbols, parse_bv_literal


def _special_values(width: int) -> list[int]:
    m = (1 << width) - 1
    half = 1 << (width - 1)
    vals = [0, 1, m, half, half - 1, 2, 3, m - 1, half + 1, 5, 7, 85, 170]
    return [v & m for v in vals]


def _harvest_constants(term, acc: dict[int, None]):
    lit = parse_bv_literal(term)
    if lit is not None:
        acc[lit[1]] = None
        return
    if isinstance(term, list):
        for t in term:
            _harvest_constants(t, acc)


def _candidate_values(width: int, constants) -> list[int]:
    """Specials plus the formula's own constants, negated and nudged; exact
    equality targets like x + k == 0 are only reachable this way. Constants
    arrive newest-assert-first so the cap keeps the most relevant ones."""
    m = (1 << width) - 1
    out = []
    for c in list(constants)[:32]:
        out.extend(((c & m), (-c) & m, (c + 1) & m, (c - 1) & m, (~c) & m))
    out.extend(_special_values(width))
    seen: set[int] = set()
    uniq = []
    for v in out:
        if v not in seen:
            seen.add(v)
            uniq.append(v)
    return uniq


def _search_model(asserts, declared, deadline, rng: random.Random):
    """Cheap satisfying-assignment hunt; None if the budget runs out."""
    used: set[str] = set()
    for a in asserts:
        collect_symbols(a, declared, used)
    names = sorted(used)
    env = {n: (declared[n], 0) for n in names}
    ev = Evaluator(env)

    def holds_all() -> bool:
        for a in asserts:
            if ev.eval(a) != ("bool", True):
                return False
        return True

    def score() -> int:
        return sum(1 for a in asserts if ev.eval(a) == ("bool", True))

    target = len(asserts)
    if not names:
        return {} if holds_all() else None

    def attempt(assignment) -> bool:
        for n, v in assignment.items():
            env[n] = (declared[n], v)
        return holds_all()

    constants: dict[int, None] = {}
    for a in reversed(asserts):
        _harvest_constants(a, constants)
    candidates = {n: _candidate_values(declared[n], constants) for n in names}

    # phase 1: deterministic sweep, one axis at a time around all-zero
    if attempt({n: 0 for n in names}):
        return {n: env[n][1] for n in names}
    base = {n: 0 for n in names}
    for n in names:
        for v in candidates[n]:
            cand = dict(base)
            cand[n] = v
            if attempt(cand):
                return {k: env[k][1] for k in names}
            if time.monotonic() > deadline:
                return None
    # phase 2: random assignments mixing candidates and uniform values
    tries = 0
    while time.monotonic() < deadline and tries < 2000:
        tries += 1
        cand = {}
        for n in names:
            w = declared[n]
            if rng.random() < 0.4:
                cand[n] = rng.choice(candidates[n])
            else:
                cand[n] = rng.getrandbits(w)
        if attempt(cand):
            return {k: env[k][1] for k in names}
        # greedy repair: flip random bits while the score improves
        best = score()
        for _ in range(30):
            n = rng.choice(names)
            w = declared[n]
            old = env[n][1]
            env[n] = (w, old ^ (1 << rng.randrange(w)))
            s = score()
            if s == target:
                return {k: env[k][1] for k in names}
            if s < best:
                env[n] = (w, old)
            else:
                best = s
    return None


def check(asserts: list, declared: dict[str, int], timeout_ms: int | None = None,
          seed: int = 0):
    """Returns ("sat", model) | ("unsat", None) | ("unknown", reason)."""
    budget = (timeout_ms / 1000.0) if timeout_ms else 1e9
    deadline = time.monotonic() + budget
    if not asserts:
        return ("sat", {})
    used: set[str] = set()
    for a in asserts:
        collect_symbols(a, declared, used)
    total_bits = sum(declared[n] for n in used)
    # search only pays off on domains too big to blast instantly
    if total_bits > 24:
        rng = random.Random(seed or 0xC0FFEE)
        search_deadline = min(deadline, time.monotonic() + min(0.15, max(0.05, budget * 0.1)))
        try:
            model = _search_model(asserts, declared, search_deadline, rng)
        except SmtError:
            return ("unknown", "unsupported term in search")
        if model is not None:
            return ("sat", model)
    # complete path: bit-blast
    sat = CDCL()
    blaster = Blaster(sat, declared)
    try:
        for a in asserts:
            blaster.assert_term(a)
    except SmtError as e:
        return ("unknown", f"unsupported term: {e}")
    try:
        res = sat.solve(deadline=deadline)
    except SatTimeout:
        return ("unknown", "timeout")
    if not res:
        return ("unsat", None)
    model = blaster.model()
    # symbols never touched by the blaster default to zero
    used: set[str] = set()
    for a in asserts:
        collect_symbols(a, declared, used)
    for n in used:
        model.setdefault(n, 0)
    # sanity: the blasted model must satisfy the original terms
    env = {n: (declared[n], v) for n, v in model.items()}
    ev = Evaluator(env)
    for a in asserts:
        if ev.eval(a) != ("bool", True):
            return ("unknown", "internal model check failed")
    return ("sat", model)
