"""SMT-LIB2 command loop over stdin/stdout.

Supports the slice of the language a bitvector path-condition client needs:
declare-const/declare-fun (0-ary), assert, push/pop, reset, check-sat,
get-model, set-option :timeout, echo, exit.
"""

from __future__ import annotations

import sys

from wasmsym.qfbv.smt2 import SmtError, parse_all, parse_sort, read_command
from wasmsym.qfbv.solve import check


class Session:
    def __init__(self):
        self.reset()

    def reset(self):
        self.declared: dict[str, int] = {}
        # stack of (asserts, declared_names) per level; level 0 always present
        self.levels: list[tuple[list, list[str]]] = [([], [])]
        self.timeout_ms: int | None = None
        self.last_result: str | None = None
        self.last_model: dict[str, int] | None = None
        self.seed = 0

    @property
    def asserts(self) -> list:
        out = []
        for a, _ in self.levels:
            out.extend(a)
        return out

    def declare(self, name: str, width: int):
        self.declared[name] = width
        self.levels[-1][1].append(name)

    def push(self, n: int):
        for _ in range(n):
            self.levels.append(([], []))

    def pop(self, n: int):
        for _ in range(n):
            if len(self.levels) == 1:
                raise SmtError("pop past level 0")
            _, names = self.levels.pop()
            for name in names:
                self.declared.pop(name, None)


def _fmt_value(width: int, value: int) -> str:
    if width % 4 == 0:
        return f"#x{value:0{width // 4}x}"
    return "#b" + format(value, f"0{width}b")


def handle_command(session: Session, text: str, out) -> bool:
    """Process one command; returns False on exit."""
    try:
        nodes = parse_all(text)
    except SmtError as e:
        print(f'(error "{e}")', file=out, flush=True)
        return True
    if not nodes:
        return True
    cmd = nodes[0]
    if not isinstance(cmd, list) or not cmd:
        print('(error "expected a command")', file=out, flush=True)
        return True
    head = cmd[0]
    try:
        if head == "exit":
            return False
        if head in ("set-logic", "set-info"):
            pass
        elif head == "set-option":
            if len(cmd) >= 3 and cmd[1] == ":timeout":
                session.timeout_ms = int(cmd[2])
            elif len(cmd) >= 3 and cmd[1] in (":random-seed", ":seed"):
                session.seed = int(cmd[2])
            # all other options are accepted silently
        elif head == "declare-const":
            session.declare(cmd[1], parse_sort(cmd[2]))
        elif head == "declare-fun":
            if cmd[2] != []:
                raise SmtError("only 0-ary declare-fun is supported")
            session.declare(cmd[1], parse_sort(cmd[3]))
        elif head == "assert":
            session.levels[-1][0].append(cmd[1])
        elif head == "push":
            session.push(int(cmd[1]) if len(cmd) > 1 else 1)
        elif head == "pop":
            session.pop(int(cmd[1]) if len(cmd) > 1 else 1)
        elif head == "reset":
            session.reset()
        elif head == "echo":
            print(cmd[1].strip('"'), file=out, flush=True)
        elif head == "check-sat":
            result, model = check(session.asserts, session.declared,
                                  session.timeout_ms, session.seed)
            session.last_result = result
            session.last_model = model
            print(result if result in ("sat", "unsat") else "unknown", file=out, flush=True)
        elif head == "get-model":
            if session.last_result != "sat":
                raise SmtError("no model available")
            model = session.last_model or {}
            lines = ["(model"]
            for name in sorted(model, key=lambda n: (len(n), n)):
                w = session.declared.get(name, 32)
                lines.append(
                    f"  (define-fun {name} () (_ BitVec {w}) {_fmt_value(w, model[name])})"
                )
            lines.append(")")
            print("\n".join(lines), file=out, flush=True)
        else:
            raise SmtError(f"unknown command {head!r}")
    except (SmtError, ValueError, IndexError) as e:
        print(f'(error "{e}")', file=out, flush=True)
    return True


def main() -> int:
    session = Session()
    while True:
        text = read_command(sys.stdin)
        if text is None:
            return 0
        if not handle_command(session, text, sys.stdout):
            return 0


if __name__ == "__main__":
    sys.exit(main())
