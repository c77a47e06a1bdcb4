"""Path outcomes and reported findings."""

from __future__ import annotations

from dataclasses import dataclass, field

from wasmsym.errors import TRAP_MESSAGES

OUTCOME_OK = "ok"
OUTCOME_TRAP = "trap"
OUTCOME_ASSERT = "assert-failure"
OUTCOME_INCOMPLETE = "incomplete"
OUTCOME_ASSUME_DIVERGED = "assume-diverged"


@dataclass(frozen=True)
class EvalOutcome:
    """Exactly one per completed path."""

    kind: str  # one of the OUTCOME_* constants
    trap_kind: str | None = None  # set for kind == "trap"
    rendered: str = ""  # assertion expression / diagnostic text
    results: tuple = ()  # Eval return values (kind == "ok")

    @property
    def is_problem(self) -> bool:
        """Fuel exhaustion marks an incomplete path, never a found problem."""
        if self.kind == OUTCOME_ASSERT:
            return True
        return self.kind == OUTCOME_TRAP and self.trap_kind != "fuel-exhausted"

    def message(self) -> str:
        if self.kind == OUTCOME_TRAP:
            return f"Trap: {TRAP_MESSAGES[self.trap_kind]}"
        if self.kind == OUTCOME_ASSERT:
            return f"Assert failure: {self.rendered}"
        if self.kind == OUTCOME_INCOMPLETE:
            return f"Incomplete: {self.rendered}"
        if self.kind == OUTCOME_ASSUME_DIVERGED:
            return "Assume failed: input model does not satisfy this path"
        return "Ok"


@dataclass
class PathResult:
    """What a finished symbolic path hands to the callback."""

    outcome: EvalOutcome
    model: dict | None = None  # symbol id -> (width, bits), findings only
    pc_len: int = 0
    symbols: int = 0
    concretized: int = 0  # address/grow concretizations along this path


@dataclass
class Finding:
    outcome: EvalOutcome
    model: dict = field(default_factory=dict)
