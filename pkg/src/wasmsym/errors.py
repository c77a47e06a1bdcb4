"""Exception types shared across the engine."""


class WasmsymError(Exception):
    """Base class for all engine errors."""


class ParseError(WasmsymError):
    """Malformed or unsupported .wat input.

    ``feature`` is set when the input uses a recognized Wasm construct
    that is outside the supported subset (f32, SIMD, ...).
    """

    def __init__(self, msg: str, line: int = 0, col: int = 0, feature: str | None = None):
        self.msg = msg
        self.line = line
        self.col = col
        self.feature = feature
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{msg}")


class ValidationError(WasmsymError):
    """A parsed module failed stack type-checking."""

    def __init__(self, msg: str, func_idx: int | None = None, offset: str = ""):
        self.msg = msg
        self.func_idx = func_idx
        self.offset = offset
        loc = f"func {func_idx}" if func_idx is not None else "module"
        at = f" at {offset}" if offset else ""
        super().__init__(f"{loc}{at}: {msg}")


class LinkError(WasmsymError):
    """Import resolution failed."""


class ConfigError(WasmsymError):
    """Invalid run configuration (bad mode, bad model file, ...)."""


class InternalEngineError(WasmsymError):
    """An engine invariant was violated; always a bug, never a program outcome."""


class TrapSignal(Exception):
    """Raised by concrete value operations when Wasm semantics trap.

    Not a WasmsymError: interpreter code catches it and converts it to a
    path outcome.
    """

    def __init__(self, kind: str, message: str):
        self.kind = kind
        self.message = message
        super().__init__(message)


# Trap kinds, with their report messages.
TRAP_UNREACHABLE = "unreachable"
TRAP_OOB_MEMORY = "out-of-bounds-memory"
TRAP_DIV_BY_ZERO = "integer-divide-by-zero"
TRAP_INT_OVERFLOW = "integer-overflow"
TRAP_CALL_TYPE = "indirect-call-type-mismatch"
TRAP_UNDEF_ELEM = "undefined-table-element"
TRAP_FUEL = "fuel-exhausted"

TRAP_MESSAGES = {
    TRAP_UNREACHABLE: "unreachable",
    TRAP_OOB_MEMORY: "memory heap buffer overflow",
    TRAP_DIV_BY_ZERO: "integer divide by zero",
    TRAP_INT_OVERFLOW: "integer overflow",
    TRAP_CALL_TYPE: "indirect call type mismatch",
    TRAP_UNDEF_ELEM: "undefined element",
    TRAP_FUEL: "fuel exhausted",
}
