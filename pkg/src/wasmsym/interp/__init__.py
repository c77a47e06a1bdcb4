"""The generic evaluator and its concrete and symbolic instantiations."""

from wasmsym.interp.outcomes import EvalOutcome, Finding, PathResult
from wasmsym.interp.state import ThreadState, register_instance
from wasmsym.interp.concrete import run_concrete
from wasmsym.interp.symbolic import RunStats, run_symbolic

__all__ = [
    "ThreadState", "register_instance", "EvalOutcome", "PathResult", "Finding",
    "run_concrete", "run_symbolic", "RunStats",
]
