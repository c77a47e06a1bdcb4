"""Path-condition feasibility checking and model extraction."""

from wasmsym.solver.backends import (
    BruteForceBackend,
    ExternalBackend,
    SatResult,
    SolverHandle,
    default_solver_command,
)
from wasmsym.solver.smtlib import (
    parse_model_text,
    render_model,
    render_smtlib,
)

__all__ = [
    "SolverHandle", "SatResult", "BruteForceBackend", "ExternalBackend",
    "default_solver_command", "render_smtlib", "render_model", "parse_model_text",
]
