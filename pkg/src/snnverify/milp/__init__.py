"""Mixed-integer linear programming: model, solver, LP text format."""

from .lpformat import export_lp, format_lp, import_solution, parse_lp, read_lp, write_solution
from .model import (
    LinearConstraint,
    MilpModel,
    NotFeasible,
    Relation,
    SolveResult,
    SolveStats,
    SolveStatus,
    UnknownVariable,
    VarKind,
    Variable,
)
from .solver import reset_solve_calls, solve, solve_calls

__all__ = [
    "LinearConstraint",
    "MilpModel",
    "NotFeasible",
    "Relation",
    "SolveResult",
    "SolveStats",
    "SolveStatus",
    "UnknownVariable",
    "VarKind",
    "Variable",
    "export_lp",
    "format_lp",
    "import_solution",
    "parse_lp",
    "read_lp",
    "reset_solve_calls",
    "solve",
    "solve_calls",
    "write_solution",
]
