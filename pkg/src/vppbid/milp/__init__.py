"""Small MILP toolkit: model container, dense simplex, branch-and-bound, LP-file export."""
from .lpfile import export_lp_file, sanitize_name
from .model import (
    INF,
    LinearExpr,
    MilpModel,
    MilpSolution,
    ModelError,
    Sense,
    Status,
    Var,
    Variable,
    VarKind,
)
from .solve import BACKENDS, solve_lp, solve_milp

__all__ = [
    "BACKENDS",
    "INF",
    "LinearExpr",
    "MilpModel",
    "MilpSolution",
    "ModelError",
    "Sense",
    "Status",
    "Var",
    "VarKind",
    "Variable",
    "export_lp_file",
    "sanitize_name",
    "solve_lp",
    "solve_milp",
]
