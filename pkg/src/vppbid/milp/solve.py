from __future__ import annotations

import math

import numpy as np

from .bnb import INT_TOL, branch_and_bound
from .highs import highs_lp, highs_milp, solve_lp_highs
from .model import MilpModel, MilpSolution, Status
from .simplex import BoundedSimplex
from .simplex import solve_lp as _solve_lp_native

BACKENDS = ("native", "highs")


def _check_backend(backend: str) -> None:
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")


def solve_lp(model: MilpModel, backend: str = "native") -> MilpSolution:
    """Solve the LP relaxation (binaries treated as continuous in [0, 1])."""
    _check_backend(backend)
    return _solve_lp_native(model) if backend == "native" else solve_lp_highs(model)


def _polish(model: MilpModel, x: np.ndarray, backend: str) -> np.ndarray | None:
    """Snap binaries to exact 0/1 and re-optimize the continuous part."""
    form = model.to_arrays()
    bins = form.binary
    lb, ub = form.lb.copy(), form.ub.copy()
    fixed = np.round(x[bins])
    lb[bins] = ub[bins] = fixed
    if backend == "native":
        res = BoundedSimplex(form).solve(lb, ub)
        status, xp = res.status, res.x
    else:
        status, xp, _ = highs_lp(form, lb, ub)
    if status is not Status.OPTIMAL:
        return None
    xp = xp.copy()
    xp[bins] = fixed
    return xp


def solve_milp(model: MilpModel, gap_tol: float = 1e-6, node_limit: int = 100_000,
               backend: str = "native", time_limit: float | None = None) -> MilpSolution:
    """Solve ``model`` to within relative gap ``gap_tol``.

    ``backend="native"`` runs the in-house branch-and-bound (dense simplex,
    desk-scale only); ``"highs"`` hands the model to HiGHS. Either way the
    returned incumbent has binaries snapped to exact 0/1 with the continuous
    variables re-optimized for that binary pattern.
    """
    _check_backend(backend)
    if gap_tol < 0:
        raise ValueError("gap_tol must be >= 0")
    if backend == "native":
        sol = branch_and_bound(model, gap_tol=gap_tol, node_limit=node_limit)
    else:
        form = model.to_arrays()
        status, x, fun, gap = highs_milp(form, gap_tol, node_limit, time_limit)
        obj = form.sign * fun + form.offset if math.isfinite(fun) else math.nan
        sol = MilpSolution(status, x, obj, gap)
    if sol.status in (Status.OPTIMAL, Status.ITERATION_LIMIT) and np.all(np.isfinite(sol.values)):
        xb = sol.values[model.to_arrays().binary]
        if xb.size == 0 or np.max(np.abs(xb - np.round(xb))) <= INT_TOL:
            xp = _polish(model, sol.values, backend)
            if xp is not None:
                sol = MilpSolution(sol.status, xp, model.objective_value(xp), sol.gap, sol.nodes)
    return sol
