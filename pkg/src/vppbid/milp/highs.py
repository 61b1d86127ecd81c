"""HiGHS route (via highspy) for models too large for the dense simplex."""
from __future__ import annotations

import math

import highspy
import numpy as np

from .model import ArrayForm, MilpModel, MilpSolution, Status

FEAS_TOL = 1e-10
_STATUS = {
    highspy.HighsModelStatus.kOptimal: Status.OPTIMAL,
    highspy.HighsModelStatus.kInfeasible: Status.INFEASIBLE,
    highspy.HighsModelStatus.kUnbounded: Status.UNBOUNDED,
    highspy.HighsModelStatus.kUnboundedOrInfeasible: Status.INFEASIBLE,
    highspy.HighsModelStatus.kIterationLimit: Status.ITERATION_LIMIT,
    highspy.HighsModelStatus.kTimeLimit: Status.ITERATION_LIMIT,
    highspy.HighsModelStatus.kSolutionLimit: Status.ITERATION_LIMIT,
}
_threads = 1


def set_threads(n: int) -> None:
    global _threads
    _threads = max(1, int(n))


def _inf(a: np.ndarray) -> np.ndarray:
    return np.clip(a, -highspy.kHighsInf, highspy.kHighsInf)


def _highs(form: ArrayForm, lb, ub, integer: bool) -> highspy.Highs:
    lp = highspy.HighsLp()
    n, m = form.c.size, form.A.shape[0]
    lp.num_col_, lp.num_row_ = n, m
    lp.col_cost_ = form.c
    lp.col_lower_, lp.col_upper_ = _inf(lb), _inf(ub)
    lp.row_lower_, lp.row_upper_ = _inf(form.row_lo), _inf(form.row_hi)
    A = form.A.tocsc()
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = A.indptr
    lp.a_matrix_.index_ = A.indices
    lp.a_matrix_.value_ = A.data
    if integer and form.binary.any():
        lp.integrality_ = [highspy.HighsVarType.kInteger if b else highspy.HighsVarType.kContinuous
                           for b in form.binary]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", _threads)
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("primal_feasibility_tolerance", FEAS_TOL)
    h.setOptionValue("dual_feasibility_tolerance", FEAS_TOL)
    h.passModel(lp)
    return h


def highs_lp(form: ArrayForm, lb=None, ub=None) -> tuple[Status, np.ndarray, float]:
    lb = form.lb if lb is None else lb
    ub = form.ub if ub is None else ub
    n = form.c.size
    if n == 0:
        return Status.OPTIMAL, np.zeros(0), 0.0
    h = _highs(form, lb, ub, integer=False)
    h.run()
    status = _STATUS.get(h.getModelStatus(), Status.INFEASIBLE)
    if status is not Status.OPTIMAL:
        return status, np.full(n, np.nan), math.nan
    x = np.asarray(h.getSolution().col_value, dtype=float)
    return status, x, float(form.c @ x)


def highs_milp(form: ArrayForm, gap_tol: float, node_limit: int | None, time_limit: float | None):
    n = form.c.size
    if n == 0:
        return Status.OPTIMAL, np.zeros(0), 0.0, 0.0
    h = _highs(form, form.lb, form.ub, integer=True)
    h.setOptionValue("mip_rel_gap", float(gap_tol))
    h.setOptionValue("mip_feasibility_tolerance", 1e-9)
    if node_limit is not None:
        h.setOptionValue("mip_max_nodes", int(node_limit))
    if time_limit is not None:
        h.setOptionValue("time_limit", float(time_limit))
    h.run()
    status = _STATUS.get(h.getModelStatus(), Status.INFEASIBLE)
    info = h.getInfo()
    if status is Status.UNBOUNDED or info.primal_solution_status != 2:  # 2 = feasible point available
        if status is Status.OPTIMAL:
            status = Status.INFEASIBLE
        return status, np.full(n, np.nan), math.nan, math.nan
    x = np.asarray(h.getSolution().col_value, dtype=float)
    gap = float(info.mip_gap) if math.isfinite(info.mip_gap) else math.nan
    return status, x, float(form.c @ x), gap


def solve_lp_highs(model: MilpModel) -> MilpSolution:
    form = model.to_arrays()
    status, x, fun = highs_lp(form)
    obj = form.sign * fun + form.offset if status is Status.OPTIMAL else math.nan
    return MilpSolution(status, x, obj, 0.0 if status is Status.OPTIMAL else math.nan)
