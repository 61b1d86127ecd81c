"""Regret-constrained stochastic offering.

For every scenario f let Z_f^* be the best profit achievable if f were known
in advance. A decision X is p-robust when its relative regret
(Z_f^* - Z_f(X)) / Z_f^* stays at or below p in every scenario, i.e.
Z_f(X) >= (1 - p) Z_f^*. Among p-robust decisions we maximize expected
profit. Smaller p trades expected profit for a smaller worst-case regret
until, below some p_min, no decision qualifies.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .milp import MilpModel, Status, solve_milp
from .vpp import VppAssets, VppDecision, VppHandles, VppOptions, build_vpp_model, extract_decision

REGRET_MODES = ("relative", "absolute")


class RegretUndefined(ValueError):
    pass


class ScenarioInfeasible(RuntimeError):
    pass


class InternalInconsistency(RuntimeError):
    pass


@dataclass
class SolverSettings:
    backend: str = "highs"
    gap: float = 1e-6  # relative MIP gap for the stochastic models
    optimum_gap: float = 0.0  # per-scenario optima are solved to proven optimality
    threads: int = 1


@dataclass(frozen=True)
class ScenarioOptimum:
    index: int
    value: float


@dataclass
class ProbustResult:
    p: float
    status: Status
    expected_profit: float = math.nan
    profits: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mrr: float = math.nan
    lb: float = math.nan
    ub: float = math.nan
    decision: VppDecision | None = None

    @property
    def feasible(self) -> bool:
        return self.status is Status.OPTIMAL


def solve_scenario_optima(assets: VppAssets, tree, options: VppOptions | None = None,
                          settings: SolverSettings | None = None) -> list[ScenarioOptimum]:
    """Z_f^* for every scenario, each from a one-scenario model with probability 1."""
    settings = settings or SolverSettings()

    def one(f: int) -> ScenarioOptimum:
        model, _ = build_vpp_model(assets, tree.single(f), options, name=f"scenario_{f + 1}")
        sol = solve_milp(model, gap_tol=settings.optimum_gap, backend=settings.backend)
        if not sol.optimal:
            raise ScenarioInfeasible(f"scenario {f + 1}: single-scenario model {sol.status.value}")
        return ScenarioOptimum(f, float(sol.objective))

    idx = range(len(tree))
    if settings.threads > 1:
        with ThreadPoolExecutor(settings.threads) as ex:
            return list(ex.map(one, idx))
    return [one(f) for f in idx]


def compute_mrr(optima: Sequence[float], profits: Sequence[float]) -> float:
    """Maximum relative regret max_f (Z_f^* - Z_f) / Z_f^*."""
    z = np.asarray(optima, dtype=float)
    if np.any(z <= 0):
        raise RegretUndefined("relative regret needs every scenario optimum > 0; use absolute regret instead")
    # no schedule beats a scenario's own optimum; negatives are rounding noise
    return max(0.0, float(np.max((z - np.asarray(profits, dtype=float)) / z)))


def compute_max_abs_regret(optima: Sequence[float], profits: Sequence[float]) -> float:
    return max(0.0, float(np.max(np.asarray(optima, dtype=float) - np.asarray(profits, dtype=float))))


def bounds(optima: Sequence[float], p: float, probabilities: Sequence[float]) -> tuple[float, float]:
    """(LB, UB) on the expected profit of any p-robust decision."""
    z = np.asarray(optima, dtype=float)
    q = np.asarray(probabilities, dtype=float)
    ub = float(q @ z)
    lb = float(q @ ((1.0 - p) * z)) if math.isfinite(p) else -math.inf
    return lb, ub


def _values(optima) -> np.ndarray:
    return np.array([o.value if isinstance(o, ScenarioOptimum) else float(o) for o in optima])


def build_probust_model(assets: VppAssets, tree, optima, p: float, options: VppOptions | None = None,
                        regret: str = "relative") -> tuple[MilpModel, VppHandles]:
    """The stochastic model plus one regret row per scenario (none when p is infinite)."""
    if regret not in REGRET_MODES:
        raise ValueError(f"regret must be one of {REGRET_MODES}")
    if not (p >= 0):
        raise ValueError("p must be >= 0 or +inf")
    z = _values(optima)
    if len(z) != len(tree):
        raise ValueError("need one optimum per scenario")
    if regret == "relative" and math.isfinite(p) and np.any(z <= 0):
        raise RegretUndefined("relative regret needs every scenario optimum > 0; use absolute regret instead")
    model, handles = build_vpp_model(assets, tree, options)
    if math.isfinite(p):
        for f, zf in enumerate(z):
            floor = (1.0 - p) * zf if regret == "relative" else zf - p
            model.add_constraint(handles.profit[f], ">=", floor, f"regret_{f + 1}")
    return model, handles


def solve_probust(assets: VppAssets, tree, optima, p: float, options: VppOptions | None = None,
                  settings: SolverSettings | None = None, regret: str = "relative",
                  start: ProbustResult | None = None) -> ProbustResult:
    """Maximize expected profit subject to every scenario keeping regret <= p.

    ``start`` is an earlier result at a larger p; if its decision already
    meets the tighter bound it stays optimal (the feasible set only shrank)
    and is returned without a new solve.
    """
    settings = settings or SolverSettings()
    z = _values(optima)
    q = tree.probabilities
    if start is not None and start.feasible and start.decision is not None:
        if _regret(z, start.profits, regret) <= p:
            return _result(p, Status.OPTIMAL, start.profits, start.decision, z, q, regret)
    model, handles = build_probust_model(assets, tree, z, p, options, regret)
    sol = solve_milp(model, gap_tol=settings.gap, backend=settings.backend)
    if not sol.optimal:
        return ProbustResult(p, sol.status)
    profits = np.array([e.value(sol.values) for e in handles.profit])
    return _result(p, Status.OPTIMAL, profits, extract_decision(sol, handles), z, q, regret)


def _regret(z, profits, regret: str) -> float:
    return compute_mrr(z, profits) if regret == "relative" else compute_max_abs_regret(z, profits)


def _result(p, status, profits, decision, z, q, regret) -> ProbustResult:
    if regret == "relative" and np.all(z > 0):
        mrr = compute_mrr(z, profits)
    elif regret == "absolute":
        mrr = compute_max_abs_regret(z, profits)
    else:
        mrr = math.nan
    if regret == "relative":
        lb, ub = bounds(z, p, q)
    else:
        ub = float(q @ z)
        lb = float(q @ (z - p)) if math.isfinite(p) else -math.inf
    return ProbustResult(p, status, float(q @ profits), profits, mrr, lb, ub, decision)


@dataclass
class SweepReport:
    results: list[ProbustResult]
    p_min: float | None = None
    optima: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def feasible(self) -> list[ProbustResult]:
        return [r for r in self.results if r.feasible]

    @property
    def risk_neutral(self) -> ProbustResult:
        return self.results[0]


def default_grid(p0: float, steps: int = 20) -> list[float]:
    """p0 - k * p0/steps for k = 1..steps-1 (descending, all positive)."""
    step = p0 / steps
    return [p0 - k * step for k in range(1, steps)]


def sweep_p(assets: VppAssets, tree, grid: Sequence[float] | None = None, options: VppOptions | None = None,
            settings: SolverSettings | None = None, optima=None, regret: str = "relative",
            steps: int = 20) -> SweepReport:
    """Risk-neutral solve, then each grid value in descending order until the first infeasible one.

    Without an explicit ``grid`` the values are p0 - k * p0/steps, p0 being
    the maximum relative regret of the risk-neutral solution.
    """
    settings = settings or SolverSettings()
    if optima is None:
        optima = solve_scenario_optima(assets, tree, options, settings)
    z = _values(optima)
    rn = solve_probust(assets, tree, z, math.inf, options, settings, regret)
    if not rn.feasible:
        raise InternalInconsistency(f"risk-neutral model is {rn.status.value}")
    if grid is None:
        grid = default_grid(rn.mrr, steps) if rn.mrr > 0 else []
    grid = list(grid)
    if any(b > a for a, b in zip(grid, grid[1:])):
        raise ValueError("sweep grid must be descending")
    results = [rn]
    prev = rn
    for p in grid:
        r = solve_probust(assets, tree, z, p, options, settings, regret, start=prev)
        results.append(r)
        if not r.feasible:
            break
        prev = r
    return SweepReport(results, None, z)


def find_min_feasible_p(assets: VppAssets, tree, tol: float = 1e-4, options: VppOptions | None = None,
                        settings: SolverSettings | None = None, optima=None,
                        risk_neutral: ProbustResult | None = None) -> tuple[float, ProbustResult]:
    """Bisection on [0, MRR of the risk-neutral solution] for the smallest feasible p.

    Returns p_min (feasible, within ``tol`` of the threshold) with its solution.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    settings = settings or SolverSettings()
    if optima is None:
        optima = solve_scenario_optima(assets, tree, options, settings)
    z = _values(optima)
    if risk_neutral is None:
        risk_neutral = solve_probust(assets, tree, z, math.inf, options, settings)
    hi = risk_neutral.mrr
    best = solve_probust(assets, tree, z, hi, options, settings, start=risk_neutral)
    if not best.feasible:
        raise InternalInconsistency(f"infeasible at the risk-neutral regret p = {hi}")
    zero = solve_probust(assets, tree, z, 0.0, options, settings, start=best)
    if zero.feasible:
        return 0.0, zero
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        r = solve_probust(assets, tree, z, mid, options, settings, start=best)
        if r.feasible:
            hi, best = mid, r
        else:
            lo = mid
    return hi, best
