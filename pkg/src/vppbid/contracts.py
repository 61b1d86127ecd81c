"""Demand-response contract blocks and the aggregator's day-ahead self-schedule.

Four contract families deliver load reduction (LOR) per hour: load curtailment
(LC), load shifting (LS), onsite generation (OG) and storage discharge (ES).
Each ``build_*_block`` installs one family into an existing :class:`MilpModel`
and returns per-hour aggregate LOR / cost variables plus the unit-level
variables so the same blocks can be embedded in the VPP model.

Hours are 1-based in contract data (windows such as 10-16) and 0-based
internally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .milp import LinearExpr, MilpModel, MilpSolution, Status, Var, solve_milp

FAMILIES = ("LC", "LS", "OG", "ES")
LS_RECOVERY = ("none", "uniform")


class ContractError(ValueError):
    """Malformed contract parameters."""


class UnschedulableContract(ContractError):
    """Contract can never be dispatched within the horizon."""


@dataclass(frozen=True)
class LcContract:
    quantity: float  # MW
    price: float  # $/MWh
    initiation_cost: float  # $
    min_duration: int  # h
    max_duration: int  # h
    max_daily_curtailments: int = 1

    def check(self, horizon: int) -> None:
        if self.quantity < 0 or self.price < 0 or self.initiation_cost < 0:
            raise ContractError("LC quantity, price and initiation cost must be >= 0")
        if not 1 <= self.min_duration <= self.max_duration:
            raise ContractError("LC durations must satisfy 1 <= min <= max")
        if self.max_daily_curtailments < 1:
            raise ContractError("LC max_daily_curtailments must be >= 1")
        if self.min_duration > horizon:
            raise UnschedulableContract(f"LC min_duration {self.min_duration} exceeds horizon {horizon}")


@dataclass(frozen=True)
class LsContract:
    quantity: float
    price: float
    initiation_cost: float
    min_duration: int
    max_duration: int
    reduction_window: tuple[int, ...]  # 1-based hours where load may be reduced
    recovery_window: tuple[int, ...] = ()  # 1-based hours where shifted load comes back
    shift_fraction: float = 1.0

    def check(self, horizon: int) -> None:
        if self.quantity < 0 or self.price < 0 or self.initiation_cost < 0:
            raise ContractError("LS quantity, price and initiation cost must be >= 0")
        if not 1 <= self.min_duration <= self.max_duration:
            raise ContractError("LS durations must satisfy 1 <= min <= max")
        if not 0.0 <= self.shift_fraction <= 1.0:
            raise ContractError("LS shift_fraction must lie in [0, 1]")
        for h in (*self.reduction_window, *self.recovery_window):
            if not 1 <= h <= horizon:
                raise ContractError(f"LS window hour {h} outside 1..{horizon}")
        if not self.reduction_window:
            raise UnschedulableContract("LS reduction window is empty")
        if self.min_duration > horizon:
            raise UnschedulableContract(f"LS min_duration {self.min_duration} exceeds horizon {horizon}")


@dataclass(frozen=True)
class OgContract:
    p_min: float  # MW
    p_max: float
    energy_price: float  # $/MWh
    startup_cost: float  # $
    startup_fuel: float  # MBtu
    fuel_factor: float  # MBtu/MWh
    fuel_limit: float  # MBtu
    min_on: int = 1
    min_off: int = 1
    ramp_up: float = math.inf  # MW/h
    ramp_down: float = math.inf

    def check(self, horizon: int) -> None:
        if not 0 < self.p_min <= self.p_max:
            raise ContractError("OG power limits must satisfy 0 < p_min <= p_max")
        for k in ("energy_price", "startup_cost", "startup_fuel", "fuel_factor", "fuel_limit", "ramp_up", "ramp_down"):
            if getattr(self, k) < 0:
                raise ContractError(f"OG {k} must be >= 0")
        if self.min_on < 1 or self.min_off < 1:
            raise ContractError("OG min_on/min_off must be >= 1")
        if self.p_min * self.min_on * self.fuel_factor > self.fuel_limit:
            raise UnschedulableContract("OG fuel limit cannot cover a minimum-length run at p_min")


@dataclass(frozen=True)
class EsContract:
    power_rating: float  # MW
    energy_capacity: float  # MWh
    discharge_efficiency: float
    discharge_price: float  # $/MWh
    ramp_up: float = math.inf
    ramp_down: float = math.inf
    retention_time: int = 24  # h, longest single discharge episode
    max_cycles: int = 1

    def check(self, horizon: int) -> None:
        if self.power_rating < 0 or self.energy_capacity < 0 or self.discharge_price < 0:
            raise ContractError("ES ratings and price must be >= 0")
        if not 0 < self.discharge_efficiency <= 1:
            raise ContractError("ES discharge_efficiency must lie in (0, 1]")
        if self.retention_time < 1:
            raise ContractError("ES retention_time must be >= 1 h")
        if self.retention_time > horizon:
            raise ContractError(f"ES retention_time {self.retention_time} exceeds horizon {horizon}")
        if self.max_cycles < 0:
            raise ContractError("ES max_cycles must be >= 0")


@dataclass(frozen=True)
class ContractSet:
    lc: tuple[LcContract, ...] = ()
    ls: tuple[LsContract, ...] = ()
    og: tuple[OgContract, ...] = ()
    es: tuple[EsContract, ...] = ()

    def check(self, horizon: int) -> None:
        for c in (*self.lc, *self.ls, *self.og, *self.es):
            c.check(horizon)

    def __len__(self):
        return len(self.lc) + len(self.ls) + len(self.og) + len(self.es)

    @property
    def max_output(self) -> float:
        """Upper bound on simultaneous LOR from all contracts (MW)."""
        return (sum(c.quantity for c in self.lc) + sum(c.quantity * c.shift_fraction for c in self.ls)
                + sum(c.p_max for c in self.og) + sum(c.power_rating for c in self.es))


@dataclass
class UnitVars:
    """Variables of one contract: binaries y/f/w (start/stop), dispatch t, cost helpers."""

    family: str
    index: int
    y: list[Var]
    f: list[Var] = field(default_factory=list)
    w: list[Var] = field(default_factory=list)
    t: list[Var] = field(default_factory=list)
    pia: list[Var] = field(default_factory=list)  # initiation cost (LC/LS)
    sc: list[Var] = field(default_factory=list)  # startup cost (OG)
    sfc: list[Var] = field(default_factory=list)  # startup fuel (OG)


@dataclass
class DagBlockHandles:
    horizon: int
    P: dict[str, list[Var]] = field(default_factory=dict)
    CP: dict[str, list[Var]] = field(default_factory=dict)
    units: dict[str, list[UnitVars]] = field(default_factory=dict)

    def merge(self, other: "DagBlockHandles") -> "DagBlockHandles":
        self.P.update(other.P)
        self.CP.update(other.CP)
        self.units.update(other.units)
        return self

    def lor(self, h: int) -> LinearExpr:
        """Total LOR of all installed families at hour ``h`` (0-based)."""
        return LinearExpr.sum(self.P[x][h] for x in FAMILIES if x in self.P)

    def cost(self, h: int) -> LinearExpr:
        return LinearExpr.sum(self.CP[x][h] for x in FAMILIES if x in self.CP)


def _hourly_aggregates(model: MilpModel, family: str, horizon: int, prefix: str, free: bool = False):
    lo = None if free else 0.0
    P = [model.add_variable(f"{prefix}P_{family}_{h + 1}", lo, None) for h in range(horizon)]
    CP = [model.add_variable(f"{prefix}CP_{family}_{h + 1}", None, None) for h in range(horizon)]
    return P, CP


def _start_stop(model: MilpModel, u: UnitVars, tag: str, horizon: int) -> None:
    # F - W = Y_h - Y_{h-1},  F + W <= 1, with Y_{-1} = 0 (cold start)
    for h in range(horizon):
        prev = u.y[h - 1] if h else 0.0
        model.add_constraint(u.f[h] - u.w[h] - u.y[h] + prev, "==", 0, f"{tag}_startstop_{h + 1}")
        model.add_constraint(u.f[h] + u.w[h], "<=", 1, f"{tag}_excl_{h + 1}")


def _max_run(model: MilpModel, u: UnitVars, tag: str, horizon: int, limit: int, label: str) -> None:
    # A run starting at h must record its stop (first hour off) within h+1..h+limit.
    # Runs that cannot reach h+limit before the horizon ends are short enough already.
    for h in range(horizon):
        if h + limit <= horizon - 1:
            stops = LinearExpr.sum(u.w[k] for k in range(h + 1, h + limit + 1))
            model.add_constraint(stops - u.f[h], ">=", 0, f"{tag}_{label}_{h + 1}")


def _min_run(model: MilpModel, u: UnitVars, tag: str, horizon: int, dmin: int) -> None:
    # Window clipped at the horizon, requirement not: late starts that cannot
    # finish the minimum duration are infeasible.
    if dmin <= 1:
        return
    for h in range(horizon):
        on = LinearExpr.sum(u.y[k] for k in range(h, min(h + dmin, horizon)))
        model.add_constraint(on - dmin * u.f[h], ">=", 0, f"{tag}_mindur_{h + 1}")


def _duration_contract(model, family, idx, horizon, prefix, ia, dmin, dmax, allowed=None):
    tag = f"{prefix}{family.lower()}{idx + 1}"
    u = UnitVars(family, idx, y=[])
    for h in range(horizon):
        ub = 1.0 if allowed is None or h in allowed else 0.0
        u.y.append(model.add_variable(f"{tag}_Y_{h + 1}", 0.0, ub, "binary"))
        u.f.append(model.add_binary(f"{tag}_F_{h + 1}"))
        u.w.append(model.add_binary(f"{tag}_W_{h + 1}"))
        u.pia.append(model.add_variable(f"{tag}_PIA_{h + 1}", 0.0, None))
    for h in range(horizon):
        model.add_constraint(u.pia[h] - ia * u.f[h], ">=", 0, f"{tag}_init_{h + 1}")
    _min_run(model, u, tag, horizon, dmin)
    _max_run(model, u, tag, horizon, dmax, "maxdur")
    _start_stop(model, u, tag, horizon)
    return u, tag


def build_lc_block(model: MilpModel, contracts: Sequence[LcContract], horizon: int,
                   prefix: str = "") -> DagBlockHandles:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    for c in contracts:
        c.check(horizon)
    P, CP = _hourly_aggregates(model, "LC", horizon, prefix)
    units = []
    for i, c in enumerate(contracts):
        u, tag = _duration_contract(model, "LC", i, horizon, prefix, c.initiation_cost,
                                    c.min_duration, c.max_duration)
        model.add_constraint(LinearExpr.sum(u.f), "<=", c.max_daily_curtailments, f"{tag}_count")
        units.append(u)
    for h in range(horizon):
        lor = LinearExpr.sum(c.quantity * u.y[h] for c, u in zip(contracts, units))
        cost = LinearExpr.sum(u.pia[h] + c.price * c.quantity * u.y[h] for c, u in zip(contracts, units))
        model.add_constraint(P[h] - lor, "==", 0, f"{prefix}P_LC_def_{h + 1}")
        model.add_constraint(CP[h] - cost, "==", 0, f"{prefix}CP_LC_def_{h + 1}")
    return DagBlockHandles(horizon, {"LC": P}, {"LC": CP}, {"LC": units})


def build_ls_block(model: MilpModel, contracts: Sequence[LsContract], horizon: int,
                   prefix: str = "", ls_recovery: str = "uniform") -> DagBlockHandles:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if ls_recovery not in LS_RECOVERY:
        raise ValueError(f"ls_recovery must be one of {LS_RECOVERY}")
    for c in contracts:
        c.check(horizon)
    P, CP = _hourly_aggregates(model, "LS", horizon, prefix, free=True)
    units = []
    for i, c in enumerate(contracts):
        allowed = {h - 1 for h in c.reduction_window}
        u, _ = _duration_contract(model, "LS", i, horizon, prefix, c.initiation_cost,
                                  c.min_duration, c.max_duration, allowed)
        units.append(u)
    for h in range(horizon):
        lor = LinearExpr()
        cost = LinearExpr()
        for c, u in zip(contracts, units):
            q = c.quantity * c.shift_fraction
            lor.iadd(u.y[h], q)
            cost.iadd(u.pia[h])
            cost.iadd(u.y[h], c.price * q)
            if ls_recovery == "uniform" and c.recovery_window and (h + 1) in c.recovery_window:
                share = q / len(c.recovery_window)
                for k in range(horizon):
                    lor.iadd(u.y[k], -share)
        model.add_constraint(P[h] - lor, "==", 0, f"{prefix}P_LS_def_{h + 1}")
        model.add_constraint(CP[h] - cost, "==", 0, f"{prefix}CP_LS_def_{h + 1}")
    return DagBlockHandles(horizon, {"LS": P}, {"LS": CP}, {"LS": units})


def build_og_block(model: MilpModel, contracts: Sequence[OgContract], horizon: int,
                   prefix: str = "") -> DagBlockHandles:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    for c in contracts:
        c.check(horizon)
    P, CP = _hourly_aggregates(model, "OG", horizon, prefix)
    units = []
    for i, c in enumerate(contracts):
        tag = f"{prefix}og{i + 1}"
        u = UnitVars("OG", i, y=[])
        for h in range(horizon):
            u.y.append(model.add_binary(f"{tag}_Y_{h + 1}"))
            u.t.append(model.add_variable(f"{tag}_T_{h + 1}", 0.0, c.p_max))
            u.sc.append(model.add_variable(f"{tag}_SC_{h + 1}", 0.0, None))
            u.sfc.append(model.add_variable(f"{tag}_SFC_{h + 1}", 0.0, None))
        for h in range(horizon):
            y_prev = u.y[h - 1] if h else 0.0
            t_prev = u.t[h - 1] if h else 0.0
            rise = u.y[h] - y_prev
            model.add_constraint(u.sc[h] - c.startup_cost * rise, ">=", 0, f"{tag}_startcost_{h + 1}")
            model.add_constraint(u.sfc[h] - c.startup_fuel * rise, ">=", 0, f"{tag}_startfuel_{h + 1}")
            model.add_constraint(u.t[h] - c.p_min * u.y[h], ">=", 0, f"{tag}_pmin_{h + 1}")
            model.add_constraint(u.t[h] - c.p_max * u.y[h], "<=", 0, f"{tag}_pmax_{h + 1}")
            if math.isfinite(c.ramp_up):
                model.add_constraint(u.t[h] - t_prev, "<=", c.ramp_up, f"{tag}_rampup_{h + 1}")
            if math.isfinite(c.ramp_down):
                model.add_constraint(t_prev - u.t[h], "<=", c.ramp_down, f"{tag}_rampdn_{h + 1}")
            if c.min_on > 1:
                span = range(h, min(h + c.min_on, horizon))
                model.add_constraint(LinearExpr.sum(u.y[k] for k in span) - len(span) * rise, ">=", 0,
                                     f"{tag}_minon_{h + 1}")
            if c.min_off > 1 and h > 0:
                span = range(h, min(h + c.min_off, horizon))
                # sum(1 - Y) >= L * (Y_{h-1} - Y_h)
                model.add_constraint(LinearExpr.sum(u.y[k] for k in span) - len(span) * rise, "<=", len(span),
                                     f"{tag}_minoff_{h + 1}")
        fuel = LinearExpr.sum(c.fuel_factor * u.t[h] + u.sfc[h] for h in range(horizon))
        model.add_constraint(fuel, "<=", c.fuel_limit, f"{tag}_fuel")
        units.append(u)
    for h in range(horizon):
        model.add_constraint(P[h] - LinearExpr.sum(u.t[h] for u in units), "==", 0, f"{prefix}P_OG_def_{h + 1}")
        cost = LinearExpr.sum(u.sc[h] + c.energy_price * u.t[h] for c, u in zip(contracts, units))
        model.add_constraint(CP[h] - cost, "==", 0, f"{prefix}CP_OG_def_{h + 1}")
    return DagBlockHandles(horizon, {"OG": P}, {"OG": CP}, {"OG": units})


def build_es_block(model: MilpModel, contracts: Sequence[EsContract], horizon: int,
                   prefix: str = "") -> DagBlockHandles:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    for c in contracts:
        c.check(horizon)
    P, CP = _hourly_aggregates(model, "ES", horizon, prefix)
    units = []
    for i, c in enumerate(contracts):
        tag = f"{prefix}es{i + 1}"
        u = UnitVars("ES", i, y=[])
        for h in range(horizon):
            u.y.append(model.add_binary(f"{tag}_Y_{h + 1}"))
            u.f.append(model.add_binary(f"{tag}_F_{h + 1}"))
            u.w.append(model.add_binary(f"{tag}_W_{h + 1}"))
            u.t.append(model.add_variable(f"{tag}_T_{h + 1}", 0.0, c.power_rating))
        for h in range(horizon):
            t_prev = u.t[h - 1] if h else 0.0
            model.add_constraint(u.t[h] - c.power_rating * u.y[h], "<=", 0, f"{tag}_rating_{h + 1}")
            if math.isfinite(c.ramp_up):
                model.add_constraint(u.t[h] - t_prev, "<=", c.ramp_up, f"{tag}_rampup_{h + 1}")
            if math.isfinite(c.ramp_down):
                model.add_constraint(t_prev - u.t[h], "<=", c.ramp_down, f"{tag}_rampdn_{h + 1}")
        model.add_constraint(LinearExpr.sum(u.t), "<=", c.discharge_efficiency * c.energy_capacity, f"{tag}_energy")
        model.add_constraint(LinearExpr.sum(u.f), "<=", c.max_cycles, f"{tag}_cycles")
        _max_run(model, u, tag, horizon, c.retention_time, "retain")
        _start_stop(model, u, tag, horizon)
        units.append(u)
    for h in range(horizon):
        model.add_constraint(P[h] - LinearExpr.sum(u.t[h] for u in units), "==", 0, f"{prefix}P_ES_def_{h + 1}")
        cost = LinearExpr.sum(c.discharge_price * u.t[h] for c, u in zip(contracts, units))
        model.add_constraint(CP[h] - cost, "==", 0, f"{prefix}CP_ES_def_{h + 1}")
    return DagBlockHandles(horizon, {"ES": P}, {"ES": CP}, {"ES": units})


def build_dag_blocks(model: MilpModel, contracts: ContractSet, horizon: int, prefix: str = "",
                     ls_recovery: str = "uniform") -> DagBlockHandles:
    """Install all four families into ``model``."""
    handles = build_lc_block(model, contracts.lc, horizon, prefix)
    handles.merge(build_ls_block(model, contracts.ls, horizon, prefix, ls_recovery))
    handles.merge(build_og_block(model, contracts.og, horizon, prefix))
    handles.merge(build_es_block(model, contracts.es, horizon, prefix))
    return handles


def build_dag_model(contracts: ContractSet, prices: Sequence[float],
                    ls_recovery: str = "uniform") -> tuple[MilpModel, DagBlockHandles]:
    """Aggregator self-schedule: maximize sum_h price_h * LOR_h - cost_h."""
    prices = [float(p) for p in prices]
    horizon = len(prices)
    model = MilpModel("dag")
    handles = build_dag_blocks(model, contracts, horizon, "", ls_recovery)
    obj = LinearExpr()
    for h, rho in enumerate(prices):
        obj.iadd(handles.lor(h), rho)
        obj.iadd(handles.cost(h), -1.0)
    model.set_objective(obj, maximize=True)
    return model, handles


@dataclass
class DagSchedule:
    status: Status
    objective: float = math.nan
    lor: dict[str, np.ndarray] = field(default_factory=dict)  # family -> MW per hour
    cost: dict[str, np.ndarray] = field(default_factory=dict)  # family -> $ per hour
    states: dict[str, np.ndarray] = field(default_factory=dict)  # unit tag -> on/off per hour
    dispatch: dict[str, np.ndarray] = field(default_factory=dict)  # unit tag -> MW per hour (OG/ES)
    solution: MilpSolution | None = None

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


def extract_schedule(sol: MilpSolution, handles: DagBlockHandles) -> DagSchedule:
    vals = sol.values
    out = DagSchedule(sol.status, sol.objective, solution=sol)
    for x in FAMILIES:
        if x in handles.P:
            out.lor[x] = np.array([vals[v.index] for v in handles.P[x]])
            out.cost[x] = np.array([vals[v.index] for v in handles.CP[x]])
        for u in handles.units.get(x, []):
            tag = f"{x.lower()}{u.index + 1}"
            out.states[tag] = np.array([round(vals[v.index]) for v in u.y], dtype=int)
            if u.t:
                out.dispatch[tag] = np.array([vals[v.index] for v in u.t])
    return out


def solve_dag_schedule(model: MilpModel, handles: DagBlockHandles, backend: str = "highs",
                       gap_tol: float = 1e-6) -> DagSchedule:
    sol = solve_milp(model, gap_tol=gap_tol, backend=backend)
    if sol.status is not Status.OPTIMAL:
        return DagSchedule(sol.status, solution=sol)
    return extract_schedule(sol, handles)
