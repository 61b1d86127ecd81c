"""Multi-market offering model for a wind + demand-response portfolio.

Per scenario n and hour h the portfolio offers PG^DA day-ahead and PG^IN
intraday; their sum is the schedule PG^SC. Realized wind plus component
delivery minus the schedule is the imbalance, split into a positive part
paid at eta+ times the day-ahead price and a negative part charged at eta-
times the day-ahead price. Component contract blocks are built once per
(day-ahead, intraday) price branch because component dispatch is decided
when both price paths are known.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contracts import FAMILIES, LS_RECOVERY, ContractSet, DagBlockHandles, build_dag_blocks
from .milp import LinearExpr, MilpModel, MilpSolution, ModelError, Var

PRICE_RTOL = 1e-9
IN_MODES = ("branch", "free")


class InvalidDecision(ValueError):
    pass


@dataclass
class VppAssets:
    wind_capacity: float
    contracts: ContractSet = field(default_factory=ContractSet)
    expansion_cap: float | None = None  # defaults to the components' combined rating

    @property
    def component_cap(self) -> float:
        return self.contracts.max_output if self.expansion_cap is None else self.expansion_cap

    @property
    def capacity(self) -> float:
        return self.wind_capacity + self.component_cap

    def check(self, horizon: int) -> None:
        if self.wind_capacity < 0 or self.component_cap < 0:
            raise ModelError("asset capacities must be >= 0")
        self.contracts.check(horizon)


@dataclass
class VppOptions:
    ls_recovery: str = "uniform"
    in_nonanticipativity: str = "branch"
    offer_curves: bool = True
    intraday_purchases: bool = False  # allow negative intraday offers (buy-back)

    def check(self) -> None:
        if self.ls_recovery not in LS_RECOVERY:
            raise ValueError(f"ls_recovery must be one of {LS_RECOVERY}")
        if self.in_nonanticipativity not in IN_MODES:
            raise ValueError(f"in_nonanticipativity must be one of {IN_MODES}")


@dataclass
class VppHandles:
    horizon: int
    da: list[list[Var]]
    intraday: list[list[Var]]
    sc: list[list[Var]]
    eps_plus: list[list[Var]]
    eps_minus: list[list[Var]]
    branch_of: list[tuple[int, int]]
    blocks: dict[tuple[int, int], DagBlockHandles]
    profit: list[LinearExpr]  # Z_n as a function of the decision


def _prices_equal(a: float, b: float) -> bool:
    return abs(a - b) <= PRICE_RTOL * max(1.0, abs(a), abs(b))


def price_groups(prices) -> list[list[int]]:
    """Indices grouped by equal price (relative tolerance), groups in ascending price order."""
    order = sorted(range(len(prices)), key=lambda n: (prices[n], n))
    groups: list[list[int]] = []
    for n in order:
        if groups and _prices_equal(prices[groups[-1][0]], prices[n]):
            groups[-1].append(n)
        else:
            groups.append([n])
    return groups


def build_vpp_model(assets: VppAssets, tree, options: VppOptions | None = None,
                    name: str = "vpp") -> tuple[MilpModel, VppHandles]:
    options = options or VppOptions()
    options.check()
    H = tree.horizon
    for s in tree:
        if s.horizon != H or len(s.wind) != H or len(s.id_price) != H or len(s.eta_plus) != H:
            raise ModelError(f"scenario {s.index + 1}: horizon mismatch")
    assets.check(H)
    cap = assets.capacity
    in_lo = -cap if options.intraday_purchases else 0.0
    model = MilpModel(name)

    branches = sorted(tree.intraday_branches())
    blocks = {}
    for k, key in enumerate(branches):
        prefix = f"b{k + 1}_" if len(branches) > 1 else ""
        blocks[key] = build_dag_blocks(model, assets.contracts, H, prefix, options.ls_recovery)

    shared_in: dict[tuple[int, int], list[Var]] = {}
    da, intraday, sc, ep, em, profit, branch_of = [], [], [], [], [], [], []
    for s in tree:
        n, key = s.index, (s.d, s.i)
        tag = f"s{n + 1}"
        da.append([model.add_variable(f"DA_{tag}_{h + 1}", 0.0, cap) for h in range(H)])
        if options.in_nonanticipativity == "branch":
            if key not in shared_in:
                k = branches.index(key) + 1
                shared_in[key] = [model.add_variable(f"IN_b{k}_{h + 1}", in_lo, cap) for h in range(H)]
            intraday.append(shared_in[key])
        else:
            intraday.append([model.add_variable(f"IN_{tag}_{h + 1}", in_lo, cap) for h in range(H)])
        sc.append([model.add_variable(f"SC_{tag}_{h + 1}", 0.0, cap) for h in range(H)])
        ep.append([model.add_variable(f"EP_{tag}_{h + 1}", 0.0, None) for h in range(H)])
        em.append([model.add_variable(f"EM_{tag}_{h + 1}", 0.0, cap) for h in range(H)])
        branch_of.append(key)
        blk = blocks[key]
        z = LinearExpr()
        for h in range(H):
            lor = blk.lor(h)
            w = float(s.wind[h])
            model.add_constraint(sc[n][h] - da[n][h] - intraday[n][h], "==", 0, f"sched_{tag}_{h + 1}")
            # eps+ - eps- = wind + component delivery - schedule
            model.add_constraint(ep[n][h] - em[n][h] + sc[n][h] - lor, "==", w, f"dev_{tag}_{h + 1}")
            model.add_constraint(ep[n][h] - lor, "<=", w, f"epcap_{tag}_{h + 1}")
            rho = float(s.da_price[h])
            z.iadd(da[n][h], rho)
            z.iadd(intraday[n][h], float(s.id_price[h]))
            z.iadd(ep[n][h], rho * float(s.eta_plus[h]))
            z.iadd(em[n][h], -rho * float(s.eta_minus[h]))
            z.iadd(blk.cost(h), -1.0)
        profit.append(z)

    handles = VppHandles(H, da, intraday, sc, ep, em, branch_of, blocks, profit)
    if options.offer_curves:
        add_offer_curve_constraints(model, handles, tree)
    model.set_objective(expected_profit(handles, tree.probabilities), maximize=True)
    return model, handles


def expected_profit(handles: VppHandles, probabilities) -> LinearExpr:
    out = LinearExpr()
    for z, p in zip(handles.profit, probabilities):
        out.iadd(z, float(p))
    return out


def add_offer_curve_constraints(model: MilpModel, handles: VppHandles, tree) -> None:
    """Day-ahead quantity nondecreasing in day-ahead price, equal at equal prices."""
    for h in range(tree.horizon):
        groups = price_groups([float(s.da_price[h]) for s in tree])
        for g in groups:
            for n in g[1:]:
                model.add_constraint(handles.da[n][h] - handles.da[g[0]][h], "==", 0, f"offer_eq_{h + 1}_{n + 1}")
        for lo, hi in zip(groups, groups[1:]):
            model.add_constraint(handles.da[hi[0]][h] - handles.da[lo[0]][h], ">=", 0,
                                 f"offer_up_{h + 1}_{hi[0] + 1}")


# -- decisions and settlement -------------------------------------------------

@dataclass
class ScenarioDecision:
    da: np.ndarray
    intraday: np.ndarray
    sc: np.ndarray
    eps_plus: np.ndarray
    eps_minus: np.ndarray
    comp_lor: np.ndarray  # delivered component energy, all families
    comp_cost: np.ndarray

    @classmethod
    def zeros(cls, horizon: int) -> "ScenarioDecision":
        z = np.zeros(horizon)
        return cls(z, z.copy(), z.copy(), z.copy(), z.copy(), z.copy(), z.copy())


@dataclass
class VppDecision:
    """Arrays indexed [scenario, hour]; ``families`` holds per-family [scenario, hour] dispatch and cost."""
    da: np.ndarray
    intraday: np.ndarray
    sc: np.ndarray
    eps_plus: np.ndarray
    eps_minus: np.ndarray
    comp_lor: np.ndarray
    comp_cost: np.ndarray
    family_lor: dict[str, np.ndarray] = field(default_factory=dict)
    family_cost: dict[str, np.ndarray] = field(default_factory=dict)

    def scenario(self, n: int) -> ScenarioDecision:
        return ScenarioDecision(self.da[n], self.intraday[n], self.sc[n], self.eps_plus[n], self.eps_minus[n],
                                self.comp_lor[n], self.comp_cost[n])


def extract_decision(sol: MilpSolution, handles: VppHandles) -> VppDecision:
    x = sol.values

    def grab(vs):
        return np.array([[x[v.index] for v in row] for row in vs])

    NS, H = len(handles.da), handles.horizon
    fam_lor = {f: np.zeros((NS, H)) for f in FAMILIES}
    fam_cost = {f: np.zeros((NS, H)) for f in FAMILIES}
    for n, key in enumerate(handles.branch_of):
        blk = handles.blocks[key]
        for f in blk.P:
            fam_lor[f][n] = [x[v.index] for v in blk.P[f]]
            fam_cost[f][n] = [x[v.index] for v in blk.CP[f]]
    comp_lor = sum(fam_lor.values())
    comp_cost = sum(fam_cost.values())
    return VppDecision(grab(handles.da), grab(handles.intraday), grab(handles.sc), grab(handles.eps_plus),
                       grab(handles.eps_minus), comp_lor, comp_cost, fam_lor, fam_cost)


@dataclass(frozen=True)
class ProfitBreakdown:
    da_revenue: float
    id_revenue: float
    pos_imbalance_revenue: float
    neg_imbalance_cost: float
    component_cost: float

    @property
    def total(self) -> float:
        return (self.da_revenue + self.id_revenue + self.pos_imbalance_revenue
                - self.neg_imbalance_cost - self.component_cost)


def evaluate_profit(decision: ScenarioDecision, scenario, tol: float = 1e-6) -> ProfitBreakdown:
    """Settle one scenario from the decision and the realized data.

    The imbalance is recomputed from realized wind, component delivery and
    the schedule; its positive and negative parts are settled at eta+ and eta-
    times the day-ahead price. The decision's own deviation variables must be
    nonnegative and consistent with that imbalance.
    """
    H = scenario.horizon
    d = decision
    for nm in ("da", "intraday", "sc", "eps_plus", "eps_minus", "comp_lor", "comp_cost"):
        if len(getattr(d, nm)) != H:
            raise InvalidDecision(f"{nm} has length {len(getattr(d, nm))}, horizon is {H}")
    if np.any(d.eps_plus < -tol) or np.any(d.eps_minus < -tol):
        raise InvalidDecision("negative deviation")
    imbalance = scenario.wind + d.comp_lor - d.sc
    gap = np.max(np.abs(imbalance - (d.eps_plus - d.eps_minus)), initial=0.0)
    if gap > tol * max(1.0, float(np.max(np.abs(imbalance), initial=0.0))):
        raise InvalidDecision(f"deviations inconsistent with realized imbalance (off by {gap:.3g})")
    rho = scenario.da_price
    pos, neg = np.maximum(imbalance, 0.0), np.maximum(-imbalance, 0.0)
    return ProfitBreakdown(
        da_revenue=float(rho @ d.da),
        id_revenue=float(scenario.id_price @ d.intraday),
        pos_imbalance_revenue=float((rho * scenario.eta_plus) @ pos),
        neg_imbalance_cost=float((rho * scenario.eta_minus) @ neg),
        component_cost=float(np.sum(d.comp_cost)),
    )


def scenario_profits(decision: VppDecision, tree) -> np.ndarray:
    return np.array([evaluate_profit(decision.scenario(s.index), s).total for s in tree])
