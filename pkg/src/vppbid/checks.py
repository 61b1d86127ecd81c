"""Standalone feasibility checkers.

These re-derive every contract and market rule from the raw data and a set of
numeric arrays; they never look at the rows of a built model, so they can
audit a solver's output independently.
"""
from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .contracts import ContractSet, DagBlockHandles, EsContract, LcContract, LsContract, OgContract

TOL = 1e-7


def runs(y: Sequence[float]) -> list[tuple[int, int]]:
    """Maximal runs of ones as (start, length), 0-based."""
    out, start = [], None
    for h, v in enumerate(y):
        on = v > 0.5
        if on and start is None:
            start = h
        if not on and start is not None:
            out.append((start, h - start))
            start = None
    if start is not None:
        out.append((start, len(y) - start))
    return out


def unit_values(values: np.ndarray, handles: DagBlockHandles) -> dict[str, list[dict[str, np.ndarray]]]:
    """Pull per-contract arrays (y, f, w, t, pia, sc, sfc) out of a solution vector."""
    out: dict[str, list[dict[str, np.ndarray]]] = {}
    for fam, units in handles.units.items():
        rows = []
        for u in units:
            d = {}
            for key in ("y", "f", "w", "t", "pia", "sc", "sfc"):
                vs = getattr(u, key)
                if vs:
                    d[key] = np.array([values[v.index] for v in vs])
            rows.append(d)
        out[fam] = rows
    for fam in handles.P:
        out.setdefault(fam, [])
    return out


class Report:
    def __init__(self):
        self.violations: list[str] = []
        self.worst = 0.0

    def need(self, slack: float, what: str, tol: float = TOL) -> None:
        """Record a violation when ``slack`` (required >= 0) is below -tol."""
        if slack < -tol or math.isnan(slack):
            self.violations.append(f"{what}: violated by {-slack:.3g}")
        if not math.isnan(slack):
            self.worst = max(self.worst, -slack)

    def binary(self, arr, what: str) -> None:
        for h, v in enumerate(arr):
            if min(abs(v), abs(v - 1)) > 1e-6:
                self.violations.append(f"{what}[{h + 1}] = {v} not binary")

    @property
    def ok(self) -> bool:
        return not self.violations


def _startstop(rep: Report, d, tag: str) -> None:
    y, f, w = d["y"], d["f"], d["w"]
    for h in range(len(y)):
        prev = y[h - 1] if h else 0.0
        rep.need(-abs(f[h] - w[h] - (y[h] - prev)), f"{tag} start/stop identity h{h + 1}")
        rep.need(1 - f[h] - w[h], f"{tag} start/stop exclusivity h{h + 1}")


def _durations(rep: Report, y, tag: str, dmin: int | None, dmax: int | None, horizon: int,
               max_runs: int | None = None) -> None:
    rr = runs(y)
    for start, length in rr:
        if dmin is not None and length < dmin:
            rep.violations.append(f"{tag} run at h{start + 1} lasts {length} < {dmin}")
        if dmax is not None and length > dmax:
            rep.violations.append(f"{tag} run at h{start + 1} lasts {length} > {dmax}")
    if max_runs is not None and len(rr) > max_runs:
        rep.violations.append(f"{tag} has {len(rr)} runs > {max_runs}")


def check_lc(rep: Report, c: LcContract, d, tag: str) -> tuple[np.ndarray, np.ndarray]:
    y, f, pia = d["y"], d["f"], d["pia"]
    H = len(y)
    for k in ("y", "f", "w"):
        rep.binary(d[k], f"{tag}.{k}")
    _startstop(rep, d, tag)
    for h in range(H):
        rep.need(pia[h] - c.initiation_cost * f[h], f"{tag} initiation cost h{h + 1}")
    _durations(rep, y, tag, c.min_duration, c.max_duration, H, c.max_daily_curtailments)
    rep.need(c.max_daily_curtailments - f.sum(), f"{tag} daily curtailment count")
    lor = c.quantity * y
    cost = pia + c.price * c.quantity * y
    return lor, cost


def check_ls(rep: Report, c: LsContract, d, tag: str, ls_recovery: str) -> tuple[np.ndarray, np.ndarray]:
    y, f, pia = d["y"], d["f"], d["pia"]
    H = len(y)
    for k in ("y", "f", "w"):
        rep.binary(d[k], f"{tag}.{k}")
    _startstop(rep, d, tag)
    q = c.quantity * c.shift_fraction
    for h in range(H):
        rep.need(pia[h] - c.initiation_cost * f[h], f"{tag} initiation cost h{h + 1}")
        if (h + 1) not in c.reduction_window:
            rep.need(-abs(y[h]), f"{tag} outside reduction window h{h + 1}")
    _durations(rep, y, tag, c.min_duration, c.max_duration, H)
    lor = q * y
    if ls_recovery == "uniform" and c.recovery_window:
        shifted = q * y.sum()
        for h in c.recovery_window:
            lor[h - 1] -= shifted / len(c.recovery_window)
    cost = pia + c.price * q * y
    return lor, cost


def check_og(rep: Report, c: OgContract, d, tag: str) -> tuple[np.ndarray, np.ndarray]:
    y, t, sc, sfc = d["y"], d["t"], d["sc"], d["sfc"]
    H = len(y)
    rep.binary(y, f"{tag}.y")
    for h in range(H):
        yp = y[h - 1] if h else 0.0
        tp = t[h - 1] if h else 0.0
        rep.need(sc[h] - c.startup_cost * (y[h] - yp), f"{tag} startup cost h{h + 1}")
        rep.need(sfc[h] - c.startup_fuel * (y[h] - yp), f"{tag} startup fuel h{h + 1}")
        rep.need(t[h] - c.p_min * y[h], f"{tag} p_min h{h + 1}")
        rep.need(c.p_max * y[h] - t[h], f"{tag} p_max h{h + 1}")
        rep.need(c.ramp_up - (t[h] - tp), f"{tag} ramp up h{h + 1}")
        rep.need(c.ramp_down - (tp - t[h]), f"{tag} ramp down h{h + 1}")
        rep.need(min(sc[h], sfc[h], t[h]), f"{tag} nonnegativity h{h + 1}")
    # min on / off with the window clipped at the horizon end
    for start, length in runs(y):
        if start + length < H and length < c.min_on:
            rep.violations.append(f"{tag} on-run at h{start + 1} lasts {length} < min_on {c.min_on}")
        if start + length == H and length < min(c.min_on, H - start):
            rep.violations.append(f"{tag} final on-run at h{start + 1} too short")
    off = runs(1 - np.round(y))
    for start, length in off:
        if start == 0:
            continue  # initial off period before any commitment
        if start + length < H and length < c.min_off:
            rep.violations.append(f"{tag} off-run at h{start + 1} lasts {length} < min_off {c.min_off}")
    rep.need(c.fuel_limit - float(np.sum(c.fuel_factor * t + sfc)), f"{tag} fuel limit")
    return t.copy(), sc + c.energy_price * t


def check_es(rep: Report, c: EsContract, d, tag: str) -> tuple[np.ndarray, np.ndarray]:
    y, f, t = d["y"], d["f"], d["t"]
    H = len(y)
    for k in ("y", "f", "w"):
        rep.binary(d[k], f"{tag}.{k}")
    _startstop(rep, d, tag)
    for h in range(H):
        tp = t[h - 1] if h else 0.0
        rep.need(t[h], f"{tag} discharge >= 0 h{h + 1}")
        rep.need(c.power_rating * y[h] - t[h], f"{tag} power rating h{h + 1}")
        rep.need(c.ramp_up - (t[h] - tp), f"{tag} ramp up h{h + 1}")
        rep.need(c.ramp_down - (tp - t[h]), f"{tag} ramp down h{h + 1}")
    rep.need(c.discharge_efficiency * c.energy_capacity - float(t.sum()), f"{tag} energy budget")
    rep.need(c.max_cycles - f.sum(), f"{tag} cycle count")
    _durations(rep, y, tag, None, c.retention_time, H, c.max_cycles)
    return t.copy(), c.discharge_price * t


def check_dag(contracts: ContractSet, units: Mapping[str, list[Mapping[str, np.ndarray]]],
              P: Mapping[str, np.ndarray], CP: Mapping[str, np.ndarray],
              ls_recovery: str = "uniform", tag: str = "") -> Report:
    """Audit one set of contract blocks; ``P``/``CP`` are the reported hourly aggregates."""
    rep = Report()
    fams = {"LC": (contracts.lc, check_lc), "LS": (contracts.ls, check_ls),
            "OG": (contracts.og, check_og), "ES": (contracts.es, check_es)}
    for fam, (cs, fn) in fams.items():
        if fam not in P:
            continue
        H = len(P[fam])
        lor = np.zeros(H)
        cost = np.zeros(H)
        for i, (c, d) in enumerate(zip(cs, units.get(fam, []))):
            name = f"{tag}{fam.lower()}{i + 1}"
            if fam == "LS":
                lo, co = fn(rep, c, d, name, ls_recovery)
            else:
                lo, co = fn(rep, c, d, name)
            lor += lo
            cost += co
        for h in range(H):
            rep.need(-abs(P[fam][h] - lor[h]), f"{tag}P_{fam} aggregate h{h + 1}")
            rep.need(-abs(CP[fam][h] - cost[h]), f"{tag}CP_{fam} aggregate h{h + 1}")
    return rep


def dag_objective(prices: Sequence[float], P: Mapping[str, np.ndarray], CP: Mapping[str, np.ndarray]) -> float:
    """Revenue minus cost, recomputed from hourly aggregates."""
    rho = np.asarray(prices, dtype=float)
    rev = sum(float(rho @ P[x]) for x in P)
    cost = sum(float(np.sum(CP[x])) for x in CP)
    return rev - cost


def _offer_pairs(rep: Report, prices, qty, h: int, tol: float) -> None:
    # every ordered pair: higher price never offers less, equal price offers the same
    for a in range(len(prices)):
        for b in range(len(prices)):
            dp = prices[a] - prices[b]
            dq = qty[a] - qty[b]
            if abs(dp) <= 1e-9 * max(1.0, abs(prices[a]), abs(prices[b])):
                rep.need(-abs(dq), f"offer equal-price s{a + 1}/s{b + 1} h{h + 1}", tol)
            elif dp > 0:
                rep.need(dq, f"offer monotone s{a + 1}>s{b + 1} h{h + 1}", tol)


def check_vpp(tree, capacity: float, decision, components: Mapping, branch_of: Sequence,
              contracts: ContractSet, ls_recovery: str = "uniform", in_mode: str = "branch",
              offer_curves: bool = True, intraday_purchases: bool = False, tol: float = TOL) -> Report:
    """Audit a market decision against the scenario data.

    ``components`` maps a branch key to (units, P, CP) for that branch's
    contract blocks; ``branch_of[n]`` names scenario n's branch.
    """
    rep = Report()
    for key, (units, P, CP) in components.items():
        sub = check_dag(contracts, units, P, CP, ls_recovery, tag=f"b{key}.")
        rep.violations += sub.violations
        rep.worst = max(rep.worst, sub.worst)
    H = tree.horizon
    seen_in: dict = {}
    for s in tree:
        n = s.index
        P = components[branch_of[n]][1]
        comp = sum((np.asarray(P[f]) for f in P), np.zeros(H))
        for h in range(H):
            t = f"s{n + 1} h{h + 1}"
            da, idv, sc = decision.da[n][h], decision.intraday[n][h], decision.sc[n][h]
            ep, em = decision.eps_plus[n][h], decision.eps_minus[n][h]
            realized = s.wind[h] + comp[h]
            rep.need(-abs(decision.comp_lor[n][h] - comp[h]), f"component delivery {t}", tol)
            rep.need(-abs(sc - da - idv), f"schedule = DA + ID {t}", tol)
            rep.need(-abs((ep - em) - (realized - sc)), f"imbalance identity {t}", tol)
            rep.need(ep, f"eps+ >= 0 {t}", tol)
            rep.need(realized - ep, f"eps+ <= realized output {t}", tol)
            rep.need(em, f"eps- >= 0 {t}", tol)
            rep.need(capacity - em, f"eps- <= capacity {t}", tol)
            rep.need(da, f"DA >= 0 {t}", tol)
            rep.need(capacity - da, f"DA <= capacity {t}", tol)
            rep.need(sc, f"schedule >= 0 {t}", tol)
            rep.need(capacity - sc, f"schedule <= capacity {t}", tol)
            rep.need(capacity - abs(idv), f"|ID| <= capacity {t}", tol)
            if not intraday_purchases:
                rep.need(idv, f"ID >= 0 {t}", tol)
        if in_mode == "branch":
            ref = seen_in.setdefault(branch_of[n], np.asarray(decision.intraday[n]))
            rep.need(-float(np.max(np.abs(ref - decision.intraday[n]), initial=0.0)),
                     f"intraday offer shared within branch {branch_of[n]} (s{n + 1})", tol)
    if offer_curves:
        for h in range(H):
            _offer_pairs(rep, [float(s.da_price[h]) for s in tree], [decision.da[s.index][h] for s in tree], h, tol)
    return rep


def vpp_components(values: np.ndarray, handles) -> dict:
    """(units, P, CP) per branch pulled from a solution vector of a built market model."""
    out = {}
    for key, blk in handles.blocks.items():
        P = {f: np.array([values[v.index] for v in vs]) for f, vs in blk.P.items()}
        CP = {f: np.array([values[v.index] for v in vs]) for f, vs in blk.CP.items()}
        out[key] = (unit_values(values, blk), P, CP)
    return out
