"""CSV tables for sweeps, decisions and component participation.

Every writer returns text with fixed 6-decimal formatting so that identical
inputs give byte-identical files.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .contracts import FAMILIES
from .curves import curves_csv, extract_all
from .fmt import num
from .probust import ProbustResult, SweepReport
from .vpp import VppDecision, evaluate_profit


def _p(p: float) -> str:
    return "inf" if math.isinf(p) else num(p)


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    return "\n".join([",".join(header)] + [",".join(r) for r in rows]) + "\n"


def profits_by_scenario_csv(report: SweepReport) -> str:
    """One row per p (risk-neutral first); an infeasible p ends the table."""
    ns = len(report.optima)
    header = ["p", "status", "expected_profit"] + [f"s{k + 1}" for k in range(ns)]
    rows = [["optimum", "optimal", ""] + [num(z) for z in report.optima]]
    for r in report.results:
        if r.feasible:
            rows.append([_p(r.p), "optimal", num(r.expected_profit)] + [num(z) for z in r.profits])
        else:
            rows.append([_p(r.p), "infeasible", ""] + [""] * ns)
    return _table(header, rows)


@dataclass
class TradeoffRow:
    label: str
    p: float
    mrr: float
    expected: float


def tradeoff_rows(report: SweepReport, risk_averse: ProbustResult | None = None) -> list[TradeoffRow]:
    rows = [TradeoffRow("risk-neutral" if math.isinf(r.p) else "grid", r.p, r.mrr, r.expected_profit)
            for r in report.feasible]
    if risk_averse is not None and risk_averse.feasible:
        rows.append(TradeoffRow("p_min", risk_averse.p, risk_averse.mrr, risk_averse.expected_profit))
    return rows


def mrr_vs_profit_csv(rows: Sequence[TradeoffRow]) -> str:
    """MRR and expected income per p, with reductions relative to the first (risk-neutral) row, in percent."""
    base = rows[0]
    out = []
    for r in rows:
        mrr_red = 100.0 * (base.mrr - r.mrr) / base.mrr if base.mrr > 0 else 0.0
        inc_red = 100.0 * (base.expected - r.expected) / base.expected if base.expected != 0 else 0.0
        out.append([r.label, _p(r.p), num(100.0 * r.mrr), num(mrr_red), num(r.expected), num(inc_red)])
    return _table(["label", "p", "mrr_pct", "mrr_reduction_pct", "expected_income", "income_reduction_pct"], out)


def optima_csv(optima: Sequence[float], probabilities: Sequence[float]) -> str:
    return _table(["scenario", "probability", "optimum"],
                  [[str(k + 1), num(q, 9), num(z)] for k, (q, z) in enumerate(zip(probabilities, optima))])


def decision_csv(decision: VppDecision, tree) -> str:
    rows = []
    for s in tree:
        n = s.index
        for h in range(tree.horizon):
            rows.append([str(n + 1), str(h + 1)] + [num(getattr(decision, k)[n][h]) for k in
                                                     ("da", "intraday", "sc", "eps_plus", "eps_minus",
                                                      "comp_lor", "comp_cost")])
    return _table(["scenario", "hour", "da", "intraday", "schedule", "eps_plus", "eps_minus",
                   "component_output", "component_cost"], rows)


def settlement_csv(decision: VppDecision, tree) -> str:
    rows = []
    for s in tree:
        b = evaluate_profit(decision.scenario(s.index), s)
        rows.append([str(s.index + 1), num(s.probability, 9), num(b.da_revenue), num(b.id_revenue),
                     num(b.pos_imbalance_revenue), num(b.neg_imbalance_cost), num(b.component_cost), num(b.total)])
    return _table(["scenario", "probability", "da_revenue", "id_revenue", "pos_imbalance_revenue",
                   "neg_imbalance_cost", "component_cost", "total"], rows)


def participation(decision: VppDecision, tree) -> dict[str, np.ndarray]:
    """Expected hourly MW each source sells in each market.

    A scenario's day-ahead and intraday sales are attributed to wind and to
    each component family in proportion to their share of that scenario's
    realized output.
    """
    H = tree.horizon
    sources = ["wind"] + [f.lower() for f in FAMILIES]
    out = {f"{s}_{m}": np.zeros(H) for s in sources for m in ("da", "id")}
    for s in tree:
        n = s.index
        parts = {"wind": np.asarray(s.wind, dtype=float)}
        for f in FAMILIES:
            parts[f.lower()] = decision.family_lor[f][n] if f in decision.family_lor else np.zeros(H)
        total = sum(parts.values())
        for h in range(H):
            if total[h] <= 1e-12:
                continue
            for src, arr in parts.items():
                share = arr[h] / total[h]
                out[f"{src}_da"][h] += s.probability * share * decision.da[n][h]
                out[f"{src}_id"][h] += s.probability * share * decision.intraday[n][h]
    return out


def participation_csv(decision: VppDecision, tree) -> str:
    series = participation(decision, tree)
    keys = list(series)
    rows = [[str(h + 1)] + [num(series[k][h]) for k in keys] for h in range(tree.horizon)]
    return _table(["hour"] + keys, rows)


def offer_curves_csv(decision: VppDecision, tree) -> str:
    return curves_csv(extract_all(decision.da, tree))
