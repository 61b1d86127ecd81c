"""Seeded generator for the bundled synthetic dataset.

Produces marginal wind / price / balancing branches and a contract portfolio
with three contracts per family. Only used to create example data; real runs
read marginals from CSV files.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .fmt import num
from .contracts import ContractSet, EsContract, LcContract, LsContract, OgContract
from .scenarios import BalancingBranch, Branch, MarginalScenarios, expand_balancing_ratios


@dataclass
class SyntheticConfig:
    horizon: int = 24
    n_wind: int = 2
    n_da: int = 5
    n_id: int = 1
    n_bal: int = 1
    wind_capacity: float = 50.0
    seed: int = 7


def _hours(H: int) -> np.ndarray:
    return np.arange(H) * 24.0 / H


def base_da_price(H: int) -> np.ndarray:
    """Two-peak daily price shape in $/MWh (morning and evening peaks)."""
    t = _hours(H)
    morning = 22.0 * np.exp(-0.5 * ((t - 10.0) / 2.2) ** 2)
    evening = 30.0 * np.exp(-0.5 * ((t - 20.0) / 2.5) ** 2)
    return 24.0 + morning + evening


def base_wind(H: int, capacity: float) -> np.ndarray:
    t = _hours(H)
    return capacity * (0.55 + 0.25 * np.cos(2 * np.pi * (t - 3.0) / 24.0))


def _probs(rng: np.random.Generator, k: int) -> np.ndarray:
    p = np.round(rng.uniform(0.5, 1.5, size=k), 3)
    p = p / p.sum()
    p[-1] = 1.0 - p[:-1].sum()
    return p


def generate_marginals(cfg: SyntheticConfig) -> MarginalScenarios:
    rng = np.random.default_rng(cfg.seed)
    H = cfg.horizon
    wind = []
    pw = _probs(rng, cfg.n_wind)
    for k in range(cfg.n_wind):
        level = 1.0 + 0.45 * (k - (cfg.n_wind - 1) / 2) / max(1, cfg.n_wind - 1) * 2
        noise = rng.normal(0.0, 0.08, size=H)
        series = np.clip(base_wind(H, cfg.wind_capacity) * level * (1 + noise), 0.0, cfg.wind_capacity)
        wind.append(Branch(np.round(series, 3), float(pw[k])))
    da = []
    pd_ = _probs(rng, cfg.n_da)
    for k in range(cfg.n_da):
        scale = 0.7 + 0.6 * k / max(1, cfg.n_da - 1)
        series = base_da_price(H) * scale * (1 + rng.normal(0.0, 0.05, size=H))
        da.append(Branch(np.round(np.maximum(series, 0.0), 2), float(pd_[k])))
    intraday = []
    for d in range(cfg.n_da):
        pi = _probs(rng, cfg.n_id)
        rows = []
        for i in range(cfg.n_id):
            spread = rng.normal(-1.0, 2.5, size=H)
            rows.append(Branch(np.round(np.maximum(da[d].values + spread, 0.0), 2), float(pi[i])))
        intraday.append(rows)
    bal = []
    pb = _probs(rng, cfg.n_bal)
    for k in range(cfg.n_bal):
        regimes = rng.choice(["excess", "deficit"], size=H)
        ratios = np.round(rng.uniform(1.05, 1.6, size=H), 3)
        pairs = expand_balancing_ratios(zip(regimes, ratios))
        bal.append(BalancingBranch(np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]), float(pb[k])))
    return MarginalScenarios(wind, da, intraday, bal)


def table_contracts() -> ContractSet:
    """Three contracts per family with the reference parameter tables.

    Prices for load curtailment, load shifting and storage discharge are not
    tabulated in the reference data and are set here.
    """
    og = tuple(OgContract(1.0, 10.0, price, 100.0, 20.0, 1.0, 100.0, 1, 1, 10.0, 10.0) for price in (45.0, 45.0, 50.0))
    es = tuple(EsContract(10.0, 60.0, 0.9, 32.0, 20.0, 20.0, 12, 1) for _ in range(3))
    windows = [((10, 16), (4, 10)), ((14, 20), (8, 14)), ((16, 22), (10, 16))]
    ls = tuple(LsContract(10.0, 28.0, 100.0, 3, 6, tuple(range(a, b + 1)), tuple(range(c, d + 1)), 1.0)
               for (a, b), (c, d) in windows)
    lc = tuple(LcContract(10.0, 40.0, 100.0, 3, 6, 1) for _ in range(3))
    return ContractSet(lc, ls, og, es)


def _ranges(hours) -> str:
    hours = list(hours)
    if not hours:
        return ""
    out, start = [], hours[0]
    for a, b in zip(hours, hours[1:] + [None]):
        if b != a + 1:
            out.append(f"{start}-{a}" if a != start else str(a))
            start = b
    return " ".join(out)


def _contract_csv(rows) -> str:
    if not rows:
        return ""
    names = [f.name for f in fields(rows[0])]
    lines = [",".join(names)]
    for r in rows:
        vals = []
        for n in names:
            v = getattr(r, n)
            if isinstance(v, tuple):
                vals.append(_ranges(v))
            elif isinstance(v, float):
                vals.append("inf" if math.isinf(v) else num(v))
            else:
                vals.append(str(v))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def write_dataset(out_dir: str | Path, marginals: MarginalScenarios, contracts: ContractSet,
                  wind_capacity: float, name: str = "synthetic") -> Path:
    """Write a config plus CSV tables loadable by :func:`vppbid.dataset.load_dataset`."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    H = marginals.horizon

    def series(branches, prefix=()):
        rows = []
        for k, b in enumerate(branches, start=1):
            for h in range(H):
                rows.append(",".join([*map(str, prefix), str(k), str(h + 1), num(b.values[h]), num(b.probability, 9)]))
        return rows

    (out / "wind.csv").write_text("branch,hour,value,probability\n" + "\n".join(series(marginals.wind)) + "\n")
    (out / "da_price.csv").write_text("branch,hour,value,probability\n" + "\n".join(series(marginals.da_price)) + "\n")
    rows = []
    for d, bs in enumerate(marginals.id_price, start=1):
        rows += series(bs, (d,))
    (out / "id_price.csv").write_text("da_branch,branch,hour,value,probability\n" + "\n".join(rows) + "\n")
    rows = []
    for k, b in enumerate(marginals.balancing, start=1):
        for h in range(H):
            if b.eta_minus[h] > 1:
                regime, r = "deficit", b.eta_minus[h]
            else:
                regime, r = "excess", 1.0 / b.eta_plus[h]
            rows.append(f"{k},{h + 1},{regime},{num(r, 9)},{num(b.probability, 9)}")
    (out / "balancing.csv").write_text("branch,hour,regime,ratio,probability\n" + "\n".join(rows) + "\n")
    parts = []
    for kind in ("lc", "ls", "og", "es"):
        cs = getattr(contracts, kind)
        if cs:
            (out / f"{kind}.csv").write_text(_contract_csv(cs))
            parts.append(f'{kind} = "{kind}.csv"')
    cfg = f"""schema_version = 1

[dataset]
name = "{name}"
horizon = {H}

[assets]
wind_capacity = {wind_capacity}

[scenarios]
wind = "wind.csv"
da_price = "da_price.csv"
id_price = "id_price.csv"
balancing = "balancing.csv"

[contracts]
{chr(10).join(parts)}

[model]
ls_recovery = "uniform"
in_nonanticipativity = "branch"
intraday_purchases = false

[solver]
backend = "highs"
gap = 1e-6
threads = 1

[sweep]
steps = 20
p_min_tol = 1e-4
regret = "relative"
"""
    path = out / "config.toml"
    path.write_text(cfg)
    return path
