import itertools
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import linprog

from vppbid.contracts import ContractSet, EsContract, LcContract, LsContract, OgContract, build_dag_model
from vppbid.dataset import load_dataset
from vppbid.scenarios import BalancingBranch, Branch, MarginalScenarios, build_symmetric_tree, expand_balancing_ratios

ROOT = Path(__file__).resolve().parents[1]
BUNDLED = ROOT / "data" / "synthetic10" / "config.toml"

# lines printed at the end of the session by pytest_terminal_summary
ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# -- random contract portfolios ------------------------------------------------

def random_lc(rng, H):
    dmin = int(rng.integers(1, H + 1))
    return LcContract(float(rng.integers(1, 11)), float(rng.integers(5, 40)), float(rng.integers(0, 60)),
                      dmin, int(rng.integers(dmin, H + 1)), int(rng.integers(1, 3)))


def random_ls(rng, H):
    hours = list(range(1, H + 1))
    k = int(rng.integers(1, H + 1))
    red = tuple(sorted(rng.choice(hours, size=k, replace=False).tolist()))
    rest = [h for h in hours if h not in red]
    rec = tuple(sorted(rng.choice(rest, size=int(rng.integers(0, len(rest) + 1)), replace=False).tolist())) if rest else ()
    dmin = int(rng.integers(1, k + 1))
    return LsContract(float(rng.integers(1, 11)), float(rng.integers(5, 40)), float(rng.integers(0, 60)),
                      dmin, int(rng.integers(dmin, H + 1)), red, rec, float(rng.choice([0.5, 1.0])))


def random_og(rng, H):
    pmin = float(rng.integers(1, 4))
    pmax = pmin + float(rng.integers(0, 8))
    price, startup, fuel0 = float(rng.integers(5, 40)), float(rng.integers(0, 80)), float(rng.integers(0, 10))
    limit, on, off = float(rng.integers(20, 80)), int(rng.integers(1, H + 1)), int(rng.integers(1, H + 1))
    # the fuel limit must cover at least one minimum-length run at p_min
    return OgContract(pmin, pmax, price, startup, fuel0, 1.0, max(limit, pmin * on), on, off,
                      float(rng.integers(2, 12)), float(rng.integers(2, 12)))


def random_es(rng, H):
    return EsContract(float(rng.integers(1, 11)), float(rng.integers(5, 40)), float(rng.choice([0.8, 0.9, 1.0])),
                      float(rng.integers(5, 40)), float(rng.integers(2, 12)), float(rng.integers(2, 12)),
                      int(rng.integers(1, H + 1)), int(rng.integers(1, 3)))


_BINARIES_PER_HOUR = {"lc": 3, "ls": 3, "og": 1, "es": 3}
_MAKERS = {"lc": random_lc, "ls": random_ls, "og": random_og, "es": random_es}


def random_portfolio(rng, H: int, max_binaries: int | None = None) -> ContractSet:
    """A few random contracts; with ``max_binaries`` the total binary count stays within it."""
    out = {k: [] for k in _MAKERS}
    budget = max_binaries if max_binaries is not None else math.inf
    for _ in range(int(rng.integers(1, 5))):
        kind = str(rng.choice(list(_MAKERS)))
        cost = _BINARIES_PER_HOUR[kind] * H
        if cost > budget:
            continue
        budget -= cost
        out[kind].append(_MAKERS[kind](rng, H))
    if not any(out.values()):
        out["og"].append(random_og(rng, H))
    return ContractSet(*(tuple(out[k]) for k in ("lc", "ls", "og", "es")))


def random_dag_instance(rng, H: int, max_binaries: int | None = None):
    cs = random_portfolio(rng, H, max_binaries)
    prices = rng.integers(0, 60, size=H).astype(float)
    model, handles = build_dag_model(cs, prices)
    return cs, prices, model, handles


def _probs(rng, k):
    p = rng.uniform(0.5, 1.5, k)
    return p / p.sum()


def random_tree(rng, H: int, max_wind: float = 20.0):
    """Small symmetric tree: 1-2 wind, 1-2 day-ahead, one intraday and 1-2 balancing branches."""
    wind = [Branch(rng.uniform(0, max_wind, H).round(2), p) for p in _probs(rng, int(rng.integers(1, 3)))]
    da = [Branch(rng.integers(10, 60, H).astype(float), p) for p in _probs(rng, int(rng.integers(1, 3)))]
    intraday = [[Branch(np.maximum(b.values + rng.normal(0, 3, H), 0).round(2), 1.0)] for b in da]
    bal = []
    for p in _probs(rng, int(rng.integers(1, 3))):
        pairs = expand_balancing_ratios(zip(rng.choice(["excess", "deficit"], H), rng.uniform(1, 1.5, H)))
        bal.append(BalancingBranch(np.array([a for a, _ in pairs]), np.array([b for _, b in pairs]), p))
    return build_symmetric_tree(MarginalScenarios(wind, da, intraday, bal))


def flat_tree(wind, da, intraday=None, eta_plus=None, eta_minus=None):
    """One-scenario tree from hourly arrays (neutral balancing unless given)."""
    wind = np.asarray(wind, dtype=float)
    H = len(wind)
    ones = np.ones(H)
    da = np.asarray(da, dtype=float)
    intraday = da if intraday is None else np.asarray(intraday, dtype=float)
    bal = BalancingBranch(ones if eta_plus is None else np.asarray(eta_plus, float),
                          ones if eta_minus is None else np.asarray(eta_minus, float), 1.0)
    return build_symmetric_tree(MarginalScenarios([Branch(wind, 1.0)], [Branch(da, 1.0)],
                                                  [[Branch(intraday, 1.0)]], [bal]))


# -- enumeration oracle --------------------------------------------------------

def enumerate_milp(model) -> float:
    """Best objective over all binary patterns, each solved as an LP by scipy's linprog.

    Binary bounds and rows that only involve binaries are checked directly so most patterns never
    reach the LP. Returns -inf (maximize) / +inf (minimize) when nothing is feasible.
    """
    f = model.to_arrays()
    bins = np.flatnonzero(f.binary)
    cont = np.flatnonzero(~f.binary)
    A = f.A.toarray()
    only_bin = ~np.any(A[:, cont] != 0, axis=1)
    pats = np.array(list(itertools.product((0.0, 1.0), repeat=len(bins)))).reshape(-1, len(bins))
    act = pats @ A[only_bin][:, bins].T
    ok = np.all((act >= f.row_lo[only_bin] - 1e-9) & (act <= f.row_hi[only_bin] + 1e-9), axis=1)
    ok &= np.all((pats >= f.lb[bins]) & (pats <= f.ub[bins]), axis=1)  # binaries fixed by their bounds
    best = math.inf  # minimization orientation
    Ar = A[~only_bin]
    lo, hi = f.row_lo[~only_bin], f.row_hi[~only_bin]
    le = np.isfinite(hi)
    ge = np.isfinite(lo)
    A_ub = np.vstack([Ar[le], -Ar[ge]])
    for pat in pats[ok]:
        lb, ub = f.lb.copy(), f.ub.copy()
        lb[bins] = ub[bins] = pat
        b_ub = np.concatenate([hi[le], -lo[ge]])
        res = linprog(f.c, A_ub=A_ub if len(A_ub) else None, b_ub=b_ub if len(A_ub) else None,
                      bounds=list(zip(lb, [None if math.isinf(u) else u for u in ub])), method="highs")
        if res.status == 0:
            best = min(best, res.fun)
    if math.isinf(best):
        return -math.inf * f.sign
    return f.sign * best + f.offset


@pytest.fixture(scope="session")
def bundled():
    return load_dataset(BUNDLED)


@pytest.fixture(scope="session")
def sweep_runs(tmp_path_factory):
    """Two independent ``vppbid sweep`` runs on the bundled dataset.

    The first goes through ``main`` exactly as on the command line; the second
    runs the same command body and keeps the in-memory results.
    """
    from vppbid.cli import main, parser, sweep_command

    dirs = [tmp_path_factory.mktemp("sweep_a"), tmp_path_factory.mktemp("sweep_b")]
    times = []
    t = time.perf_counter()
    assert main(["sweep", "--config", str(BUNDLED), "--out", str(dirs[0])]) == 0
    times.append(time.perf_counter() - t)
    t = time.perf_counter()
    outcome = sweep_command(parser().parse_args(["sweep", "--config", str(BUNDLED), "--out", str(dirs[1])]))
    times.append(time.perf_counter() - t)
    return {"dirs": dirs, "outcome": outcome, "seconds": times}
