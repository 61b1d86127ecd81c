"""Joint wind / price / balancing scenarios on a symmetric tree.

Wind (N1 branches) and day-ahead price (N2) are independent; intraday price
branches (N3) hang under each day-ahead branch; balancing states (N4) carry
hourly imbalance ratios. The tree is their Cartesian product, so
NS = N1 * N2 * N3 * N4 and each scenario's probability is the product of its
branch probabilities.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PROB_TOL = 1e-9


class InvalidMarginals(ValueError):
    pass


class InvalidRatio(ValueError):
    pass


@dataclass(frozen=True)
class Branch:
    values: np.ndarray  # hourly series
    probability: float


@dataclass(frozen=True)
class BalancingBranch:
    eta_plus: np.ndarray
    eta_minus: np.ndarray
    probability: float


@dataclass
class MarginalScenarios:
    wind: list[Branch]
    da_price: list[Branch]
    id_price: list[list[Branch]]  # id_price[d] = intraday branches under day-ahead branch d
    balancing: list[BalancingBranch]

    @property
    def horizon(self) -> int:
        return len(self.wind[0].values)

    def check(self) -> None:
        if not (self.wind and self.da_price and self.balancing):
            raise InvalidMarginals("every marginal needs at least one branch")
        if len(self.id_price) != len(self.da_price):
            raise InvalidMarginals("need one intraday branch set per day-ahead branch")
        n3 = {len(b) for b in self.id_price}
        if len(n3) != 1 or 0 in n3:
            raise InvalidMarginals("symmetric tree needs the same nonzero number of intraday branches per day-ahead branch")
        groups = [("wind", self.wind), ("da_price", self.da_price), ("balancing", self.balancing)]
        groups += [(f"id_price[{d}]", b) for d, b in enumerate(self.id_price)]
        H = self.horizon
        for name, branches in groups:
            s = sum(b.probability for b in branches)
            if abs(s - 1.0) > PROB_TOL:
                raise InvalidMarginals(f"{name}: probabilities sum to {s:.12g}, not 1")
            for b in branches:
                if b.probability <= 0:
                    raise InvalidMarginals(f"{name}: nonpositive probability {b.probability}")
                arrays = (b.eta_plus, b.eta_minus) if isinstance(b, BalancingBranch) else (b.values,)
                for a in arrays:
                    if len(a) != H:
                        raise InvalidMarginals(f"{name}: series length {len(a)} != horizon {H}")
        for name, branches in groups[:2] + groups[3:]:
            for b in branches:
                if np.any(b.values < 0):
                    raise InvalidMarginals(f"{name}: negative values")
        for b in self.balancing:
            _check_ratio_pair(b.eta_plus, b.eta_minus, InvalidMarginals)


def _check_ratio_pair(ep, em, exc=InvalidRatio) -> None:
    ep, em = np.asarray(ep), np.asarray(em)
    if np.any(ep < 0) or np.any(ep > 1 + PROB_TOL) or np.any(em < 1 - PROB_TOL):
        raise exc("imbalance ratios must satisfy 0 <= eta+ <= 1 <= eta-")
    if np.any((np.abs(ep - 1) > PROB_TOL) & (np.abs(em - 1) > PROB_TOL)):
        raise exc("in every hour one side must settle at the day-ahead price (eta+ = 1 or eta- = 1)")


def expand_balancing_ratios(draws: Iterable[tuple[str, float]]) -> list[tuple[float, float]]:
    """Map (regime, ratio) system-state draws to (eta+, eta-) pairs.

    ``excess``: the system is long, surplus energy is paid below day-ahead
    (eta+ = 1/r, eta- = 1). ``deficit``: the system is short, shortfalls are
    charged above day-ahead (eta+ = 1, eta- = r).
    """
    out = []
    for regime, r in draws:
        r = float(r)
        if r < 1:
            raise InvalidRatio(f"balancing ratio {r} < 1")
        if regime == "excess":
            out.append((1.0 / r, 1.0))
        elif regime == "deficit":
            out.append((1.0, r))
        else:
            raise InvalidRatio(f"unknown balancing regime {regime!r}")
    return out


@dataclass(frozen=True)
class Scenario:
    index: int
    probability: float
    da_price: np.ndarray
    id_price: np.ndarray
    wind: np.ndarray
    eta_plus: np.ndarray
    eta_minus: np.ndarray
    w: int = 0
    d: int = 0
    i: int = 0
    b: int = 0

    @property
    def horizon(self) -> int:
        return len(self.da_price)


@dataclass
class ScenarioTree:
    scenarios: list[Scenario]
    shape: tuple[int, int, int, int] = (1, 1, 1, 1)  # N1, N2, N3, N4

    @property
    def horizon(self) -> int:
        return self.scenarios[0].horizon

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios])

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def intraday_branches(self) -> dict[tuple[int, int], list[int]]:
        """(d, i) -> scenario indices sharing that day-ahead / intraday price path."""
        out: dict[tuple[int, int], list[int]] = {}
        for s in self.scenarios:
            out.setdefault((s.d, s.i), []).append(s.index)
        return out

    def subtree(self, indices: Sequence[int]) -> "ScenarioTree":
        """Scenarios ``indices`` with probabilities renormalized and indices renumbered."""
        picked = [self.scenarios[k] for k in indices]
        total = sum(s.probability for s in picked)
        out = []
        for n, s in enumerate(picked):
            out.append(Scenario(n, s.probability / total, s.da_price, s.id_price, s.wind, s.eta_plus, s.eta_minus,
                                s.w, s.d, s.i, s.b))
        return ScenarioTree(out, shape=(0, 0, 0, 0))

    def single(self, f: int) -> "ScenarioTree":
        return self.subtree([f])


def build_symmetric_tree(marginals: MarginalScenarios) -> ScenarioTree:
    marginals.check()
    n1, n2 = len(marginals.wind), len(marginals.da_price)
    n3, n4 = len(marginals.id_price[0]), len(marginals.balancing)
    scenarios = []
    for w, d, i, b in itertools.product(range(n1), range(n2), range(n3), range(n4)):
        wb, db, ib, bb = marginals.wind[w], marginals.da_price[d], marginals.id_price[d][i], marginals.balancing[b]
        p = wb.probability * db.probability * ib.probability * bb.probability
        scenarios.append(Scenario(len(scenarios), p, db.values, ib.values, wb.values, bb.eta_plus, bb.eta_minus,
                                  w, d, i, b))
    return ScenarioTree(scenarios, shape=(n1, n2, n3, n4))


def validate_tree(tree: ScenarioTree) -> list[str]:
    """All invariant violations of ``tree`` (empty list when valid)."""
    out = []
    if not tree.scenarios:
        return ["tree has no scenarios"]
    total = float(sum(s.probability for s in tree.scenarios))
    if abs(total - 1.0) > PROB_TOL:
        out.append(f"probability sum {total:.12g} != 1")
    n1, n2, n3, n4 = tree.shape
    if n1 and len(tree) != n1 * n2 * n3 * n4:
        out.append(f"tree has {len(tree)} scenarios, expected N1*N2*N3*N4 = {n1 * n2 * n3 * n4}")
    H = tree.horizon
    by_d: dict[int, np.ndarray] = {}
    by_di: dict[tuple[int, int], np.ndarray] = {}
    for s in tree.scenarios:
        tag = f"scenario {s.index + 1}"
        if s.probability <= 0:
            out.append(f"{tag}: nonpositive probability {s.probability}")
        for name in ("da_price", "id_price", "wind", "eta_plus", "eta_minus"):
            if len(getattr(s, name)) != H:
                out.append(f"{tag}: {name} length {len(getattr(s, name))} != {H}")
        if np.any(s.da_price < 0) or np.any(s.id_price < 0):
            out.append(f"{tag}: negative price")
        if np.any(s.wind < 0):
            out.append(f"{tag}: negative wind")
        try:
            _check_ratio_pair(s.eta_plus, s.eta_minus)
        except InvalidRatio as e:
            out.append(f"{tag}: {e}")
        ref = by_d.setdefault(s.d, s.da_price)
        if not np.array_equal(ref, s.da_price):
            out.append(f"{tag}: day-ahead branch {s.d + 1} has inconsistent day-ahead prices")
        ref = by_di.setdefault((s.d, s.i), s.id_price)
        if not np.array_equal(ref, s.id_price):
            out.append(f"{tag}: intraday branch ({s.d + 1},{s.i + 1}) has inconsistent intraday prices")
    return out
