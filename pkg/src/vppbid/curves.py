"""Hourly day-ahead offering curves (price -> offered quantity step functions)."""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fmt import num
from .vpp import price_groups

QTY_TOL = 1e-7


class CorruptDecision(ValueError):
    pass


@dataclass(frozen=True)
class OfferingCurve:
    hour: int  # 1-based
    points: tuple[tuple[float, float], ...]  # (price, quantity), price ascending

    def quantity_at(self, price: float) -> float:
        """Offered quantity for a clearing price (step function, zero below the first price)."""
        q = 0.0
        for p, qty in self.points:
            if price + 1e-9 * max(1.0, abs(p)) >= p:
                q = qty
        return q


def curve_violations(prices: Sequence[float], quantities: Sequence[float], hour: int = 0,
                     tol: float = QTY_TOL) -> list[str]:
    """Monotonicity problems of one hour's (price, day-ahead quantity) pairs, one per scenario."""
    out = []
    groups = price_groups(list(prices))
    for g in groups:
        qs = [quantities[n] for n in g]
        if max(qs) - min(qs) > tol:
            out.append(f"hour {hour}: equal price {prices[g[0]]:g} with different quantities {min(qs):g}..{max(qs):g}")
    for lo, hi in zip(groups, groups[1:]):
        if quantities[hi[0]] < quantities[lo[0]] - tol:
            out.append(f"hour {hour}: quantity drops from {quantities[lo[0]]:g} at {prices[lo[0]]:g}"
                       f" to {quantities[hi[0]]:g} at {prices[hi[0]]:g}")
    return out


def extract_offering_curve(da: np.ndarray, tree, hour: int) -> OfferingCurve:
    """Curve at 1-based ``hour`` from day-ahead offers ``da[scenario, hour]``."""
    h = hour - 1
    prices = [float(s.da_price[h]) for s in tree]
    qty = [float(da[s.index][h]) for s in tree]
    bad = curve_violations(prices, qty, hour)
    if bad:
        raise CorruptDecision("; ".join(bad))
    # tied prices carry equal quantities (checked above); keep the lowest-index one so values round-trip exactly
    pts = tuple((prices[g[0]], qty[min(g)]) for g in price_groups(prices))
    return OfferingCurve(hour, pts)


def extract_all(da: np.ndarray, tree) -> list[OfferingCurve]:
    return [extract_offering_curve(da, tree, h + 1) for h in range(tree.horizon)]


def curves_csv(curves: Sequence[OfferingCurve]) -> str:
    buf = io.StringIO()
    buf.write("hour,price,quantity\n")
    for c in curves:
        for p, q in c.points:
            buf.write(f"{c.hour},{num(p)},{num(q)}\n")
    return buf.getvalue()
