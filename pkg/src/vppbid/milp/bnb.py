"""Branch-and-bound over binaries on top of :mod:`.simplex`.

Node order: depth-first dive until the first incumbent, then best-bound.
Branching variable: most fractional binary, lowest index on ties.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

from .model import MilpModel, MilpSolution, Status
from .simplex import BoundedSimplex

INT_TOL = 1e-6


def _gap(incumbent: float, bound: float) -> float:
    # both in minimization orientation
    if not math.isfinite(incumbent):
        return math.inf
    return max(0.0, incumbent - bound) / max(1.0, abs(incumbent))


def branch_and_bound(model: MilpModel, gap_tol: float = 1e-6, node_limit: int = 100_000,
                     int_tol: float = INT_TOL) -> MilpSolution:
    if gap_tol < 0:
        raise ValueError("gap_tol must be >= 0")
    form = model.to_arrays()
    lp = BoundedSimplex(form)
    bins = np.flatnonzero(form.binary)

    best_x = None
    best_obj = math.inf
    nodes = 0
    counter = 0
    # heap entries: (bound, seq, lb, ub); dive stack used until first incumbent
    heap: list = []
    stack = [(-math.inf, form.lb.copy(), form.ub.copy())]
    root_unbounded = False

    while stack or heap:
        if nodes >= node_limit:
            break
        if best_x is None and stack:
            parent_bound, lb, ub = stack.pop()
        else:
            if stack:  # first incumbent found mid-dive: move the rest to the heap
                for pb, l_, u_ in stack:
                    counter += 1
                    heapq.heappush(heap, (pb, counter, l_, u_))
                stack.clear()
            parent_bound, _, lb, ub = heapq.heappop(heap)
            if parent_bound >= best_obj - gap_tol * max(1.0, abs(best_obj)):
                continue
        nodes += 1
        res = lp.solve(lb, ub)
        if res.status is Status.UNBOUNDED:
            if nodes == 1:
                root_unbounded = True
                break
            continue
        if res.status is not Status.OPTIMAL:
            continue
        if res.objective >= best_obj - gap_tol * max(1.0, abs(best_obj)):
            continue
        xb = res.x[bins]
        frac = np.abs(xb - np.round(xb))
        if bins.size == 0 or frac.max() <= int_tol:
            best_x = res.x.copy()
            best_x[bins] = np.round(xb)
            best_obj = res.objective
            continue
        k = int(np.argmax(frac))  # first index among most fractional
        j = int(bins[k])
        children = []
        for val in (0.0, 1.0):
            l2, u2 = lb.copy(), ub.copy()
            l2[j] = u2[j] = val
            children.append((val, l2, u2))
        # dive toward the rounding of the fractional value first
        first = 1.0 if res.x[j] >= 0.5 else 0.0
        children.sort(key=lambda t: t[0] != first)
        if best_x is None:
            for _, l2, u2 in reversed(children):
                stack.append((res.objective, l2, u2))
        else:
            for _, l2, u2 in children:
                counter += 1
                heapq.heappush(heap, (res.objective, counter, l2, u2))

    if root_unbounded:
        return MilpSolution(Status.UNBOUNDED, np.full(model.num_vars, np.nan), math.nan, math.nan, nodes)
    open_bounds = [h[0] for h in heap] + [s[0] for s in stack]
    exhausted = not heap and not stack
    if best_x is None:
        status = Status.INFEASIBLE if exhausted else Status.ITERATION_LIMIT
        return MilpSolution(status, np.full(model.num_vars, np.nan), math.nan, math.nan, nodes)
    bound = min(open_bounds) if open_bounds else best_obj
    bound = min(bound, best_obj)
    gap = _gap(best_obj, bound)
    status = Status.OPTIMAL if exhausted or gap <= gap_tol else Status.ITERATION_LIMIT
    obj = form.sign * best_obj + form.offset
    return MilpSolution(status, best_x, obj, gap, nodes)
