"""Dense bounded-variable primal simplex.

Works on ``row_lo <= A x <= row_hi, lb <= x <= ub`` directly: each row gets a
logical variable ``s = A_r x`` carrying the row range as its bounds, so the
equality system is ``[A | -I] (x, s) = 0``. Nonbasic variables sit at a finite
bound (or at zero when free). Phase 1 adds artificials only for rows whose
logical starts outside its range.

Meant for desk-scale models (a few hundred rows); the tableau is dense.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ArrayForm, MilpModel, MilpSolution, Status

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
DEGENERATE_SWITCH = 1000
REINVERT_EVERY = 64

_LOWER, _UPPER, _FREE, _BASIC = 0, 1, 2, 3


@dataclass
class LpResult:
    status: Status
    x: np.ndarray
    objective: float  # minimization orientation
    iterations: int


class BoundedSimplex:
    """Reusable LP engine for one constraint matrix; bounds vary per call."""

    def __init__(self, form: ArrayForm, feas_tol: float = FEAS_TOL, max_iter: int | None = None):
        self.form = form
        self.A = np.asarray(form.A.toarray(), dtype=float)
        self.m, self.n = self.A.shape
        self.feas_tol = feas_tol
        self.max_iter = max_iter or 200 * (self.m + self.n + 10)
        self.cscale = max(1.0, float(np.max(np.abs(form.c))) if self.n else 1.0)

    def solve(self, lb: np.ndarray | None = None, ub: np.ndarray | None = None) -> LpResult:
        f = self.form
        lb = f.lb if lb is None else lb
        ub = f.ub if ub is None else ub
        if np.any(lb > ub + self.feas_tol) or np.any(f.row_lo > f.row_hi + self.feas_tol):
            return LpResult(Status.INFEASIBLE, np.full(self.n, np.nan), math.nan, 0)
        return _Run(self, lb, ub).go()


class _Run:
    def __init__(self, eng: BoundedSimplex, lb, ub):
        m, n = eng.m, eng.n
        f = eng.form
        self.eng = eng
        self.m, self.n = m, n
        self.tol = eng.feas_tol
        # structural + logical columns
        self.lo = np.concatenate([lb, f.row_lo]).astype(float)
        self.hi = np.concatenate([ub, f.row_hi]).astype(float)
        N0 = n + m
        x = np.zeros(N0)
        status = np.full(N0, _LOWER, dtype=np.int8)
        for j in range(n):
            if math.isfinite(self.lo[j]):
                x[j], status[j] = self.lo[j], _LOWER
            elif math.isfinite(self.hi[j]):
                x[j], status[j] = self.hi[j], _UPPER
            else:
                x[j], status[j] = 0.0, _FREE
        act = eng.A @ x[:n] if m else np.zeros(0)

        # crash: logical basic if its activity is in range, else an artificial
        basis = np.empty(m, dtype=np.int64)
        art_rows = []
        for r in range(m):
            j = n + r
            a = act[r]
            if self.lo[j] - self.tol <= a <= self.hi[j] + self.tol:
                basis[r] = j
                x[j] = a
                status[j] = _BASIC
            else:
                bnd = self.lo[j] if a < self.lo[j] else self.hi[j]
                x[j] = bnd
                status[j] = _LOWER if bnd == self.lo[j] else _UPPER
                art_rows.append(r)
        k = len(art_rows)
        N = N0 + k
        M = np.zeros((m, N))
        if m:
            M[:, :n] = eng.A
            M[:, n:N0] = -np.eye(m)
        art_sign = np.zeros(k)
        for t, r in enumerate(art_rows):
            resid = x[n + r] - act[r]  # sigma * a_r must equal s_r - A_r x
            art_sign[t] = 1.0 if resid >= 0 else -1.0
            M[r, N0 + t] = art_sign[t]
            basis[r] = N0 + t
        x = np.concatenate([x, np.abs([x[n + r] - act[r] for r in art_rows])]) if k else x
        status = np.concatenate([status, np.full(k, _BASIC, dtype=np.int8)])
        self.lo = np.concatenate([self.lo, np.zeros(k)])
        self.hi = np.concatenate([self.hi, np.full(k, math.inf)])
        self.M, self.N, self.N0, self.k = M, N, N0, k
        self.x, self.status, self.basis = x, status, basis
        self.iterations = 0
        self.degenerate = 0
        self.bland = False
        self._reinvert()

    def _reinvert(self):
        m = self.m
        if m == 0:
            self.T = np.zeros((0, self.N))
            return
        B = self.M[:, self.basis]
        self.T = np.linalg.solve(B, self.M)
        nonbasic = self.status != _BASIC
        rhs = -self.M[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = np.linalg.solve(B, rhs)
        self.since_reinvert = 0

    def _iterate(self, cost: np.ndarray) -> Status:
        eng = self.eng
        otol = OPT_TOL * eng.cscale
        while True:
            if self.iterations >= eng.max_iter:
                return Status.ITERATION_LIMIT
            cb = cost[self.basis]
            d = cost - cb @ self.T if self.m else cost.copy()
            st = self.status
            movable = self.hi > self.lo
            up = movable & ((st == _LOWER) | (st == _FREE)) & (d < -otol)
            down = movable & ((st == _UPPER) | (st == _FREE)) & (d > otol)
            cand = up | down
            if not cand.any():
                return Status.OPTIMAL
            if self.bland:
                j = int(np.flatnonzero(cand)[0])
            else:
                score = np.where(cand, np.abs(d), -1.0)
                j = int(np.argmax(score))
            direction = 1.0 if up[j] else -1.0

            alpha = self.T[:, j] if self.m else np.zeros(0)
            delta = -direction * alpha  # change of basics per unit step
            xb = self.x[self.basis]
            lob = self.lo[self.basis]
            hib = self.hi[self.basis]
            ratios = np.full(self.m, math.inf)
            dec = delta < -PIVOT_TOL
            inc = delta > PIVOT_TOL
            with np.errstate(invalid="ignore", divide="ignore"):
                ratios[dec] = np.maximum(xb[dec] - lob[dec], 0.0) / -delta[dec]
                ratios[inc] = np.maximum(hib[inc] - xb[inc], 0.0) / delta[inc]
            ratios[np.isnan(ratios)] = math.inf
            flip = self.hi[j] - self.lo[j]
            tmin = float(ratios.min()) if self.m else math.inf

            if flip <= tmin:
                if not math.isfinite(flip):
                    return Status.UNBOUNDED
                step, r = flip, -1
            else:
                step = tmin
                ties = np.flatnonzero(ratios <= tmin + 1e-12)
                if self.bland:
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(alpha[ties]))])
            self.iterations += 1
            if step <= 1e-12:
                self.degenerate += 1
                if self.degenerate >= DEGENERATE_SWITCH:
                    self.bland = True

            self.x[j] += direction * step
            if self.m:
                self.x[self.basis] = xb + delta * step
            if r < 0:
                self.status[j] = _UPPER if direction > 0 else _LOWER
                self.x[j] = self.hi[j] if direction > 0 else self.lo[j]
                continue

            leave = int(self.basis[r])
            if delta[r] < 0:
                self.x[leave], self.status[leave] = self.lo[leave], _LOWER
            else:
                self.x[leave], self.status[leave] = self.hi[leave], _UPPER
            self.status[j] = _BASIC
            self.basis[r] = j
            piv = self.T[r] / alpha[r]
            self.T -= np.outer(alpha, piv)
            self.T[r] = piv
            self.since_reinvert += 1
            if self.since_reinvert >= REINVERT_EVERY:
                self._reinvert()

    def go(self) -> LpResult:
        eng = self.eng
        n, N0, k = self.n, self.N0, self.k
        if k:
            c1 = np.zeros(self.N)
            c1[N0:] = 1.0
            st = self._iterate(c1)
            if st is Status.ITERATION_LIMIT:
                return LpResult(st, self.x[:n].copy(), math.nan, self.iterations)
            self._reinvert()
            if float(np.sum(self.x[N0:])) > self.tol * max(1.0, k):
                return LpResult(Status.INFEASIBLE, self.x[:n].copy(), math.nan, self.iterations)
            self.hi[N0:] = 0.0
            for t in range(k):
                j = N0 + t
                if self.status[j] != _BASIC:
                    self.x[j], self.status[j] = 0.0, _LOWER
        c2 = np.zeros(self.N)
        c2[:n] = eng.form.c
        st = self._iterate(c2)
        self._reinvert()
        x = self.x[:n].copy()
        # snap nonbasic structurals exactly onto their bounds
        for j in range(n):
            if self.status[j] == _LOWER:
                x[j] = self.lo[j]
            elif self.status[j] == _UPPER:
                x[j] = self.hi[j]
        return LpResult(st, x, float(eng.form.c @ x), self.iterations)


def solve_lp(model: MilpModel) -> MilpSolution:
    """Solve the continuous relaxation of ``model`` (binaries relaxed to [0, 1])."""
    form = model.to_arrays()
    res = BoundedSimplex(form).solve()
    obj = form.sign * res.objective + form.offset if res.status is Status.OPTIMAL else math.nan
    return MilpSolution(res.status, res.x, obj, 0.0 if res.status is Status.OPTIMAL else math.nan)
