"""Dense two-phase tableau simplex for small standard-form LPs.

    minimize c @ x   subject to   A @ x == b,  x >= 0

Sized for problems with a few dozen rows and up to a few thousand columns.
Pricing is Dantzig's most-negative reduced cost; after a degenerate pivot it
falls back to Bland's smallest-index rule, which guarantees termination.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    duals: np.ndarray | None = None
    # y with y @ A <= 0 and y @ b > 0, present when infeasible
    farkas: np.ndarray | None = None
    basis: np.ndarray | None = None
    iterations: int = 0


class _Tableau:
    def __init__(self, a, b, pivot_tol, rule):
        m, n = a.shape
        self.m, self.n = m, n
        self.rule = rule
        self.pivot_tol = pivot_tol
        # columns: n structural, m artificial, rhs
        self.t = np.zeros((m + 1, n + m + 1))
        self.t[:m, :n] = a
        self.t[:m, n:n + m] = np.eye(m)
        self.t[:m, -1] = b
        self.basis = np.arange(n, n + m)
        self.iterations = 0
        self.degenerate = False

    def set_cost(self, cost):
        self.t[-1, :-1] = cost
        self.t[-1, -1] = 0.0
        cb = cost[self.basis]
        self.t[-1] -= cb @ self.t[:-1]

    def pivot(self, r, j):
        t = self.t
        t[r] /= t[r, j]
        col = t[:, j].copy()
        col[r] = 0.0
        t -= np.outer(col, t[r])
        t[r, j] = 1.0
        self.basis[r] = j
        self.iterations += 1

    def entering(self, allowed, tol):
        rc = self.t[-1, :-1]
        cand = np.flatnonzero(allowed & (rc < -tol))
        if len(cand) == 0:
            return None
        if self.rule == "bland" or self.degenerate:
            return int(cand[0])
        return int(cand[np.argmin(rc[cand])])

    def leaving(self, j):
        col = self.t[:-1, j]
        rhs = self.t[:-1, -1]
        rows = np.flatnonzero(col > self.pivot_tol)
        if len(rows) == 0:
            return None
        ratios = rhs[rows] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        # Bland tie-break: smallest basic variable index
        r = int(ties[np.argmin(self.basis[ties])])
        self.degenerate = bool(rhs[r] <= self.pivot_tol)
        return r

    def run(self, allowed, tol, max_iter):
        while True:
            if self.iterations >= max_iter:
                raise SolverError(f"simplex exceeded {max_iter} iterations")
            j = self.entering(allowed, tol)
            if j is None:
                return OPTIMAL
            r = self.leaving(j)
            if r is None:
                return UNBOUNDED
            self.pivot(r, j)


def solve_lp(c, a_eq, b_eq, *, tol=1e-11, feas_tol=1e-9, rule="dantzig",
             max_iter=50_000) -> LPResult:
    """Solve ``min c@x  s.t.  a_eq@x == b_eq, x >= 0``.

    ``rule`` is ``"dantzig"`` (with Bland's rule after degenerate pivots) or
    ``"bland"`` throughout. Phase 1 is declared infeasible when the sum of
    artificials stays above ``feas_tol``; the returned Farkas vector then
    certifies it.
    """
    a = np.array(a_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    c = np.array(c, dtype=float)
    m, n = a.shape
    if b.shape != (m,) or c.shape != (n,):
        raise ValueError("inconsistent LP dimensions")
    if rule not in ("dantzig", "bland"):
        raise ValueError(f"unknown pivot rule {rule!r}")

    flip = np.where(b < 0, -1.0, 1.0)
    a *= flip[:, None]
    b *= flip

    tab = _Tableau(a, b, pivot_tol=tol, rule=rule)
    phase1_cost = np.concatenate([np.zeros(n), np.ones(m)])
    tab.set_cost(phase1_cost)
    allowed = np.ones(n + m, dtype=bool)
    tab.run(allowed, tol, max_iter)

    infeasibility = -tab.t[-1, -1]
    if infeasibility > feas_tol:
        # reduced cost of artificial i is 1 - y_i
        y = 1.0 - tab.t[-1, n:n + m]
        return LPResult(INFEASIBLE, objective=None, farkas=y * flip,
                        basis=tab.basis.copy(), iterations=tab.iterations)

    # drive zero-level artificials out of the basis where possible
    for r in range(m):
        if tab.basis[r] >= n:
            row = tab.t[r, :n]
            nz = np.flatnonzero(np.abs(row) > 1e-9)
            if len(nz):
                tab.pivot(r, int(nz[np.argmax(np.abs(row[nz]))]))

    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    tab.degenerate = False
    tab.set_cost(np.concatenate([c, np.zeros(m)]))
    status = tab.run(allowed, tol, max_iter)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, basis=tab.basis.copy(), iterations=tab.iterations)

    x = np.zeros(n + m)
    x[tab.basis] = tab.t[:-1, -1]
    x = np.maximum(x[:n], 0.0)
    # reduced cost of artificial i is 0 - y_i
    y = -tab.t[-1, n:n + m] * flip
    return LPResult(OPTIMAL, x=x, objective=float(c @ x), duals=y,
                    basis=tab.basis.copy(), iterations=tab.iterations)
