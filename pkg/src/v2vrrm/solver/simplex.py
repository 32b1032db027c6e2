"""Bounded-variable primal simplex for row-range linear programs.

Solves  min c'x  s.t.  lo <= A x <= hi,  lb <= x <= ub  by adding one
bounded slack per row, so that every variable is handled by the same
bounded ratio test.  Phase 1 minimises a sum of artificials.  Pricing is
Dantzig's rule, switching to Bland's rule after a run of degenerate pivots
so the method cannot cycle.  The basis inverse is kept explicitly and
rebuilt from scratch at a fixed interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


class UnboundedError(RuntimeError):
    """The linear program has no finite optimum."""


@dataclass
class LPResult:
    status: str
    x: np.ndarray
    objective: float
    iterations: int


class _Tableau:
    def __init__(self, K, lb, ub, x, basis, tol, piv_tol, refactor):
        self.K = K
        self.lb = lb
        self.ub = ub
        self.x = x
        self.basis = basis
        self.tol = tol
        self.piv_tol = piv_tol
        self.refactor = refactor
        m, n = K.shape
        self.is_basic = np.zeros(n, dtype=bool)
        self.is_basic[basis] = True
        self.iterations = 0
        self._reinvert()

    def _reinvert(self):
        B = self.K[:, self.basis]
        self.Binv = np.linalg.inv(B)
        nb = ~self.is_basic
        rhs = -self.K[:, nb] @ self.x[nb]
        self.x[self.basis] = self.Binv @ rhs

    def run(self, c, max_iter=100000) -> str:
        degenerate_run = 0
        bland = False
        since_inv = 0
        n = self.K.shape[1]
        tol = self.tol
        while True:
            if since_inv >= self.refactor:
                self._reinvert()
                since_inv = 0
            y = c[self.basis] @ self.Binv
            d = c - y @ self.K
            nb = ~self.is_basic
            can_up = nb & (self.x < self.ub - tol) & (d < -tol)
            can_down = nb & (self.x > self.lb + tol) & (d > tol)
            cand = np.flatnonzero(can_up | can_down)
            if cand.size == 0:
                return OPTIMAL
            if bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if can_up[q] else -1.0

            alpha = self.Binv @ self.K[:, q]
            # basic values move by -theta * direction * alpha
            step = direction * alpha
            xb = self.x[self.basis]
            lbb, ubb = self.lb[self.basis], self.ub[self.basis]
            ratios = np.full(step.size, np.inf)
            # relative pivot tolerance: tiny pivots drive the basis singular
            ptol = self.piv_tol * max(1.0, float(np.abs(step).max(initial=0.0)))
            dec = step > ptol
            inc = step < -ptol
            with np.errstate(invalid="ignore"):
                ratios[dec] = (xb[dec] - lbb[dec]) / step[dec]
                ratios[inc] = (ubb[inc] - xb[inc]) / -step[inc]
            ratios = np.maximum(ratios, 0.0)
            own = self.ub[q] - self.x[q] if direction > 0 else self.x[q] - self.lb[q]
            theta_b = ratios.min() if ratios.size else np.inf
            theta = min(own, theta_b)
            if not np.isfinite(theta):
                return UNBOUNDED

            self.iterations += 1
            if self.iterations > max_iter:
                raise RuntimeError("simplex iteration limit reached")
            if theta <= 1e-12:
                degenerate_run += 1
                if degenerate_run > 50:
                    bland = True
            else:
                degenerate_run = 0
                bland = False

            self.x[self.basis] = xb - theta * step
            self.x[q] += direction * theta
            if own <= theta_b:
                continue  # bound flip, basis unchanged

            ties = np.flatnonzero(ratios <= theta_b + 1e-12)
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(step[ties]))])
            leaving = self.basis[r]
            self.x[leaving] = self.lb[leaving] if step[r] > 0 else self.ub[leaving]

            piv = alpha[r]
            row = self.Binv[r] / piv
            self.Binv -= np.outer(alpha, row)
            self.Binv[r] = row
            self.basis[r] = q
            self.is_basic[q] = True
            self.is_basic[leaving] = False
            since_inv += 1


def simplex_solve(A, row_lo, row_hi, lb, ub, c, *, tol: float = 1e-9, refactor: int = 100) -> LPResult:
    """Minimise c'x subject to row ranges and variable bounds.

    ``A`` may be dense or scipy-sparse.  Returns an LPResult whose ``x``
    covers the structural variables only.
    """
    A = A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=float)
    m, n = A.shape
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(lb > ub + tol) or np.any(np.asarray(row_lo) > np.asarray(row_hi) + tol):
        return LPResult(INFEASIBLE, np.full(n, np.nan), np.nan, 0)

    x0 = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
    if m == 0:
        # Each variable independently goes to its best bound.
        x = x0.copy()
        for j in range(n):
            if c[j] < 0:
                x[j] = ub[j]
            elif c[j] > 0:
                x[j] = lb[j]
        if not np.all(np.isfinite(x)):
            return LPResult(UNBOUNDED, x, -np.inf, 0)
        return LPResult(OPTIMAL, x, float(c @ x), 0)

    act = A @ x0
    below = act < row_lo - tol
    above = act > row_hi + tol
    need = np.flatnonzero(below | above)
    k = need.size
    # Columns: structural | slacks (A x - s = 0) | artificials.
    K = np.zeros((m, n + m + k))
    K[:, :n] = A
    K[:, n:n + m] = -np.eye(m)
    s_val = act.copy()
    s_val[below] = np.asarray(row_lo)[below]
    s_val[above] = np.asarray(row_hi)[above]
    art_val = np.empty(k)
    for a, r in enumerate(need):
        sign = 1.0 if s_val[r] > act[r] else -1.0
        K[r, n + m + a] = sign
        art_val[a] = abs(s_val[r] - act[r])
    lb_all = np.concatenate([lb, row_lo, np.zeros(k)])
    ub_all = np.concatenate([ub, row_hi, np.full(k, np.inf)])
    x_all = np.concatenate([x0, s_val, art_val])
    basis = np.arange(n, n + m)
    basis[need] = n + m + np.arange(k)

    tab = _Tableau(K, lb_all, ub_all, x_all, basis, tol, 1e-9, refactor)
    if k:
        c1 = np.zeros(n + m + k)
        c1[n + m:] = 1.0
        tab.run(c1)
        tab._reinvert()
        infeas = tab.x[n + m:].sum()
        scale = 1.0 + np.abs(A).sum(axis=1).max()
        if infeas > 1e-7 * scale:
            return LPResult(INFEASIBLE, tab.x[:n].copy(), np.nan, tab.iterations)
        tab.ub[n + m:] = 0.0
        tab.x[n + m:] = np.clip(tab.x[n + m:], 0.0, 0.0)
        tab._reinvert()

    c2 = np.zeros(n + m + k)
    c2[:n] = c
    status = tab.run(c2)
    tab._reinvert()
    x = tab.x[:n].copy()
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, x, -np.inf, tab.iterations)
    # Snap tiny bound violations introduced by floating-point drift.
    x = np.clip(x, lb, ub)
    return LPResult(OPTIMAL, x, float(c @ x), tab.iterations)
