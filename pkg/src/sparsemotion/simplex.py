"""Bounded-variable primal simplex for small dense LPs.

Solves ``min c @ x  s.t.  A @ x == b,  lo <= x <= hi`` with a two-phase
revised simplex. Nonbasic variables sit at one of their bounds, so box
constraints never become rows. Intended for problems with a handful of
equality rows and up to a few thousand columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    status: str
    iterations: int
    basis: np.ndarray

    @property
    def success(self) -> bool:
        return self.status == OPTIMAL


def _iterate(A, b, c, lo, hi, basis, at_upper, max_iter, tol):
    """Run primal simplex from a feasible basis. Returns (status, iterations)."""
    m, ncol = A.shape
    is_basic = np.zeros(ncol, dtype=bool)
    is_basic[basis] = True
    degenerate_run = 0
    for it in range(max_iter):
        x_n = np.where(at_upper, hi, lo)
        x_n[is_basic] = 0.0
        Bmat = A[:, basis]
        x_b = np.linalg.solve(Bmat, b - A @ x_n)
        y = np.linalg.solve(Bmat.T, c[basis])
        d = c - y @ A
        d[is_basic] = 0.0
        fixed = hi - lo <= 0
        can_inc = (~is_basic) & (~at_upper) & (d < -tol) & ~fixed
        can_dec = (~is_basic) & at_upper & (d > tol) & ~fixed
        cand = can_inc | can_dec
        if not np.any(cand):
            return OPTIMAL, it
        # Dantzig pricing; Bland's rule after a run of degenerate pivots
        if degenerate_run > 50:
            j = int(np.flatnonzero(cand)[0])
        else:
            j = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
        sigma = 1.0 if can_inc[j] else -1.0
        alpha = np.linalg.solve(Bmat, A[:, j]) * sigma
        # x_b(theta) = x_b - theta * alpha
        theta = hi[j] - lo[j]
        leave = -1
        leave_to_upper = False
        lo_b, hi_b = lo[basis], hi[basis]
        for i in range(m):
            if alpha[i] > tol:
                step = (x_b[i] - lo_b[i]) / alpha[i]
                to_upper = False
            elif alpha[i] < -tol:
                if not np.isfinite(hi_b[i]):
                    continue
                step = (hi_b[i] - x_b[i]) / -alpha[i]
                to_upper = True
            else:
                continue
            step = max(step, 0.0)
            if step < theta or (leave >= 0 and step == theta and basis[i] < basis[leave]):
                theta, leave, leave_to_upper = step, i, to_upper
        if not np.isfinite(theta):
            return UNBOUNDED, it
        degenerate_run = degenerate_run + 1 if theta <= tol else 0
        if leave < 0:
            # bound flip, basis unchanged
            at_upper[j] = not at_upper[j]
            continue
        out = basis[leave]
        is_basic[out] = False
        at_upper[out] = leave_to_upper
        basis[leave] = j
        is_basic[j] = True
        at_upper[j] = False
    return ITERATION_LIMIT, max_iter


def solve_bounded_lp(c, A, b, lo, hi, *, max_iter: int = 20000, tol: float = 1e-9) -> LPResult:
    """Minimize ``c @ x`` subject to ``A @ x == b`` and ``lo <= x <= hi``.

    Every variable needs a finite lower bound; upper bounds may be ``inf``.
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    m, ncol = A.shape
    if not np.all(np.isfinite(lo)):
        raise ValueError("all lower bounds must be finite")
    if np.any(hi < lo):
        raise ValueError("upper bound below lower bound")

    # phase 1: artificials absorb the residual of the all-at-lower-bound point
    resid = b - A @ lo
    sign = np.where(resid < 0, -1.0, 1.0)
    A1 = np.hstack([A, np.diag(sign)])
    c1 = np.concatenate([np.zeros(ncol), np.ones(m)])
    lo1 = np.concatenate([lo, np.zeros(m)])
    hi1 = np.concatenate([hi, np.full(m, np.inf)])
    basis = np.arange(ncol, ncol + m)
    at_upper = np.zeros(ncol + m, dtype=bool)
    status, it1 = _iterate(A1, b, c1, lo1, hi1, basis, at_upper, max_iter, tol)
    x = _assemble(A1, b, lo1, hi1, basis, at_upper)
    if status == ITERATION_LIMIT:
        return LPResult(x[:ncol], float(c @ x[:ncol]), status, it1, basis)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if x[ncol:].sum() > 1e-8 * scale:
        return LPResult(x[:ncol], float(c @ x[:ncol]), INFEASIBLE, it1, basis)

    # phase 2: artificials are pinned at zero and may only leave the basis
    c2 = np.concatenate([c, np.zeros(m)])
    hi2 = hi1.copy()
    hi2[ncol:] = 0.0
    status, it2 = _iterate(A1, b, c2, lo1, hi2, basis, at_upper, max_iter, tol)
    x = _assemble(A1, b, lo1, hi2, basis, at_upper)
    return LPResult(x[:ncol], float(c @ x[:ncol]), status, it1 + it2, basis.copy())


def _assemble(A, b, lo, hi, basis, at_upper):
    x = np.where(at_upper, hi, lo).astype(float)
    x[basis] = 0.0
    x[basis] = np.linalg.solve(A[:, basis], b - A @ x)
    return x
