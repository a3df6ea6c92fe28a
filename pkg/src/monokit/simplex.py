"""Dense two-phase tableau simplex for small linear programs.

Solves::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x[i] >= 0   unless free[i]

Bland's rule is used for both the entering and the leaving variable, which
rules out cycling on degenerate vertices.  Problems here have at most a few
dozen rows, so a dense tableau is the simplest correct choice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SolverError

__all__ = ["LPResult", "linprog", "PIVOT_TOL"]

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray]
    fun: float

    @property
    def success(self) -> bool:
        return self.status == "optimal"


def _pivot(T, row, col):
    T[row] /= T[row, col]
    colvals = T[:, col].copy()
    colvals[row] = 0.0
    T -= np.outer(colvals, T[row])


def _run(T, basis, ncols, max_iter):
    """Minimise the objective stored in the last row of ``T`` over columns ``< ncols``.

    The last row holds reduced costs; the last column holds the rhs.
    Returns "optimal" or "unbounded".
    """
    m = T.shape[0] - 1
    for _ in range(max_iter):
        reduced = T[-1, :ncols]
        candidates = np.flatnonzero(reduced < -PIVOT_TOL)
        if candidates.size == 0:
            return "optimal"
        col = candidates[0]
        column = T[:m, col]
        positive = np.flatnonzero(column > PIVOT_TOL)
        if positive.size == 0:
            return "unbounded"
        ratios = T[positive, -1] / column[positive]
        best = ratios.min()
        ties = positive[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        row = ties[np.argmin(basis[ties])]
        _pivot(T, row, col)
        basis[row] = col
    raise SolverError("simplex iteration limit reached")


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, free=None,
            max_iter: Optional[int] = None) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_ub.shape != (b_ub.size, n) or A_eq.shape != (b_eq.size, n):
        raise ValueError("constraint shapes do not match the cost vector")
    free = np.zeros(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)

    # free variables are split as x = x+ - x-
    nfree = int(free.sum())
    split = np.flatnonzero(free)
    c_s = np.concatenate([c, -c[split]])
    Aub_s = np.hstack([A_ub, -A_ub[:, split]])
    Aeq_s = np.hstack([A_eq, -A_eq[:, split]])
    nv = n + nfree

    m_ub, m_eq = b_ub.size, b_eq.size
    m = m_ub + m_eq
    # equality form with slacks on the inequality rows
    A = np.zeros((m, nv + m_ub))
    A[:m_ub, :nv] = Aub_s
    A[:m_ub, nv:] = np.eye(m_ub)
    A[m_ub:, :nv] = Aeq_s
    rhs = np.concatenate([b_ub, b_eq])
    neg = rhs < 0
    A[neg] *= -1.0
    rhs = np.where(neg, -rhs, rhs)
    ncols = nv + m_ub

    if max_iter is None:
        max_iter = 50 * (m + ncols + 10)

    # phase I: one artificial per row
    T = np.zeros((m + 1, ncols + m + 1))
    T[:m, :ncols] = A
    T[:m, ncols:ncols + m] = np.eye(m)
    T[:m, -1] = rhs
    T[-1, :ncols] = -A.sum(axis=0)
    T[-1, -1] = -rhs.sum()
    basis = np.arange(ncols, ncols + m)
    _run(T, basis, ncols + m, max_iter)
    scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))
    if -T[-1, -1] > FEAS_TOL * scale:
        return LPResult("infeasible", None, np.inf)

    # drive remaining artificials out of the basis; drop redundant rows
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] >= ncols:
            nz = np.flatnonzero(np.abs(T[i, :ncols]) > PIVOT_TOL)
            if nz.size:
                _pivot(T, i, nz[0])
                basis[i] = nz[0]
            else:
                keep[i] = False
    rows = np.flatnonzero(keep)
    T2 = np.zeros((rows.size + 1, ncols + 1))
    T2[:-1, :ncols] = T[rows, :ncols]
    T2[:-1, -1] = T[rows, -1]
    basis = basis[rows]
    cost = np.concatenate([c_s, np.zeros(m_ub)])
    T2[-1, :ncols] = cost
    T2[-1, -1] = 0.0
    for i, j in enumerate(basis):
        T2[-1] -= cost[j] * T2[i]

    status = _run(T2, basis, ncols, max_iter)
    if status == "unbounded":
        return LPResult("unbounded", None, -np.inf)
    sol = np.zeros(ncols)
    sol[basis] = T2[:-1, -1]
    x = sol[:n].copy()
    x[split] -= sol[n:nv]
    return LPResult("optimal", x, float(c @ x))
