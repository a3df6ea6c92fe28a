"""Representations of monotone sets ``M`` in ``B = E x E*``.

Three representations are supported:

* :class:`FiniteGraph` -- finitely many points ``(x_j, x*_j)``;
* :class:`LinearOp` -- the graph ``{(x, A x)}`` of a square matrix;
* :class:`PwaSubdiff` -- the graph of ``df`` for ``f(x) = max_j (<a_j, x> + beta_j)``.

For a linear operator, ``x -> r((x, A x) - b)`` is convex: the cross term
``<x - y, A x - y*>`` has Hessian ``A + A^T`` which is positive semidefinite
exactly when ``A`` is monotone, and the squared norms are convex.  This is
what makes :func:`resolve` a convex minimisation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import optimize

from .errors import ContractError, DimensionError, SolverError, UnsupportedError
from .simplex import linprog
from .spaces import PDPoint, Space, duality_map, r

__all__ = [
    "FiniteGraph", "LinearOp", "PwaSubdiff", "Operator", "Grid", "MonotonicityReport",
    "ResolveResult", "is_monotone", "is_maximal_minty", "sample_graph", "resolve",
    "contains", "MONOTONE_TOL", "RESOLVE_TOL",
]

MONOTONE_TOL = 1e-10
RESOLVE_TOL = 1e-8


class FiniteGraph:
    """Finitely many points of ``B``; stored as two ``(k, dim)`` arrays."""

    kind = "finite_graph"

    def __init__(self, xs, xstars):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        xstars = np.atleast_2d(np.asarray(xstars, dtype=float))
        if xs.shape != xstars.shape or xs.shape[0] == 0:
            raise DimensionError("finite graph needs k >= 1 points with matching x / xstar shapes")
        self.xs, self.xstars = xs, xstars

    @classmethod
    def from_points(cls, points: Sequence[PDPoint]) -> "FiniteGraph":
        if not points:
            raise DimensionError("finite graph needs at least one point")
        return cls([p.x for p in points], [p.xstar for p in points])

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    @property
    def k(self) -> int:
        return self.xs.shape[0]

    @property
    def points(self) -> list:
        return [PDPoint(x, xs) for x, xs in zip(self.xs, self.xstars)]

    @property
    def qvals(self) -> np.ndarray:
        return np.sum(self.xs * self.xstars, axis=1)

    def __repr__(self):
        return f"FiniteGraph(k={self.k}, dim={self.dim})"


class LinearOp:
    """Graph ``{(x, A x)}`` of a square matrix ``A``."""

    kind = "linear"

    def __init__(self, matrix):
        A = np.atleast_2d(np.asarray(matrix, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError(f"matrix must be square, got shape {A.shape}")
        self.matrix = A

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def sym(self) -> np.ndarray:
        return 0.5 * (self.matrix + self.matrix.T)

    def __repr__(self):
        return f"LinearOp({self.matrix.tolist()})"


class PwaSubdiff:
    """Subdifferential of ``f(x) = max_j (<a_j, x> + beta_j)``.

    ``slopes`` is ``(J, dim)``, ``intercepts`` is ``(J,)``.  The graph is
    always monotone.  Pieces that are nowhere maximal are kept but ignored by
    the cell-based routines.
    """

    kind = "pwa_subdiff"

    def __init__(self, slopes, intercepts):
        a = np.atleast_2d(np.asarray(slopes, dtype=float))
        beta = np.atleast_1d(np.asarray(intercepts, dtype=float))
        if a.shape[0] != beta.size or a.shape[0] == 0:
            raise DimensionError("need one intercept per slope and at least one piece")
        self.slopes, self.intercepts = a, beta
        self._cells = None

    @property
    def dim(self) -> int:
        return self.slopes.shape[1]

    @property
    def n_pieces(self) -> int:
        return self.slopes.shape[0]

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.max(x @ self.slopes.T + self.intercepts, axis=-1)

    def active(self, x, tol=1e-10) -> np.ndarray:
        vals = self.slopes @ np.asarray(x, dtype=float) + self.intercepts
        return np.flatnonzero(vals >= vals.max() - tol * max(1.0, abs(vals.max())))

    def cell_constraints(self, j):
        """``C_j = {s : (a_k - a_j) . s <= beta_j - beta_k for all k}`` as ``(G, h)``."""
        return self.slopes - self.slopes[j], self.intercepts[j] - self.intercepts

    def nonempty_cells(self) -> list:
        if self._cells is None:
            cells = []
            for j in range(self.n_pieces):
                G, h = self.cell_constraints(j)
                res = linprog(np.zeros(self.dim), G, h, free=np.ones(self.dim, bool))
                if res.status != "infeasible":
                    cells.append(j)
            self._cells = cells
        return self._cells

    def cell_support(self, j, w) -> float:
        """Support function ``sup_{s in C_j} <w, s>`` (``+inf`` when unbounded)."""
        G, h = self.cell_constraints(j)
        res = linprog(-np.asarray(w, dtype=float), G, h, free=np.ones(self.dim, bool))
        if res.status == "unbounded":
            return np.inf
        if res.status == "infeasible":
            return -np.inf
        return -res.fun

    def conjugate(self, s) -> float:
        """``f*(s) = min{-<lam, beta> : lam in simplex, sum lam_j a_j = s}``."""
        J = self.n_pieces
        A_eq = np.vstack([np.ones(J), self.slopes.T])
        b_eq = np.concatenate([[1.0], np.asarray(s, dtype=float)])
        res = linprog(-self.intercepts, A_eq=A_eq, b_eq=b_eq)
        return res.fun if res.success else np.inf

    def __repr__(self):
        return f"PwaSubdiff(J={self.n_pieces}, dim={self.dim})"


Operator = Union[FiniteGraph, LinearOp, PwaSubdiff]


@dataclass(frozen=True)
class Grid:
    """Axis-aligned box ``[low, high]^dim`` sampled with ``resolution`` points per axis."""

    low: float = -1.0
    high: float = 1.0
    resolution: int = 5

    def axis(self) -> np.ndarray:
        if self.resolution < 1 or self.high < self.low:
            raise ContractError("grid is empty")
        if self.resolution == 1:
            return np.array([0.5 * (self.low + self.high)])
        return np.linspace(self.low, self.high, self.resolution)

    def points(self, dim: int) -> np.ndarray:
        ax = self.axis()
        mesh = np.meshgrid(*([ax] * dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class MonotonicityReport:
    monotone: bool
    violating_pair: Optional[tuple] = None
    min_value: Optional[float] = None
    maximal: Optional[bool] = None
    method: Optional[str] = None


@dataclass
class ResolveResult:
    m: PDPoint
    residual: float
    index: Optional[int] = None
    exact: bool = True
    extra: dict = field(default_factory=dict)


def _check_dim(space: Space, op: Operator):
    if op.dim != space.dim:
        raise DimensionError(f"operator has dim {op.dim} but space has dim {space.dim}")


def is_monotone(space: Space, op: Operator, tol: float = MONOTONE_TOL) -> MonotonicityReport:
    """Decide ``q(d - e) >= 0`` for all ``d, e`` in the graph.

    Finite graphs are checked exhaustively and the worst pair (lowest index on
    ties) is returned on failure; linear maps via the smallest eigenvalue of the
    symmetric part; subdifferentials are monotone by construction.
    """
    _check_dim(space, op)
    if isinstance(op, FiniteGraph):
        dx = op.xs[:, None, :] - op.xs[None, :, :]
        dxs = op.xstars[:, None, :] - op.xstars[None, :, :]
        Q = np.sum(dx * dxs, axis=-1)
        i, j = np.unravel_index(np.argmin(Q), Q.shape)
        worst = float(Q[i, j])
        if worst < -tol:
            pts = op.points
            return MonotonicityReport(False, (pts[i], pts[j]), worst, False, "pairwise")
        return MonotonicityReport(True, None, worst, None, "pairwise")
    if isinstance(op, LinearOp):
        lam = float(np.linalg.eigvalsh(op.sym).min())
        return MonotonicityReport(lam >= -tol, None, lam, None, "symmetric-part eigenvalue")
    if isinstance(op, PwaSubdiff):
        return MonotonicityReport(True, None, None, True, "convex subdifferential")
    raise UnsupportedError(f"unknown operator type {type(op).__name__}")


def is_maximal_minty(space: Space, op: Operator) -> bool:
    """Minty test ``R(I + A) = E`` in the Euclidean case."""
    _check_dim(space, op)
    if space.p != 2.0:
        raise UnsupportedError("Minty maximality test requires p = 2")
    if isinstance(op, FiniteGraph):
        raise UnsupportedError("maximality undecidable for finite graphs")
    if isinstance(op, LinearOp):
        return bool(np.linalg.matrix_rank(np.eye(op.dim) + op.matrix) == op.dim)
    if isinstance(op, PwaSubdiff):
        return True
    raise UnsupportedError(f"unknown operator type {type(op).__name__}")


def _hull_samples(vertices, resolution):
    """Points of ``conv(vertices)`` on a barycentric grid."""
    k = len(vertices)
    if k == 1:
        return vertices.copy()
    n = max(resolution - 1, 1)
    out = []
    for combo in itertools.product(range(n + 1), repeat=k - 1):
        if sum(combo) <= n:
            w = np.array(list(combo) + [n - sum(combo)], dtype=float) / n
            out.append(w @ vertices)
    return np.array(out)


def _pwa_samples(op: PwaSubdiff, grid: Grid):
    if op.dim > 2:
        raise UnsupportedError("sampling a piecewise-affine subdifferential needs dim <= 2")
    lo, hi = grid.low, grid.high
    base = grid.points(op.dim)
    sites = [x for x in base]
    J = op.n_pieces
    if op.dim == 1:
        for i, j in itertools.combinations(range(J), 2):
            da = op.slopes[i, 0] - op.slopes[j, 0]
            if abs(da) > 1e-14:
                sites.append(np.array([(op.intercepts[j] - op.intercepts[i]) / da]))
    else:
        t = grid.axis()
        for i, j in itertools.combinations(range(J), 2):
            n = op.slopes[i] - op.slopes[j]
            c = op.intercepts[j] - op.intercepts[i]
            if np.linalg.norm(n) < 1e-14:
                continue
            # points of the line n . x = c, parametrised along the box
            x0 = n * c / (n @ n)
            d = np.array([-n[1], n[0]]) / np.linalg.norm(n)
            span = (hi - lo) * np.sqrt(2.0)
            for s in np.linspace(-span, span, 2 * len(t) + 1):
                sites.append(x0 + s * d)
        for i, j, k in itertools.combinations(range(J), 3):
            M = np.array([op.slopes[i] - op.slopes[j], op.slopes[i] - op.slopes[k]])
            rhs = np.array([op.intercepts[j] - op.intercepts[i], op.intercepts[k] - op.intercepts[i]])
            if abs(np.linalg.det(M)) > 1e-14:
                sites.append(np.linalg.solve(M, rhs))
    xs, xstars = [], []
    for x in sites:
        if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
            continue
        act = op.active(x)
        for s in _hull_samples(op.slopes[act], grid.resolution):
            xs.append(x)
            xstars.append(s)
    pts = np.unique(np.round(np.hstack([xs, xstars]), 12), axis=0)
    return FiniteGraph(pts[:, :op.dim], pts[:, op.dim:])


def sample_graph(space: Space, op: Operator, grid: Grid = Grid()) -> FiniteGraph:
    """Finite monotone surrogate of ``op`` over a box of ``x`` values."""
    _check_dim(space, op)
    grid.axis()
    if isinstance(op, FiniteGraph):
        return op
    if isinstance(op, LinearOp):
        X = grid.points(op.dim)
        return FiniteGraph(X, X @ op.matrix.T)
    if isinstance(op, PwaSubdiff):
        return _pwa_samples(op, grid)
    raise UnsupportedError(f"unknown operator type {type(op).__name__}")


def _linear_resolve_objective(space, A, y, ystar):
    def fun(x):
        u, v = x - y, A @ x - ystar
        ju = duality_map(space, u, "primal")
        jv = duality_map(space, v, "dual")
        val = 0.5 * (u @ ju) + 0.5 * (v @ jv) + u @ v
        grad = ju + A.T @ jv + v + A.T @ u
        return val, grad
    return fun


def _pwa_prox(op: PwaSubdiff, z):
    """Exact ``prox_f(z)`` by active-set enumeration; returns ``(x, s)`` with ``s in df(x)``."""
    J, n = op.n_pieces, op.dim
    for size in range(1, min(J, n + 1) + 1):
        for S in itertools.combinations(range(J), size):
            S = list(S)
            AS = op.slopes[S]
            K = np.zeros((size + 1, size + 1))
            K[:size, :size] = AS @ AS.T
            K[:size, size] = 1.0
            K[size, :size] = 1.0
            rhs = np.concatenate([AS @ z + op.intercepts[S], [1.0]])
            sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
            if np.linalg.norm(K @ sol - rhs) > 1e-9 * max(1.0, np.linalg.norm(rhs)):
                continue
            lam, t = sol[:size], sol[size]
            if lam.min() < -1e-12:
                continue
            lam = np.clip(lam, 0.0, None)
            lam /= lam.sum()
            s = lam @ AS
            x = z - s
            vals = op.slopes @ x + op.intercepts
            if vals.max() <= t + 1e-10 * max(1.0, abs(t)):
                return x, s
    raise SolverError("active-set enumeration found no KKT point for the prox")


def resolve(space: Space, op: Operator, b: PDPoint) -> ResolveResult:
    """Minimise ``r(m - b)`` over ``m`` in the graph.

    Finite graphs: exact enumeration (lowest index wins ties).  Linear maps at
    p = 2 solve ``(I + A) x = y + y*``; at other p a convex quasi-Newton solve
    started from the Euclidean solution.  Subdifferentials (p = 2) use the
    exact prox ``x = prox_f(y + y*)``.
    """
    _check_dim(space, op)
    if isinstance(op, FiniteGraph):
        vals = r(space, PDPoint(op.xs - b.x, op.xstars - b.xstar))
        vals = np.atleast_1d(vals)
        i = int(np.argmin(vals))
        return ResolveResult(PDPoint(op.xs[i], op.xstars[i]), float(vals[i]), index=i)

    y, ystar = b.x, b.xstar
    if isinstance(op, LinearOp):
        A = op.matrix
        x = np.linalg.solve(np.eye(op.dim) + A, y + ystar)
        if space.p != 2.0:
            fun = _linear_resolve_objective(space, A, y, ystar)
            sol = optimize.minimize(fun, x, jac=True, method="L-BFGS-B",
                                    options={"maxiter": 5000, "ftol": 1e-300, "gtol": 1e-14,
                                             "maxcor": 30})
            x = sol.x
        m = PDPoint(x, A @ x)
        res = float(r(space, m - b))
        if res > RESOLVE_TOL:
            raise SolverError(f"resolvent solve stalled at residual {res:.3e}")
        return ResolveResult(m, max(res, 0.0))

    if isinstance(op, PwaSubdiff):
        if space.p != 2.0:
            raise UnsupportedError("resolvent of a piecewise-affine subdifferential needs p = 2")
        x, s = _pwa_prox(op, y + ystar)
        m = PDPoint(x, s)
        return ResolveResult(m, max(float(r(space, m - b)), 0.0))
    raise UnsupportedError(f"unknown operator type {type(op).__name__}")


def contains(op: Operator, b: PDPoint, tol: float = 1e-8) -> bool:
    """Membership of ``b`` in the graph, decided independently of any transform."""
    if isinstance(op, FiniteGraph):
        d = np.abs(op.xs - b.x).max(axis=1) + np.abs(op.xstars - b.xstar).max(axis=1)
        return bool(d.min() <= tol)
    if isinstance(op, LinearOp):
        return bool(np.linalg.norm(op.matrix @ b.x - b.xstar) <= tol * max(1.0, np.linalg.norm(b.x)))
    if isinstance(op, PwaSubdiff):
        gap = op.value(b.x) + op.conjugate(b.xstar) - b.x @ b.xstar
        return bool(gap <= tol)
    raise UnsupportedError(f"unknown operator type {type(op).__name__}")
