"""Fitzpatrick function, its conjugate, the P/F/G transforms and inf-convolutions.

Conventions
-----------
For a monotone set ``M`` in ``B``::

    Phi(b)  = sup_{m in M} [<b, L m> - q(m)]          P = Phi - q      on B
    Phi*(d) = sup_{b in B} [<b, d> - Phi(b)]          F = Phi* - q~    on B*
    G(d)    = -inf_{m in M} q~(L m - d)

Expanding ``q~(L m - d)`` shows ``G(d) = Phi(L~ d) - q~(d)``, which is how
``G`` is evaluated for every representation.

Closed forms used per representation:

* finite graph: ``Phi`` is a max of ``k`` affine functions; ``Phi*`` is the LP
  ``min {sum lam_j q(m_j) : lam in simplex, sum lam_j L m_j = d}``;
* linear ``A`` with symmetric part ``S``: with ``g = A^T x + x*``,
  ``Phi = g^T S^+ g / 4`` when ``g`` lies in the range of ``S`` and ``+inf``
  otherwise; ``Phi*(y*, y**) = y**^T S y**`` when ``y* = A y**``;
* ``df`` for ``f = max_j(<a_j, .> + beta_j)``: on the cell ``C_j`` where piece
  ``j`` is maximal the graph is ``C_j x {a_j}`` (plus convex combinations on
  the boundaries, which never raise the sup), so
  ``Phi(b) = max_j [<a_j, x> + sigma_{C_j}(x* - a_j)]`` with ``sigma`` the
  support function (one LP per cell); ``Phi*`` is the LP over cone variables
  ``v_j in mu_j C_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize

from .errors import ContractError, DimensionError, SolverError, UnsupportedError
from .gridsearch import RefineGrid, grid_minimize
from .operators import FiniteGraph, LinearOp, Operator, PwaSubdiff
from .qp import minimize_on_simplex, minimize_smooth, quadratic_inf, simplex_qp
from .simplex import linprog
from .spaces import (
    DualPoint, PDPoint, Space, TransformValue, duality_map, iso_L, iso_Lt, norm, q, qt, r, rt,
)

__all__ = [
    "fitzpatrick", "p_transform", "fitzpatrick_conjugate", "f_transform", "g_transform",
    "evaluate_transform", "GossezMembership", "gossez_membership", "InfConvSpec",
    "inf_convolution", "verify_pmfmqt", "verify_exact_equality", "fg_gap_probe",
    "GOSSEZ_TOL", "TRANSFORM_NAMES",
]

GOSSEZ_TOL = 1e-9
RANGE_TOL = 1e-9
TRANSFORM_NAMES = ("P", "F", "G", "Phi", "PhiStar")

_INF = math.inf


def _check(space: Space, op: Operator, point=None):
    if op.dim != space.dim:
        raise DimensionError(f"operator has dim {op.dim} but space has dim {space.dim}")
    if point is not None and point.dim != space.dim:
        raise DimensionError(f"point has dim {point.dim} but space has dim {space.dim}")


def _swap(v, n):
    """``(a, b) -> (b, a)`` on stacked ``2n`` vectors."""
    return np.concatenate([v[..., n:], v[..., :n]], axis=-1)


# ---------------------------------------------------------------------------
# linear operators


def _lin_parts(op: LinearOp):
    cache = getattr(op, "_sym_cache", None)
    if cache is None:
        S = op.sym
        w, V = np.linalg.eigh(S)
        scale = max(1.0, float(np.abs(w).max(initial=0.0)))
        cut = 1e-12 * scale
        pos = w > cut
        Sp = (V[:, pos] / w[pos]) @ V[:, pos].T
        N = V[:, ~pos]
        indefinite = bool(w.min() < -1e-10 * scale)
        cache = (S, Sp, N, indefinite)
        op._sym_cache = cache
    return cache


def _half_quad(op: LinearOp, g):
    """``sup_s [<g, s> - s^T S s] = g^T S^+ g / 4`` (batched); returns values and maximisers."""
    S, Sp, N, indefinite = _lin_parts(op)
    g = np.atleast_2d(g)
    s = 0.5 * g @ Sp
    vals = np.sum(g * s, axis=-1) * 0.5
    off = np.linalg.norm(g @ N, axis=-1) > RANGE_TOL * np.maximum(1.0, np.linalg.norm(g, axis=-1))
    if indefinite:
        off = np.ones_like(off)
    return np.where(off, _INF, vals), s


def _phi_linear(op: LinearOp, X, XS):
    g = X @ op.matrix + XS
    return _half_quad(op, g)


def _phistar_linear(op: LinearOp, Y1, Y2):
    A = op.matrix
    Y1, Y2 = np.atleast_2d(Y1), np.atleast_2d(Y2)
    resid = np.linalg.norm(Y1 - Y2 @ A.T, axis=-1)
    scale = np.maximum(1.0, np.maximum(np.linalg.norm(Y1, axis=-1), np.linalg.norm(Y2, axis=-1)))
    vals = np.sum(Y2 * (Y2 @ op.sym), axis=-1)
    if _lin_parts(op)[3]:
        return np.full(len(Y1), _INF)
    return np.where(resid <= RANGE_TOL * scale * max(1.0, np.abs(A).max()), vals, _INF)


# ---------------------------------------------------------------------------
# finite graphs


def _phi_finite(op: FiniteGraph, X, XS):
    vals = np.atleast_2d(X) @ op.xstars.T + np.atleast_2d(XS) @ op.xs.T - op.qvals
    idx = np.argmax(vals, axis=-1)
    return vals[np.arange(len(vals)), idx], idx


def _phistar_finite(op: FiniteGraph, y1, y2):
    W = np.hstack([op.xstars, op.xs])  # rows L m_j
    A_eq = np.vstack([np.ones(op.k), W.T])
    b_eq = np.concatenate([[1.0], y1, y2])
    res = linprog(op.qvals, A_eq=A_eq, b_eq=b_eq)
    if res.status == "infeasible":
        return _INF, None
    if res.status != "optimal":
        raise SolverError(f"conjugate LP ended with status {res.status}")
    return float(res.fun), res.x


# ---------------------------------------------------------------------------
# piecewise-affine subdifferentials


def _cell_sup(op: PwaSubdiff, j, w):
    """``sup_{s in C_j} <w, s>`` and a maximiser (``(inf, None)`` when unbounded)."""
    G, h = op.cell_constraints(j)
    res = linprog(-np.asarray(w, dtype=float), G, h, free=np.ones(op.dim, bool))
    if res.status == "unbounded":
        return _INF, None
    if res.status == "infeasible":
        return -_INF, None
    return -res.fun, res.x


def _pwa_intervals(op: PwaSubdiff):
    """Cells of a one-dimensional subdifferential as ``[lo, hi]`` intervals."""
    cache = getattr(op, "_interval_cache", None)
    if cache is None:
        cells = op.nonempty_cells()
        lo = np.array([-_cell_sup(op, j, [-1.0])[0] for j in cells])
        hi = np.array([_cell_sup(op, j, [1.0])[0] for j in cells])
        cache = (np.array(cells, dtype=int), lo, hi)
        op._interval_cache = cache
    return cache


def _phi_pwa(op: PwaSubdiff, X, XS):
    """Batched ``Phi`` plus maximising graph points ``(s, a_j)``."""
    X, XS = np.atleast_2d(X), np.atleast_2d(XS)
    N, n = X.shape
    a = op.slopes
    if n == 1:
        cells, lo, hi = _pwa_intervals(op)
        w = XS[:, 0][:, None] - a[cells, 0][None, :]
        w = np.where(np.abs(w) <= 1e-12 * np.maximum(1.0, np.abs(XS)), 0.0, w)
        with np.errstate(invalid="ignore"):
            sig = np.where(w > 0, w * hi, np.where(w < 0, w * lo, 0.0))
        sig = np.where(np.isnan(sig), 0.0, sig)
        vals = X @ a[cells].T + sig
        best = np.argmax(vals, axis=1)
        out = vals[np.arange(N), best]
        wb = w[np.arange(N), best]
        s = np.where(wb > 0, hi[best], np.where(wb < 0, lo[best], np.clip(0.0, lo[best], hi[best])))
        ms = np.stack([s], axis=1)
        return out, ms, a[cells[best]]
    out = np.empty(N)
    ms = np.zeros((N, n))
    mstars = np.zeros((N, n))
    for i in range(N):
        best = -_INF
        for j in op.nonempty_cells():
            sig, s = _cell_sup(op, j, XS[i] - a[j])
            val = a[j] @ X[i] + sig
            if val > best:
                best = val
                if s is not None:
                    ms[i], mstars[i] = s, a[j]
        out[i] = best
    return out, ms, mstars


def _phistar_pwa_lp(op: PwaSubdiff):
    """Constraint data of the conjugate LP in the variables ``(mu, v_1..v_J)``."""
    cells = op.nonempty_cells()
    J, n = len(cells), op.dim
    a = op.slopes[cells]
    nv = J + J * n
    c = np.concatenate([np.zeros(J), a.ravel()])
    rows, rhs = [], []
    for jj, j in enumerate(cells):
        G, h = op.cell_constraints(j)
        for k in range(op.n_pieces):
            if k == j:
                continue
            row = np.zeros(nv)
            row[J + jj * n:J + (jj + 1) * n] = G[k]
            row[jj] = -h[k]
            rows.append(row)
            rhs.append(0.0)
    A_ub = np.array(rows) if rows else np.zeros((0, nv))
    b_ub = np.array(rhs)
    A_eq = np.zeros((1 + 2 * n, nv))
    A_eq[0, :J] = 1.0
    A_eq[1:1 + n, :J] = a.T
    for jj in range(J):
        A_eq[1 + n:, J + jj * n:J + (jj + 1) * n] = np.eye(n)
    free = np.concatenate([np.zeros(J, bool), np.ones(J * n, bool)])
    return c, A_ub, b_ub, A_eq, free, J


def _phistar_pwa(op: PwaSubdiff, y1, y2):
    c, A_ub, b_ub, A_eq, free, J = _phistar_pwa_lp(op)
    b_eq = np.concatenate([[1.0], y1, y2])
    res = linprog(c, A_ub, b_ub, A_eq, b_eq, free=free)
    if res.status == "infeasible":
        return _INF, None
    if res.status == "unbounded":
        raise SolverError("conjugate LP unbounded below; the slopes do not define a proper function")
    n = op.dim
    return float(res.fun), {"mu": res.x[:J], "v": res.x[J:].reshape(J, n)}


# ---------------------------------------------------------------------------
# batched dispatch


def _phi_batch(op, X, XS):
    """``(values, m_x, m_xstar)``; the maximiser rows are meaningless where the value is inf."""
    if isinstance(op, FiniteGraph):
        vals, idx = _phi_finite(op, X, XS)
        return vals, op.xs[idx], op.xstars[idx]
    if isinstance(op, LinearOp):
        vals, s = _phi_linear(op, np.atleast_2d(X), np.atleast_2d(XS))
        return vals, s, s @ op.matrix.T
    if isinstance(op, PwaSubdiff):
        return _phi_pwa(op, X, XS)
    raise UnsupportedError(f"unknown operator type {type(op).__name__}")


def _phistar_batch(op, Y1, Y2):
    Y1, Y2 = np.atleast_2d(Y1), np.atleast_2d(Y2)
    if isinstance(op, LinearOp):
        return _phistar_linear(op, Y1, Y2)
    if isinstance(op, FiniteGraph):
        return np.array([_phistar_finite(op, a, b)[0] for a, b in zip(Y1, Y2)])
    if isinstance(op, PwaSubdiff):
        return np.array([_phistar_pwa(op, a, b)[0] for a, b in zip(Y1, Y2)])
    raise UnsupportedError(f"unknown operator type {type(op).__name__}")


def _rowdot(a, b):
    return np.sum(np.atleast_2d(a) * np.atleast_2d(b), axis=-1)


def _scalar_tv(vals, witness=None, warning=None):
    v = float(np.asarray(vals).ravel()[0])
    return TransformValue(v, witness if math.isfinite(v) else None, True, warning)


# ---------------------------------------------------------------------------
# public transforms


def fitzpatrick(space: Space, op: Operator, b: PDPoint) -> TransformValue:
    """``Phi(b) = sup_{m in M} [<b, L m> - q(m)]``; witness is the maximising ``m``."""
    _check(space, op, b)
    vals, mx, mxs = _phi_batch(op, b.x, b.xstar)
    return _scalar_tv(vals, PDPoint(mx[0], mxs[0]))


def p_transform(space: Space, op: Operator, b: PDPoint) -> TransformValue:
    """``P(b) = Phi(b) - q(b) = -inf_{m in M} q(m - b)``.

    A negative value can only arise for a non-maximal set; it is returned as
    computed with a warning attached.
    """
    tv = fitzpatrick(space, op, b)
    val = tv.value - q(b) if tv.finite else _INF
    warn = None
    if val < 0.0:
        warn = "negative P value: the set is not maximally monotone"
    return TransformValue(val, tv.witness, True, warn)


def fitzpatrick_conjugate(space: Space, op: Operator, bstar: DualPoint) -> TransformValue:
    """``Phi*(b*)``; ``+inf`` outside its domain.

    Finite graphs return the optimal simplex weights as witness, subdifferentials
    the LP variables ``{"mu", "v"}``, linear maps the point ``y**``.
    """
    _check(space, op, bstar)
    y1, y2 = bstar.ystar, bstar.ystarstar
    if isinstance(op, FiniteGraph):
        val, lam = _phistar_finite(op, y1, y2)
        return TransformValue(val, lam)
    if isinstance(op, LinearOp):
        val = float(_phistar_linear(op, y1, y2)[0])
        return TransformValue(val, y2.copy() if math.isfinite(val) else None)
    if isinstance(op, PwaSubdiff):
        val, wit = _phistar_pwa(op, y1, y2)
        return TransformValue(val, wit)
    raise UnsupportedError(f"unknown operator type {type(op).__name__}")


def f_transform(space: Space, op: Operator, bstar: DualPoint) -> TransformValue:
    """``F(b*) = Phi*(b*) - q~(b*)``."""
    tv = fitzpatrick_conjugate(space, op, bstar)
    val = tv.value - qt(bstar) if tv.finite else _INF
    return TransformValue(val, tv.witness, True)


def g_transform(space: Space, op: Operator, bstar: DualPoint) -> TransformValue:
    """``G(b*) = -inf_{m in M} q~(L m - b*)``; witness is the minimising ``m``.

    An unbounded inner infimum is reported as ``+inf``.
    """
    _check(space, op, bstar)
    vals, mx, mxs = _phi_batch(op, bstar.ystarstar, bstar.ystar)
    val = float(vals[0])
    val = val - qt(bstar) if math.isfinite(val) else _INF
    return TransformValue(val, PDPoint(mx[0], mxs[0]) if math.isfinite(val) else None)


def evaluate_transform(space: Space, op: Operator, which: str, point) -> TransformValue:
    """Dispatch by CLI name: ``P``/``Phi`` take a :class:`PDPoint`, ``F``/``G``/``PhiStar`` a :class:`DualPoint`."""
    table = {"P": p_transform, "Phi": fitzpatrick, "F": f_transform, "G": g_transform,
             "PhiStar": fitzpatrick_conjugate}
    if which not in table:
        raise ContractError(f"unknown transform {which!r}; expected one of {TRANSFORM_NAMES}")
    want = PDPoint if which in ("P", "Phi") else DualPoint
    if not isinstance(point, want):
        raise ContractError(f"transform {which} takes a {want.__name__}")
    return table[which](space, op, point)


@dataclass
class GossezMembership:
    bstar: DualPoint
    g_value: TransformValue
    member: bool


def gossez_membership(space: Space, op: Operator, bstar: DualPoint,
                      tol: float = GOSSEZ_TOL) -> GossezMembership:
    """``b*`` belongs to the Gossez extension iff ``G(b*) <= 0`` (up to ``tol``)."""
    g = g_transform(space, op, bstar)
    return GossezMembership(bstar, g, bool(g.value <= tol))


# ---------------------------------------------------------------------------
# batched evaluation of named functions on stacked vectors


_ALIASES = {
    "P": "P", "P_M": "P", "F": "F", "F_M": "F", "G": "G", "G_M": "G",
    "q": "q", "r": "r", "qt": "qt", "q~": "qt", "q̃": "qt", "rt": "rt", "r~": "rt", "r̃": "rt",
}
_DOMAIN = {"P": "B", "q": "B", "r": "B", "F": "B*", "G": "B*", "qt": "B*", "rt": "B*"}
_TRANSFORMS = {"P", "F", "G"}
_METHODS = ("exact_finite", "convex_qp", "grid_refine")
# pairs {transform, form} whose inf-convolution objective is convex
_CONVEX_PAIRS = {frozenset(p) for p in (("P", "q"), ("P", "r"), ("F", "qt"), ("F", "rt"),
                                        ("G", "qt"), ("G", "rt"))}


def _canon(name):
    try:
        return _ALIASES[name]
    except KeyError:
        raise ContractError(f"unknown function name {name!r}") from None


def _eval_batch(space: Space, op, name, V):
    """Values of the named function at the rows of ``V`` (shape ``(N, 2n)``)."""
    n = space.dim
    V = np.atleast_2d(V)
    a, b = V[:, :n], V[:, n:]
    if name == "q":
        return _rowdot(a, b)
    if name == "qt":
        return _rowdot(a, b)
    if name == "r":
        return np.atleast_1d(r(space, PDPoint(a, b)))
    if name == "rt":
        return np.atleast_1d(rt(space, DualPoint(a, b)))
    if name == "P":
        vals = _phi_batch(op, a, b)[0]
        return np.where(np.isfinite(vals), vals - _rowdot(a, b), _INF)
    if name == "G":
        vals = _phi_batch(op, b, a)[0]
        return np.where(np.isfinite(vals), vals - _rowdot(a, b), _INF)
    if name == "F":
        vals = _phistar_batch(op, a, b)
        return np.where(np.isfinite(vals), vals - _rowdot(a, b), _INF)
    raise ContractError(f"unknown function name {name!r}")


def _make_point(domain, v, n):
    return PDPoint.from_vector(v, n) if domain == "B" else DualPoint.from_vector(v, n)


# ---------------------------------------------------------------------------
# inf-convolution


@dataclass(frozen=True)
class InfConvSpec:
    """``(f [] g)(x) = inf_y [f(y) + g(x - y)]`` with a solution method.

    ``f`` and ``g`` name ``P``, ``F``, ``G`` (which need ``op``) or the forms
    ``q``, ``qt``, ``r``, ``rt``; both must live on the same space.
    ``convex_qp`` is accepted only for a transform paired with a form of its
    own space, the combinations where the objective is convex.
    """

    f: str
    g: str
    method: str = "grid_refine"
    op: Optional[Operator] = None

    def __post_init__(self):
        f, g = _canon(self.f), _canon(self.g)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)
        if _DOMAIN[f] != _DOMAIN[g]:
            raise ContractError(f"{f} and {g} live on different spaces")
        if self.method not in _METHODS:
            raise ContractError(f"method must be one of {_METHODS}, got {self.method!r}")
        if (f in _TRANSFORMS or g in _TRANSFORMS) and self.op is None:
            raise ContractError("transforms need an operator")
        if self.method == "convex_qp" and frozenset((f, g)) not in _CONVEX_PAIRS:
            raise ContractError(f"{f} [] {g} is not a convex problem; use grid_refine")

    @property
    def domain(self) -> str:
        return _DOMAIN[self.f]


def _phi_reg_finite_primal(space: Space, op: FiniteGraph, c: PDPoint):
    """``min_b Phi(b) + 0.5||c - b||^2 - <b, L c>`` for a finite graph (epigraph SLSQP).

    Returns ``(value, b)``.
    """
    n = space.dim
    cv = c.as_vector()
    lc = _swap(cv, n)
    W = np.hstack([op.xstars, op.xs])  # <b, L m_j> = W_j . b
    qv = op.qvals

    def jgrad(u):
        return np.concatenate([duality_map(space, u[:n], "primal"),
                               duality_map(space, u[n:], "dual")])

    def half_sq(u):
        return 0.5 * (norm(space, u[:n], "primal") ** 2 + norm(space, u[n:], "dual") ** 2)

    def obj(z):
        b, t = z[:-1], z[-1]
        return t + half_sq(cv - b) - b @ lc

    def grad(z):
        b = z[:-1]
        return np.concatenate([-jgrad(cv - b) - lc, [1.0]])

    cons = {"type": "ineq", "fun": lambda z: z[-1] - (W @ z[:-1] - qv),
            "jac": lambda z: np.hstack([-W, np.ones((op.k, 1))])}
    # coarse start: the best of a few candidates
    starts = [cv, cv + lc, np.zeros(2 * n)] + [np.concatenate([x, xs]) for x, xs in zip(op.xs, op.xstars)]
    best = None
    for b0 in starts:
        z0 = np.concatenate([b0, [np.max(W @ b0 - qv)]])
        val = obj(z0)
        if best is None or val < best[0]:
            best = (val, z0)
    z = best[1]
    for _ in range(3):
        sol = optimize.minimize(obj, z, jac=grad, constraints=[cons], method="SLSQP",
                                options={"ftol": 1e-15, "maxiter": 1000})
        z = sol.x
        z[-1] = np.max(W @ z[:-1] - qv)
    return float(obj(z)), z[:-1]


def _phistar_reg_finite(space: Space, op: FiniteGraph, zv):
    """``min_lam sum lam_j q_j - <z, L~ W^T lam> + 0.5||z - W^T lam||^2`` over the simplex."""
    n = space.dim
    W = np.hstack([op.xstars, op.xs])
    sz = _swap(zv, n)
    if space.p == 2.0:
        H = W @ W.T
        g = op.qvals - W @ sz - W @ zv
        lam, val = simplex_qp(H, g)
        return float(val + 0.5 * zv @ zv), lam

    def fun(lam):
        d = lam @ W
        u = zv - d
        ju = np.concatenate([duality_map(space, u[:n], "dual"), duality_map(space, u[n:], "primal")])
        val = lam @ op.qvals - sz @ d + 0.5 * (u[:n] @ ju[:n] + u[n:] @ ju[n:])
        return val, op.qvals - W @ sz - W @ ju

    lam, val = minimize_on_simplex(fun, np.full(op.k, 1.0 / op.k))
    return float(val), lam


def _phi_reg_linear(space: Space, op: LinearOp, c: PDPoint):
    """``min_b Phi(b) + 0.5||c - b||^2 - <b, L c>`` over the chart ``b = (x, -A^T x + S z)``."""
    n = space.dim
    A = op.matrix
    S = op.sym
    T = np.block([[np.eye(n), np.zeros((n, n))], [-A.T, S]])
    D = np.zeros((2 * n, 2 * n))
    D[n:, n:] = 0.5 * S
    cv = c.as_vector()
    lc = _swap(cv, n)
    if space.p == 2.0:
        H = D + T.T @ T
        h = -T.T @ cv - T.T @ lc
        val, w = quadratic_inf(H, h, 0.5 * cv @ cv)
        return val, (None if w is None else T @ w)

    def fun(w):
        b = T @ w
        u = cv - b
        ju = np.concatenate([duality_map(space, u[:n], "primal"), duality_map(space, u[n:], "dual")])
        val = 0.5 * w @ D @ w + 0.5 * (u @ ju) - b @ lc
        return val, D @ w + T.T @ (-ju - lc)

    w0 = np.concatenate([c.x, np.zeros(n)])
    w, val = minimize_smooth(fun, w0)
    return val, T @ w


def _phistar_reg_linear(space: Space, op: LinearOp, zv):
    """``min_d Phi*(d) - <z, L~ d> + 0.5||z - d||^2`` over the chart ``d = (A s, s)``."""
    n = space.dim
    A = op.matrix
    M = np.vstack([A, np.eye(n)])
    sz = _swap(zv, n)
    if space.p == 2.0:
        H = 2.0 * op.sym + M.T @ M
        h = -M.T @ (sz + zv)
        val, s = quadratic_inf(H, h, 0.5 * zv @ zv)
        return val, (None if s is None else M @ s)

    def fun(s):
        d = M @ s
        u = zv - d
        ju = np.concatenate([duality_map(space, u[:n], "dual"), duality_map(space, u[n:], "primal")])
        val = s @ A @ s - sz @ d + 0.5 * (u @ ju)
        return val, 2.0 * op.sym @ s + M.T @ (-sz - ju)

    s, val = minimize_smooth(fun, zv[n:])
    return val, M @ s


def _phi_reg_pwa(space: Space, op: PwaSubdiff, c: PDPoint):
    """Same objective as :func:`_phi_reg_finite_primal` for a subdifferential.

    ``sigma_{C_j}(w) = min {h_j . nu : G_j^T nu = w, nu >= 0}`` turns the
    epigraph of ``Phi`` into linear constraints in ``(b, t, nu)``.
    """
    n = space.dim
    cells = op.nonempty_cells()
    J = op.n_pieces
    a = op.slopes
    cv = c.as_vector()
    lc = _swap(cv, n)
    nb = 2 * n
    nvar = nb + 1 + len(cells) * J

    def jgrad(u):
        return np.concatenate([duality_map(space, u[:n], "primal"), duality_map(space, u[n:], "dual")])

    def obj(z):
        u = cv - z[:nb]
        return z[nb] + 0.5 * (u @ jgrad(u)) - z[:nb] @ lc

    def grad(z):
        g = np.zeros(nvar)
        g[:nb] = -jgrad(cv - z[:nb]) - lc
        g[nb] = 1.0
        return g

    eq_rows, eq_rhs, in_rows, in_rhs = [], [], [], []
    for jj, j in enumerate(cells):
        G, h = op.cell_constraints(j)
        off = nb + 1 + jj * J
        for i in range(n):
            row = np.zeros(nvar)
            row[off:off + J] = G[:, i]
            row[n + i] = -1.0
            eq_rows.append(row)
            eq_rhs.append(-a[j, i])
        row = np.zeros(nvar)
        row[nb] = 1.0
        row[:n] = -a[j]
        row[off:off + J] = -h
        in_rows.append(row)
        in_rhs.append(0.0)
    Aeq, beq = np.array(eq_rows), np.array(eq_rhs)
    Ain, bin_ = np.array(in_rows), np.array(in_rhs)
    lower = np.full(nvar, -np.inf)
    lower[nb + 1:] = 0.0
    # feasible start: b = (c.x, a_j) for a cell j with a bounded interior point
    tv = fitzpatrick(space, op, PDPoint(c.x, op.slopes[cells[0]]))
    z0 = np.zeros(nvar)
    z0[:n] = c.x
    z0[n:nb] = op.slopes[cells[0]]
    z0[nb] = tv.value + 1.0
    cons = [{"type": "eq", "fun": lambda z: Aeq @ z - beq, "jac": lambda z: Aeq},
            {"type": "ineq", "fun": lambda z: Ain @ z - bin_, "jac": lambda z: Ain}]
    bounds = optimize.Bounds(lower, np.full(nvar, np.inf))
    z = z0
    for _ in range(3):
        sol = optimize.minimize(obj, z, jac=grad, constraints=cons, bounds=bounds, method="SLSQP",
                                options={"ftol": 1e-15, "maxiter": 2000})
        z = sol.x
    b = z[:nb]
    phi = fitzpatrick(space, op, PDPoint.from_vector(b, n)).value
    if not math.isfinite(phi):
        # b sits on the domain boundary up to rounding; use the LP certificate
        # sigma_{C_j}(x* - a_j) <= h_j . nu_j instead
        nus = z[nb + 1:].reshape(len(cells), J)
        eq_gap = np.abs(Aeq @ z - beq).max(initial=0.0)
        if eq_gap > 1e-8:
            raise SolverError(f"epigraph solve left an equality gap of {eq_gap:.2e}")
        phi = max(a[j] @ b[:n] + op.cell_constraints(j)[1] @ nus[jj] for jj, j in enumerate(cells))
    u = cv - b
    return float(phi + 0.5 * (u @ jgrad(u)) - b @ lc), b


def _phistar_reg_pwa(space: Space, op: PwaSubdiff, zv):
    """``min_d Phi*(d) - <z, L~ d> + 0.5||z - d||^2`` with ``Phi*`` in its LP form."""
    n = space.dim
    c, A_ub, b_ub, A_eq, free, J = _phistar_pwa_lp(op)
    nvar = c.size
    sz = _swap(zv, n)
    # d = (sum mu_j a_j, sum v_j) = D @ var
    D = A_eq[1:]

    def ju_of(u):
        return np.concatenate([duality_map(space, u[:n], "dual"), duality_map(space, u[n:], "primal")])

    def obj(z):
        d = D @ z
        u = zv - d
        return c @ z - sz @ d + 0.5 * (u @ ju_of(u))

    def grad(z):
        u = zv - D @ z
        return c + D.T @ (-sz - ju_of(u))

    lower = np.where(free, -np.inf, 0.0)
    cons = [{"type": "eq", "fun": lambda z: z[:J].sum() - 1.0,
             "jac": lambda z: np.concatenate([np.ones(J), np.zeros(nvar - J)])}]
    if A_ub.shape[0]:
        cons.append({"type": "ineq", "fun": lambda z: -(A_ub @ z), "jac": lambda z: -A_ub})
    z = np.zeros(nvar)
    z[:J] = 1.0 / J
    for _ in range(3):
        sol = optimize.minimize(obj, z, jac=grad, constraints=cons, method="SLSQP",
                                bounds=optimize.Bounds(lower, np.full(nvar, np.inf)),
                                options={"ftol": 1e-15, "maxiter": 2000})
        z = sol.x
    d = D @ z
    phis = fitzpatrick_conjugate(space, op, DualPoint.from_vector(d, n)).value
    u = zv - d
    return float(phis - sz @ d + 0.5 * (u @ ju_of(u))), d


def _convex_qp(space: Space, spec: InfConvSpec, point):
    """Exact solves for a transform paired with a form of its own space."""
    op = spec.op
    n = space.dim
    transform = spec.f if spec.f in _TRANSFORMS else spec.g
    form = spec.g if transform == spec.f else spec.f
    regular = form in ("r", "rt")
    if transform == "G":
        # G(d) + g(z - d) = P(L~d) + g'(L~z - L~d): reduce to the P problem at L~z
        form_p = "r" if regular else "q"
        val = _convex_qp(space, InfConvSpec("P", form_p, "convex_qp", op), iso_Lt(point))
        wit = val.witness
        if isinstance(wit, PDPoint):
            wit = iso_L(wit)
        return TransformValue(val.value, wit, val.exact, val.warning)

    if not regular:
        # inf_b Phi(b) - <b, L c> = -Phi*(L c) and inf_d Phi*(d) - <L~z, d> = -Phi(L~z)
        if transform == "P":
            f = f_transform(space, op, iso_L(point)).value
            return TransformValue(-f if math.isfinite(f) else -_INF, None, True)
        g = g_transform(space, op, point).value
        return TransformValue(-g if math.isfinite(g) else -_INF, None, True)

    if transform == "P":
        c = point
        if isinstance(op, FiniteGraph):
            val, b = _phi_reg_finite_primal(space, op, c)
        elif isinstance(op, LinearOp):
            val, b = _phi_reg_linear(space, op, c)
        elif isinstance(op, PwaSubdiff):
            val, b = _phi_reg_pwa(space, op, c)
        else:
            raise UnsupportedError(f"unknown operator type {type(op).__name__}")
        wit = None if b is None else PDPoint.from_vector(b, n)
        return TransformValue(val + q(c) if math.isfinite(val) else val, wit, True)

    zv = point.as_vector()
    if isinstance(op, FiniteGraph):
        val, lam = _phistar_reg_finite(space, op, zv)
        d = lam @ np.hstack([op.xstars, op.xs])
    elif isinstance(op, LinearOp):
        val, d = _phistar_reg_linear(space, op, zv)
    elif isinstance(op, PwaSubdiff):
        val, d = _phistar_reg_pwa(space, op, zv)
    else:
        raise UnsupportedError(f"unknown operator type {type(op).__name__}")
    wit = None if d is None else DualPoint.from_vector(d, n)
    return TransformValue(val + qt(point) if math.isfinite(val) else val, wit, True)


def _default_candidates(space, spec, point):
    n = space.dim
    x = point.as_vector()
    cands = [np.zeros(2 * n), x, 0.5 * x]
    op = spec.op
    if isinstance(op, FiniteGraph):
        for m in np.hstack([op.xs, op.xstars]):
            cands.append(m if spec.domain == "B" else _swap(m, n))
    return np.array(cands)


def _exact_finite(space, spec, point, candidates=None):
    n = space.dim
    x = point.as_vector()
    Y = _default_candidates(space, spec, point) if candidates is None else np.atleast_2d(
        [c.as_vector() if hasattr(c, "as_vector") else np.asarray(c, float) for c in candidates])
    vals = _eval_batch(space, spec.op, spec.f, Y) + _eval_batch(space, spec.op, spec.g, x - Y)
    i = int(np.argmin(vals))
    return TransformValue(float(vals[i]), _make_point(spec.domain, Y[i], n), False,
                          "upper bound: minimum over a finite candidate set")


class _Chart:
    """Parametrisation ``u -> y`` of the effective domain of the searched function."""

    def __init__(self, dim, to_point, value=None, center=None):
        self.dim = dim
        self.to_point = to_point
        self.value = value  # optional closed-form value of f along the chart
        self.center = np.zeros(dim) if center is None else center


def _chart_for(space, name, op):
    n = space.dim
    if name == "F" and isinstance(op, LinearOp):
        A = op.matrix
        # F = 0 on {(A s, s)}
        return _Chart(n, lambda U: np.hstack([U @ A.T, U]), lambda U: np.zeros(len(U)))
    if name == "F" and isinstance(op, FiniteGraph) and op.k <= 5:
        W = np.hstack([op.xstars, op.xs])
        k = op.k

        def lam_of(U):
            return np.hstack([U, 1.0 - U.sum(axis=1, keepdims=True)])

        def value(U):
            lam = lam_of(U)
            d = lam @ W
            out = lam @ op.qvals - _rowdot(d[:, :n], d[:, n:])
            return np.where(np.any(lam < -1e-15, axis=1), _INF, out)

        return _Chart(k - 1, lambda U: lam_of(U) @ W, value, np.full(k - 1, 1.0 / k))
    if name in ("P", "G") and isinstance(op, LinearOp):
        A, S = op.matrix, op.sym

        def to_point(U):
            x, z = U[:, :n], U[:, n:]
            other = -x @ A + z @ S
            return np.hstack([x, other]) if name == "P" else np.hstack([other, x])

        def value(U):
            x, z = U[:, :n], U[:, n:]
            other = -x @ A + z @ S
            return 0.25 * _rowdot(z, z @ S) - _rowdot(x, other)

        return _Chart(2 * n, to_point, value)
    return _Chart(2 * n, lambda U: U, None)


def _grid_refine(space, spec, point, grid=None):
    n = space.dim
    grid = RefineGrid.coerce(grid)
    x = point.as_vector()
    f, g = spec.f, spec.g
    if f not in _TRANSFORMS and g in _TRANSFORMS:
        f, g = g, f  # [] is symmetric; search over the transform's argument
    chart = _chart_for(space, f, spec.op)
    uses_lp = chart.value is None and f in _TRANSFORMS and not (
        isinstance(spec.op, FiniteGraph) or (isinstance(spec.op, PwaSubdiff) and n == 1 and f != "F"))
    if uses_lp and chart.dim > 2:
        grid = RefineGrid(grid.radius, min(grid.resolution, 5), min(grid.levels, 12), grid.shrink)
    radius = max(grid.radius, 2.0 * float(np.abs(x).max(initial=0.0)))
    grid = RefineGrid(radius, grid.resolution, grid.levels, grid.shrink)

    def fun(U):
        with np.errstate(over="ignore", invalid="ignore"):
            Y = chart.to_point(U)
            fv = chart.value(U) if chart.value is not None else _eval_batch(space, spec.op, f, Y)
            gv = _eval_batch(space, spec.op, g, x - Y)
            out = fv + gv
        return np.where(np.isnan(out), _INF, out)

    res = grid_minimize(fun, chart.center, grid)
    warn = None
    if res.on_boundary:
        warn = "grid search ended on the box boundary; the infimum may lie outside"
    far = 1e6 * (1.0 + grid.radius)
    if res.value == -_INF or (res.argmin is not None and np.abs(res.argmin).max(initial=0.0) > far):
        return TransformValue(-_INF, None, False, "objective unbounded below along the search")
    if not math.isfinite(res.value):
        warn = "grid search found no point of the effective domain"
        return TransformValue(_INF, None, False, warn)
    wit = _make_point(spec.domain, chart.to_point(res.argmin[None])[0], n)
    return TransformValue(res.value, wit, False, warn)


def inf_convolution(space: Space, spec: InfConvSpec, point, grid=None, candidates=None) -> TransformValue:
    """``(f [] g)(point)``.

    ``exact_finite`` minimises over a candidate set (graph points, ``0``,
    ``point`` and ``point/2`` by default) and so returns an upper bound;
    ``convex_qp`` solves the convex problem to tolerance; ``grid_refine``
    runs a zooming grid search with a local polish and is never exact.
    """
    want = PDPoint if spec.domain == "B" else DualPoint
    if not isinstance(point, want):
        raise ContractError(f"{spec.f} [] {spec.g} is evaluated at a {want.__name__}")
    if spec.op is not None:
        _check(space, spec.op, point)
    elif point.dim != space.dim:
        raise DimensionError("point and space dimensions differ")
    if spec.method == "exact_finite":
        return _exact_finite(space, spec, point, candidates)
    if spec.method == "convex_qp":
        return _convex_qp(space, spec, point)
    return _grid_refine(space, spec, point, grid)


# ---------------------------------------------------------------------------
# structure theorems


def verify_pmfmqt(space: Space, op: Operator, b: PDPoint, grid=None) -> dict:
    """Compare ``P(b)`` with ``-(F [] q~)(L b)``, the latter by grid search.

    The result is approximate: ``rhs`` is the negative of a grid upper bound.
    """
    _check(space, op, b)
    if space.dim > 2:
        raise UnsupportedError("grid-refined inf-convolution is limited to dim <= 2")
    lhs = p_transform(space, op, b)
    inner = inf_convolution(space, InfConvSpec("F", "qt", "grid_refine", op), iso_L(b), grid=grid)
    rhs = -inner.value
    if math.isinf(lhs.value) and math.isinf(rhs) and lhs.value == rhs:
        resid = 0.0
    else:
        resid = abs(lhs.value - rhs)
    return {"lhs": lhs.value, "rhs": rhs, "residual": resid, "witness_bstar": inner.witness,
            "exact": False, "warning": inner.warning}


def verify_exact_equality(space: Space, op: FiniteGraph, c: PDPoint) -> dict:
    """Compare ``(P [] r)(c)`` with ``-(F [] r~)(L c)`` on a finite graph at p = 2.

    ``lhs`` comes from a direct minimisation over ``b`` in ``B``; ``rhs`` from
    the simplex QP.  ``witness_value`` re-evaluates ``F(w) + r~(L c - w)`` at
    the QP witness with the independent conjugate LP.
    """
    _check(space, op, c)
    if not isinstance(op, FiniteGraph):
        raise UnsupportedError("exact-equality check is implemented for finite graphs")
    if space.p != 2.0:
        raise UnsupportedError("exact-equality check uses the Euclidean QP; p must be 2")
    val, b = _phi_reg_finite_primal(space, op, c)
    lhs = val + q(c)
    lc = iso_L(c)
    inner = inf_convolution(space, InfConvSpec("F", "rt", "convex_qp", op), lc)
    rhs = -inner.value
    w = inner.witness
    wval = f_transform(space, op, w).value + rt(space, lc - w)
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs), "witness_bstar": w,
            "witness_value": wval, "attain_residual": abs(wval - inner.value),
            "primal_witness": PDPoint.from_vector(b, space.dim)}


def fg_gap_probe(space: Space, op: Operator, n_samples: int = 50, seed: int = 0,
                 box: float = 2.0) -> dict:
    """Experimental: sampled comparison of ``G`` and ``F``; asserts nothing.

    Reports the largest ``|G - F|`` where both are finite and how often
    exactly one of them is infinite.
    """
    _check(space, op)
    rng = np.random.default_rng(seed)
    V = rng.uniform(-box, box, size=(n_samples, 2 * space.dim))
    Gv = _eval_batch(space, op, "G", V)
    Fv = _eval_batch(space, op, "F", V)
    both = np.isfinite(Gv) & np.isfinite(Fv)
    gap = np.abs(Gv[both] - Fv[both])
    return {"samples": int(n_samples), "both_finite": int(both.sum()),
            "max_abs_gap": float(gap.max()) if gap.size else None,
            "one_infinite": int((np.isfinite(Gv) ^ np.isfinite(Fv)).sum()),
            "experimental": True}
