"""Small convex solvers used by the transform engine.

* :func:`simplex_qp` -- ``min 0.5 lam^T H lam + g^T lam`` over the probability
  simplex (``H`` positive semidefinite), exact by active-set enumeration for
  small ``k`` and by projected gradient otherwise;
* :func:`minimize_on_simplex` -- projected gradient with Armijo backtracking for
  smooth convex objectives on the simplex;
* :func:`quadratic_inf` -- infimum of a convex quadratic, ``-inf`` when
  unbounded below;
* :func:`minimize_smooth` -- unconstrained smooth convex minimisation.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy import optimize

from .errors import SolverError

__all__ = ["project_simplex", "simplex_qp", "minimize_on_simplex", "quadratic_inf",
           "minimize_smooth", "ENUM_MAX_K"]

ENUM_MAX_K = 10


def project_simplex(v):
    """Euclidean projection of each row of ``v`` onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    flat = np.atleast_2d(v)
    k = flat.shape[1]
    u = -np.sort(-flat, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    idx = np.arange(1, k + 1)
    cond = u - css / idx > 0
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(flat.shape[0]), rho] / (rho + 1)
    out = np.maximum(flat - theta[:, None], 0.0)
    return out.reshape(v.shape)


def minimize_on_simplex(fun, lam0, max_iter=20000, tol=1e-14):
    """Projected gradient with backtracking; ``fun(lam) -> (value, grad)``."""
    lam = project_simplex(lam0)
    val, grad = fun(lam)
    step = 1.0
    for _ in range(max_iter):
        while True:
            cand = project_simplex(lam - step * grad)
            cval, cgrad = fun(cand)
            d = cand - lam
            if cval <= val + grad @ d + 0.5 / step * (d @ d) + 1e-15 * abs(val):
                break
            step *= 0.5
            if step < 1e-20:
                return lam, val
        if abs(val - cval) <= tol * max(1.0, abs(val)) and np.abs(d).max() < 1e-12:
            return cand, cval
        lam, val, grad = cand, cval, cgrad
        step *= 2.0
    return lam, val


def simplex_qp(H, g, enumerate_max=ENUM_MAX_K):
    """Minimise ``0.5 lam^T H lam + g^T lam`` over ``lam >= 0, sum(lam) = 1``.

    Returns ``(lam, value)``.  For ``k <= enumerate_max`` every support set is
    tried and a KKT point is accepted; convexity makes any KKT point optimal.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    k = g.size
    obj = lambda lam: 0.5 * lam @ H @ lam + g @ lam  # noqa: E731
    if k <= enumerate_max:
        best = None
        scale = max(1.0, np.abs(H).max(initial=0.0), np.abs(g).max(initial=0.0))
        for size in range(1, k + 1):
            for S in itertools.combinations(range(k), size):
                S = list(S)
                K = np.zeros((size + 1, size + 1))
                K[:size, :size] = H[np.ix_(S, S)]
                K[:size, size] = 1.0
                K[size, :size] = 1.0
                rhs = np.concatenate([-g[S], [1.0]])
                sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
                if np.linalg.norm(K @ sol - rhs) > 1e-9 * scale:
                    continue
                lamS, nu = sol[:size], sol[size]
                if lamS.min() < -1e-12:
                    continue
                lam = np.zeros(k)
                lam[S] = np.clip(lamS, 0.0, None)
                lam /= lam.sum()
                grad = H @ lam + g
                # stationarity: grad_j + nu >= 0 off the support
                if np.all(grad + nu >= -1e-9 * scale):
                    val = obj(lam)
                    if best is None or val < best[1]:
                        best = (lam, val)
            if best is not None:
                break
        if best is not None:
            return best
    lam, val = minimize_on_simplex(lambda l: (obj(l), H @ l + g), np.full(k, 1.0 / k))
    return lam, val


def quadratic_inf(H, h, c0=0.0, tol=1e-9):
    """``inf_w 0.5 w^T H w + h^T w + c0`` for symmetric PSD ``H``.

    Returns ``(value, w)``; ``(-inf, None)`` when ``h`` has a component in the
    null space of ``H``.
    """
    H = 0.5 * (np.asarray(H, dtype=float) + np.asarray(H, dtype=float).T)
    h = np.asarray(h, dtype=float)
    w_eig, V = np.linalg.eigh(H)
    cut = tol * max(1.0, np.abs(w_eig).max(initial=0.0))
    null = w_eig <= cut
    hv = V.T @ h
    if np.any(np.abs(hv[null]) > tol * max(1.0, np.linalg.norm(h))):
        return -np.inf, None
    coef = np.zeros_like(hv)
    coef[~null] = -hv[~null] / w_eig[~null]
    w = V @ coef
    return float(0.5 * w @ H @ w + h @ w + c0), w


def minimize_smooth(fun, x0, gtol=1e-13):
    """L-BFGS on a smooth convex ``fun(x) -> (value, grad)``."""
    sol = optimize.minimize(fun, np.asarray(x0, dtype=float), jac=True, method="L-BFGS-B",
                            options={"maxiter": 20000, "ftol": 1e-300, "gtol": gtol, "maxcor": 30})
    if not np.all(np.isfinite(sol.x)):
        raise SolverError("smooth minimisation diverged")
    return sol.x, float(sol.fun)
