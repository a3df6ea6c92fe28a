"""Finite truncations of the tail operator ``(T x)_i = sum_{k >= i} x_k``.

In infinite dimensions this operator separates several monotonicity classes;
a finite truncation cannot show that behaviour, since every maximally
monotone set in finite dimensions is of type (NI).  The checks here verify
the algebraic inequalities behind the infinite-dimensional argument.  Sums
are carried out in exact rational arithmetic, so the identities hold bit for
bit after rounding.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ContractError
from .operators import FiniteGraph, LinearOp, is_monotone
from .spaces import Space

__all__ = [
    "TRUNCATION_WARNING", "TailInstance", "tail_matrix", "tail_instance", "tail_identity_check",
    "tail_ni_witness_check", "tailgex_structure_check",
]

TRUNCATION_WARNING = ("finite truncation: every maximally monotone set in finite dimensions is of "
                      "type (NI), so only the algebraic inequalities are checked")
IDENTITY_TOL = 1e-12


def tail_matrix(n: int) -> np.ndarray:
    """Upper-triangular matrix of ones, so that ``(T x)_i = sum_{k >= i} x_k``."""
    if int(n) != n or n < 1:
        raise ContractError(f"n must be a positive integer, got {n!r}")
    return np.triu(np.ones((int(n), int(n))))


@dataclass
class TailInstance:
    n: int
    T_matrix: np.ndarray
    U_matrix: np.ndarray


def tail_instance(n: int) -> TailInstance:
    """``T`` on the l1 side and ``U`` on the c0 side coincide as matrices once truncated."""
    T = tail_matrix(n)
    return TailInstance(int(n), T, T.copy())


def _exact(x):
    x = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ContractError("x must be finite")
    return [Fraction(v) for v in x.tolist()]


def _tails(xs):
    out = [Fraction(0)] * len(xs)
    acc = Fraction(0)
    for i in range(len(xs) - 1, -1, -1):
        acc += xs[i]
        out[i] = acc
    return out


def _pair_tail(xs):
    """Exact ``<x, T x>`` and ``sigma = sum x``."""
    tails = _tails(xs)
    return sum((a * t for a, t in zip(xs, tails)), Fraction(0)), (tails[0] if xs else Fraction(0))


def tail_identity_check(x) -> dict:
    """``<x, T x> = ||x||^2 / 2 + sigma^2 / 2`` with ``sigma = sum x``."""
    xs = _exact(x)
    lhs, sigma = _pair_tail(xs)
    rhs = sum((a * a for a in xs), Fraction(0)) / 2 + sigma * sigma / 2
    lhs_f, rhs_f = float(lhs), float(rhs)
    return {"lhs": lhs_f, "rhs": rhs_f, "sigma": float(sigma),
            "equal": bool(abs(lhs_f - rhs_f) <= IDENTITY_TOL),
            "half_sigma_sq_bound": bool(lhs >= sigma * sigma / 2)}


def tail_ni_witness_check(x) -> dict:
    """Formal witness value ``<x, T x> - sigma + 1``.

    The two limit terms of the infinite-dimensional argument are replaced by
    their stated values 0 and 1; no Banach limit is constructed.  The value
    equals ``||x||^2 / 2 + (sigma - 1)^2 / 2 + 1/2``.
    """
    xs = _exact(x)
    pair, sigma = _pair_tail(xs)
    value = pair - sigma + 1
    bound = (sigma - 1) ** 2 / 2 + Fraction(1, 2)
    return {"value": float(value), "sigma": float(sigma), "bound": float(bound),
            "bound_ok": bool(float(value) >= 0.5 - IDENTITY_TOL),
            "sharp_bound_ok": bool(float(value) >= float(bound) - IDENTITY_TOL),
            "warning": TRUNCATION_WARNING}


def tailgex_structure_check(n: int, levels=(-1.0, 0.0, 1.0)) -> dict:
    """Compare ``L(M)`` for ``M = {(U x, x)}`` with the graph ``{(x, T x)}`` on a grid of ``x``.

    Also checks that ``M``, the graph of ``U^{-1}``, is monotone, both on the
    sampled points and through the symmetric part of ``U^{-1}``.
    """
    inst = tail_instance(n)
    U, T = inst.U_matrix, inst.T_matrix
    X = np.array(list(itertools.product(levels, repeat=inst.n)), dtype=float)
    M = [(tuple(U @ x), tuple(x)) for x in X]
    LM = {(xs, ux) for ux, xs in M}  # L(a, a*) = (a*, a)
    GT = {(tuple(x), tuple(T @ x)) for x in X}
    space = Space(inst.n)
    pts = FiniteGraph(np.array([m[0] for m in M]), np.array([m[1] for m in M]))
    sampled = is_monotone(space, pts)
    inverse = is_monotone(space, LinearOp(np.linalg.inv(U)))
    return {"n": inst.n, "grid_points": len(X), "lm_equals_gt": LM == GT,
            "monotone_sampled": bool(sampled.monotone), "monotone_inverse": bool(inverse.monotone),
            "warning": TRUNCATION_WARNING}
