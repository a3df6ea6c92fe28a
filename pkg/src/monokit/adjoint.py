"""Monotone linear subspaces of ``B`` and their adjoints in ``B*``.

The bracket ``[[(x, x*), (y*, y**)]] = <x, y*> - <x*, y**>`` defines
``V^A = {b* : [[a, b*]] = 0 for all a in V}``.  Subspaces are stored through
a basis; all tests reduce to small dense linear algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.linalg import null_space, orth

from .errors import ContractError, DimensionError, UnsupportedError
from .spaces import DualPoint, PDPoint, Space

__all__ = [
    "LinSubspace", "AdjointReport", "bracket", "adjoint_subspace", "double_adjoint",
    "subspace_monotone", "subspace_maximal_minty", "brezis_browder_check",
    "span_equal", "in_span", "random_monotone_subspace", "SUBSPACE_TOL",
]

SUBSPACE_TOL = 1e-10
RANK_TOL = 1e-9


def _rows(vectors: Sequence[Union[PDPoint, DualPoint]], dim: int) -> np.ndarray:
    if not vectors:
        return np.zeros((0, 2 * dim))
    return np.array([v.as_vector() for v in vectors], dtype=float)


def _rank(M) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > RANK_TOL * max(1.0, s.max(initial=0.0))))


class LinSubspace:
    """Span of linearly independent points of ``B`` (or of ``B*`` when ``side="dual"``)."""

    def __init__(self, basis: Sequence[Union[PDPoint, DualPoint]], dim: Optional[int] = None,
                 side: Optional[str] = None):
        basis = list(basis)
        if side is None:
            side = "dual" if basis and isinstance(basis[0], DualPoint) else "primal"
        if side not in ("primal", "dual"):
            raise ContractError(f"side must be 'primal' or 'dual', got {side!r}")
        kind = PDPoint if side == "primal" else DualPoint
        if any(not isinstance(b, kind) for b in basis):
            raise ContractError(f"{side} subspace basis must consist of {kind.__name__} objects")
        if dim is None:
            if not basis:
                raise DimensionError("the zero subspace needs an explicit ambient dim")
            dim = basis[0].dim
        if any(b.dim != dim for b in basis):
            raise DimensionError("basis vectors have inconsistent dimensions")
        M = _rows(basis, dim)
        if _rank(M) != len(basis):
            raise ContractError("basis vectors are linearly dependent")
        self.basis = basis
        self.dim = int(dim)
        self.side = side

    @property
    def dim_v(self) -> int:
        return len(self.basis)

    @property
    def matrix(self) -> np.ndarray:
        """Basis as rows of stacked ``2 dim`` vectors."""
        return _rows(self.basis, self.dim)

    @classmethod
    def from_matrix(cls, M, dim: int, side: str = "primal") -> "LinSubspace":
        M = np.atleast_2d(np.asarray(M, dtype=float)).reshape(-1, 2 * dim)
        kind = PDPoint if side == "primal" else DualPoint
        return cls([kind.from_vector(row, dim) for row in M], dim, side)

    def __repr__(self):
        return f"LinSubspace(dim_v={self.dim_v}, dim={self.dim}, side={self.side!r})"


def bracket(a: PDPoint, bstar: DualPoint):
    """``[[(x, x*), (y*, y**)]] = <x, y*> - <x*, y**>``."""
    if a.dim != bstar.dim:
        raise DimensionError("point and dual point have different dimensions")
    out = np.sum(a.x * bstar.ystar, axis=-1) - np.sum(a.xstar * bstar.ystarstar, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _bracket_rows(W: LinSubspace) -> np.ndarray:
    """Rows ``c`` with ``[[w, .]] = c . v`` on stacked vectors of the other side.

    For ``w = (x, x*)`` acting on ``(y*, y**)`` and for ``w = (y*, y**)``
    acting on ``(x, x*)`` the row is ``(first, -second)`` alike.
    """
    M = W.matrix
    n = W.dim
    return np.hstack([M[:, :n], -M[:, n:]])


def _annihilator(W: LinSubspace, side: str) -> LinSubspace:
    n = W.dim
    C = _bracket_rows(W)
    N = np.eye(2 * n) if C.shape[0] == 0 else null_space(C, rcond=RANK_TOL)
    return LinSubspace.from_matrix(N.T, n, side) if N.shape[1] else LinSubspace([], n, side)


def adjoint_subspace(space: Space, V: LinSubspace) -> LinSubspace:
    """Orthonormal basis of ``V^A`` in ``B*``; its dimension is ``2 dim - dim_v``."""
    if V.side != "primal":
        raise ContractError("adjoint_subspace expects a subspace of B")
    if V.dim != space.dim:
        raise DimensionError("subspace and space dimensions differ")
    return _annihilator(V, "dual")


def double_adjoint(space: Space, VA: LinSubspace) -> LinSubspace:
    """``{a in B : [[a, b*]] = 0 for all b* in V^A}``; recovers ``V``."""
    if VA.side != "dual":
        raise ContractError("double_adjoint expects a subspace of B*")
    # the bracket rows have the same shape on either side
    return _annihilator(VA, "primal")


def _form_matrix(n):
    Q = np.zeros((2 * n, 2 * n))
    Q[:n, n:] = 0.5 * np.eye(n)
    Q[n:, :n] = 0.5 * np.eye(n)
    return Q


def subspace_monotone(space: Space, W: LinSubspace, side: Optional[str] = None,
                      tol: float = SUBSPACE_TOL) -> bool:
    """``q`` (or ``q~``) is positive semidefinite on the span of ``W``.

    Both forms have the matrix ``Q = [[0, I/2], [I/2, 0]]`` in stacked
    coordinates; the test is the smallest eigenvalue of ``U^T Q U`` for an
    orthonormal basis ``U`` of the span.
    """
    side = W.side if side is None else side
    if side != W.side:
        raise ContractError(f"subspace lives on the {W.side} side, not {side}")
    if W.dim_v == 0:
        return True
    U = orth(W.matrix.T)
    lam = np.linalg.eigvalsh(U.T @ _form_matrix(W.dim) @ U)
    return bool(lam.min() >= -tol)


def subspace_maximal_minty(space: Space, W: LinSubspace) -> bool:
    """Minty test for a monotone subspace at p = 2: ``{x + x*}`` (or ``{y* + y**}``) spans ``R^dim``."""
    if space.p != 2.0:
        raise UnsupportedError("Minty maximality test requires p = 2")
    if not subspace_monotone(space, W):
        raise ContractError("Minty maximality test needs a monotone subspace")
    n = W.dim
    M = W.matrix
    return bool(_rank(M[:, :n] + M[:, n:]) == n)


@dataclass
class AdjointReport:
    vA_basis: List[DualPoint]
    v_monotone: bool
    vA_monotone: bool
    v_maximal: bool
    vA_maximal: bool
    consistent_qqthm: bool
    adjoint_maximal_ok: Optional[bool] = None


def brezis_browder_check(space: Space, V: LinSubspace) -> AdjointReport:
    """All four monotonicity/maximality flags for ``V`` and ``V^A``.

    ``consistent_qqthm`` holds when ``V^A`` is monotone exactly when ``V`` is
    maximally monotone.  When ``V^A`` is monotone, ``adjoint_maximal_ok``
    records whether it also passes the dual-side Minty test.
    """
    VA = adjoint_subspace(space, V)
    v_mon = subspace_monotone(space, V)
    va_mon = subspace_monotone(space, VA)
    v_max = subspace_maximal_minty(space, V) if v_mon else False
    va_max = subspace_maximal_minty(space, VA) if va_mon else False
    consistent = va_mon == (v_mon and v_max)
    return AdjointReport(VA.basis, v_mon, va_mon, v_max, va_max, bool(consistent),
                         va_max if va_mon else None)


def span_equal(U: LinSubspace, W: LinSubspace) -> bool:
    if U.dim != W.dim:
        return False
    if U.dim_v != W.dim_v:
        return False
    if U.dim_v == 0:
        return True
    return _rank(np.vstack([U.matrix, W.matrix])) == U.dim_v


def in_span(W: LinSubspace, v) -> bool:
    vec = v.as_vector() if hasattr(v, "as_vector") else np.asarray(v, dtype=float)
    if W.dim_v == 0:
        return bool(np.linalg.norm(vec) <= RANK_TOL)
    return _rank(np.vstack([W.matrix, vec])) == W.dim_v


def random_monotone_subspace(dim: int, rng: np.random.Generator, k: Optional[int] = None,
                             j: Optional[int] = None, max_tries: int = 100) -> LinSubspace:
    """``{(u, A u + w) : u in U, w in W}`` with ``A`` monotone, ``dim U = k``, ``W`` inside ``U^perp`` of dim ``j``.

    ``A = B B^T / dim + K - K^T`` has a positive semidefinite symmetric part,
    so ``<u, A u + w> = <u, A u> >= 0`` and the span is monotone.  It is
    maximal exactly when ``k + j = dim``.  Rank-deficient draws are redrawn.
    """
    for _ in range(max_tries):
        kk = int(rng.integers(0, dim + 1)) if k is None else k
        jj = int(rng.integers(0, dim - kk + 1)) if j is None else j
        if kk + jj > dim:
            raise ContractError("need k + j <= dim")
        Bm = rng.normal(size=(dim, dim))
        K = rng.normal(size=(dim, dim))
        A = Bm @ Bm.T / dim + K - K.T
        Q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        U, W = Q[:, :kk], Q[:, kk:kk + jj]
        rows = [np.concatenate([u, A @ u]) for u in U.T] + [np.concatenate([np.zeros(dim), w]) for w in W.T]
        M = np.array(rows) if rows else np.zeros((0, 2 * dim))
        if _rank(M) == kk + jj:
            return LinSubspace.from_matrix(M, dim) if rows else LinSubspace([], dim)
    raise ContractError("could not draw a non-degenerate subspace")
