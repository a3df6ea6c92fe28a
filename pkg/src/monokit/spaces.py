"""Normed product spaces and the bilinear/quadratic calculus on them.

The primal space is ``E = R^n`` with an l_p norm and ``E*`` carries the
conjugate l_p' norm.  Because ``E`` is finite dimensional it is reflexive and
``E**`` is identified with ``E`` (the canonical injection is the identity).
Consequently

* ``B = E x E*`` holds pairs ``(x, x*)`` (:class:`PDPoint`),
* ``B* = E* x E**`` holds pairs ``(y*, y**)`` (:class:`DualPoint`) where
  ``y**`` is an ordinary vector measured with the l_p norm,
* ``B** = B`` so the map ``L~ : B* -> B**`` lands back in :class:`PDPoint`.

Every function here accepts batched inputs: the component arrays may carry
leading axes and all reductions run over the last axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from .errors import DimensionError, ContractError

__all__ = [
    "IDENTITY_TOL", "OPTIM_TOL", "Space", "PDPoint", "DualPoint", "TransformValue",
    "norm", "duality_map", "q", "qt", "iso_L", "iso_Lt", "reflect", "pair",
    "pair_dual", "norm_B", "norm_Bstar", "r", "rt", "jc_conjugate",
]

#: tolerance for pure algebraic identities
IDENTITY_TOL = 1e-9
#: tolerance for results of iterative solves
OPTIM_TOL = 1e-6


@dataclass(frozen=True)
class Space:
    """``E = R^dim`` with the l_p norm; ``E*`` carries l_p' with 1/p + 1/p' = 1."""

    dim: int
    p: float = 2.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ContractError(f"dim must be a positive integer, got {self.dim!r}")
        if not (1.0 < float(self.p) < math.inf):
            raise ContractError(f"p must lie in (1, inf), got {self.p!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "p", float(self.p))

    @property
    def p_dual(self) -> float:
        return self.p / (self.p - 1.0)

    def exponent(self, side: str) -> float:
        if side == "primal":
            return self.p
        if side == "dual":
            return self.p_dual
        raise ContractError(f"side must be 'primal' or 'dual', got {side!r}")

    def check(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.ndim == 0 or v.shape[-1] != self.dim:
            raise DimensionError(f"expected vectors of length {self.dim}, got shape {v.shape}")
        return v


def _pair_arrays(a, b, names):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 0 or b.ndim == 0 or a.shape[-1] != b.shape[-1]:
        raise DimensionError(f"{names[0]} and {names[1]} must be vectors of equal length, "
                             f"got shapes {a.shape} and {b.shape}")
    return a, b


class PDPoint:
    """An element ``(x, x*)`` of ``B = E x E*``."""

    __slots__ = ("x", "xstar")

    def __init__(self, x, xstar):
        self.x, self.xstar = _pair_arrays(x, xstar, ("x", "xstar"))

    @property
    def dim(self) -> int:
        return self.x.shape[-1]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.xstar], axis=-1)

    @classmethod
    def from_vector(cls, v, dim: int) -> "PDPoint":
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != 2 * dim:
            raise DimensionError(f"expected length {2 * dim}, got {v.shape[-1]}")
        return cls(v[..., :dim], v[..., dim:])

    def __add__(self, other):
        return PDPoint(self.x + other.x, self.xstar + other.xstar)

    def __sub__(self, other):
        return PDPoint(self.x - other.x, self.xstar - other.xstar)

    def __neg__(self):
        return PDPoint(-self.x, -self.xstar)

    def __mul__(self, s):
        return PDPoint(s * self.x, s * self.xstar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"PDPoint(x={self.x.tolist()}, xstar={self.xstar.tolist()})"

    def allclose(self, other, atol=IDENTITY_TOL) -> bool:
        return bool(np.allclose(self.x, other.x, atol=atol, rtol=0)
                    and np.allclose(self.xstar, other.xstar, atol=atol, rtol=0))


class DualPoint:
    """An element ``(y*, y**)`` of ``B* = E* x E**`` (``E**`` identified with ``E``)."""

    __slots__ = ("ystar", "ystarstar")

    def __init__(self, ystar, ystarstar):
        self.ystar, self.ystarstar = _pair_arrays(ystar, ystarstar, ("ystar", "ystarstar"))

    @property
    def dim(self) -> int:
        return self.ystar.shape[-1]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.ystar, self.ystarstar], axis=-1)

    @classmethod
    def from_vector(cls, v, dim: int) -> "DualPoint":
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != 2 * dim:
            raise DimensionError(f"expected length {2 * dim}, got {v.shape[-1]}")
        return cls(v[..., :dim], v[..., dim:])

    def __add__(self, other):
        return DualPoint(self.ystar + other.ystar, self.ystarstar + other.ystarstar)

    def __sub__(self, other):
        return DualPoint(self.ystar - other.ystar, self.ystarstar - other.ystarstar)

    def __neg__(self):
        return DualPoint(-self.ystar, -self.ystarstar)

    def __mul__(self, s):
        return DualPoint(s * self.ystar, s * self.ystarstar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"DualPoint(ystar={self.ystar.tolist()}, ystarstar={self.ystarstar.tolist()})"

    def allclose(self, other, atol=IDENTITY_TOL) -> bool:
        return bool(np.allclose(self.ystar, other.ystar, atol=atol, rtol=0)
                    and np.allclose(self.ystarstar, other.ystarstar, atol=atol, rtol=0))


@dataclass
class TransformValue:
    """A value in ``]-inf, +inf]`` (``math.inf`` is the +inf sentinel).

    ``witness`` is the point attaining (or approximating) the defining
    extremum when one exists; ``exact`` is true when that extremum was found by
    an exact method (closed form, enumeration, LP/QP to tolerance).
    Inf-convolutions may also report ``-inf``.
    """

    value: float
    witness: Optional[Any] = None
    exact: bool = True
    warning: Optional[str] = None

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def __float__(self):
        return float(self.value)


def _lp_norm(v, p):
    v = np.abs(np.asarray(v, dtype=float))
    scale = v.max(axis=-1, keepdims=True) if v.shape[-1] else np.zeros(v.shape[:-1] + (1,))
    safe = np.where(scale > 0, scale, 1.0)
    out = safe[..., 0] * np.sum((v / safe) ** p, axis=-1) ** (1.0 / p)
    return np.where(scale[..., 0] > 0, out, 0.0)


def norm(space: Space, v, side: str = "primal"):
    """l_p norm of a primal vector, l_p' norm of a dual vector."""
    v = space.check(v)
    out = _lp_norm(v, space.exponent(side))
    return float(out) if out.ndim == 0 else out


def duality_map(space: Space, z, side: str = "primal"):
    """Single-valued duality map: the gradient of ``0.5 * ||.||^2``.

    For the exponent ``s`` of ``side`` the result is
    ``w_i = ||z||^(2 - s) |z_i|^(s - 1) sign(z_i)``, so that
    ``<z, w> = ||z||^2`` and the other-side norm of ``w`` equals ``||z||``.
    """
    z = space.check(z)
    s = space.exponent(side)
    nz = _lp_norm(z, s)
    safe = np.where(nz > 0, nz, 1.0)[..., None]
    # normalise first so large/small norms do not overflow
    u = z / safe
    w = safe * np.abs(u) ** (s - 1.0) * np.sign(u)
    return np.where((nz > 0)[..., None], w, 0.0)


def _dot(a, b):
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def q(b: PDPoint):
    """``q(x, x*) = <x, x*>``."""
    return _scalar(_dot(b.x, b.xstar))


def qt(bstar: DualPoint):
    """``q~(y*, y**) = <y*, y**>``."""
    return _scalar(_dot(bstar.ystar, bstar.ystarstar))


def iso_L(b: PDPoint) -> DualPoint:
    """``L(x, x*) = (x*, x)``; an isometry of ``B`` onto ``B*``."""
    return DualPoint(b.xstar, b.x)


def iso_Lt(bstar: DualPoint) -> PDPoint:
    """``L~(y*, y**) = (y**, y*)`` viewed in ``B** = B``."""
    return PDPoint(bstar.ystarstar, bstar.ystar)


def reflect(bstar: DualPoint) -> DualPoint:
    """``rho(y*, y**) = (y*, -y**)``."""
    return DualPoint(bstar.ystar, -bstar.ystarstar)


def pair(b: PDPoint, bstar: DualPoint):
    """Duality pairing ``<(x, x*), (y*, y**)> = <x, y*> + <x*, y**>``."""
    if b.dim != bstar.dim:
        raise DimensionError("point and dual point have different dimensions")
    return _scalar(_dot(b.x, bstar.ystar) + _dot(b.xstar, bstar.ystarstar))


def pair_dual(dstar: DualPoint, estar: DualPoint):
    """``<d*, L~ e*> = <first(d*), second(e*)> + <second(d*), first(e*)>``; symmetric."""
    if dstar.dim != estar.dim:
        raise DimensionError("dual points have different dimensions")
    return _scalar(_dot(dstar.ystar, estar.ystarstar) + _dot(dstar.ystarstar, estar.ystar))


def norm_B(space: Space, b: PDPoint):
    """``||(x, x*)|| = sqrt(||x||_p^2 + ||x*||_p'^2)``."""
    return _scalar(np.hypot(norm(space, b.x, "primal"), norm(space, b.xstar, "dual")))


def norm_Bstar(space: Space, bstar: DualPoint):
    """``||(y*, y**)|| = sqrt(||y*||_p'^2 + ||y**||_p^2)``."""
    return _scalar(np.hypot(norm(space, bstar.ystar, "dual"), norm(space, bstar.ystarstar, "primal")))


def r(space: Space, b: PDPoint):
    """``r = 0.5 ||.||^2 + q`` on ``B``; takes values in ``[0, ||b||^2]``."""
    nsq = np.asarray(norm(space, b.x, "primal")) ** 2 + np.asarray(norm(space, b.xstar, "dual")) ** 2
    return _scalar(0.5 * nsq + q(b))


def rt(space: Space, bstar: DualPoint):
    """``r~ = 0.5 ||.||^2 + q~`` on ``B*``."""
    nsq = np.asarray(norm(space, bstar.ystar, "dual")) ** 2 + np.asarray(norm(space, bstar.ystarstar, "primal")) ** 2
    return _scalar(0.5 * nsq + qt(bstar))


def jc_conjugate(space: Space, c: PDPoint, astar: DualPoint):
    """Conjugate of ``j_c(b) = 0.5 ||c - b||^2``: ``0.5 ||a*||^2 + <c, a*>``."""
    return _scalar(0.5 * np.asarray(norm_Bstar(space, astar)) ** 2 + pair(c, astar))
