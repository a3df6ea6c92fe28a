"""Coarse-to-fine tensor grid search with a local polish.

Used for the approximate inf-convolutions.  Results are never flagged exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize

__all__ = ["RefineGrid", "GridResult", "grid_minimize"]


@dataclass(frozen=True)
class RefineGrid:
    """Search box half-width, points per axis and number of zoom levels."""

    radius: float = 3.0
    resolution: int = 9
    levels: int = 30
    shrink: float = 0.5

    @classmethod
    def coerce(cls, grid) -> "RefineGrid":
        if grid is None:
            return cls()
        if isinstance(grid, cls):
            return grid
        return cls(resolution=int(grid))


@dataclass
class GridResult:
    value: float
    argmin: Optional[np.ndarray]
    on_boundary: bool
    evaluations: int


def _offsets(d, resolution):
    ax = np.linspace(-1.0, 1.0, max(resolution, 2) | 1)
    mesh = np.meshgrid(*([ax] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_minimize(fun: Callable[[np.ndarray], np.ndarray], center, grid: RefineGrid,
                  project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                  polish: bool = True) -> GridResult:
    """Minimise a batched ``fun: (N, d) -> (N,)``; ``+inf`` marks points outside the domain.

    Each level evaluates a full tensor grid around the incumbent; the box
    shrinks when the incumbent is interior and is re-centred and enlarged when
    it sits on the boundary, so unbounded descents run off geometrically.
    """
    center = np.asarray(center, dtype=float).ravel()
    d = center.size
    if project is not None:
        center = project(center[None])[0]
    if d == 0:
        return GridResult(float(fun(center[None])[0]), center, False, 1)
    offs = _offsets(d, grid.resolution)
    best_x = center
    best = float(fun(center[None])[0])
    rad = grid.radius
    evals = 1
    boundary = False
    moves = 0
    level = 0
    while level < grid.levels:
        pts = best_x + rad * offs
        if project is not None:
            pts = project(pts)
        vals = np.asarray(fun(pts), dtype=float)
        evals += len(pts)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, best_x = float(vals[i]), pts[i]
            boundary = bool(np.abs(offs[i]).max() == 1.0)
        else:
            boundary = False
        if boundary and moves < 4 * grid.levels:
            moves += 1
            rad /= grid.shrink
            continue
        rad *= grid.shrink
        level += 1

    if polish and np.isfinite(best):
        def scalar(z):
            zz = z[None]
            if project is not None:
                zz = project(zz)
            return float(fun(zz)[0])

        with np.errstate(invalid="ignore"):
            sol = optimize.minimize(scalar, best_x, method="Nelder-Mead",
                                    options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000 * d,
                                             "initial_simplex": best_x + np.vstack(
                                                 [np.zeros(d), max(rad, 1e-8) * np.eye(d)])})
        evals += sol.nfev
        if sol.fun < best:
            best_x = sol.x if project is None else project(sol.x[None])[0]
            best = float(sol.fun)
    return GridResult(best, best_x, boundary, evals)
