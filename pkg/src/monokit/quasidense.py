"""Quasidensity gaps, the constructive approximation sequence, equivalence reports
and the surjectivity solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import BudgetError, ContractError, MonokitError, SolverError, UnsupportedError
from .operators import (
    FiniteGraph, LinearOp, Operator, contains, is_maximal_minty, resolve,
)
from .spaces import DualPoint, PDPoint, Space, duality_map, iso_L, norm, norm_B, r, rt
from .transforms import (
    GOSSEZ_TOL, InfConvSpec, f_transform, g_transform, inf_convolution, p_transform,
)

__all__ = [
    "quasidensity_gap", "IterationTrace", "suffthm_iterate", "resolvent_oracle", "relaxed_oracle",
    "EquivCertificate", "equivalence_certificate", "eqthm_report", "solve_surjectivity",
    "CERT_TOL", "BUDGET_SLACK",
]

#: sign-condition tolerance for the five-way certificate
CERT_TOL = 1e-5
#: absolute float slack on the per-step budgets
BUDGET_SLACK = 1e-12


def quasidensity_gap(space: Space, op: Operator, b: PDPoint) -> float:
    """``inf_{m in M} r(m - b)``, evaluated through the resolvent solve."""
    return resolve(space, op, b).residual


# ---------------------------------------------------------------------------
# approximation sequence


@dataclass
class IterationTrace:
    """Sequence ``c_1, c_2, ...`` with ``step_norms[i] = ||c_{i+2} - c_{i+1}||`` (0-based ``i``).

    ``budgets[i]`` is ``P(c_{i+2}) + r(c_{i+1} - c_{i+2})`` and must stay below
    ``eta^(2(i+1)+2)``; for ``n = i + 1 >= 2`` the step is bounded by ``4 eta^n``.
    """

    c_sequence: List[PDPoint]
    eta: float
    limit_m: PDPoint
    step_norms: List[float]
    bound_ok: bool
    budgets: List[float] = field(default_factory=list)
    p_c1: float = 0.0
    final_distance_sq: float = 0.0
    oracle: str = "resolvent"


def _p_value(space, op, c):
    v = p_transform(space, op, c).value
    return v


def resolvent_oracle(space: Space, op: Operator, c: PDPoint, n: int, eta: float) -> PDPoint:
    """Best of the graph points (finite graphs) and the resolvent point of ``c``.

    Minimises ``P(c') + r(c - c')`` over that candidate set.
    """
    cands = [resolve(space, op, c).m]
    if isinstance(op, FiniteGraph):
        cands.extend(op.points)
    vals = [_p_value(space, op, m) + r(space, c - m) for m in cands]
    return cands[int(np.argmin(vals))]


def relaxed_oracle(space: Space, op: Operator, c: PDPoint, n: int, eta: float) -> PDPoint:
    """``m + t (c - m)`` with ``m`` the resolvent point and ``t`` the largest power of two meeting the budget.

    Falls back to ``t = 0`` (the resolvent point itself).  Gives a
    non-trivial sequence, which exercises the step bounds.
    """
    m = resolve(space, op, c).m
    budget = eta ** (2 * n + 2)
    d = c - m
    for k in range(0, 60):
        t = 0.5 ** k
        cand = m + t * d
        val = _p_value(space, op, cand) + r(space, c - cand)
        if val < budget:
            return cand
    return m


_ORACLES = {"resolvent": resolvent_oracle, "relaxed": relaxed_oracle}


def suffthm_iterate(space: Space, op: Operator, c1: PDPoint, eta: float,
                    oracle="resolvent", max_steps: int = 60) -> IterationTrace:
    """Build ``c_2, c_3, ...`` with ``P(c_{n+1}) + r(c_n - c_{n+1}) < eta^(2n+2)``.

    Stops once the sequence is stationary.  ``limit_m`` is the resolvent point
    of the last iterate; ``bound_ok`` reports the step bounds and the final
    ``||m - c_1||^2 / 4 <= P(c_1)`` check (1e-6 slack).

    Raises
    ------
    BudgetError
        When the oracle misses the budget; ``.step`` holds ``n``.
    """
    if not (0.0 < eta < 1.0):
        raise ContractError(f"eta must lie in (0, 1), got {eta!r}")
    name = oracle if isinstance(oracle, str) else getattr(oracle, "__name__", "custom")
    if isinstance(oracle, str):
        if oracle not in _ORACLES:
            raise ContractError(f"unknown oracle {oracle!r}; expected one of {sorted(_ORACLES)}")
        oracle = _ORACLES[oracle]
    p1 = _p_value(space, op, c1)
    if not math.isfinite(p1):
        raise ContractError("P(c_1) is infinite; the sequence needs a point of its domain")
    seq = [c1]
    steps: List[float] = []
    budgets: List[float] = []
    ok = True
    if p1 > BUDGET_SLACK:
        c = c1
        for n in range(1, max_steps + 1):
            nxt = oracle(space, op, c, n, eta)
            spent = _p_value(space, op, nxt) + r(space, c - nxt)
            if not spent < eta ** (2 * n + 2) + BUDGET_SLACK:
                raise BudgetError(f"oracle missed the budget at step {n}: "
                                  f"{spent:.3e} >= {eta ** (2 * n + 2):.3e}", step=n)
            step = float(norm_B(space, nxt - c))
            if step <= 1e-15 * (1.0 + float(norm_B(space, c))):
                break
            seq.append(nxt)
            steps.append(step)
            budgets.append(float(spent))
            if n >= 2 and step > 4.0 * eta ** n + BUDGET_SLACK:
                ok = False
            c = nxt
    m = resolve(space, op, seq[-1]).m
    dist_sq = 0.25 * float(norm_B(space, m - c1)) ** 2
    if dist_sq > p1 + 1e-6:
        ok = False
    if not contains(op, m, tol=1e-6):
        ok = False
    return IterationTrace(seq, float(eta), m, steps, ok, budgets, float(p1), dist_sq, name)


# ---------------------------------------------------------------------------
# five-way certificate


@dataclass
class EquivCertificate:
    samples_primal: List[PDPoint]
    samples_dual: List[DualPoint]
    cond_a_gap_max: float
    cond_b_minG: float
    cond_c_minF: float
    cond_d_maxPboxR: float
    cond_e_minFboxRt: float
    consistent: bool
    holds: dict = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)


def _maximality_warning(space, op) -> Optional[str]:
    if isinstance(op, FiniteGraph):
        return "finite graphs are never maximally monotone; consistency is not expected"
    if space.p == 2.0:
        if not is_maximal_minty(space, op):
            return "operator fails the Minty maximality test"
    return None


def _tagged(label, fn):
    try:
        return fn()
    except MonokitError as exc:
        cls = SolverError if isinstance(exc, SolverError) else ContractError
        raise cls(f"condition ({label}): {exc}") from exc


def equivalence_certificate(space: Space, op: Operator, n_samples: int = 100, seed: int = 0,
                            box: float = 2.0, tol: float = CERT_TOL) -> EquivCertificate:
    """Evaluate the five equivalent conditions on seeded uniform samples of ``[-box, box]^(2 dim)``.

    (a) max quasidensity gap ~ 0, (b) min G >= 0, (c) min F >= 0,
    (d) max (P [] r) <= 0 and (e) min (F [] r~) o L >= 0, each within ``tol``.
    """
    if n_samples < 1:
        raise ContractError("n_samples must be positive")
    n = space.dim
    rng = np.random.default_rng(seed)
    P = rng.uniform(-box, box, size=(n_samples, 2 * n))
    D = rng.uniform(-box, box, size=(n_samples, 2 * n))
    prim = [PDPoint(v[:n], v[n:]) for v in P]
    dual = [DualPoint(v[:n], v[n:]) for v in D]

    gaps = _tagged("a", lambda: [quasidensity_gap(space, op, b) for b in prim])
    gs = _tagged("b", lambda: [g_transform(space, op, d).value for d in dual])
    fs = _tagged("c", lambda: [f_transform(space, op, d).value for d in dual])
    spec_d = InfConvSpec("P", "r", "convex_qp", op)
    pr = _tagged("d", lambda: [inf_convolution(space, spec_d, b).value for b in prim])
    spec_e = InfConvSpec("F", "rt", "convex_qp", op)
    fr = _tagged("e", lambda: [inf_convolution(space, spec_e, iso_L(b)).value for b in prim])

    stats = {"a": max(gaps), "b": min(gs), "c": min(fs), "d": max(pr), "e": min(fr)}
    holds = {"a": stats["a"] <= tol, "b": stats["b"] >= -tol, "c": stats["c"] >= -tol,
             "d": stats["d"] <= tol, "e": stats["e"] >= -tol}
    consistent = all(holds.values()) or not any(holds.values())
    warnings = []
    w = _maximality_warning(space, op)
    if w:
        warnings.append(w)
    return EquivCertificate(prim, dual, stats["a"], stats["b"], stats["c"], stats["d"], stats["e"],
                            consistent, holds, warnings)


# ---------------------------------------------------------------------------
# eight-way membership report


def _grid_status(tv, kind, tol):
    """Status of an inf-convolution condition from a grid upper bound ``U``.

    ``kind`` is ``"eq"`` (value = 0) or ``"ge"`` (value >= 0).  ``U < -tol``
    refutes both; otherwise ``ge`` is consistent and ``eq`` is consistent
    only when ``|U| <= tol``.
    """
    u = tv.value
    if u == math.inf or (isinstance(u, float) and math.isnan(u)):
        return "unevaluated"
    if u < -tol:
        return "refuted"
    if kind == "ge" or abs(u) <= tol:
        return "consistent"
    return "inconclusive"


def eqthm_report(space: Space, op: Operator, bstar: DualPoint, grid=None,
                 tol: float = GOSSEZ_TOL, grid_tol: float = 1e-4) -> dict:
    """Eight membership conditions for ``b*``.

    Exact: (a) G <= 0, (b) G = 0, (e) F <= 0, (f) F = 0.  Grid estimates:
    (c) (G [] q~) = 0, (d) (G [] q~) >= 0, (g) (F [] q~) = 0, (h) (F [] q~) >= 0,
    labelled ``consistent``/``refuted``/``inconclusive``/``unevaluated`` and
    never decided from the other conditions.  ``hard_failure`` is set when the
    exact conditions disagree.
    """
    G = g_transform(space, op, bstar).value
    F = f_transform(space, op, bstar).value
    exact = {
        "a": {"statement": "G(b*) <= 0", "value": G, "holds": bool(G <= tol)},
        "b": {"statement": "G(b*) = 0", "value": G, "holds": bool(abs(G) <= tol)},
        "e": {"statement": "F(b*) <= 0", "value": F, "holds": bool(F <= tol)},
        "f": {"statement": "F(b*) = 0", "value": F, "holds": bool(abs(F) <= tol)},
    }
    warnings = []
    approx = {}
    rows = [("c", "G", "eq", "(G [] q~)(b*) = 0"), ("d", "G", "ge", "(G [] q~)(b*) >= 0"),
            ("g", "F", "eq", "(F [] q~)(b*) = 0"), ("h", "F", "ge", "(F [] q~)(b*) >= 0")]
    if space.dim > 2:
        warnings.append("grid conditions need dim <= 2; left unevaluated")
        for key, _, _, stmt in rows:
            approx[key] = {"statement": stmt, "value": None, "status": "unevaluated",
                           "approximate": True}
    else:
        cache = {}
        for key, name, kind, stmt in rows:
            if name not in cache:
                try:
                    cache[name] = inf_convolution(space, InfConvSpec(name, "qt", "grid_refine", op),
                                                  bstar, grid=grid)
                except (SolverError, UnsupportedError) as exc:
                    cache[name] = exc
            tv = cache[name]
            if isinstance(tv, Exception):
                approx[key] = {"statement": stmt, "value": None, "status": "unevaluated",
                               "approximate": True, "error": str(tv)}
                continue
            approx[key] = {"statement": stmt, "value": tv.value, "status": _grid_status(tv, kind, grid_tol),
                           "approximate": True}
            if tv.warning and tv.warning not in warnings:
                warnings.append(tv.warning)
    flags = [v["holds"] for v in exact.values()]
    hard = not (all(flags) or not any(flags))
    conds = {}
    for key in "abcdefgh":
        conds[key] = exact.get(key) or approx[key]
    return {"bstar": bstar, "conditions": conds, "member": bool(exact["a"]["holds"]),
            "hard_failure": hard, "warnings": warnings}


# ---------------------------------------------------------------------------
# surjectivity


def solve_surjectivity(space: Space, op: Operator, x, xstar, tol: float = 1e-8) -> dict:
    """Find ``(y*, y**)`` in ``L(graph S)`` with ``r~(L(x, x*) - (y*, y**)) = 0``.

    With ``m = (s, s*)`` the resolvent point of ``(x, x*)``, take ``y* = s*``
    and ``y** = s``; then ``x - y**`` and ``y* - x*`` are related by the
    duality map.  For ``x = 0`` this is ``S y + J y = x*``.
    """
    x = space.check(x)
    xstar = space.check(xstar)
    if isinstance(op, FiniteGraph):
        raise UnsupportedError("surjectivity needs a maximal operator (linear or subdifferential)")
    c = PDPoint(x, xstar)
    res = resolve(space, op, c)
    ystar, ystarstar = res.m.xstar, res.m.x
    bstar = DualPoint(ystar, ystarstar)
    if isinstance(op, LinearOp):
        graph_res = float(norm(space, op.matrix @ ystarstar - ystar, "dual"))
    else:
        graph_res = float(max(op.value(ystarstar) + op.conjugate(ystar) - ystarstar @ ystar, 0.0))
    z, w = ystar - xstar, x - ystarstar
    defect = 0.5 * norm(space, z, "dual") ** 2 + 0.5 * norm(space, w, "primal") ** 2 - float(z @ w)
    rt_def = float(rt(space, iso_L(c) - bstar))
    jres = float(norm(space, w - duality_map(space, z, "dual"), "primal"))
    ok = graph_res <= tol and abs(defect) <= tol and abs(rt_def) <= tol
    return {"ystar": ystar, "ystarstar": ystarstar,
            "residuals": {"graph": graph_res, "duality_defect": float(defect),
                          "duality_map": jres, "rt_defect": rt_def},
            "ok": bool(ok)}
