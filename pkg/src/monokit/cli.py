"""Command-line interface: ``monokit <command> [options]``.

Every command writes one JSON run report to stdout (or ``--out``).
Exit codes: 0 success, 2 invalid input or contract violation, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .adjoint import brezis_browder_check
from .errors import ContractError, MonokitError, SolverError
from .gallery import (
    TRUNCATION_WARNING, tail_identity_check, tail_matrix, tail_ni_witness_check,
    tailgex_structure_check,
)
from .gridsearch import RefineGrid
from .jsonio import (
    SchemaViolation, dumps, load_json_file, make_report, parse_operator, parse_point,
    parse_subspace, to_jsonable,
)
from .operators import MONOTONE_TOL, is_maximal_minty, is_monotone, resolve
from .quasidense import (
    CERT_TOL, equivalence_certificate, eqthm_report, solve_surjectivity, suffthm_iterate,
)
from .spaces import DualPoint, PDPoint, Space
from .transforms import (
    GOSSEZ_TOL, TRANSFORM_NAMES, InfConvSpec, evaluate_transform, gossez_membership,
    inf_convolution,
)

EXIT_OK, EXIT_CONTRACT, EXIT_SOLVER = 0, 2, 3
STRUCTURE_MAX_N = 6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONTRACT, f"{self.prog}: error: {message}\n")


def _vector(text: str, name: str):
    text = text.strip()
    try:
        vals = json.loads(text) if text.startswith("[") else [float(t) for t in text.split(",") if t.strip()]
    except (ValueError, json.JSONDecodeError) as exc:
        raise SchemaViolation(f"cannot parse {name} as a vector: {exc}", f"/{name}") from exc
    if not isinstance(vals, list) or not vals or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                                         for v in vals):
        raise SchemaViolation(f"{name} must be a non-empty list of numbers", f"/{name}")
    return np.array(vals, dtype=float)


def _load_op(args):
    if not args.op:
        raise ContractError("--op is required")
    obj = load_json_file(args.op)
    op, space = parse_operator(obj)
    return obj, op, space


def _load_point(args, want=None):
    path = getattr(args, "point", None) or getattr(args, "dual_point", None)
    if not path:
        raise ContractError("--point (or --dual-point) is required")
    obj = load_json_file(path)
    pt = parse_point(obj)
    if want is not None and not isinstance(pt, want):
        raise SchemaViolation(f"expected a {'dual ' if want is DualPoint else ''}point "
                              f"with keys {'ystar/ystarstar' if want is DualPoint else 'x/xstar'}", "/")
    return obj, pt


def _dim_match(space: Space, pt):
    if pt.dim != space.dim:
        raise SchemaViolation(f"point has dim {pt.dim} but the operator has dim {space.dim}", "/")


# ---------------------------------------------------------------------------
# command handlers; each returns (inputs, results, warnings)


def cmd_check_monotone(args):
    obj, op, space = _load_op(args)
    tol = MONOTONE_TOL if args.tol is None else args.tol
    rep = is_monotone(space, op, tol=tol)
    res = {"monotone": rep.monotone, "min_value": rep.min_value, "method": rep.method,
           "violating_pair": list(rep.violating_pair) if rep.violating_pair else None}
    return {"op": obj, "tol": tol}, res, []


def cmd_maximal(args):
    obj, op, space = _load_op(args)
    return {"op": obj}, {"maximal": is_maximal_minty(space, op), "method": "minty"}, []


def cmd_transform(args):
    obj, op, space = _load_op(args)
    pobj, pt = _load_point(args)
    _dim_match(space, pt)
    tv = evaluate_transform(space, op, args.which, pt)
    res = {"transform": args.which, "point": pt, "value": tv.value, "finite": tv.finite,
           "witness": tv.witness, "exact": tv.exact}
    return {"op": obj, "point": pobj, "which": args.which}, res, [tv.warning]


def cmd_gap(args):
    obj, op, space = _load_op(args)
    pobj, pt = _load_point(args, PDPoint)
    _dim_match(space, pt)
    rr = resolve(space, op, pt)
    return {"op": obj, "point": pobj}, {"value": rr.residual, "witness": rr.m, "exact": rr.exact}, []


def cmd_gossez(args):
    obj, op, space = _load_op(args)
    pobj, pt = _load_point(args, DualPoint)
    _dim_match(space, pt)
    tol = GOSSEZ_TOL if args.tol is None else args.tol
    gm = gossez_membership(space, op, pt, tol=tol)
    res = {"member": gm.member, "g_value": gm.g_value.value, "finite": gm.g_value.finite,
           "witness": gm.g_value.witness}
    return {"op": obj, "dual_point": pobj, "tol": tol}, res, []


def cmd_infconv(args):
    obj, op, space = None, None, None
    if args.op:
        obj, op, space = _load_op(args)
    pobj, pt = _load_point(args)
    if space is None:
        space = Space(pt.dim, args.p)
    _dim_match(space, pt)
    spec = InfConvSpec(args.f, args.g, args.method, op)
    grid = RefineGrid(resolution=args.grid) if args.grid else None
    tv = inf_convolution(space, spec, pt, grid=grid)
    res = {"f": spec.f, "g": spec.g, "method": spec.method, "value": tv.value, "finite": tv.finite,
           "witness": tv.witness, "exact": tv.exact}
    return {"op": obj, "point": pobj, "f": args.f, "g": args.g, "method": args.method,
            "grid": args.grid}, res, [tv.warning]


def cmd_equiv_report(args):
    obj, op, space = _load_op(args)
    tol = CERT_TOL if args.tol is None else args.tol
    cert = equivalence_certificate(space, op, n_samples=args.samples, seed=args.seed, tol=tol)
    res = {"samples": args.samples, "seed": args.seed,
           "cond_a_gap_max": cert.cond_a_gap_max, "cond_b_minG": cert.cond_b_minG,
           "cond_c_minF": cert.cond_c_minF, "cond_d_maxPboxR": cert.cond_d_maxPboxR,
           "cond_e_minFboxRt": cert.cond_e_minFboxRt, "holds": cert.holds,
           "consistent": cert.consistent}
    return {"op": obj, "samples": args.samples, "seed": args.seed, "tol": tol}, res, cert.warnings


def cmd_eqthm(args):
    obj, op, space = _load_op(args)
    pobj, pt = _load_point(args, DualPoint)
    _dim_match(space, pt)
    grid = RefineGrid(resolution=args.grid) if args.grid else None
    tol = GOSSEZ_TOL if args.tol is None else args.tol
    rep = eqthm_report(space, op, pt, grid=grid, tol=tol)
    res = {"bstar": pt, "conditions": rep["conditions"], "member": rep["member"],
           "hard_failure": rep["hard_failure"]}
    return {"op": obj, "point": pobj, "grid": args.grid, "tol": tol}, res, rep["warnings"]


def cmd_solve(args):
    obj, op, space = _load_op(args)
    x = _vector(args.x, "x") if args.x is not None else np.zeros(space.dim)
    xstar = _vector(args.xstar, "xstar") if args.xstar is not None else np.zeros(space.dim)
    if x.size != space.dim or xstar.size != space.dim:
        raise SchemaViolation(f"x and xstar must have length {space.dim}", "/x")
    tol = 1e-8 if args.tol is None else args.tol
    out = solve_surjectivity(space, op, x, xstar, tol=tol)
    return {"op": obj, "x": x, "xstar": xstar, "tol": tol}, out, []


def cmd_iterate(args):
    obj, op, space = _load_op(args)
    pobj, pt = _load_point(args, PDPoint)
    _dim_match(space, pt)
    tr = suffthm_iterate(space, op, pt, args.eta, oracle=args.oracle, max_steps=args.max_steps)
    res = {"eta": tr.eta, "oracle": tr.oracle, "length": len(tr.c_sequence), "c_sequence": tr.c_sequence,
           "step_norms": tr.step_norms, "budgets": tr.budgets, "limit_m": tr.limit_m,
           "p_c1": tr.p_c1, "final_distance_sq": tr.final_distance_sq, "bound_ok": tr.bound_ok}
    return {"op": obj, "point": pobj, "eta": args.eta, "oracle": args.oracle}, res, []


def cmd_adjoint(args):
    if not args.subspace:
        raise ContractError("--subspace is required")
    obj = load_json_file(args.subspace)
    V, space = parse_subspace(obj)
    rep = brezis_browder_check(space, V)
    return {"subspace": obj}, rep, []


def cmd_gallery(args):
    n = args.n
    if n < 1:
        raise ContractError("--n must be a positive integer")
    rng = np.random.default_rng(args.seed)
    X = rng.normal(size=(args.samples, n))
    ident = [tail_identity_check(x) for x in X]
    ni = [tail_ni_witness_check(x) for x in X]
    res = {"n": n, "T_matrix": tail_matrix(n),
           "identity": {"samples": args.samples,
                        "max_abs_residual": max(abs(d["lhs"] - d["rhs"]) for d in ident),
                        "all_equal": all(d["equal"] for d in ident)},
           "ni_witness": {"min_value": min(d["value"] for d in ni),
                          "min_margin": min(d["value"] - d["bound"] for d in ni),
                          "all_bound_ok": all(d["bound_ok"] and d["sharp_bound_ok"] for d in ni)}}
    warnings = [TRUNCATION_WARNING]
    if n <= STRUCTURE_MAX_N:
        s = tailgex_structure_check(n)
        res["structure"] = {k: v for k, v in s.items() if k != "warning"}
    else:
        res["structure"] = None
        warnings.append(f"structure check skipped: the 3^n grid is limited to n <= {STRUCTURE_MAX_N}")
    return {"subcommand": args.gallery_cmd, "n": n, "seed": args.seed, "samples": args.samples}, res, warnings


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="monokit", description="Monotone-set transforms and certificates.")
    parser.add_argument("--version", action="version", version=f"monokit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, helptext, op=True, point=False, tol=False):
        p = sub.add_parser(name, help=helptext, description=helptext)
        if op:
            p.add_argument("--op", help="operator JSON file")
        if point:
            p.add_argument("--point", help="point JSON file ({x, xstar} or {ystar, ystarstar})")
            p.add_argument("--dual-point", dest="dual_point", help="dual point JSON file")
        if tol:
            p.add_argument("--tol", type=float, default=None, help="decision tolerance")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.set_defaults(func=func)
        return p

    add("check-monotone", cmd_check_monotone, "decide monotonicity", tol=True)
    add("maximal", cmd_maximal, "Minty maximality test (p = 2)")
    p = add("transform", cmd_transform, "evaluate P, F, G, Phi or PhiStar", point=True)
    p.add_argument("--which", required=True, choices=TRANSFORM_NAMES)
    add("gap", cmd_gap, "quasidensity gap inf r(m - b)", point=True)
    add("gossez", cmd_gossez, "Gossez-extension membership G(b*) <= tol", point=True, tol=True)
    p = add("infconv", cmd_infconv, "inf-convolution of two named functions", point=True)
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--method", default="grid_refine", choices=("exact_finite", "convex_qp", "grid_refine"))
    p.add_argument("--grid", type=int, default=None, help="grid points per axis")
    p.add_argument("--p", type=float, default=2.0, help="exponent when no --op is given")
    p = add("equiv-report", cmd_equiv_report, "five-condition certificate on random samples", tol=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p = add("eqthm", cmd_eqthm, "eight-condition membership report for a dual point", point=True, tol=True)
    p.add_argument("--grid", type=int, default=None, help="grid points per axis")
    p = add("solve", cmd_solve, "surjectivity solve at p = 2", tol=True)
    p.add_argument("--x", help="vector as JSON array or comma list (default 0)")
    p.add_argument("--xstar", help="vector as JSON array or comma list (default 0)")
    p = add("iterate-suffthm", cmd_iterate, "approximation sequence towards the graph", point=True)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--oracle", default="resolvent", choices=("resolvent", "relaxed"))
    p.add_argument("--max-steps", dest="max_steps", type=int, default=60)
    p = add("adjoint", cmd_adjoint, "adjoint subspace and maximality report", op=False)
    p.add_argument("--subspace", help="subspace JSON file")
    p = add("gallery", cmd_gallery, "truncated tail-operator checks", op=False)
    p.add_argument("gallery_cmd", choices=("tail",))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100)
    return parser


def run(argv: Optional[Sequence[str]] = None):
    """Parse ``argv`` and return ``(exit_code, report_or_None, error_message, args)``."""
    args = build_parser().parse_args(argv)
    try:
        inputs, results, warnings = args.func(args)
        report = make_report(args.command, inputs, to_jsonable(results), warnings, __version__)
    except SolverError as exc:
        return EXIT_SOLVER, None, f"solver failure: {exc}", args
    except (MonokitError, ValueError) as exc:
        return EXIT_CONTRACT, None, f"invalid input: {exc}", args
    return EXIT_OK, report, None, args


def main(argv: Optional[Sequence[str]] = None) -> int:
    code, report, err, args = run(argv)
    if err:
        print(err, file=sys.stderr)
        return code
    text = dumps(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
