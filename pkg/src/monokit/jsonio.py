"""JSON input parsing, schema validation and report serialisation.

Numbers are written with 17 significant digits so that doubles round-trip.
``+inf``/``-inf`` are written as the strings ``"+inf"``/``"-inf"``; any value
that can be infinite is accompanied by a ``finite`` flag.
"""

from __future__ import annotations

import dataclasses
import json
import math
from functools import lru_cache
from importlib import resources
from typing import Any

import numpy as np
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

from .errors import ContractError
from .operators import FiniteGraph, LinearOp, PwaSubdiff
from .spaces import DualPoint, PDPoint, Space, TransformValue

__all__ = [
    "FORMAT_VERSION", "SchemaViolation", "load_json_file", "validate", "parse_operator",
    "parse_point", "parse_subspace", "to_jsonable", "dumps", "make_report", "SCHEMAS",
]

FORMAT_VERSION = 1
SCHEMAS = ("operator", "point", "dual_point", "subspace", "report")


class SchemaViolation(ContractError):
    """Input does not match its schema; ``pointer`` locates the offending field."""

    def __init__(self, message, pointer=""):
        super().__init__(f"{message} (at {pointer or '/'})")
        self.pointer = pointer or "/"


def _read_schema(name):
    text = resources.files("monokit").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


@lru_cache(maxsize=None)
def _validator(name) -> Draft202012Validator:
    registry = Registry()
    for other in SCHEMAS:
        schema = _read_schema(other)
        registry = registry.with_resource(schema["$id"], Resource.from_contents(schema))
        registry = registry.with_resource(f"{other}.schema.json", Resource.from_contents(schema))
    return Draft202012Validator(_read_schema(name), registry=registry)


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else "/"


def validate(obj, name: str):
    """Raise :class:`SchemaViolation` on the first (deepest-path-first) schema error."""
    errors = sorted(_validator(name).iter_errors(obj), key=lambda e: (-len(e.absolute_path), str(e.absolute_path)))
    if errors:
        err = errors[0]
        raise SchemaViolation(f"{name} schema: {err.message}", _pointer(list(err.absolute_path)))
    return obj


def load_json_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ContractError(f"cannot read {path}: {exc.strerror}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SchemaViolation(f"malformed JSON in {path}: {exc}", "/") from exc


def _matrix(rows, pointer):
    lens = {len(r) for r in rows}
    if len(lens) != 1:
        raise SchemaViolation("rows have different lengths", pointer)
    return np.array(rows, dtype=float)


def parse_operator(obj):
    """Return ``(operator, space)`` from operator JSON."""
    validate(obj, "operator")
    p = float(obj.get("p", 2.0))
    kind = obj["kind"]
    if kind == "finite_graph":
        pts = obj["points"]
        n = len(pts[0]["x"])
        for i, pt in enumerate(pts):
            if len(pt["x"]) != n:
                raise SchemaViolation("point dimension differs from the first point", f"/points/{i}/x")
            if len(pt["xstar"]) != n:
                raise SchemaViolation("xstar length differs from x", f"/points/{i}/xstar")
        op = FiniteGraph([pt["x"] for pt in pts], [pt["xstar"] for pt in pts])
    elif kind == "linear":
        A = _matrix(obj["matrix"], "/matrix")
        if A.shape[0] != A.shape[1]:
            raise SchemaViolation("matrix must be square", "/matrix")
        op = LinearOp(A)
    else:
        pieces = obj["pieces"]
        a = _matrix([pc["a"] for pc in pieces], "/pieces")
        op = PwaSubdiff(a, [pc["beta"] for pc in pieces])
    return op, Space(op.dim, p)


def parse_point(obj):
    """A :class:`PDPoint` (keys ``x``, ``xstar``) or :class:`DualPoint` (keys ``ystar``, ``ystarstar``)."""
    if isinstance(obj, dict) and "ystar" in obj:
        validate(obj, "dual_point")
        if len(obj["ystar"]) != len(obj["ystarstar"]):
            raise SchemaViolation("ystarstar length differs from ystar", "/ystarstar")
        return DualPoint(obj["ystar"], obj["ystarstar"])
    validate(obj, "point")
    if len(obj["x"]) != len(obj["xstar"]):
        raise SchemaViolation("xstar length differs from x", "/xstar")
    return PDPoint(obj["x"], obj["xstar"])


def parse_subspace(obj):
    """Return ``(LinSubspace, space)``."""
    from .adjoint import LinSubspace

    validate(obj, "subspace")
    basis = obj["basis"]
    dim = obj.get("dim")
    if dim is None:
        if not basis:
            raise SchemaViolation("an empty basis needs 'dim'", "/dim")
        dim = len(basis[0]["x"])
    for i, b in enumerate(basis):
        if len(b["x"]) != dim or len(b["xstar"]) != dim:
            raise SchemaViolation(f"basis vector has wrong length (expected {dim})", f"/basis/{i}")
    V = LinSubspace([PDPoint(b["x"], b["xstar"]) for b in basis], dim)
    return V, Space(dim, float(obj.get("p", 2.0)))


def _num(v):
    v = float(v)
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "+inf" if v > 0 else "-inf"
    return v


def to_jsonable(obj: Any):
    """Convert library objects into plain JSON structures."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, PDPoint):
        return {"x": to_jsonable(obj.x), "xstar": to_jsonable(obj.xstar)}
    if isinstance(obj, DualPoint):
        return {"ystar": to_jsonable(obj.ystar), "ystarstar": to_jsonable(obj.ystarstar)}
    if isinstance(obj, TransformValue):
        return {"value": _num(obj.value), "finite": obj.finite, "witness": to_jsonable(obj.witness),
                "exact": obj.exact, "warning": obj.warning}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "__float__"):
        return _num(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        text = format(obj, ".17g")
        if text in ("-0", "0"):
            return "0.0" if text == "0" else "-0.0"
        if "e" not in text and "." not in text and "n" not in text:
            text += ".0"
        return text
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Serialise with 17 significant digits per double."""
    return _encode(to_jsonable(obj), indent, 0) + "\n"


def make_report(command: str, inputs: dict, results: dict, warnings=(), tool_version: str = "0.1.0") -> dict:
    report = {"command": command, "inputs": to_jsonable(inputs), "results": to_jsonable(results),
              "warnings": [str(w) for w in warnings if w],
              "versions": {"tool": f"monokit {tool_version}", "format_version": FORMAT_VERSION}}
    validate(report, "report")
    return report
