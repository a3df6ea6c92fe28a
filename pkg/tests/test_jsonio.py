import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from monokit import DualPoint, FiniteGraph, LinearOp, PDPoint, PwaSubdiff, TransformValue
from monokit.jsonio import (
    SchemaViolation, dumps, make_report, parse_operator, parse_point, parse_subspace, to_jsonable, validate,
)


def test_parse_operator_kinds():
    op, sp = parse_operator({"kind": "linear", "matrix": [[1, 2], [0, 1]], "p": 3})
    assert isinstance(op, LinearOp) and sp.dim == 2 and sp.p == 3.0
    op, sp = parse_operator({"kind": "finite_graph", "points": [{"x": [0], "xstar": [1]}]})
    assert isinstance(op, FiniteGraph) and op.k == 1 and sp.p == 2.0
    op, _ = parse_operator({"kind": "pwa_subdiff", "pieces": [{"a": [1, 0], "beta": 0}, {"a": [0, 1], "beta": 1}]})
    assert isinstance(op, PwaSubdiff) and op.intercepts.tolist() == [0.0, 1.0]


@pytest.mark.parametrize("obj,pointer", [
    ({"kind": "linear"}, "/"),
    ({"kind": "linear", "matrix": [[1, 2]]}, "/matrix"),
    ({"kind": "linear", "matrix": [[1, 2], [1]]}, "/matrix"),
    ({"kind": "linear", "matrix": [[1, "a"], [1, 2]]}, "/matrix/0/1"),
    ({"kind": "cone"}, "/kind"),
    ({"kind": "finite_graph", "points": [{"x": [0], "xstar": [1, 2]}]}, "/points/0/xstar"),
    ({"kind": "finite_graph", "points": [{"x": [0], "xstar": [1]}, {"x": [0, 1], "xstar": [1, 2]}]},
     "/points/1/x"),
    ({"kind": "pwa_subdiff", "pieces": [{"a": [1]}]}, "/pieces/0"),
    ({"kind": "linear", "matrix": [[1]], "p": 1}, "/p"),
])
def test_operator_schema_pointer(obj, pointer):
    with pytest.raises(SchemaViolation) as info:
        parse_operator(obj)
    assert info.value.pointer == pointer


def test_parse_point_kinds():
    assert isinstance(parse_point({"x": [1], "xstar": [2]}), PDPoint)
    d = parse_point({"ystar": [1], "ystarstar": [2]})
    assert isinstance(d, DualPoint) and d.ystarstar.tolist() == [2.0]
    with pytest.raises(SchemaViolation):
        parse_point({"ystar": [1]})
    with pytest.raises(SchemaViolation):
        parse_point({"x": [], "xstar": []})


def test_parse_subspace():
    V, sp = parse_subspace({"basis": [{"x": [1, 0], "xstar": [0, 1]}]})
    assert V.dim_v == 1 and sp.dim == 2
    V, sp = parse_subspace({"basis": [], "dim": 3})
    assert V.dim_v == 0 and sp.dim == 3
    with pytest.raises(SchemaViolation):
        parse_subspace({"basis": []})


def test_special_values():
    assert to_jsonable(math.inf) == "+inf" and to_jsonable(-math.inf) == "-inf"
    assert to_jsonable(float("nan")) is None
    tv = to_jsonable(TransformValue(math.inf))
    assert tv["value"] == "+inf" and tv["finite"] is False
    assert to_jsonable(np.bool_(True)) is True and to_jsonable(np.int64(3)) == 3


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), max_size=20))
def test_doubles_round_trip(xs):
    text = dumps({"v": xs})
    back = json.loads(text)["v"]
    assert back == xs


def test_report_schema():
    rep = make_report("gap", {"a": 1}, {"value": math.inf}, ["w", None])
    assert rep["warnings"] == ["w"] and rep["versions"]["format_version"] == 1
    assert json.loads(dumps(rep)) == rep
    with pytest.raises(SchemaViolation):
        validate({**rep, "extra": 1}, "report")
    with pytest.raises(SchemaViolation):
        validate({**rep, "versions": {"tool": "x", "format_version": 2}}, "report")
