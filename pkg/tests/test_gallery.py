import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monokit import ContractError
from monokit.gallery import (
    TRUNCATION_WARNING, tail_identity_check, tail_instance, tail_matrix, tail_ni_witness_check,
    tailgex_structure_check,
)


def test_tail_matrix_action():
    rng = np.random.default_rng(0)
    for n in (1, 4, 9):
        x = rng.integers(-5, 5, size=n).astype(float)
        Tx = tail_matrix(n) @ x
        assert Tx.tolist() == [float(sum(x[i:])) for i in range(n)]
    inst = tail_instance(3)
    assert np.array_equal(inst.T_matrix, inst.U_matrix)
    with pytest.raises(ContractError):
        tail_matrix(0)


@pytest.mark.parametrize("x,value", [([1.0, 1.0], 3.0), ([1.0, 0.0, -1.0], 1.0), ([0.0], 0.0)])
def test_identity_examples(x, value):
    out = tail_identity_check(x)
    assert out["lhs"] == value and out["rhs"] == value and out["equal"]


def test_witness_examples():
    assert tail_ni_witness_check([0.0, 0.0])["value"] == 1.0
    out = tail_ni_witness_check([1.0])
    assert out["value"] == 1.0 and out["bound_ok"] and out["warning"] == TRUNCATION_WARNING


@settings(max_examples=50)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=60))
def test_identity_and_witness_bounds(xs):
    out = tail_identity_check(xs)
    assert out["equal"] and out["half_sigma_sq_bound"]
    w = tail_ni_witness_check(xs)
    assert w["bound_ok"] and w["sharp_bound_ok"]


def test_identity_large_n():
    x = np.random.default_rng(1).normal(size=10_000)
    out = tail_identity_check(x)
    assert abs(out["lhs"] - out["rhs"]) <= 1e-12 * max(1.0, abs(out["rhs"]))


@pytest.mark.parametrize("n,points", [(1, 3), (2, 9), (3, 27)])
def test_structure(n, points):
    out = tailgex_structure_check(n)
    assert out["grid_points"] == points
    assert out["lm_equals_gt"] and out["monotone_sampled"] and out["monotone_inverse"]
