import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import abs_op, random_finite_graph, random_monotone_matrix
from monokit import (
    ContractError, DimensionError, FiniteGraph, LinearOp, PDPoint, PwaSubdiff, Space,
    UnsupportedError, is_maximal_minty, is_monotone, resolve,
)
from monokit.operators import Grid, contains, sample_graph
from monokit.spaces import q, r

ROT = [[0.0, -1.0], [1.0, 0.0]]


def test_monotone_examples():
    sp = Space(1)
    assert is_monotone(sp, FiniteGraph([[0.0], [1.0]], [[0.0], [1.0]])).monotone
    assert is_monotone(Space(2), LinearOp(ROT)).monotone
    rep = is_monotone(sp, FiniteGraph([[0.0], [1.0]], [[1.0], [0.0]]))
    assert not rep.monotone
    d, e = rep.violating_pair
    assert q(d - e) == pytest.approx(-1.0)
    assert rep.min_value == pytest.approx(-1.0)


def test_nonmonotone_linear():
    rep = is_monotone(Space(2), LinearOp([[1.0, 0.0], [0.0, -0.5]]))
    assert not rep.monotone


def test_pwa_always_monotone():
    assert is_monotone(Space(2), abs_op(2)).monotone


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        is_monotone(Space(2), LinearOp([[1.0]]))


def test_maximal_examples():
    assert is_maximal_minty(Space(1), LinearOp([[1.0]]))
    assert is_maximal_minty(Space(2), LinearOp(ROT))
    assert is_maximal_minty(Space(1), abs_op(1))
    with pytest.raises(UnsupportedError, match="finite graphs"):
        is_maximal_minty(Space(1), FiniteGraph([[0.0]], [[0.0]]))
    with pytest.raises(UnsupportedError):
        is_maximal_minty(Space(1, 3.0), LinearOp([[1.0]]))


def test_sample_graph_examples():
    g = sample_graph(Space(1), LinearOp([[1.0]]), Grid(-1, 1, 3))
    assert sorted(zip(g.xs[:, 0], g.xstars[:, 0])) == [(-1, -1), (0, 0), (1, 1)]
    g = sample_graph(Space(1), abs_op(1), Grid(-1, 1, 5))
    at_zero = g.xstars[np.isclose(g.xs[:, 0], 0.0), 0]
    assert at_zero.min() == pytest.approx(-1.0) and at_zero.max() == pytest.approx(1.0)
    assert len(at_zero) >= 3
    with pytest.raises(ContractError):
        sample_graph(Space(1), LinearOp([[1.0]]), Grid(-1, 1, 0))


def test_sample_graph_pwa_dim3_unsupported():
    op = PwaSubdiff(np.eye(3), np.zeros(3))
    with pytest.raises(UnsupportedError):
        sample_graph(Space(3), op)


@pytest.mark.parametrize("seed", range(5))
def test_sample_graph_is_monotone(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    A = random_monotone_matrix(rng, n)
    assert is_monotone(Space(n), sample_graph(Space(n), LinearOp(A))).monotone
    J = int(rng.integers(2, 6))
    op = PwaSubdiff(rng.normal(size=(J, n)), rng.normal(size=J))
    assert is_monotone(Space(n), sample_graph(Space(n), op, Grid(-2, 2, 7))).monotone


def test_resolve_examples():
    res = resolve(Space(1), LinearOp([[1.0]]), PDPoint([0.0], [2.0]))
    assert res.m.allclose(PDPoint([1.0], [1.0]), atol=1e-12)
    assert res.residual == pytest.approx(0.0, abs=1e-12)
    res = resolve(Space(1), FiniteGraph([[0.0]], [[0.0]]), PDPoint([1.0], [1.0]))
    assert res.m.allclose(PDPoint([0.0], [0.0]))
    assert res.residual == pytest.approx(2.0)
    b = PDPoint([0.3], [0.3])
    res = resolve(Space(1), LinearOp([[1.0]]), b)
    assert res.m.allclose(b, atol=1e-12) and res.residual <= 1e-12


def test_resolve_ties_lowest_index():
    op = FiniteGraph([[1.0], [-1.0]], [[1.0], [-1.0]])
    assert resolve(Space(1), op, PDPoint([0.0], [0.0])).index == 0


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("seed", range(4))
def test_resolve_linear_quasidense(p, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    op = LinearOp(random_monotone_matrix(rng, n))
    b = PDPoint(rng.normal(size=n), rng.normal(size=n))
    res = resolve(Space(n, p), op, b)
    assert res.residual <= 1e-8
    assert contains(op, res.m, tol=1e-7)


@pytest.mark.parametrize("seed", range(4))
def test_resolve_pwa(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    op = PwaSubdiff(rng.normal(size=(4, n)), rng.normal(size=4))
    b = PDPoint(rng.normal(size=n), rng.normal(size=n))
    res = resolve(Space(n), op, b)
    assert res.residual <= 1e-8
    assert contains(op, res.m, tol=1e-7)


@settings(max_examples=25)
@given(st.integers(0, 10_000), st.integers(2, 7))
def test_monotone_permutation_invariant(seed, k):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    xs, xss = rng.normal(size=(k, n)), rng.normal(size=(k, n))
    perm = rng.permutation(k)
    a = is_monotone(Space(n), FiniteGraph(xs, xss))
    b = is_monotone(Space(n), FiniteGraph(xs[perm], xss[perm]))
    assert a.monotone == b.monotone
    assert a.min_value == pytest.approx(b.min_value, abs=1e-12)
    again = is_monotone(Space(n), FiniteGraph(xs, xss))
    if not a.monotone:
        d, e = a.violating_pair
        d2, e2 = again.violating_pair
        assert d.allclose(d2, atol=0) and e.allclose(e2, atol=0)
        assert q(d - e) < 0


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_member_points_have_zero_residual(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    g = random_finite_graph(rng, 5, n)
    for m in g.points:
        assert resolve(Space(n), g, m).residual == pytest.approx(0.0, abs=1e-12)
    A = random_monotone_matrix(rng, n)
    x = rng.normal(size=n)
    m = PDPoint(x, A @ x)
    assert resolve(Space(n), LinearOp(A), m).residual <= 1e-10


def test_resolve_residual_matches_r():
    rng = np.random.default_rng(7)
    g = random_finite_graph(rng, 6, 2)
    b = PDPoint(rng.normal(size=2), rng.normal(size=2))
    res = resolve(Space(2), g, b)
    assert res.residual == pytest.approx(min(r(Space(2), m - b) for m in g.points))
