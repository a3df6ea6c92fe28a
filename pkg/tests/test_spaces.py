import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import space_and_points
from monokit import ContractError, DimensionError, DualPoint, PDPoint, Space
from monokit.spaces import (
    duality_map, iso_L, iso_Lt, jc_conjugate, norm, norm_B, norm_Bstar, pair, pair_dual, q, qt, r,
    reflect, rt,
)
from oracles import grid_sup, lp_norm

TOL = 1e-9


# ---------------------------------------------------------------------------
# examples


@pytest.mark.parametrize("p,v,side,expected", [
    (2.0, [3.0, 4.0], "primal", 5.0),
    (3.0, [0.0, 0.0, 0.0], "primal", 0.0),
    (3.0, [1.0, 1.0], "primal", 2 ** (1 / 3)),
    (3.0, [1.0, 1.0], "dual", 2 ** (2 / 3)),   # p' = 3/2
])
def test_norm_examples(p, v, side, expected):
    assert norm(Space(len(v), p), v, side) == pytest.approx(expected, abs=1e-12)


def test_norm_dimension_mismatch():
    with pytest.raises(DimensionError):
        norm(Space(2), [1.0, 2.0, 3.0])


@pytest.mark.parametrize("bad", [dict(dim=0), dict(dim=2, p=1.0), dict(dim=2, p=math.inf), dict(dim=1.5)])
def test_space_contract(bad):
    with pytest.raises(ContractError):
        Space(**bad)


def test_duality_map_examples():
    assert np.allclose(duality_map(Space(2), [5.0, -2.0]), [5.0, -2.0])
    w = duality_map(Space(2, 3.0), [1.0, 1.0])
    assert np.allclose(w, [2 ** (-1 / 3)] * 2, atol=1e-12)
    assert float(np.dot([1.0, 1.0], w)) == pytest.approx(2 ** (2 / 3), abs=1e-12)
    assert np.allclose(duality_map(Space(3, 1.5), np.zeros(3)), 0.0)


def test_form_examples():
    assert q(PDPoint([2.0], [3.0])) == 6.0
    assert q(PDPoint([1.0, 0.0], [0.0, 1.0])) == 0.0
    Lb = iso_L(PDPoint([1.0], [2.0]))
    assert Lb.ystar.tolist() == [2.0] and Lb.ystarstar.tolist() == [1.0]
    d = DualPoint([3.0], [4.0])
    assert qt(d) == 12.0 and qt(reflect(d)) == -12.0
    sp = Space(1)
    assert r(sp, PDPoint([1.0], [-1.0])) == 0.0
    assert r(sp, PDPoint([1.0], [1.0])) == 2.0


def test_jc_conjugate_examples():
    sp = Space(1)
    assert jc_conjugate(sp, PDPoint([1.0], [0.0]), DualPoint([2.0], [0.0])) == pytest.approx(4.0)
    assert jc_conjugate(sp, PDPoint([3.0], [-1.0]), DualPoint([0.0], [0.0])) == 0.0
    a = DualPoint([1.0], [-2.0])
    assert jc_conjugate(sp, PDPoint([0.0], [0.0]), a) == pytest.approx(0.5 * 5.0)


def test_qt_shift_anchor():
    b, bs = PDPoint([1.0], [2.0]), DualPoint([3.0], [4.0])
    assert qt(iso_L(b) - bs) == pytest.approx(3.0)
    assert q(b) - pair(b, bs) + qt(bs) == pytest.approx(3.0)


# ---------------------------------------------------------------------------
# properties


@given(space_and_points(n_points=2), st.floats(-3, 3), st.floats(-3, 3))
def test_q_expansion(data, lam, mu):
    _, (d, e), _ = data
    lhs = q(lam * d - mu * e)
    rhs = lam ** 2 * q(d) - lam * mu * pair(d, iso_L(e)) + mu ** 2 * q(e)
    assert abs(lhs - rhs) <= TOL * (1 + abs(lhs))


@given(space_and_points(n_points=2), st.floats(0, 1))
def test_weighted_parallelogram(data, lam):
    _, (d, e), _ = data
    mu = 1 - lam
    lhs = q(lam * d + mu * e) + lam * mu * q(d - e)
    rhs = lam * q(d) + mu * q(e)
    assert abs(lhs - rhs) <= TOL * (1 + abs(lhs))


@given(space_and_points(n_points=2))
def test_q_sum_bound(data):
    sp, (d, e), _ = data
    assert q(d + e) <= q(d) + norm_B(sp, d) * norm_B(sp, e) + q(e) + TOL


@given(space_and_points(n_points=1))
def test_q_bounded_by_half_norm_sq(data):
    sp, (b,), _ = data
    assert abs(q(b)) <= 0.5 * norm_B(sp, b) ** 2 + TOL


@given(space_and_points(n_points=1, n_dual=1))
def test_qt_shift_identity(data):
    _, (b,), (bs,) = data
    lhs = qt(iso_L(b) - bs)
    rhs = q(b) - pair(b, bs) + qt(bs)
    assert abs(lhs - rhs) <= TOL * (1 + abs(lhs))


@given(space_and_points(n_points=0, n_dual=2), st.floats(-3, 3), st.floats(-3, 3))
def test_qt_expansion(data, lam, mu):
    _, _, (d, e) = data
    lhs = qt(lam * d - mu * e)
    rhs = lam ** 2 * qt(d) - lam * mu * pair_dual(d, e) + mu ** 2 * qt(e)
    assert abs(lhs - rhs) <= TOL * (1 + abs(lhs))


@given(space_and_points(n_points=0, n_dual=3), st.floats(0, 1))
def test_qt_weighted_parallelogram(data, lam):
    _, _, (c, d, e) = data
    mu = 1.0 - lam
    lhs = qt(c - (lam * d + mu * e)) + lam * mu * qt(e - d)
    rhs = lam * qt(c - d) + mu * qt(c - e)
    assert abs(lhs - rhs) <= TOL * (1 + abs(lhs))


@given(space_and_points(n_points=2, n_dual=0))
def test_L_preserves_pairing(data):
    _, (b, c), _ = data
    assert pair(b, iso_L(c)) == pytest.approx(pair(c, iso_L(b)), abs=TOL)
    # <L b, L~ L c> = <b, L c>
    assert pair_dual(iso_L(b), iso_L(c)) == pytest.approx(pair(b, iso_L(c)), abs=TOL)


@given(space_and_points(n_points=0, n_dual=2))
def test_dual_pairing_symmetric(data):
    _, _, (d, e) = data
    assert pair_dual(d, e) == pytest.approx(pair_dual(e, d), abs=TOL)
    assert pair(iso_Lt(d), e) == pytest.approx(pair_dual(d, e), abs=TOL)


@given(space_and_points(n_points=1, n_dual=1))
def test_r_bounds_and_L(data):
    sp, (b,), (bs,) = data
    assert -TOL <= r(sp, b) <= norm_B(sp, b) ** 2 + TOL
    assert -TOL <= rt(sp, bs) <= norm_Bstar(sp, bs) ** 2 + TOL
    assert qt(iso_L(b)) == pytest.approx(q(b), abs=TOL)
    assert rt(sp, iso_L(b)) == pytest.approx(r(sp, b), abs=TOL * (1 + r(sp, b)))
    assert qt(reflect(bs)) == pytest.approx(-qt(bs), abs=TOL)
    assert iso_Lt(iso_L(b)).allclose(b, atol=0)


@given(space_and_points(n_points=1), st.sampled_from(["primal", "dual"]))
def test_duality_map_defect(data, side):
    sp, (b,), _ = data
    z = b.x
    w = duality_map(sp, z, side)
    other = "dual" if side == "primal" else "primal"
    nz = norm(sp, z, side)
    defect = 0.5 * nz ** 2 + 0.5 * norm(sp, w, other) ** 2 - float(z @ w)
    assert abs(defect) <= 1e-10 * (1 + nz ** 2)
    assert norm(sp, w, other) == pytest.approx(nz, rel=1e-12, abs=1e-12)


@given(space_and_points(n_points=1))
def test_norm_matches_reference(data):
    sp, (b,), _ = data
    assert norm(sp, b.x) == pytest.approx(lp_norm(b.x, sp.p), rel=1e-12, abs=1e-300)
    assert norm(sp, b.xstar, "dual") == pytest.approx(lp_norm(b.xstar, sp.p_dual), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("seed", range(3))
def test_jc_conjugate_against_grid_sup(p, seed):
    rng = np.random.default_rng(seed)
    sp = Space(1, p)
    c = PDPoint(rng.uniform(-1, 1, 1), rng.uniform(-1, 1, 1))
    a = DualPoint(rng.uniform(-1, 1, 1), rng.uniform(-1, 1, 1))

    def fun(X):
        diff_x, diff_xs = c.x[0] - X[:, 0], c.xstar[0] - X[:, 1]
        nb2 = np.abs(diff_x) ** 2 + np.abs(diff_xs) ** 2  # dim 1: all l_p norms coincide
        return X[:, 0] * a.ystar[0] + X[:, 1] * a.ystarstar[0] - 0.5 * nb2

    est, _ = grid_sup(fun, 2)
    assert abs(est - jc_conjugate(sp, c, a)) <= 1e-4
