import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import abs_op, rand_pd, random_monotone_matrix
from monokit import (
    BudgetError, ContractError, DualPoint, FiniteGraph, LinearOp, PDPoint, Space, UnsupportedError,
    equivalence_certificate, eqthm_report, quasidensity_gap, solve_surjectivity, suffthm_iterate,
)
from monokit.operators import contains
from monokit.spaces import iso_L, norm_B
from monokit.transforms import p_transform

S1 = Space(1)
ID1 = LinearOp([[1.0]])
ROT = LinearOp([[0.0, -1.0], [1.0, 0.0]])


def pd(x, xs):
    return PDPoint([x], [xs])


def test_gap_examples():
    assert quasidensity_gap(S1, ID1, pd(0, 2)) == pytest.approx(0.0, abs=1e-12)
    assert quasidensity_gap(S1, FiniteGraph([[0.0]], [[0.0]]), pd(1, 1)) == pytest.approx(2.0)
    assert quasidensity_gap(S1, ID1, pd(-0.4, -0.4)) == pytest.approx(0.0, abs=1e-12)


def test_iterate_examples():
    c1 = pd(1, -1)
    tr = suffthm_iterate(S1, ID1, c1, 0.1)
    assert tr.p_c1 == pytest.approx(1.0)
    assert norm_B(S1, tr.limit_m - c1) <= 2 + 1e-9
    assert tr.bound_ok
    m = pd(0.3, 0.3)
    tr = suffthm_iterate(S1, ID1, m, 0.1)
    assert len(tr.c_sequence) == 1 and tr.limit_m.allclose(m, atol=1e-12)


def test_iterate_contract():
    with pytest.raises(ContractError):
        suffthm_iterate(S1, ID1, pd(1, 0), 1.5)
    with pytest.raises(ContractError):
        suffthm_iterate(S1, ID1, pd(1, 0), 0.1, oracle="newton")


def test_iterate_budget_failure_reports_step():
    def lazy(space, op, c, n, eta):
        return c  # never moves: P(c) + r(0) = P(c) misses the budget
    with pytest.raises(BudgetError) as info:
        suffthm_iterate(S1, ID1, pd(1, -1), 0.3, oracle=lazy)
    assert info.value.step == 1


@settings(max_examples=20)
@given(st.integers(0, 10_000), st.sampled_from([0.1, 0.3, 0.6]), st.sampled_from(["resolvent", "relaxed"]))
def test_iteration_bounds(seed, eta, oracle):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    op = LinearOp(random_monotone_matrix(rng, n))
    sp = Space(n)
    c1 = rand_pd(rng, n)
    tr = suffthm_iterate(sp, op, c1, eta, oracle=oracle)
    for i, step in enumerate(tr.step_norms):
        nn = i + 1
        if nn >= 2:
            assert step <= 4 * eta ** nn + 1e-12
        assert tr.budgets[i] < eta ** (2 * nn + 2) + 1e-12
    assert 0.25 * norm_B(sp, tr.limit_m - c1) ** 2 <= p_transform(sp, op, c1).value + 1e-6
    assert contains(op, tr.limit_m, tol=1e-6)
    assert tr.bound_ok


@pytest.mark.parametrize("op,n", [(ID1, 1), (ROT, 2), (LinearOp(np.eye(3)), 3)])
def test_certificate_maximal(op, n):
    cert = equivalence_certificate(Space(n), op, n_samples=50, seed=0)
    assert cert.consistent and all(cert.holds.values())
    assert cert.cond_a_gap_max <= 1e-5 and cert.cond_b_minG >= -1e-5 and cert.cond_c_minF >= -1e-5
    assert cert.cond_d_maxPboxR <= 1e-5 and cert.cond_e_minFboxRt >= -1e-5
    assert len(cert.samples_primal) == 50


def test_certificate_deterministic():
    a = equivalence_certificate(Space(2), ROT, n_samples=10, seed=4)
    b = equivalence_certificate(Space(2), ROT, n_samples=10, seed=4)
    assert a.cond_b_minG == b.cond_b_minG
    assert all(x.allclose(y, atol=0) for x, y in zip(a.samples_primal, b.samples_primal))


def test_certificate_nonmaximal_warns():
    cert = equivalence_certificate(S1, FiniteGraph([[0.0]], [[0.0]]), n_samples=20, seed=0)
    assert cert.warnings
    assert not cert.holds["a"]


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_certificate_other_exponents(p):
    cert = equivalence_certificate(Space(2, p), ROT, n_samples=20, seed=1)
    assert cert.consistent and all(cert.holds.values())


def test_certificate_pwa():
    cert = equivalence_certificate(S1, abs_op(1), n_samples=20, seed=2)
    assert cert.consistent and all(cert.holds.values())


def test_eqthm_examples():
    rep = eqthm_report(S1, ID1, DualPoint([1.0], [1.0]))
    c = rep["conditions"]
    assert c["a"]["holds"] and c["b"]["holds"] and c["e"]["holds"] and c["f"]["holds"]
    assert rep["member"] and not rep["hard_failure"]
    for key in "cdgh":
        assert c[key]["status"] in ("consistent", "inconclusive", "unevaluated")
        assert c[key]["approximate"] is True
    rep = eqthm_report(S1, ID1, DualPoint([1.0], [0.0]))
    c = rep["conditions"]
    assert not c["a"]["holds"] and c["a"]["value"] == pytest.approx(0.25)
    assert not c["e"]["holds"] and c["e"]["value"] == math.inf
    assert not rep["member"] and not rep["hard_failure"]
    m = pd(-0.6, -0.6)
    rep = eqthm_report(S1, ID1, iso_L(m))
    assert all(rep["conditions"][k]["holds"] for k in "abef")


def test_eqthm_nonmember_refutes_grid_conditions():
    rep = eqthm_report(S1, ID1, DualPoint([1.0], [0.0]))
    # (G [] q~)(b*) has a grid upper bound below 0 off the graph
    assert rep["conditions"]["c"]["status"] in ("refuted", "inconclusive")


@pytest.mark.parametrize("x,xs,ystar", [(0.0, 3.0, 1.5), (2.0, 0.0, 1.0), (0.0, 0.0, 0.0)])
def test_solve_examples(x, xs, ystar):
    out = solve_surjectivity(S1, ID1, [x], [xs])
    assert out["ok"]
    assert out["ystar"][0] == pytest.approx(ystar, abs=1e-12)
    assert out["ystarstar"][0] == pytest.approx(ystar, abs=1e-12)


def test_solve_rockafellar_exact():
    out = solve_surjectivity(S1, ID1, [0.0], [3.0])
    assert out["ystarstar"][0] == 1.5
    y = out["ystarstar"][0]
    assert y + y == 3.0  # S y + J y


def test_solve_rejects_finite_graph():
    with pytest.raises(UnsupportedError):
        solve_surjectivity(S1, FiniteGraph([[0.0]], [[0.0]]), [0.0], [1.0])


@pytest.mark.maximal_only
@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_solve_random(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    op = LinearOp(random_monotone_matrix(rng, n))
    out = solve_surjectivity(Space(n), op, rng.normal(size=n), rng.normal(size=n))
    assert out["ok"]
    assert out["residuals"]["graph"] <= 1e-8 and abs(out["residuals"]["rt_defect"]) <= 1e-8
