import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from monokit import FiniteGraph, LinearOp, PDPoint, DualPoint, PwaSubdiff, Space  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

PS = (1.5, 2.0, 3.0)
finite = st.floats(min_value=-5, max_value=5, allow_nan=False, allow_infinity=False)


def vec(n):
    return st.lists(finite, min_size=n, max_size=n).map(np.array)


@st.composite
def space_and_points(draw, n_points=2, n_dual=0, ps=PS):
    n = draw(st.integers(1, 5))
    p = draw(st.sampled_from(ps))
    pts = [PDPoint(draw(vec(n)), draw(vec(n))) for _ in range(n_points)]
    duals = [DualPoint(draw(vec(n)), draw(vec(n))) for _ in range(n_dual)]
    return Space(n, p), pts, duals


def random_monotone_matrix(rng, n, skew=1.0):
    """PSD symmetric part plus a skew part; ``I + A`` is invertible."""
    Bm = rng.normal(size=(n, n))
    K = rng.normal(size=(n, n))
    return Bm @ Bm.T / n + 0.1 * np.eye(n) + skew * (K - K.T) / 2


def random_finite_graph(rng, k, n):
    """Points of a random monotone linear graph, hence pairwise monotone."""
    A = random_monotone_matrix(rng, n)
    X = rng.uniform(-1.5, 1.5, size=(k, n))
    return FiniteGraph(X, X @ A.T)


def abs_op(n=1):
    """``f(x) = sum |x_i|`` for n <= 2 written as a max of affine pieces."""
    if n == 1:
        return PwaSubdiff([[1.0], [-1.0]], [0.0, 0.0])
    signs = np.array([[s1, s2] for s1 in (1, -1) for s2 in (1, -1)], dtype=float)
    return PwaSubdiff(signs, np.zeros(4))


def rand_pd(rng, n, box=2.0):
    return PDPoint(rng.uniform(-box, box, n), rng.uniform(-box, box, n))


def rand_dual(rng, n, box=2.0):
    return DualPoint(rng.uniform(-box, box, n), rng.uniform(-box, box, n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def id1():
    return Space(1), LinearOp([[1.0]])


ACCEPTANCE_COUNT = 11


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    tr = terminalreporter
    crashed = {rep.nodeid for key in ("failed", "error") for rep in tr.stats.get(key, [])}
    tr.section("acceptance criteria")
    for n in range(1, ACCEPTANCE_COUNT + 1):
        if n in mod.RESULTS:
            ok, detail = mod.RESULTS[n]
            tr.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {detail}")
        elif any(f"test_c{n:02d}_" in nid for nid in crashed):
            tr.write_line(f"[FAIL] criterion {n:2d}: raised before completing")
        else:
            tr.write_line(f"[SKIP] criterion {n:2d}: not run")
