import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reachcert.synth.lp import LpProblem, solve_lp


def vertex_oracle(c, G, h):
    """Minimize c.z over {G z >= h} by enumerating every basic solution."""
    n = G.shape[1]
    best = None
    for idx in itertools.combinations(range(G.shape[0]), n):
        B = G[list(idx)]
        if abs(np.linalg.det(B)) < 1e-10:
            continue
        z = np.linalg.solve(B, h[list(idx)])
        if np.all(G @ z >= h - 1e-9):
            val = float(c @ z)
            if best is None or val < best:
                best = val
    return best


def test_maximize_single_variable():
    res = solve_lp(LpProblem([1.0], [[-1.0]], [-1.0], sense="max"))
    assert res.status == "optimal" and res.objective == pytest.approx(1.0, abs=1e-12)


def test_contradictory_rows_are_infeasible():
    res = solve_lp(LpProblem([1.0], [[-1.0], [1.0]], [-1.0, 2.0]))
    assert res.status == "infeasible"


def test_unbounded():
    res = solve_lp(LpProblem([1.0, 0.0], [[0.0, 1.0]], [0.0]))
    assert res.status == "unbounded"


def test_bounds_act_as_rows():
    res = solve_lp(LpProblem([1.0, -1.0], np.zeros((0, 2)), [], lower=[-2, -3], upper=[5, 4]))
    assert res.status == "optimal"
    np.testing.assert_allclose(res.x, [-2, 4], atol=1e-10)


def test_zero_row_with_positive_rhs():
    assert solve_lp(LpProblem([1.0], [[0.0]], [1.0])).status == "infeasible"


def test_rejects_bad_data():
    with pytest.raises(ValueError):
        LpProblem([1.0], [[np.nan]], [0.0])
    with pytest.raises(ValueError):
        LpProblem([1.0], [[1.0]], [0.0, 1.0])
    with pytest.raises(ValueError):
        LpProblem([1.0], [[1.0]], [0.0], sense="up")


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_random_bounded_lps_match_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n, m = 3, 8
    G = rng.normal(size=(m, n))
    h = rng.normal(size=m) - 1.0
    c = rng.normal(size=n)
    lp = LpProblem(c, G, h, lower=-np.full(n, 5.0), upper=np.full(n, 5.0))
    res = solve_lp(lp)
    Gb = np.vstack([G, np.eye(n), -np.eye(n)])
    hb = np.concatenate([h, -np.full(n, 5.0), -np.full(n, 5.0)])
    want = vertex_oracle(c, Gb, hb)
    if want is None:
        assert res.status == "infeasible"
    else:
        assert res.status == "optimal"
        assert res.objective == pytest.approx(want, abs=1e-8)
        assert lp.residual(res.x) <= 1e-8


def test_random_10x6_against_oracle():
    rng = np.random.default_rng(7)
    for _ in range(5):
        G = rng.normal(size=(10, 6))
        h = rng.normal(size=10) - 1.0
        c = rng.normal(size=6)
        lp = LpProblem(c, G, h, lower=-np.full(6, 3.0), upper=np.full(6, 3.0))
        res = solve_lp(lp)
        Gb = np.vstack([G, np.eye(6), -np.eye(6)])
        hb = np.concatenate([h, -np.full(6, 3.0), -np.full(6, 3.0)])
        want = vertex_oracle(c, Gb, hb)
        assert (res.status == "optimal") == (want is not None)
        if want is not None:
            assert res.objective == pytest.approx(want, abs=1e-8)


def test_deterministic():
    rng = np.random.default_rng(3)
    lp = LpProblem(rng.normal(size=4), rng.normal(size=(30, 4)), rng.normal(size=30) - 2,
                   lower=-np.ones(4), upper=np.ones(4))
    a, b = solve_lp(lp), solve_lp(lp)
    assert a.status == b.status and np.array_equal(a.x, b.x)
