import numpy as np
import pytest
from hypothesis import given, strategies as st

from reachcert.model import RegionSpec
from reachcert.outcome import Status
from reachcert.poly import Polynomial, evaluate, evaluate_many, parse_poly
from reachcert.regioncheck import SignObligation, bound_infimum, bound_supremum, prove_sign


def region(*intervals):
    return RegionSpec.from_lists(1, [[list(iv)] for iv in intervals])


def test_disproved_with_center_witness():
    ob = SignObligation(parse_poly("0.75*x^2 - 0.0025", ["x"]), region((-0.1, 0.1)))
    out = prove_sign(ob)
    assert out.status is Status.DISPROVED
    assert out.witness == (0.0,)
    assert out.value == pytest.approx(-0.0025, abs=1e-15)


def test_proved_and_sense():
    p = parse_poly("x^2 - 2*x + 1.5", ["x"])
    assert prove_sign(SignObligation(p, region((-3, 3)))).proved
    assert prove_sign(SignObligation(-p, region((-3, 3)), "<=0")).proved


def test_touching_zero_is_proved_within_margin():
    p = parse_poly("x^2", ["x"])
    assert prove_sign(SignObligation(p, region((-1, 1)))).proved


def test_unknown_when_violation_below_margin():
    # minimum -1e-10 at x=0.3: not provable, not a witness beyond the margin
    p = parse_poly("(x - 0.3)^2 - 1e-10", ["x"])
    out = prove_sign(SignObligation(p, region((0, 1)), margin=0.0), depth_limit=6)
    assert out.status is Status.UNKNOWN
    assert any(b.contains_point((0.3,)) for b in out.frontier)


def test_multi_piece_region_checks_each_piece():
    p = parse_poly("x - 1", ["x"])
    out = prove_sign(SignObligation(p, region((2, 3), (0, 0.5))))
    assert out.status is Status.DISPROVED and 0 <= out.witness[0] <= 0.5


def test_deterministic_frontier():
    p = parse_poly("(x - 0.3)^2 - 1e-10", ["x"])
    ob = SignObligation(p, region((0, 1)), margin=0.0)
    a, b = prove_sign(ob, 8), prove_sign(ob, 8)
    assert a.to_dict() == b.to_dict()


def test_obligation_validation():
    with pytest.raises(ValueError):
        SignObligation(parse_poly("x", ["x"]), region((0, 1)), sense=">0")
    with pytest.raises(ValueError):
        SignObligation(parse_poly("x", ["x"]), region((0, 1)), margin=-1)


coeff = st.floats(-3, 3, allow_nan=False)


@given(st.lists(coeff, min_size=2, max_size=6), st.floats(-1, 0), st.floats(0.01, 1))
def test_bounds_bracket_sampled_extremes(cs, a, w):
    p = Polynomial(1, {(i,): c for i, c in enumerate(cs)})
    reg = region((a, a + w))
    vals = evaluate_many(p, np.linspace(a, a + w, 2001)[:, None])
    assert bound_supremum(p, reg) >= vals.max() - 1e-12
    assert bound_infimum(p, reg) <= vals.min() + 1e-12
    # and it is close
    assert bound_supremum(p, reg) <= vals.max() + 1e-3


@given(st.lists(coeff, min_size=2, max_size=6), st.floats(-0.5, 0.5))
def test_witness_always_violates(cs, shift):
    p = Polynomial(1, {(i,): c for i, c in enumerate(cs)}) + shift
    out = prove_sign(SignObligation(p, region((-1, 1))))
    if out.status is Status.DISPROVED:
        assert evaluate(p, out.witness) < -1e-9
    if out.proved:
        vals = evaluate_many(p, np.linspace(-1, 1, 4001)[:, None])
        assert vals.min() >= -1e-9
