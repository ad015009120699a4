import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from reachcert.certify import (
    BOUND_KIND, REQUIRED_PARAMS, Certificate, CertifyError, EmbeddingError, PropositionId, certified_bound,
    certificate_from_dict, certificate_to_dict, check_certificate, compile_obligations, embed_p2,
    embed_supermartingale, embed_zero_w, embedding_scale, load_certificate,
)
from reachcert.model import problem_from_dict
from reachcert.outcome import Status
from reachcert.poly import Polynomial, evaluate, parse_poly

from conftest import fixture_path

X = ["x"]
P = PropositionId


def cert(prop, v, w=None, **params):
    return Certificate(prop, parse_poly(v, X), parse_poly(w, X) if w else None, params)


def test_c1_on_model_c(problems):
    spec = problems("model-c")
    c = load_certificate(fixture_path("c1.cert"), spec)
    rep = check_certificate("P1", c, spec)
    assert rep.status is Status.PROVED
    assert [o.status for _, o in rep.obligations] == [Status.PROVED] * 4
    assert rep.bound.value == 0.0124 and rep.bound.kind == "upper" and rep.bound.horizon is None


def test_p7_zero_w_fails_at_origin_on_model_a(problems):
    spec = problems("model-a")
    rep = check_certificate("P7", cert("P7", "x^2/0.81", "0", eps2=0.0124), spec)
    second = rep.obligations[1][1]
    assert second.status is Status.DISPROVED
    assert abs(second.witness[0]) < 0.05
    assert rep.bound is None


def test_trivial_p6_when_target_covers_domain():
    spec = problem_from_dict({
        "state_vars": ["x"], "dist_vars": ["t"], "dynamics": ["0.5*x + t"], "support": [[0]], "probs": [1],
        "X": [[[0, 1]]], "X0": [[[0.5, 1]]], "Xr": [[[0, 1]]],
    })
    rep = check_certificate("P6", cert("P6", "1", "0", eps1=1.0), spec)
    assert rep.status is Status.PROVED and rep.bound.value == 1.0


def test_p3_almost_sure_on_islands(problems):
    spec = problems("model-d")
    rep = check_certificate("P3", cert("P3", "-2*x + 6", c=3.0), spec)
    assert rep.status is Status.PROVED
    assert rep.bound.kind == "almost-sure" and rep.bound.value == 1.0


def test_invariance_required_for_p1(problems):
    spec = problems("model-b")
    rep = check_certificate("P1", cert("P1", "x/9", eps2=0.6), spec)
    assert rep.status is not Status.PROVED
    assert rep.bound is None
    assert any("P6" in n for n in rep.notes)


def test_xhat_family_uses_containment(problems):
    spec = problems("model-f")
    assert check_certificate("P9", cert("P9", "0", eps1=0.0, **{"lambda": 1.0}), spec).assumptions[0][1].proved


@pytest.mark.parametrize("prop, params, value", [
    ("P4", {"k": 2, "eps2_prime": 0.1, "c": 0.05}, 0.25),
    ("P10", {"lambda": 1.0, "N": 3, "eps2_prime": 0.1}, 0.8),
    ("P13", {"k": 1, "eps1_prime": 0.3}, 0.7),
    ("P15", {"k": 3, "c": 0.02, "eps2_prime": 0.1}, 0.12),
])
def test_bound_formulas_reproduce_exactly(prop, params, value):
    assert certified_bound(prop, params).value == value


@given(st.floats(0, 1), st.floats(0, 1))
def test_k_equals_one_degenerates(e, c):
    assert certified_bound("P4", {"k": 1, "eps2_prime": e, "c": c}).value == e
    assert certified_bound("P14", {"k": 1, "eps2_prime": e, "c": c}).value == e
    exact = float(1 - Fraction(repr(e)))
    assert certified_bound("P5", {"k": 1, "eps1_prime": e, "c": c, "delta": 0.1}).value == exact
    assert certified_bound("P13", {"k": 1, "eps1_prime": e}).value == exact


def test_remaining_closed_forms():
    assert certified_bound("P11", {"alpha_tilde": 1.0, "beta_tilde": 0.01, "eps2_prime": 0.1, "N": 5}).value \
        == pytest.approx(0.15, abs=1e-16)
    b = certified_bound("P11", {"alpha_tilde": 0.5, "beta_tilde": 0.1, "eps2_prime": 0.1, "N": 2}).value
    # 0.1*4 + (1-4)*0.05/(-0.5)
    assert b == pytest.approx(0.7, abs=1e-15)
    b = certified_bound("P12", {"alpha_tilde": 0.5, "beta_tilde": 0.1, "eps2_prime": 0.1, "N": 2}).value
    # (0.1*4*0.5 + 0.05*4) / (1 + 0.05 - 0.5)
    assert b == pytest.approx(0.4 / 0.55, rel=1e-15)
    assert certified_bound("P14-alpha", {"alpha": 0.5, "k": 3, "eps2_prime": 0.1}).value == pytest.approx(0.175)
    assert certified_bound("P14-alpha", {"alpha": 1.0, "k": 3, "eps2_prime": 0.1}).value == pytest.approx(0.3)
    assert certified_bound("P5", {"k": 2, "eps1_prime": 0.1, "c": 0.05, "delta": 0.1}).value == pytest.approx(0.75)


@pytest.mark.parametrize("prop, params, message", [
    ("P9", {"eps1": 0.5, "lambda": 0.0}, "lambda"),
    ("P11", {"eps2_prime": 0.1, "alpha_tilde": 1.5, "beta_tilde": 0.0, "N": 1}, "alpha_tilde"),
    ("P12", {"eps2_prime": 0.1, "alpha_tilde": 1.0, "beta_tilde": 0.0, "N": 1}, "alpha_tilde"),
    ("P4", {"eps2_prime": 0.1, "k": 0, "c": 0.0}, "k must"),
    ("P4", {"eps2_prime": 1.5, "k": 1, "c": 0.0}, "eps2_prime"),
    ("P2", {"eps1": 0.5, "delta": 0.0}, "delta"),
    ("P3", {"c": 0.0}, "c must"),
    ("P1", {}, "eps2"),
])
def test_parameter_errors(prop, params, message):
    with pytest.raises(CertifyError, match=message):
        certified_bound(prop, params)


def test_unknown_parameter_and_proposition():
    with pytest.raises(CertifyError):
        Certificate("P1", Polynomial.zero(1), None, {"epsilon": 1})
    with pytest.raises(CertifyError):
        PropositionId.parse("P16")


def test_obligation_counts(problems):
    a, f = problems("model-a"), problems("model-f")
    zero = Polynomial.zero(1)
    assert len(compile_obligations("P7", Certificate("P7", zero, zero, {"eps2": 0}), a)) == 4
    assert len(compile_obligations("P8", Certificate("P8", zero, zero, {"eps2": 0}), f)) == 5
    assert len(compile_obligations("P6-xhat", Certificate("P6-xhat", zero, zero, {"eps1": 0}), f)) == 5
    with pytest.raises(CertifyError):
        compile_obligations("P6-xhat", Certificate("P6-xhat", zero, zero, {"eps1": 0}), a)
    stopped = compile_obligations("P15", Certificate("P15", zero, zero, {"eps2_prime": 0, "k": 2, "c": 0}), a)
    assert [o.stopped_k for o in stopped].count(2) == 1


def test_every_proposition_has_kind_and_params():
    for p in P:
        assert p in BOUND_KIND and p in REQUIRED_PARAMS


def test_embeddings(problems):
    c = problems("model-c")
    p1 = load_certificate(fixture_path("c1.cert"), c)
    p7 = embed_zero_w(p1, c)
    rep = check_certificate("P7", p7, c)
    assert rep.status is Status.PROVED
    assert rep.bound.value == 0.0124

    e = problems("model-e")
    p2 = cert("P2", "x", eps1=0.4, delta=0.05)
    assert check_certificate("P2", p2, e).status is Status.PROVED
    p6 = embed_p2(p2, e)
    rep6 = check_certificate("P6", p6, e)
    assert rep6.status is Status.PROVED and rep6.bound.value == 0.4
    assert embedding_scale(1.0, 0.05) == 40.0
    with pytest.raises(EmbeddingError):
        embed_supermartingale(p1, 1.0)
    with pytest.raises(EmbeddingError):
        embed_zero_w(p2, e)


def test_certificate_text_round_trip(problems):
    spec = problems("model-a")
    c = Certificate("P8", parse_poly("0.1 + x^2/3", X), parse_poly("-x", X), {"eps2": 1 / 3})
    d = json.loads(json.dumps(certificate_to_dict(c, spec.state_vars)))
    assert certificate_from_dict(d, spec.state_vars) == c


def test_workers_do_not_change_report(problems):
    spec = problems("model-g")
    c = cert("P7", "x/0.9", "0", eps2=0.45)
    a = check_certificate("P7", c, spec).to_dict(spec.state_vars)
    b = check_certificate("P7", c, spec, workers=3).to_dict(spec.state_vars)
    assert a == b


def test_zero_w_embedding_edge_cases(problems):
    c = problems("model-c")
    ones = cert("P1", "1", eps2=1.0)
    rep = check_certificate("P7", embed_zero_w(ones, c), c)
    assert rep.status is Status.PROVED and rep.bound.value == 1.0
    with pytest.raises(EmbeddingError):
        embed_zero_w(cert("P1", "x - 0.1", eps2=1.0), c)


def test_dualize():
    from reachcert.certify import dualize
    assert dualize(parse_poly("1", X)).is_zero()
    v = parse_poly("x/10", X)
    assert dualize(dualize(v)) == v
    assert evaluate(dualize(v), [5.0]) == 0.5
