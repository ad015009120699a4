import numpy as np
import pytest

from reachcert.certify import CertifyError, certificate_from_dict, certificate_to_dict, check_certificate
from reachcert.outcome import Status
from reachcert.poly import evaluate_many, monomial_basis
from reachcert.synth import Budget, SynthStatus, TemplateSpec, build_lp, synthesize_cegis, template_basis
from reachcert.synth.cegis import initial_samples


def test_basis_size_matches_monomial_count(problems):
    a, f = problems("model-a"), problems("model-f")
    assert len(template_basis(f, 3)) == len(monomial_basis(f.n, 3))
    assert len(template_basis(a, 2)) == 3
    assert len(template_basis(a, 8)) == 9
    assert len(monomial_basis(1, 2)) == 3


def test_univariate_quadratic_basis_spans_monomials(problems):
    a = problems("model-a")
    pts = np.linspace(-1, 1, 7)[:, None]
    B = np.stack([evaluate_many(p, pts) for p in template_basis(a, 2)], axis=1)
    V = np.hstack([np.ones((7, 1)), pts, pts**2])
    # same column space as {1, x, x^2}
    assert np.linalg.matrix_rank(np.hstack([B, V])) == 3


def test_template_validation():
    with pytest.raises(CertifyError):
        TemplateSpec(degree_v=-1)
    with pytest.raises(CertifyError):
        TemplateSpec(degree_v=99)
    with pytest.raises(CertifyError):
        TemplateSpec(objective="best")


def test_p9_sizes(problems):
    f = problems("model-f")
    t = TemplateSpec(degree_v=3, fixed_params={"lambda": 1.0})
    rng = np.random.default_rng(0)
    from reachcert.synth.cegis import _probe, _base_params
    from reachcert.poly import Polynomial
    zero = Polynomial.zero(f.n)
    obs = _probe("P9", f, {**_base_params("P9", t), "eps1": 0.0}, zero, zero, None)
    samples = {ob.region: initial_samples(ob.region, 0, 20, rng) for ob in obs if not ob.region.is_empty()}
    lp, _ = build_lp("P9", TemplateSpec(degree_v=3, fixed_params={"lambda": 1.0}, slack=0.0), f, samples)
    assert lp.num_vars == len(monomial_basis(f.n, 3)) + 1
    assert lp.rows.shape[0] == sum(len(samples[ob.region]) for ob in obs if not ob.region.is_empty())


def test_p7_rows_are_affine_in_coefficients(problems):
    a = problems("model-a")
    rng = np.random.default_rng(1)
    t = TemplateSpec(degree_v=4, degree_w=2, use_w=True, slack=0.0)
    from reachcert.synth.cegis import _probe
    from reachcert.poly import Polynomial
    zero = Polynomial.zero(1)
    obs = _probe("P7", a, {"eps2": 0.0}, zero, zero, None)
    assert len(obs) == 4
    samples = {}
    for ob in obs:
        samples.setdefault(ob.region, initial_samples(ob.region, 0, 200, rng))
    lp, lay = build_lp("P7", t, a, samples)
    assert lp.rows.shape[0] == 800
    z = rng.normal(size=lp.num_vars)
    # homogeneous part: q(2z) - q(0) = 2 (q(z) - q(0))
    q = lambda zz: lp.rows @ zz - lp.rhs
    np.testing.assert_allclose(q(2 * z) - q(0 * z), 2 * (q(z) - q(0 * z)), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("prop, model, template", [
    ("P1", "model-c", TemplateSpec(degree_v=2)),
    ("P2", "model-e", TemplateSpec(degree_v=2, fixed_params={"delta": 0.05})),
    ("P3", "model-d", TemplateSpec(degree_v=2, fixed_params={"c": 1.0})),
    ("P9", "model-f", TemplateSpec(degree_v=2, fixed_params={"lambda": 1000.0})),
    ("P10", "model-a", TemplateSpec(degree_v=2, fixed_params={"lambda": 1.0, "N": 3})),
    ("P7", "model-g", TemplateSpec(degree_v=2, degree_w=2, use_w=True)),
])
def test_certified_results_revalidate(prop, model, template, problems):
    spec = problems(model)
    res = synthesize_cegis(prop, template, spec, Budget(20, 60))
    assert res.status is SynthStatus.CERTIFIED, res.message
    assert res.report.status is Status.PROVED
    fresh = certificate_from_dict(certificate_to_dict(res.certificate, spec.state_vars), spec.state_vars)
    again = check_certificate(prop, fresh, spec)
    assert again.status is Status.PROVED
    assert again.bound == res.report.bound


def test_lower_bound_one_on_gamblers_ruin_is_never_certified(problems):
    b = problems("model-b")
    t = TemplateSpec(degree_v=4, fixed_params={"eps1": 1.0}, w_scales=(1.0, 100.0))
    res = synthesize_cegis("P6", t, b, Budget(6, 30))
    assert res.status is not SynthStatus.CERTIFIED


def test_sample_set_grows(problems):
    a = problems("model-a")
    res = synthesize_cegis("P7", TemplateSpec(degree_v=2), a, Budget(4, 30))
    used = [h["samples"] for h in res.history]
    assert all(b > a_ for a_, b in zip(used, used[1:]))


def test_synthesis_is_deterministic(problems):
    c = problems("model-c")
    a = synthesize_cegis("P1", TemplateSpec(degree_v=2, seed=3), c)
    b = synthesize_cegis("P1", TemplateSpec(degree_v=2, seed=3), c, workers=2)
    assert a.to_dict(c.state_vars) == b.to_dict(c.state_vars)
