import os
import subprocess
import sys

import numpy as np
from hypothesis import given, settings, strategies as st

from reachcert import kernels
from reachcert.sim import _boxes, _dynamics_arrays


@settings(max_examples=40)
@given(st.integers(1, 3), st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_eval_terms_backends_agree(n, degree, seed):
    rng = np.random.default_rng(seed)
    terms = rng.integers(1, 8)
    exps = rng.integers(0, degree + 1, size=(terms, n)).astype(np.int64)
    coeffs = rng.normal(size=terms)
    pts = rng.uniform(-2, 2, size=(50, n))
    a = kernels.eval_terms_numba(exps, coeffs, pts)
    b = kernels.eval_terms_numpy(exps, coeffs, pts)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)


@settings(max_examples=15)
@given(st.integers(0, 2**64 - 1), st.booleans(), st.sampled_from(["model-b", "model-f", "model-a"]))
def test_simulate_backends_agree(problems, seed, avoid, name):
    spec = problems(name)
    exps, coeffs, offsets = _dynamics_arrays(spec)
    support = np.array(spec.dist.support, dtype=np.float64)
    cum = np.cumsum(spec.dist.probs)
    cum[-1] = 1.0
    x0 = np.array([p[0] for p in spec.X0.pieces[0].bounds], dtype=np.float64)
    args = (exps, coeffs, offsets, support, cum, x0, _boxes(spec.Xr), _boxes(spec.X), seed, 3, 200, 80, avoid)
    k1, s1 = kernels.simulate_numba(*args)
    k2, s2 = kernels.simulate_numpy(*args)
    assert np.array_equal(k1, k2) and np.array_equal(s1, s2)


def test_env_flag_selects_numpy():
    env = dict(os.environ, REACHCERT_DISABLE_NUMBA="1")
    code = "from reachcert import kernels, _jit; print(_jit.backend(), kernels.simulate is kernels.simulate_numpy)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]
