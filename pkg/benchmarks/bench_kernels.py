"""Compare the numba and numpy kernels.

    python3 benchmarks/bench_kernels.py [--trials N] [--points N]

The first numba call includes compilation (or a cache load) and is reported
separately.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from reachcert import kernels
from reachcert.model import load_problem
from reachcert.poly import monomial_basis
from reachcert.sim import _boxes, _dynamics_arrays

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "reachcert" / "fixtures"


def _time(fn, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_simulate(trials: int):
    spec = load_problem(FIXTURES / "model-b.prob")
    exps, coeffs, offsets = _dynamics_arrays(spec)
    support = np.array(spec.dist.support)
    cum = np.cumsum(spec.dist.probs)
    args = (exps, coeffs, offsets, support, cum, np.array([5.0]), _boxes(spec.Xr), _boxes(spec.X),
            42, 0, trials, 500, True)
    t0 = time.perf_counter()
    kernels.simulate_numba(*args)
    first = time.perf_counter() - t0
    t_nb, (k_nb, s_nb) = _time(lambda: kernels.simulate_numba(*args))
    t_np, (k_np, s_np) = _time(lambda: kernels.simulate_numpy(*args), repeat=1)
    same = bool(np.array_equal(k_nb, k_np) and np.array_equal(s_nb, s_np))
    return first, t_nb, t_np, same


def bench_eval(points: int):
    rng = np.random.default_rng(0)
    exps = np.array(monomial_basis(2, 8), dtype=np.int64)
    coeffs = rng.normal(size=len(exps))
    pts = rng.uniform(-1, 1, size=(points, 2))
    t0 = time.perf_counter()
    kernels.eval_terms_numba(exps, coeffs, pts)
    first = time.perf_counter() - t0
    t_nb, a = _time(lambda: kernels.eval_terms_numba(exps, coeffs, pts))
    t_np, b = _time(lambda: kernels.eval_terms_numpy(exps, coeffs, pts))
    return first, t_nb, t_np, bool(np.array_equal(a, b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--points", type=int, default=200_000)
    a = ap.parse_args()
    print(f"{'kernel':<36}{'numba first':>12}{'numba':>10}{'numpy':>10}{'speedup':>9}  identical")
    for name, res in ((f"simulate (gambler, {a.trials} trials)", bench_simulate(a.trials)),
                      (f"eval_terms (deg 8, {a.points} pts)", bench_eval(a.points))):
        first, t_nb, t_np, same = res
        print(f"{name:<36}{first:>11.3f}s{t_nb:>9.3f}s{t_np:>9.3f}s{t_np / t_nb:>8.1f}x  {same}")


if __name__ == "__main__":
    main()
