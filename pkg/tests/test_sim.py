from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reachcert.model import ProblemError, problem_from_dict
from reachcert.sim import (
    TrialConfig, clopper_pearson, estimate_probability, exact_chain_probability, simulate_reach, simulate_trials,
    write_trials_csv, x0_grid,
)

GOLDEN = Path(__file__).parent / "golden"


def walk(p_up=0.5):
    return problem_from_dict({
        "state_vars": ["x"], "dist_vars": ["t"], "dynamics": ["x + t"], "support": [[-1], [1]],
        "probs": [1 - p_up, p_up], "X": [[[0, 10]]], "X0": [[[5, 5]]], "Xr": [[[9, 10]]],
    })


def test_start_in_target_hits_immediately(problems):
    c = problems("model-c")
    assert simulate_reach(c, [0.95], TrialConfig(horizon=10)).kind == "hit"
    assert simulate_reach(c, [0.95], TrialConfig(horizon=10)).step == 0
    est = estimate_probability(c, [0.95], TrialConfig(trials=50))
    assert est.p_hat == 1.0 and est.ci_high == 1.0 and 0 < est.ci_low < 1


def test_contraction_never_hits(problems):
    c = problems("model-c")
    out = simulate_reach(c, [0.8], TrialConfig(horizon=1000))
    assert out.kind == "censored"
    assert estimate_probability(c, [0.8], TrialConfig(trials=100)).p_hat == 0.0


def test_start_outside_domain_rejected(problems):
    with pytest.raises(ProblemError):
        simulate_trials(problems("model-c"), [1.5], TrialConfig())


def test_config_validation():
    for bad in ({"trials": 0}, {"horizon": -1}, {"semantics": "eventually"}, {"level": 1.0}, {"seed": -1}):
        with pytest.raises(ValueError):
            TrialConfig(**bad)


def test_golden_sequence(problems, tmp_path):
    b = problems("model-b")
    kinds, steps = simulate_trials(b, [5.0], TrialConfig(seed=42, horizon=500, trials=40, semantics="reach-avoid"))
    out = tmp_path / "trials.csv"
    write_trials_csv(out, kinds, steps)
    assert out.read_bytes() == (GOLDEN / "model-b-seed42.csv").read_bytes()


@settings(max_examples=10)
@given(st.integers(0, 2**64 - 1), st.integers(2, 5))
def test_worker_count_does_not_change_outcomes(seed, workers):
    b = walk()
    cfg = TrialConfig(seed=seed, horizon=100, trials=997, semantics="reach-avoid")
    k1, s1 = simulate_trials(b, [5.0], cfg)
    k2, s2 = simulate_trials(b, [5.0], TrialConfig(seed=seed, horizon=100, trials=997, semantics="reach-avoid",
                                                   workers=workers))
    assert np.array_equal(k1, k2) and np.array_equal(s1, s2)


@settings(max_examples=10)
@given(st.integers(0, 2**32), st.floats(0.3, 0.7))
def test_reach_avoid_never_exceeds_reach_invariant(seed, p_up):
    # unbounded domain for the invariant run, same random stream
    loose = problem_from_dict({
        "state_vars": ["x"], "dist_vars": ["t"], "dynamics": ["x + t"], "support": [[-1], [1]],
        "probs": [1 - p_up, p_up], "X": [[[0, 10]]], "X0": [[[5, 5]]], "Xr": [[[9, 10]]],
    })
    avoid = estimate_probability(loose, [5.0], TrialConfig(seed=seed, horizon=60, trials=300, semantics="reach-avoid"))
    inv = estimate_probability(loose, [5.0], TrialConfig(seed=seed, horizon=60, trials=300))
    assert avoid.p_hat <= inv.p_hat
    assert avoid.hits + avoid.exits + avoid.censored == 300


def test_gamblers_ruin_chain(problems):
    b = problems("model-b")
    sol = exact_chain_probability(b, [1.0])
    assert abs(sol.at([5.0]) - 0.6) <= 1e-9
    for i in range(0, 11):
        want = 1.0 if i >= 9 else (i + 1) / 10
        assert sol.at([float(i)]) == pytest.approx(want, abs=1e-12)


def test_biased_walk_closed_form():
    p, q = 0.6, 0.4
    want = (1 - (q / p) ** 6) / (1 - (q / p) ** 10)
    sol = exact_chain_probability(walk(0.6), [1.0])
    assert abs(sol.at([5.0]) - want) <= 1e-10


def test_chain_rejects_off_lattice(problems):
    with pytest.raises(ProblemError):
        exact_chain_probability(problems("model-b"), [0.7])
    with pytest.raises(ProblemError):
        exact_chain_probability(problems("model-b"), [1.0], semantics="reach-invariant")


def test_simulation_ci_contains_chain_value():
    b = walk(0.6)
    want = exact_chain_probability(b, [1.0]).at([5.0])
    est = estimate_probability(b, [5.0], TrialConfig(seed=5, horizon=500, trials=20000, semantics="reach-avoid"))
    assert est.ci_low <= want <= est.ci_high


def test_csv_output(problems, tmp_path):
    out = tmp_path / "t.csv"
    est = estimate_probability(walk(), [5.0], TrialConfig(trials=7, semantics="reach-avoid"), csv_path=out)
    lines = out.read_text().splitlines()
    assert lines[0] == "trial,outcome,step" and len(lines) == 8
    assert sum(line.split(",")[1] == "hit" for line in lines[1:]) == est.hits


@given(st.integers(0, 200), st.integers(1, 200))
def test_clopper_pearson_brackets_estimate(hits, trials):
    hits = min(hits, trials)
    lo, hi = clopper_pearson(hits, trials)
    assert 0 <= lo <= hits / trials <= hi <= 1


def test_report_carries_horizon_qualifier():
    d = estimate_probability(walk(), [5.0], TrialConfig(trials=10, horizon=37)).to_dict()
    assert "37" in d["quantity"] and "lower" in d["note"]


def test_x0_grid(problems):
    assert x0_grid(problems("model-b").X0) == [(5.0,)]
    assert len(x0_grid(problems("model-a").X0)) == 3
