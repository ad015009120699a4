import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from reachcert.model import (
    ProblemError, RegionSpec, boundary_faces, check_assumption1, check_xhat, load_problem,
    problem_from_dict, problem_to_dict, region_difference, region_intersection,
)
from reachcert.outcome import Status
from reachcert.poly import Box

BASE = {
    "state_vars": ["x"], "dist_vars": ["t"], "dynamics": ["0.5*x + t"],
    "support": [[-0.05], [0.05]], "probs": [0.5, 0.5],
    "X": [[[-1, 1]]], "X0": [[[-0.1, 0.1]]], "Xr": [[[-1, -0.9]], [[0.9, 1]]],
}


def make(**changes):
    data = dict(BASE)
    data.update(changes)
    return problem_from_dict(data)


@pytest.mark.parametrize("changes, message", [
    ({"probs": [0.5, 0.6]}, "not normalized"),
    ({"X0": [[[-2, 0]]]}, "X0 not contained in X"),
    ({"Xr": [[[0.5, 1.5]]]}, "Xr not contained in X"),
    ({"support": [[0.1], [0.1]]}, "pairwise distinct"),
    ({"probs": [1.0, 0.0]}, "positive"),
    ({"mode": "other"}, "unknown mode"),
    ({"dynamics": ["x +"]}, "dynamics[0]"),
    ({"X": [[[1, -1]]]}, "X"),
])
def test_invalid_problems_rejected(changes, message):
    with pytest.raises(ProblemError) as err:
        make(**changes)
    assert message in str(err.value)


def test_missing_field():
    data = dict(BASE)
    del data["Xr"]
    with pytest.raises(ProblemError, match="Xr"):
        problem_from_dict(data)


def test_parse_error_reports_position(tmp_path):
    bad = tmp_path / "bad.prob"
    bad.write_text('{\n  "state_vars": ["x"],\n  oops\n}')
    with pytest.raises(ProblemError, match="line 3"):
        load_problem(bad)


def test_problem_dict_round_trip(problems):
    for name in ("model-a", "model-b", "model-d", "model-f"):
        spec = problems(name)
        again = problem_from_dict(json.loads(json.dumps(problem_to_dict(spec))))
        assert again == spec


def test_default_xhat_covers_one_step_image():
    spec = make(mode="xhat", dynamics=["x + t"], support=[[-1], [1]], X=[[[0, 10]]], X0=[[[5, 5]]],
                Xr=[[[9, 10]]])
    assert spec.xhat_defaulted
    assert spec.Xhat.to_lists() == [[[-1.0, 11.0]]]
    assert check_xhat(spec).status is Status.PROVED


@pytest.mark.parametrize("name, status", [
    ("model-a", Status.PROVED), ("model-b", Status.DISPROVED), ("model-c", Status.PROVED),
    ("model-d", Status.PROVED), ("model-e", Status.PROVED), ("model-f", Status.DISPROVED),
    ("model-g", Status.PROVED),
])
def test_assumption1_on_fixtures(problems, name, status):
    assert check_assumption1(problems(name)).status is status


def test_assumption1_witness_is_a_real_violation(problems):
    spec = problems("model-b")
    out = check_assumption1(spec)
    x = out.witness
    assert spec.X.contains_point(x)
    images = [spec.step(x, j) for j in range(len(spec.dist))]
    assert any(not spec.X.contains_point(y) for y in images)


def test_xhat_containment_on_fixtures(problems):
    assert check_xhat(problems("model-b")).proved
    assert check_xhat(problems("model-f")).proved


def test_boundary_faces_single_box(problems):
    assert boundary_faces(problems("model-b").X, problems("model-b").Xr).to_lists() == [[[0.0, 0.0]]]
    X = RegionSpec.from_lists(2, [[[0, 1], [0, 1]]])
    Xr = RegionSpec.from_lists(2, [[[0.5, 1], [0.5, 1]]])
    faces = boundary_faces(X, Xr)
    # the shared parts of x=1 and y=1 are removed
    assert not faces.contains_point((1.0, 0.75)) and not faces.contains_point((0.75, 1.0))
    assert faces.contains_point((0.0, 0.3)) and faces.contains_point((1.0, 0.25))


def test_boundary_faces_need_single_box():
    X = RegionSpec.from_lists(1, [[[0, 1]], [[2, 3]]])
    with pytest.raises(ProblemError):
        boundary_faces(X, RegionSpec(1))


# ---------------------------------------------------------------------------
# region algebra properties

ends = st.integers(0, 8).map(lambda i: i / 4)


@st.composite
def boxes2(draw):
    out = []
    for _ in range(2):
        a, b = sorted((draw(ends), draw(ends)))
        if a == b:
            b = a + 0.25
        out.append((a, b))
    return Box(tuple(out))


@st.composite
def regions2(draw):
    return RegionSpec(2, tuple(draw(st.lists(boxes2(), min_size=1, max_size=3))))


def _grid():
    g = np.linspace(-0.1, 2.4, 41)
    return [tuple(p) for p in np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)]


GRID = _grid()


def _interior(region, p, eps=1e-9):
    return any(all(lo + eps < x < hi - eps for x, (lo, hi) in zip(p, b.bounds)) for b in region.pieces)


@given(regions2(), regions2())
def test_difference_is_a_closed_cover(a, b):
    d = region_difference(a, b)
    for p in GRID:
        if a.contains_point(p) and not b.contains_point(p):
            assert d.contains_point(p)
        if d.contains_point(p):
            assert a.contains_point(p)
        if _interior(b, p):
            assert not _interior(d, p)


@given(regions2(), regions2())
def test_intersection_matches_membership(a, b):
    c = region_intersection(a, b)
    for p in GRID:
        assert c.contains_point(p) == (a.contains_point(p) and b.contains_point(p))


@given(regions2(), boxes2())
def test_covers_agrees_with_grid(a, box):
    if a.covers(box):
        g = [np.linspace(lo, hi, 9) for lo, hi in box.bounds]
        for p in np.stack(np.meshgrid(*g), -1).reshape(-1, 2):
            assert a.contains_point(tuple(p))
