"""Expectation operators for finite-support disturbances.

``post_expectation`` computes x -> E[v(f(x, theta))] as a polynomial.  The
k-step version iterates it over the raw dynamics.  ``stopped_expectation_check``
handles the process that freezes on entering the target set, whose k-step
expectation is only piecewise polynomial.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from .model import ProblemSpec, RegionSpec, image_box
from .outcome import MAX_FRONTIER, CheckOutcome, Status
from .poly import Box, Polynomial, compose, enclose_range, evaluate, evaluation_error

DEGREE_CAP = 64
MAX_SCENARIOS = 64
# subdivision budget; exhausting it yields Unknown
MAX_BOXES = 4096


class ExpectationError(ValueError):
    pass


@dataclass(frozen=True)
class ExpectationOperator:
    spec: ProblemSpec

    def __call__(self, v: Polynomial) -> Polynomial:
        return post_expectation(v, self.spec)

    def power(self, v: Polynomial, k: int) -> Polynomial:
        return k_post_expectation(v, self.spec, k)


def _dyn_degree(spec: ProblemSpec) -> int:
    return max((g.degree for maps in spec.branches() for g in maps), default=1)


def post_expectation(v: Polynomial, spec: ProblemSpec, degree_cap: int = DEGREE_CAP) -> Polynomial:
    if v.arity != spec.n:
        raise ExpectationError(f"v has arity {v.arity}, state dimension is {spec.n}")
    if v.degree * max(1, _dyn_degree(spec)) > degree_cap:
        raise ExpectationError(f"expectation degree exceeds cap {degree_cap}")
    key = ("T", v)
    cache = spec._cache.setdefault("post", {})
    got = cache.get(key)
    if got is not None:
        return got
    acc: dict[tuple[int, ...], float] = {}
    for p, maps in zip(spec.dist.probs, spec.branches()):
        for exps, c in compose(v, maps).items():
            acc[exps] = acc.get(exps, 0.0) + p * c
    out = Polynomial(spec.n, acc)
    if len(cache) > 4096:
        cache.clear()
    cache[key] = out
    return out


def k_post_expectation(v: Polynomial, spec: ProblemSpec, k: int, degree_cap: int = DEGREE_CAP) -> Polynomial:
    if k < 1:
        raise ExpectationError("k must be at least 1")
    if v.degree * max(1, _dyn_degree(spec)) ** k > degree_cap:
        raise ExpectationError(f"k-step expectation degree exceeds cap {degree_cap}")
    out = v
    for _ in range(k):
        out = post_expectation(out, spec, degree_cap)
    return out


def enumerate_k_expectation(v: Polynomial, spec: ProblemSpec, k: int, x: Sequence[float]) -> float:
    """E[v(phi(k))] at a point by summing over all |support|^k sequences."""
    total = 0.0
    for seq in itertools.product(range(len(spec.dist)), repeat=k):
        weight = 1.0
        y = tuple(x)
        for j in seq:
            weight *= spec.dist.probs[j]
            y = spec.step(y, j)
        total += weight * evaluate(v, y)
    return total


# ---------------------------------------------------------------------------
# stopped process


def stopped_endpoints(spec: ProblemSpec, x: Sequence[float], k: int) -> list[tuple[float, tuple[float, ...]]]:
    """(probability, state) pairs of the stopped process after k steps from x."""
    out: list[tuple[float, tuple[float, ...]]] = []

    def rec(y: tuple[float, ...], weight: float, steps: int):
        if steps == k or spec.Xr.contains_point(y):
            out.append((weight, y))
            return
        for j, p in enumerate(spec.dist.probs):
            rec(spec.step(y, j), weight * p, steps + 1)

    rec(tuple(float(t) for t in x), 1.0, 0)
    return out


def stopped_expectation_at(v: Polynomial, spec: ProblemSpec, x: Sequence[float], k: int) -> float:
    return sum(w * evaluate(v, y) for w, y in stopped_endpoints(spec, x, k))


class _PathMaps:
    """Compositions of the branch maps along disturbance sequences, memoized."""

    def __init__(self, spec: ProblemSpec):
        self.spec = spec
        self.memo: dict[tuple[int, ...], tuple[Polynomial, ...]] = {}

    def get(self, path: tuple[int, ...]) -> tuple[Polynomial, ...]:
        got = self.memo.get(path)
        if got is None:
            if not path:
                got = tuple(Polynomial.variable(self.spec.n, i) for i in range(self.spec.n))
            else:
                prev = self.get(path[:-1])
                got = tuple(compose(g, prev) for g in self.spec.branches()[path[-1]])
            self.memo[path] = got
        return got


def _scenarios(spec: ProblemSpec, paths: _PathMaps, box: Box, k: int):
    """Enumerate the possible stopped-branch structures over ``box``.

    Each scenario is a list of (probability, path) leaves.  Returns None when
    more than MAX_SCENARIOS structures are possible.  At step 0 points of the
    box that already lie in the target contribute v - v = 0 and are ignored.
    """
    # a scenario is a tuple of leaves; each leaf (weight, path, frozen)
    scen = [[(1.0, (), False)]]
    for step in range(k):
        nxt_all = []
        for leaves in scen:
            options: list[list[tuple[float, tuple[int, ...], bool]]] = [[]]
            for weight, path, frozen in leaves:
                if frozen:
                    choices = [[(weight, path, True)]]
                else:
                    if step == 0:
                        state = "continue"
                    else:
                        img = image_box(paths.get(path), box)
                        if not spec.Xr.intersects(img):
                            state = "continue"
                        elif spec.Xr.covers(img):
                            state = "frozen"
                        else:
                            state = "both"
                    expand = [(weight * p, path + (j,), False) for j, p in enumerate(spec.dist.probs)]
                    if state == "continue":
                        choices = [expand]
                    elif state == "frozen":
                        choices = [[(weight, path, True)]]
                    else:
                        choices = [[(weight, path, True)], expand]
                options = [o + c for o in options for c in choices]
                if len(options) + len(nxt_all) > MAX_SCENARIOS:
                    return None
            nxt_all.extend(options)
        scen = nxt_all
        if len(scen) > MAX_SCENARIOS:
            return None
    return [[(w, p) for w, p, _ in leaves] for leaves in scen]


def stopped_expectation_check(v: Polynomial, spec: ProblemSpec, k: int, region: RegionSpec,
                              depth_limit: int = 14, margin: float = 1e-9,
                              max_boxes: int = MAX_BOXES) -> CheckOutcome:
    """Prove v(x) - E[v(stopped_k(x))] >= 0 over ``region``."""
    if k < 1:
        raise ExpectationError("k must be at least 1")
    if v.arity != spec.n:
        raise ExpectationError("v arity does not match state dimension")
    paths = _PathMaps(spec)
    vcomp: dict[tuple[int, ...], Polynomial] = {}
    # scenarios recur across boxes
    diffs: dict[tuple, Polynomial] = {}

    def value_poly(leaves) -> Polynomial:
        key = tuple(leaves)
        got = diffs.get(key)
        if got is None:
            acc = Polynomial.zero(spec.n)
            for w, path in leaves:
                if path not in vcomp:
                    vcomp[path] = compose(v, paths.get(path)) if path else v
                acc = acc + w * vcomp[path]
            got = diffs[key] = v - acc
        return got

    frontier: list[Box] = []
    unknown = False
    boxes = 0
    max_depth = 0
    stack = [(piece, 0) for piece in sorted(region.pieces, reverse=True)]
    while stack:
        box, depth = stack.pop()
        boxes += 1
        max_depth = max(max_depth, depth)
        if spec.Xr.covers(box):
            continue
        scen = _scenarios(spec, paths, box, k)
        ok = scen is not None
        if ok:
            for leaves in scen:
                if enclose_range(value_poly(leaves), box).lo < -margin:
                    ok = False
                    break
        if ok:
            continue
        c = box.center()
        if not spec.Xr.contains_point(c):
            ends = stopped_endpoints(spec, c, k)
            val = evaluate(v, c) - sum(w * evaluate(v, y) for w, y in ends)
            err = evaluation_error(v, c) + sum(w * evaluation_error(v, y) for w, y in ends)
            if val < -margin - 2 * err - 1e-12:
                return CheckOutcome(Status.DISPROVED, witness=tuple(c), value=val, boxes=boxes,
                                    max_depth=max_depth)
        if depth >= depth_limit or boxes + len(stack) >= max_boxes:
            unknown = True
            if len(frontier) < MAX_FRONTIER:
                frontier.append(box)
            continue
        left, right = box.split()
        stack.append((right, depth + 1))
        stack.append((left, depth + 1))
    if unknown:
        return CheckOutcome(Status.UNKNOWN, frontier=frontier, boxes=boxes, max_depth=max_depth)
    return CheckOutcome(Status.PROVED, boxes=boxes, max_depth=max_depth)
