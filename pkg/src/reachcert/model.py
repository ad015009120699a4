"""Problem descriptions: dynamics, finite-support disturbance, box regions."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .outcome import MAX_FRONTIER, CheckOutcome, Status
from .poly import Box, PolyError, Polynomial, enclose_range, evaluate, parse_poly, substitute_tail

MODES = ("assumed-invariant", "xhat")


class ProblemError(ValueError):
    """Malformed problem description or violated invariant."""


@dataclass(frozen=True)
class Disturbance:
    support: tuple[tuple[float, ...], ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        support = tuple(tuple(float(t) for t in s) for s in self.support)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)
        if not support:
            raise ProblemError("disturbance support is empty")
        if len(support) != len(probs):
            raise ProblemError("support and probs have different lengths")
        if len({len(s) for s in support}) != 1:
            raise ProblemError("support points have different dimensions")
        if any(not p > 0.0 for p in probs):
            raise ProblemError("every probability must be positive")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ProblemError("distribution not normalized")
        if len(set(support)) != len(support):
            raise ProblemError("support points are not pairwise distinct")

    @property
    def dim(self) -> int:
        return len(self.support[0])

    def __len__(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class SystemModel:
    state_dim: int
    dist_dim: int
    dynamics: tuple[Polynomial, ...]

    def __post_init__(self):
        if len(self.dynamics) != self.state_dim:
            raise ProblemError(f"need {self.state_dim} dynamics components, got {len(self.dynamics)}")
        for i, f in enumerate(self.dynamics):
            if f.arity != self.state_dim + self.dist_dim:
                raise ProblemError(f"dynamics component {i} has arity {f.arity}, expected {self.state_dim + self.dist_dim}")

    def branch(self, theta: Sequence[float]) -> tuple[Polynomial, ...]:
        """The map x -> f(x, theta) for a fixed disturbance value."""
        return tuple(substitute_tail(f, theta, self.state_dim) for f in self.dynamics)

    def step(self, x: Sequence[float], theta: Sequence[float]) -> tuple[float, ...]:
        z = tuple(x) + tuple(theta)
        return tuple(evaluate(f, z) for f in self.dynamics)


@dataclass(frozen=True)
class RegionSpec:
    """Finite union of closed boxes in state space."""

    arity: int
    pieces: tuple[Box, ...] = ()

    def __post_init__(self):
        pieces = tuple(self.pieces)
        for b in pieces:
            if b.arity != self.arity:
                raise ProblemError(f"box arity {b.arity} does not match region arity {self.arity}")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def from_lists(cls, arity: int, boxes: Sequence[Sequence[Sequence[float]]]) -> "RegionSpec":
        return cls(arity, tuple(Box(tuple(tuple(iv) for iv in b)) for b in boxes))

    def is_empty(self) -> bool:
        return not self.pieces

    def contains_point(self, x: Sequence[float]) -> bool:
        return any(b.contains_point(x) for b in self.pieces)

    def bounding_box(self) -> Box:
        if not self.pieces:
            raise ProblemError("empty region has no bounding box")
        return Box(tuple(
            (min(b.bounds[d][0] for b in self.pieces), max(b.bounds[d][1] for b in self.pieces))
            for d in range(self.arity)
        ))

    def covers(self, box: Box) -> bool:
        """True when ``box`` lies inside the union of the pieces."""
        if any(p.contains_box(box) for p in self.pieces):
            return True
        return not _subtract_all(box, self.pieces)

    def intersects(self, box: Box) -> bool:
        return any(_closed_overlap(box, p) for p in self.pieces)

    def contains_region(self, other: "RegionSpec") -> bool:
        return all(self.covers(b) for b in other.pieces)

    def to_lists(self) -> list[list[list[float]]]:
        return [b.to_list() for b in self.pieces]


# ---------------------------------------------------------------------------
# region algebra


def _closed_overlap(a: Box, b: Box) -> bool:
    return all(max(al, bl) <= min(ah, bh) for (al, ah), (bl, bh) in zip(a.bounds, b.bounds))


def _subtract(a: Box, b: Box) -> list[Box]:
    """Closed box cover of closure(a minus b) with disjoint interiors."""
    inter = [(max(al, bl), min(ah, bh)) for (al, ah), (bl, bh) in zip(a.bounds, b.bounds)]
    if any(lo > hi for lo, hi in inter):
        return [a]
    # b misses the relative interior of a
    for (al, ah), (lo, hi) in zip(a.bounds, inter):
        if al < ah and lo == hi:
            return [a]
    out: list[Box] = []
    cur = list(a.bounds)
    for d, ((bl, bh), (lo, hi)) in enumerate(zip(b.bounds, inter)):
        cl, ch = cur[d]
        if cl < bl:
            piece = list(cur)
            piece[d] = (cl, bl)
            out.append(Box(tuple(piece)))
        if ch > bh:
            piece = list(cur)
            piece[d] = (bh, ch)
            out.append(Box(tuple(piece)))
        cur[d] = (lo, hi)
    return out


def _subtract_all(a: Box, bs: Sequence[Box]) -> list[Box]:
    parts = [a]
    for b in bs:
        nxt: list[Box] = []
        for p in parts:
            nxt.extend(_subtract(p, b))
        parts = nxt
        if not parts:
            break
    return parts


def region_difference(a: RegionSpec, b: RegionSpec) -> RegionSpec:
    """Closed box cover of closure(a minus b); pieces have disjoint interiors."""
    if a.arity != b.arity:
        raise ProblemError("region arity mismatch")
    out: list[Box] = []
    for i, piece in enumerate(a.pieces):
        out.extend(_subtract_all(piece, list(b.pieces) + list(a.pieces[:i])))
    return RegionSpec(a.arity, tuple(sorted(out)))


def region_intersection(a: RegionSpec, b: RegionSpec) -> RegionSpec:
    if a.arity != b.arity:
        raise ProblemError("region arity mismatch")
    out = []
    for p in a.pieces:
        for q in b.pieces:
            iv = [(max(pl, ql), min(ph, qh)) for (pl, ph), (ql, qh) in zip(p.bounds, q.bounds)]
            if all(lo <= hi for lo, hi in iv):
                out.append(Box(tuple(iv)))
    return RegionSpec(a.arity, tuple(sorted(set(out))))


def boundary_faces(outer: RegionSpec, inner: RegionSpec) -> RegionSpec:
    """Facets of the single box ``outer`` minus facet parts shared with ``inner``.

    The result covers the boundary of ``outer`` outside the boundary of
    ``inner``; it may be slightly larger, which is conservative for universally
    quantified obligations.
    """
    if len(outer.pieces) != 1:
        raise ProblemError("boundary faces need a single-box outer region")
    box = outer.pieces[0]
    faces: list[Box] = []
    seen = set()
    for d in range(box.arity):
        for side in (0, 1):
            val = box.bounds[d][side]
            face_bounds = list(box.bounds)
            face_bounds[d] = (val, val)
            face = Box(tuple(face_bounds))
            if face in seen:
                continue
            seen.add(face)
            shared = []
            for p in inner.pieces:
                if p.bounds[d][side] == val:
                    fb = list(p.bounds)
                    fb[d] = (val, val)
                    shared.append(Box(tuple(fb)))
            faces.extend(_subtract_all(face, shared))
    return RegionSpec(box.arity, tuple(sorted(faces)))


# ---------------------------------------------------------------------------
# problems


@dataclass(frozen=True)
class ProblemSpec:
    model: SystemModel
    dist: Disturbance
    X: RegionSpec
    X0: RegionSpec
    Xr: RegionSpec
    Xhat: RegionSpec | None = None
    mode: str = "assumed-invariant"
    state_vars: tuple[str, ...] = ()
    dist_vars: tuple[str, ...] = ()
    synthesis: dict = field(default_factory=dict, compare=False, hash=False)
    xhat_defaulted: bool = field(default=False, compare=False)
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        n = self.model.state_dim
        if not self.state_vars:
            object.__setattr__(self, "state_vars", tuple(f"x{i + 1}" for i in range(n)))
        if not self.dist_vars:
            object.__setattr__(self, "dist_vars", tuple(f"t{i + 1}" for i in range(self.model.dist_dim)))
        if self.dist.dim != self.model.dist_dim:
            raise ProblemError(f"support points have dimension {self.dist.dim}, expected {self.model.dist_dim}")
        for name in ("X", "X0", "Xr"):
            if getattr(self, name).arity != n:
                raise ProblemError(f"{name} has arity {getattr(self, name).arity}, expected {n}")
        if self.X.is_empty():
            raise ProblemError("X is empty")
        if self.mode not in MODES:
            raise ProblemError(f"unknown mode {self.mode!r}")
        if not self.X.contains_region(self.X0):
            raise ProblemError("X0 not contained in X")
        if not self.X.contains_region(self.Xr):
            raise ProblemError("Xr not contained in X")
        if self.mode == "xhat":
            if self.Xhat is None:
                raise ProblemError("mode xhat requires Xhat")
            if not self.Xhat.contains_region(self.X):
                raise ProblemError("X not contained in Xhat")

    @property
    def n(self) -> int:
        return self.model.state_dim

    def branches(self) -> list[tuple[Polynomial, ...]]:
        """Per support point, the state map as polynomials in x."""
        got = self._cache.get("branches")
        if got is None:
            got = [self.model.branch(theta) for theta in self.dist.support]
            self._cache["branches"] = got
        return got

    def domain(self) -> RegionSpec:
        """Region where certificates live: Xhat in xhat mode, else X."""
        return self.Xhat if self.mode == "xhat" and self.Xhat is not None else self.X

    def outside(self) -> RegionSpec:
        """closure(Xhat minus X) in xhat mode, empty otherwise."""
        if self.mode != "xhat" or self.Xhat is None:
            return RegionSpec(self.n)
        got = self._cache.get("outside")
        if got is None:
            got = region_difference(self.Xhat, self.X)
            self._cache["outside"] = got
        return got

    def transient(self) -> RegionSpec:
        """closure(X minus Xr)."""
        got = self._cache.get("transient")
        if got is None:
            got = region_difference(self.X, self.Xr)
            self._cache["transient"] = got
        return got

    def step(self, x: Sequence[float], j: int) -> tuple[float, ...]:
        return self.model.step(x, self.dist.support[j])


def _parse_region(raw: Any, n: int, name: str) -> RegionSpec:
    if not isinstance(raw, list):
        raise ProblemError(f"{name}: expected a list of boxes")
    boxes = []
    for i, b in enumerate(raw):
        if not isinstance(b, list) or len(b) != n:
            raise ProblemError(f"{name}[{i}]: a box must be a list of {n} [lo, hi] pairs")
        for iv in b:
            if not isinstance(iv, list) or len(iv) != 2:
                raise ProblemError(f"{name}[{i}]: interval must be [lo, hi]")
        try:
            boxes.append(Box(tuple(tuple(float(v) for v in iv) for iv in b)))
        except (PolyError, TypeError, ValueError) as exc:
            raise ProblemError(f"{name}[{i}]: {exc}") from None
    return RegionSpec(n, tuple(boxes))


def problem_from_dict(data: dict, *, default_xhat: bool = True) -> ProblemSpec:
    for key in ("state_vars", "dist_vars", "dynamics", "support", "probs", "X", "X0", "Xr"):
        if key not in data:
            raise ProblemError(f"missing field {key!r}")
    state_vars = tuple(data["state_vars"])
    dist_vars = tuple(data["dist_vars"])
    n, m = len(state_vars), len(dist_vars)
    if n == 0:
        raise ProblemError("state_vars is empty")
    names = state_vars + dist_vars
    dyn = []
    for i, text in enumerate(data["dynamics"]):
        try:
            dyn.append(parse_poly(text, names))
        except PolyError as exc:
            raise ProblemError(f"dynamics[{i}]: {exc}") from None
    model = SystemModel(n, m, tuple(dyn))
    dist = Disturbance(tuple(tuple(s) for s in data["support"]), tuple(data["probs"]))
    mode = data.get("mode", "assumed-invariant")
    X = _parse_region(data["X"], n, "X")
    X0 = _parse_region(data["X0"], n, "X0")
    Xr = _parse_region(data["Xr"], n, "Xr")
    xhat_raw = data.get("Xhat")
    Xhat = _parse_region(xhat_raw, n, "Xhat") if xhat_raw is not None else None
    defaulted = False
    if mode == "xhat" and Xhat is None and default_xhat:
        Xhat = default_xhat_region(model, dist, X)
        defaulted = True
    return ProblemSpec(model, dist, X, X0, Xr, Xhat, mode, state_vars, dist_vars,
                       dict(data.get("synthesis", {})), defaulted)


def load_problem(path: str | Path) -> ProblemSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ProblemError(f"{path}: top level must be an object")
    return problem_from_dict(data)


def problem_to_dict(spec: ProblemSpec) -> dict:
    names = spec.state_vars + spec.dist_vars
    out = {
        "state_vars": list(spec.state_vars),
        "dist_vars": list(spec.dist_vars),
        "dynamics": [f.to_string(names) for f in spec.model.dynamics],
        "support": [list(s) for s in spec.dist.support],
        "probs": list(spec.dist.probs),
        "X": spec.X.to_lists(),
        "X0": spec.X0.to_lists(),
        "Xr": spec.Xr.to_lists(),
        "mode": spec.mode,
    }
    if spec.Xhat is not None:
        out["Xhat"] = spec.Xhat.to_lists()
    if spec.synthesis:
        out["synthesis"] = spec.synthesis
    return out


def problem_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def image_box(maps: Sequence[Polynomial], box: Box) -> Box:
    """Enclosure of the image of ``box`` under the component maps."""
    return Box(tuple((e.lo, e.hi) for e in (enclose_range(g, box) for g in maps)))


def default_xhat_region(model: SystemModel, dist: Disturbance, X: RegionSpec) -> RegionSpec:
    """Bounding box of X joined with an enclosure of its one-step image."""
    lo = list(X.bounding_box().lo)
    hi = list(X.bounding_box().hi)
    for theta in dist.support:
        maps = model.branch(theta)
        for piece in X.pieces:
            img = image_box(maps, piece)
            for d, (a, b) in enumerate(img.bounds):
                lo[d] = min(lo[d], a)
                hi[d] = max(hi[d], b)
    return RegionSpec(X.arity, (Box(tuple(zip(lo, hi))),))


def inflate(region: RegionSpec, margin: float) -> RegionSpec:
    return RegionSpec(region.arity, tuple(Box(tuple((lo - margin, hi + margin) for lo, hi in b.bounds))
                                          for b in region.pieces))


def check_image_containment(spec: ProblemSpec, source: RegionSpec, target: RegionSpec,
                            depth_limit: int = 14, margin: float = 1e-9) -> CheckOutcome:
    """Decide whether f(source, theta) lies in ``target`` for every support point.

    Like every sign claim, containment is accepted up to ``margin``.
    """
    frontier: list[Box] = []
    boxes = 0
    max_depth = 0
    loose = inflate(target, margin)
    for j, theta in enumerate(spec.dist.support):
        maps = spec.branches()[j]
        stack = [(piece, 0) for piece in sorted(source.pieces, reverse=True)]
        while stack:
            box, depth = stack.pop()
            boxes += 1
            max_depth = max(max_depth, depth)
            if loose.covers(image_box(maps, box)):
                continue
            c = box.center()
            y = tuple(evaluate(g, c) for g in maps)
            if not target.contains_point(y):
                return CheckOutcome(Status.DISPROVED, witness=tuple(c), value=None, boxes=boxes,
                                    max_depth=max_depth,
                                    detail={"theta": list(theta), "image": list(y)})
            if depth >= depth_limit:
                if len(frontier) < MAX_FRONTIER:
                    frontier.append(box)
                continue
            left, right = box.split()
            stack.append((right, depth + 1))
            stack.append((left, depth + 1))
    if frontier:
        return CheckOutcome(Status.UNKNOWN, frontier=frontier, boxes=boxes, max_depth=max_depth)
    return CheckOutcome(Status.PROVED, boxes=boxes, max_depth=max_depth)


def check_assumption1(spec: ProblemSpec, depth_limit: int = 14) -> CheckOutcome:
    """Invariance of X under every disturbance branch."""
    key = ("assumption1", depth_limit)
    if key not in spec._cache:
        spec._cache[key] = check_image_containment(spec, spec.X, spec.X, depth_limit)
    return spec._cache[key]


def check_xhat(spec: ProblemSpec, depth_limit: int = 14) -> CheckOutcome:
    """Containment of the one-step image of X in Xhat."""
    if spec.Xhat is None:
        raise ProblemError("problem has no Xhat")
    key = ("xhat", depth_limit)
    if key not in spec._cache:
        spec._cache[key] = check_image_containment(spec, spec.X, spec.Xhat, depth_limit)
    return spec._cache[key]
