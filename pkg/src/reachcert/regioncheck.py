"""Branch-and-bound decision of polynomial sign conditions over box regions.

Work proceeds depth first over the region's pieces in lexicographic order,
visiting the lower half of every split first, so witnesses and frontiers are
reproducible.  A box is settled when its enclosure satisfies the sense with
the tolerance ``margin``; a box center that violates the sense by more than
``margin`` plus the evaluation error bound is returned as a witness.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import RegionSpec
from .outcome import MAX_FRONTIER, CheckOutcome, Status
from .poly import Box, Polynomial, enclose_range, evaluate, evaluation_error

DEFAULT_DEPTH = 14
DEFAULT_MARGIN = 1e-9
SENSES = (">=0", "<=0")


@dataclass(frozen=True)
class SignObligation:
    poly: Polynomial
    region: RegionSpec
    sense: str = ">=0"
    margin: float = DEFAULT_MARGIN
    label: str = ""
    # set for the stopped-process constraint; poly then holds v itself
    stopped_k: int | None = None

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"sense must be one of {SENSES}")
        if self.margin < 0:
            raise ValueError("margin must be non-negative")
        if self.region.arity != self.poly.arity:
            raise ValueError("region arity does not match polynomial arity")

    def oriented(self) -> Polynomial:
        """The polynomial whose non-negativity is claimed."""
        return self.poly if self.sense == ">=0" else -self.poly


def prove_sign(ob: SignObligation, depth_limit: int = DEFAULT_DEPTH) -> CheckOutcome:
    if depth_limit < 0:
        raise ValueError("depth_limit must be non-negative")
    p = ob.oriented()
    margin = ob.margin
    frontier: list[Box] = []
    unknown = False
    boxes = 0
    max_depth = 0
    stack = [(piece, 0) for piece in sorted(ob.region.pieces, reverse=True)]
    first = True
    while stack:
        box, depth = stack.pop()
        boxes += 1
        max_depth = max(max_depth, depth)
        enc = enclose_range(p, box)
        if enc.lo >= -margin:
            continue
        probes = [box.center()]
        if first or depth >= depth_limit:
            probes.extend(box.corners())
        for c in probes:
            val = evaluate(p, c)
            if val < -margin - evaluation_error(p, c):
                return CheckOutcome(Status.DISPROVED, witness=tuple(c), value=val, boxes=boxes,
                                    max_depth=max_depth)
        if depth >= depth_limit:
            unknown = True
            if len(frontier) < MAX_FRONTIER:
                frontier.append(box)
            continue
        left, right = box.split()
        stack.append((right, depth + 1))
        stack.append((left, depth + 1))
        first = False
    if unknown:
        return CheckOutcome(Status.UNKNOWN, frontier=frontier, boxes=boxes, max_depth=max_depth)
    return CheckOutcome(Status.PROVED, boxes=boxes, max_depth=max_depth)


def bound_supremum(p: Polynomial, region: RegionSpec, depth_limit: int = DEFAULT_DEPTH) -> float:
    """Upper bound on the supremum of ``p`` over ``region``."""
    if region.is_empty():
        raise ValueError("empty region")
    best = -float("inf")
    for piece in region.pieces:
        c = piece.center()
        best = max(best, evaluate(p, c) - evaluation_error(p, c))
    upper = -float("inf")
    stack = [(piece, 0) for piece in sorted(region.pieces, reverse=True)]
    while stack:
        box, depth = stack.pop()
        enc = enclose_range(p, box)
        if enc.hi <= best or depth >= depth_limit or enc.hi - enc.lo <= 1e-15 * max(1.0, abs(enc.hi)):
            upper = max(upper, enc.hi)
            continue
        left, right = box.split()
        for child in (left, right):
            c = child.center()
            best = max(best, evaluate(p, c) - evaluation_error(p, c))
        stack.append((right, depth + 1))
        stack.append((left, depth + 1))
    return upper


def bound_infimum(p: Polynomial, region: RegionSpec, depth_limit: int = DEFAULT_DEPTH) -> float:
    """Lower bound on the infimum of ``p`` over ``region``."""
    return -bound_supremum(-p, region, depth_limit)
