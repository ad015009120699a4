"""Three-valued verdicts shared by every checker."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

from .poly import Box

MAX_FRONTIER = 32


class Status(str, enum.Enum):
    PROVED = "Proved"
    DISPROVED = "Disproved"
    UNKNOWN = "Unknown"

    def __str__(self) -> str:
        return self.value


_RANK = {Status.PROVED: 0, Status.UNKNOWN: 1, Status.DISPROVED: 2}


def worst(statuses) -> Status:
    """Combine verdicts: Disproved over Unknown over Proved."""
    out = Status.PROVED
    for s in statuses:
        if _RANK[s] > _RANK[out]:
            out = s
    return out


@dataclass
class CheckOutcome:
    status: Status
    witness: tuple[float, ...] | None = None
    value: float | None = None
    frontier: list[Box] = field(default_factory=list)
    boxes: int = 0
    max_depth: int = 0
    detail: dict[str, Any] = field(default_factory=dict)

    @property
    def proved(self) -> bool:
        return self.status is Status.PROVED

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"status": self.status.value, "boxes": self.boxes, "max_depth": self.max_depth}
        if self.witness is not None:
            out["witness"] = list(self.witness)
            out["value"] = self.value
        if self.frontier:
            out["frontier"] = [b.to_list() for b in self.frontier]
        if self.detail:
            out["detail"] = self.detail
        return out
