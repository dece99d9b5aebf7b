"""Suspicion-ranked review queue and auditor-efficiency arithmetic."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Sequence


class ReviewStatus(Enum):
    PENDING = "Pending"
    CONFIRMED_EVASION = "ConfirmedEvasion"
    REJECTED = "Rejected"


@dataclass(frozen=True)
class QueueEntry:
    post_id: str
    score: float
    status: ReviewStatus = ReviewStatus.PENDING
    reviewer: str | None = None
    reviewed_at: int | None = None
    snippet: dict[str, Any] | None = None

    def to_json(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "post_id": self.post_id,
            "score": self.score,
            "status": self.status.value,
            "reviewer": self.reviewer,
            "reviewed_at": self.reviewed_at,
        }
        if self.snippet is not None:
            obj["snippet"] = self.snippet
        return obj

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "QueueEntry":
        return QueueEntry(
            post_id=str(obj["post_id"]),
            score=float(obj["score"]),
            status=ReviewStatus(obj.get("status", "Pending")),
            reviewer=obj.get("reviewer"),
            reviewed_at=obj.get("reviewed_at"),
            snippet=obj.get("snippet"),
        )


@dataclass
class TriageQueue:
    """Entries sorted score-descending, post_id ascending as tiebreak."""

    entries: list[QueueEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def index_of(self, post_id: str) -> int | None:
        for i, entry in enumerate(self.entries):
            if entry.post_id == post_id:
                return i
        return None

    def apply_verdict(
        self, post_id: str, status: ReviewStatus, reviewer: str | None, reviewed_at: int | None
    ) -> QueueEntry:
        """Replace the entry's status; ordering is unaffected."""
        i = self.index_of(post_id)
        if i is None:
            raise KeyError(post_id)
        updated = replace(
            self.entries[i], status=status, reviewer=reviewer, reviewed_at=reviewed_at
        )
        self.entries[i] = updated
        return updated


def queue_order_key(entry: QueueEntry) -> tuple[float, str]:
    return (-entry.score, entry.post_id)


def rank_queue(scored: Sequence[tuple[str, float]] | Sequence[QueueEntry]) -> TriageQueue:
    """Build a Pending queue ranked by score desc, post_id asc on ties."""
    entries: list[QueueEntry] = []
    for item in scored:
        if isinstance(item, QueueEntry):
            entries.append(item)
        else:
            post_id, score = item
            entries.append(QueueEntry(post_id=post_id, score=float(score)))
    entries.sort(key=queue_order_key)
    return TriageQueue(entries=entries)


def efficiency_report(precision: float, base_rate: float, budget: int) -> dict[str, float]:
    """Expected finds for a review budget, random vs model-ranked.

    Treats precision as constant across the reviewed head of the queue
    (precision@k does vary with k in general; this is the headline
    approximation, not a guarantee).
    """
    if not 0.0 < base_rate <= 1.0:
        raise ValueError("base_rate must be in (0, 1]")
    if not 0.0 <= precision <= 1.0:
        raise ValueError("precision must be in [0, 1]")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    return {
        "expected_random": base_rate * budget,
        "expected_ranked": precision * budget,
        "gain": precision / base_rate,
    }


def write_queue(queue: TriageQueue, path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in queue.entries:
            fh.write(json.dumps(entry.to_json(), sort_keys=True, ensure_ascii=False) + "\n")


def read_queue(path: Path | str) -> TriageQueue:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(QueueEntry.from_json(json.loads(line)))
    entries.sort(key=queue_order_key)
    return TriageQueue(entries=entries)
