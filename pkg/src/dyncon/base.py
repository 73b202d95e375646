"""Simulated linearizable base objects.

These objects are owned by the scheduler: every write/scan/propose happens
inside exactly one scheduler-mediated step, which is what makes them
trivially linearizable against the recorded global step order.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any

from .errors import InvariantViolation


class SnapshotObject:
    """Multi-writer snapshot: one component per process, atomic scan."""

    def __init__(self, n_processes: int, initial: Any = None, object_id: str = "S"):
        self.object_id = object_id
        self.components = [copy.deepcopy(initial) for _ in range(n_processes)]

    def write(self, process_id: int, value: Any, writer: int | None = None) -> None:
        if writer is not None and writer != process_id:
            raise InvariantViolation(
                f"process {writer} wrote foreign component {process_id} of {self.object_id}"
            )
        self.components[process_id] = value

    def scan(self) -> list:
        return list(self.components)


class ConsensusObject:
    """One-shot compare-and-set cell: first stored proposal wins."""

    def __init__(self, index: int, object_id: str | None = None):
        self.index = index
        self.object_id = object_id or f"CONS_{index}"
        self.stored: Any = None
        self._decided = False

    def propose(self, value: Any) -> Any:
        if not self._decided:
            self.stored = value
            self._decided = True
        return self.stored


@dataclass(frozen=True)
class SyncRecord:
    """One strong-primitive use, attributed to the publish that made it."""

    publish_op_id: str
    process_id: int
    object_id: str
    step: int


@dataclass
class SyncUsageLog:
    records: list[SyncRecord] = field(default_factory=list)

    def record(self, publish_op_id: str, process_id: int, object_id: str, step: int) -> None:
        self.records.append(SyncRecord(publish_op_id, process_id, object_id, step))
