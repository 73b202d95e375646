"""Announce-Book-Commit graph: three structures behind a single snapshot.

Per-process local sets are written wholesale into one snapshot component per
process; a read is one atomic scan followed by local merging (union for the
announce set, per-operation minimum for booking values, per-operation union
for committed dependency sets).
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, Mapping

from .base import SnapshotObject
from .seqspec import OpInstance


@functools.total_ordering
class _Unbooked:
    """Sentinel booking value that compares greater than every integer."""

    def __eq__(self, other):
        return isinstance(other, _Unbooked)

    def __gt__(self, other):
        return not isinstance(other, _Unbooked)

    def __hash__(self):
        return hash("unbooked")

    def __repr__(self):
        return "UNBOOKED"


UNBOOKED = _Unbooked()


@dataclass(frozen=True)
class AbcView:
    """An atomically read triple (A, B, C).

    B maps only booked operations; `b_value` supplies the UNBOOKED sentinel
    otherwise. C maps each committed operation to its incoming-edge sources.
    """

    A: FrozenSet[OpInstance]
    B: Mapping[OpInstance, int]
    C: Mapping[OpInstance, FrozenSet[OpInstance]]

    def b_value(self, op: OpInstance):
        return self.B.get(op, UNBOOKED)

    def vertices_B(self) -> frozenset:
        return frozenset(self.B)

    def vertices_C(self) -> frozenset:
        verts = set(self.C)
        for sources in self.C.values():
            verts.update(sources)
        return frozenset(verts)

    def edges_C(self) -> frozenset:
        return frozenset(
            (src, dst) for dst, sources in self.C.items() for src in sources
        )

    def to_json(self) -> dict:
        return {
            "A": sorted(op.op_id for op in self.A),
            "B": {op.op_id: b for op, b in sorted(self.B.items())},
            "C": {
                op.op_id: sorted(src.op_id for src in sources)
                for op, sources in sorted(self.C.items())
            },
        }


@dataclass
class AbcLocal:
    """Per-process append-only registers, written wholesale on each add."""

    R_A: set = field(default_factory=set)
    R_B: set = field(default_factory=set)  # (op, int) tuples
    R_C: set = field(default_factory=set)  # (op, frozenset) tuples

    def component(self) -> tuple:
        return (frozenset(self.R_A), frozenset(self.R_B), frozenset(self.R_C))


EMPTY_COMPONENT = (frozenset(), frozenset(), frozenset())


def merge_components(components: Iterable[tuple]) -> AbcView:
    """Aggregate scanned components into a view: union A, min-merge B,
    union-merge C."""
    A: set = set()
    B: dict = {}
    C: dict = {}
    for comp_a, comp_b, comp_c in components:
        A.update(comp_a)
        for op, b in comp_b:
            if op not in B or b < B[op]:
                B[op] = b
        for op, sources in comp_c:
            C[op] = C.get(op, frozenset()) | sources
    return AbcView(A=frozenset(A), B=B, C=C)


class AbcGraph:
    """The composed snapshot object plus per-process locals.

    Each add_* is one local update followed by one snapshot write; read is
    one snapshot scan plus local aggregation. The scheduler invokes each
    method as a single atomic step.
    """

    def __init__(self, n_processes: int, object_id: str = "abc"):
        self.object_id = object_id
        self.snapshot = SnapshotObject(n_processes, initial=EMPTY_COMPONENT, object_id=object_id)
        self.locals = [AbcLocal() for _ in range(n_processes)]

    def add_A(self, process_id: int, op: OpInstance) -> None:
        self.locals[process_id].R_A.add(op)
        self.snapshot.write(process_id, self.locals[process_id].component())

    def add_B(self, process_id: int, op: OpInstance, b: int) -> None:
        self.locals[process_id].R_B.add((op, b))
        self.snapshot.write(process_id, self.locals[process_id].component())

    def add_C(self, process_id: int, op: OpInstance, sources: Iterable[OpInstance]) -> None:
        self.locals[process_id].R_C.add((op, frozenset(sources)))
        self.snapshot.write(process_id, self.locals[process_id].component())

    def read(self, process_id: int) -> AbcView:
        return merge_components(self.snapshot.scan())
