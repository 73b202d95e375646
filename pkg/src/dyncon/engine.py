"""The publish step machine: announce, book, commit or resolve conflicts.

`publish_machine` is a generator that yields one shared-object step request
at a time; the scheduler executes each request atomically and sends the
result back. That keeps the engine agnostic to the execution substrate: it
only assumes each yielded access is one atomic, linearizable step.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, FrozenSet, Mapping, Optional, Sequence

from .errors import CapacityError, InvariantViolation
from .seqspec import (
    DEFAULT_SUBSET_CAP,
    OpInstance,
    SeqObjectSpec,
    apply_sequence,
    commutes_with_all_subsets,
    op_sort_key,
)

CONFLICT_FREE = "conflict_free"
CONFLICT_RESOLUTION = "conflict_resolution"

# Engine mutations used by the negative-control tests. "skip_commutativity"
# always takes the direct-commit path; "stale_dependencies" commits with the
# dependency set from the first read instead of the second.
MUTATIONS = (None, "skip_commutativity", "stale_dependencies")


def linearize(C: Mapping[OpInstance, FrozenSet[OpInstance]]) -> tuple[OpInstance, ...]:
    """Deterministic topological ordering of the dependency graph.

    Kahn's method with the ready set ordered by (process_id, seq_no); a cycle
    is an engine bug, never a recoverable condition.
    """
    vertices = set(C)
    for sources in C.values():
        vertices.update(sources)
    indegree = {v: 0 for v in vertices}
    outgoing: dict[OpInstance, list[OpInstance]] = {v: [] for v in vertices}
    for dst, sources in C.items():
        for src in sources:
            indegree[dst] += 1
            outgoing[src].append(dst)
    ready = [op_sort_key(v) + (v,) for v in vertices if indegree[v] == 0]
    heapq.heapify(ready)
    order: list[OpInstance] = []
    while ready:
        *_, v = heapq.heappop(ready)
        order.append(v)
        for dst in outgoing[v]:
            indegree[dst] -= 1
            if indegree[dst] == 0:
                heapq.heappush(ready, op_sort_key(dst) + (dst,))
    if len(order) != len(vertices):
        raise InvariantViolation("dependency graph contains a cycle")
    return tuple(order)


def result_in(spec: SeqObjectSpec, l: Sequence[OpInstance], op: OpInstance) -> Any:
    if op not in l:
        raise InvariantViolation(f"{op} not present in the ordering")
    return apply_sequence(spec, l).responses[op]


@dataclass
class PublishResult:
    """Outcome of one publish invocation, attached to its trace `res` event."""

    op: OpInstance
    response: Any
    return_path: str  # conflict_free | conflict_resolution | precommitted
    k0: Optional[int] = None
    cr_iterations: int = 0
    cap_triggered: bool = False


@dataclass
class CommitCertificate:
    op: OpInstance
    path: str
    dependencies: frozenset
    committed_by: int

    def to_json(self) -> dict:
        return {
            "op": self.op.op_id,
            "path": self.path,
            "dependencies": sorted(d.op_id for d in self.dependencies),
            "committed_by": self.committed_by,
        }


# Step requests yielded to the scheduler. Tuples keep the protocol trivially
# serializable: ("abc_add_A", op), ("abc_add_B", op, b), ("abc_add_C", op,
# sources, certificate), ("abc_read",), ("k_scan",), ("k_write", k),
# ("cons_propose", k, op).


def publish_machine(
    spec: SeqObjectSpec,
    process_id: int,
    op: OpInstance,
    cap: int = DEFAULT_SUBSET_CAP,
    mutation: Optional[str] = None,
):
    """Generator implementing publish(op) for one process."""
    if mutation not in MUTATIONS:
        raise InvariantViolation(f"unknown engine mutation {mutation!r}")

    yield ("abc_add_A", op)
    first_view = yield ("abc_read",)
    yield ("abc_add_B", op, len(first_view.A))
    view = yield ("abc_read",)
    l = linearize(view.C)
    if op in view.vertices_C():
        return PublishResult(op=op, response=result_in(spec, l, op), return_path="precommitted")

    concurrent = view.A - view.vertices_C() - {op}
    cap_triggered = False
    if mutation == "skip_commutativity":
        commutes = True
    else:
        try:
            commutes = commutes_with_all_subsets(spec, l, op, concurrent, cap=cap)
        except CapacityError:
            # Conservative: treat an over-cap check as a conflict.
            commutes = False
            cap_triggered = True
    if commutes:
        deps_view = first_view if mutation == "stale_dependencies" else view
        deps = deps_view.vertices_C()
        cert = CommitCertificate(op=op, path=CONFLICT_FREE, dependencies=deps, committed_by=process_id)
        yield ("abc_add_C", op, deps, cert)
        return PublishResult(
            op=op,
            response=result_in(spec, l + (op,), op),
            return_path=CONFLICT_FREE,
            cap_triggered=cap_triggered,
        )

    # Conflict resolution.
    levels = yield ("k_scan",)
    k0 = max(levels)
    k = k0
    iterations = 0
    while True:
        k += 1
        iterations += 1
        view = yield ("abc_read",)
        committed = view.vertices_C()
        if op in committed:
            return PublishResult(
                op=op,
                response=result_in(spec, linearize(view.C), op),
                return_path=CONFLICT_RESOLUTION,
                k0=k0,
                cr_iterations=iterations,
                cap_triggered=cap_triggered,
            )
        candidates = view.vertices_B() - committed
        if not candidates:
            raise InvariantViolation(
                "conflict resolution found no booked, uncommitted operation"
            )
        chosen = min(candidates, key=lambda o: (view.B[o],) + op_sort_key(o))
        decided = yield ("cons_propose", k, chosen)
        view = yield ("abc_read",)
        if decided not in view.vertices_C():
            cert = CommitCertificate(
                op=decided,
                path=CONFLICT_RESOLUTION,
                dependencies=view.vertices_C(),
                committed_by=process_id,
            )
            yield ("abc_add_C", decided, view.vertices_C(), cert)
        yield ("k_write", k)
