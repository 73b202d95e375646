"""Verification suite over histories and traces.

Everything here is exact and exhaustive with explicit bounds: brute-force
linearization search, enumeration of all reachable system states during an
operation, the dynamic-concurrency audit, and trace replay that re-derives
every graph view from the raw step log instead of trusting the engine.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Iterable, Optional

from .abcgraph import AbcLocal, AbcView, merge_components
from .engine import CONFLICT_RESOLUTION, linearize, result_in
from .errors import CapacityError, InvariantViolation, MalformedInputError
from .seqspec import (
    OpInstance,
    SeqObjectSpec,
    apply_sequence,
    commutes_with_set,
    op_sort_key,
)

DEFAULT_LIN_BOUND = 10
DEFAULT_STATE_BOUND = 8

HISTORY_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Histories


@dataclass
class History:
    """Ordered invocation/response events with the derived precedence order."""

    events: list[dict]  # {"kind": "inv"|"res", "op": OpInstance, "response"?}
    ops: set = field(init=False)
    inv_index: dict = field(init=False)
    res_index: dict = field(init=False)
    responses: dict = field(init=False)

    def __post_init__(self):
        self.ops = set()
        self.inv_index = {}
        self.res_index = {}
        self.responses = {}
        for i, event in enumerate(self.events):
            op = event["op"]
            if event["kind"] == "inv":
                if op in self.inv_index:
                    raise MalformedInputError(f"duplicate invocation of {op}")
                self.inv_index[op] = i
                self.ops.add(op)
            elif event["kind"] == "res":
                if op not in self.inv_index or op in self.res_index:
                    raise MalformedInputError(f"unmatched response of {op}")
                self.res_index[op] = i
                self.responses[op] = event.get("response")
            else:
                raise MalformedInputError(f"unknown history event kind {event['kind']!r}")

    @property
    def complete_ops(self) -> set:
        return set(self.res_index)

    def precedes(self, op: OpInstance, other: OpInstance) -> bool:
        return op in self.res_index and self.res_index[op] < self.inv_index[other]

    def precedence_pairs(self) -> list[tuple[OpInstance, OpInstance]]:
        return [
            (a, b)
            for a in self.ops
            for b in self.ops
            if a != b and self.precedes(a, b)
        ]

    def concurrency_level(self) -> int:
        """Maximum number of simultaneously active operations."""
        level = best = 0
        for event in self.events:
            if event["kind"] == "inv":
                level += 1
                best = max(best, level)
            else:
                level -= 1
        return best

    def to_json(self, spec_name: str | None = None, spec_params: dict | None = None) -> dict:
        events = []
        for event in self.events:
            if event["kind"] == "inv":
                events.append({"kind": "inv", "op": event["op"].to_json()})
            else:
                events.append(
                    {"kind": "res", "op_id": event["op"].op_id, "response": event.get("response")}
                )
        doc = {"format_version": HISTORY_FORMAT_VERSION, "events": events}
        if spec_name:
            doc["spec"] = spec_name
            doc["spec_params"] = spec_params or {}
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "History":
        if doc.get("format_version", HISTORY_FORMAT_VERSION) != HISTORY_FORMAT_VERSION:
            raise MalformedInputError("unsupported history format_version")
        ops: dict[str, OpInstance] = {}
        events = []
        for entry in doc["events"]:
            if entry["kind"] == "inv":
                op = OpInstance.from_json(entry["op"])
                ops[op.op_id] = op
                events.append({"kind": "inv", "op": op})
            else:
                op = ops.get(entry["op_id"])
                if op is None:
                    raise MalformedInputError(f"response for unknown op {entry['op_id']}")
                events.append({"kind": "res", "op": op, "response": entry.get("response")})
        return cls(events=events)

    @classmethod
    def load(cls, path) -> tuple["History", dict]:
        with open(path) as fh:
            doc = json.load(fh)
        return cls.from_json(doc), doc


def history_of(trace) -> History:
    """Project the publish invocations/responses of a trace."""
    events = []
    for event in trace.events:
        if event["kind"] == "inv":
            events.append({"kind": "inv", "op": trace.ops[event["op"]]})
        elif event["kind"] == "res":
            events.append(
                {"kind": "res", "op": trace.ops[event["op"]], "response": event["response"]}
            )
    return History(events=events)


# ---------------------------------------------------------------------------
# Linearizability


def _state_key(state: Any) -> str:
    return json.dumps(state, sort_keys=True, default=repr)


def _search_linearization(
    spec: SeqObjectSpec,
    h: History,
    chosen: set,
    collect: Optional[list] = None,
) -> Optional[tuple]:
    """Backtracking over precedence-respecting, legal orderings of `chosen`.

    With `collect` supplied, explores everything and appends each complete
    ordering; otherwise returns the first witness found (with memoized dead
    ends for speed).
    """
    preds = {op: {q for q in chosen if h.precedes(q, op)} for op in chosen}
    order: list[OpInstance] = []
    placed: set = set()
    dead: set = set()

    def backtrack(state) -> Optional[tuple]:
        if len(order) == len(chosen):
            if collect is not None:
                collect.append(tuple(order))
                return None
            return tuple(order)
        key = (frozenset(placed), _state_key(state))
        if collect is None and key in dead:
            return None
        for op in sorted(chosen - placed, key=op_sort_key):
            if not preds[op] <= placed:
                continue
            response, new_state = spec.apply(state, op)
            if op in h.responses and response != h.responses[op]:
                continue
            placed.add(op)
            order.append(op)
            found = backtrack(new_state)
            placed.discard(op)
            order.pop()
            if found is not None:
                return found
        if collect is None:
            dead.add(key)
        return None

    return backtrack(spec.initial_state)


def check_linearizable(
    spec: SeqObjectSpec, h: History, max_ops: int = DEFAULT_LIN_BOUND
) -> Optional[tuple]:
    """Exact linearization search; returns a sequential witness or None."""
    if len(h.ops) > max_ops:
        raise CapacityError(f"history has {len(h.ops)} operations, bound is {max_ops}")
    incomplete = sorted(h.ops - h.complete_ops, key=op_sort_key)
    for size in range(len(incomplete), -1, -1):
        for included in combinations(incomplete, size):
            witness = _search_linearization(spec, h, h.complete_ops | set(included))
            if witness is not None:
                return witness
    return None


def enumerate_linearizations(
    spec: SeqObjectSpec, h: History, max_ops: int = DEFAULT_STATE_BOUND
) -> list[tuple]:
    """All linearizations of h, over every completion."""
    if len(h.ops) > max_ops:
        raise CapacityError(f"history has {len(h.ops)} operations, bound is {max_ops}")
    incomplete = sorted(h.ops - h.complete_ops, key=op_sort_key)
    found: list[tuple] = []
    for size in range(len(incomplete) + 1):
        for included in combinations(incomplete, size):
            _search_linearization(spec, h, h.complete_ops | set(included), collect=found)
    unique = sorted(set(found), key=lambda seq: tuple(op_sort_key(o) for o in seq))
    return unique


def verify_linearization(spec: SeqObjectSpec, h: History, seq: Iterable[OpInstance]) -> bool:
    """Is `seq` a linearization of h? (completion + precedence + legality)"""
    seq = tuple(seq)
    seq_set = set(seq)
    if len(seq_set) != len(seq):
        return False
    if not h.complete_ops <= seq_set <= h.ops:
        return False
    position = {op: i for i, op in enumerate(seq)}
    for a, b in h.precedence_pairs():
        if a in position and b in position and position[a] > position[b]:
            return False
    outcome = apply_sequence(spec, seq)
    return all(outcome.responses[op] == h.responses[op] for op in seq if op in h.responses)


# ---------------------------------------------------------------------------
# System states and the dynamic-concurrency audit


@dataclass(frozen=True)
class SystemState:
    """A possible linearized past and the pending set at some instant."""

    l: tuple
    O: frozenset

    def to_json(self) -> dict:
        return {
            "l": [op.op_id for op in self.l],
            "O": sorted(op.op_id for op in self.O),
        }


def enumerate_system_states(
    spec: SeqObjectSpec,
    h: History,
    op: OpInstance,
    max_ops: int = DEFAULT_STATE_BOUND,
) -> list[SystemState]:
    """All system states during `op` in `h`, deduplicated on (l, O).

    A state pairs a prefix `l` of some linearization of the whole history
    (restricted to be a linearization of a history prefix that has `op`
    invoked but unanswered) with the set of invoked-but-unplaced operations.
    """
    if op not in h.ops:
        raise MalformedInputError(f"{op} does not occur in the history")
    if len(h.ops) > max_ops:
        raise CapacityError(f"history has {len(h.ops)} operations, bound is {max_ops}")
    linearizations = enumerate_linearizations(spec, h, max_ops=max_ops)
    first_cut = h.inv_index[op] + 1
    last_cut = h.res_index.get(op, len(h.events))
    states: dict[tuple, SystemState] = {}
    for cut in range(first_cut, last_cut + 1):
        invoked = {q for q in h.ops if h.inv_index[q] < cut}
        completed = {q for q in h.ops if h.res_index.get(q, len(h.events)) < cut}
        allowed = invoked - {op}
        for L in linearizations:
            for plen in range(len(L) + 1):
                prefix = L[:plen]
                prefix_set = set(prefix)
                if op in prefix_set:
                    break
                if completed <= prefix_set <= allowed:
                    pending = frozenset(invoked - prefix_set - {op})
                    states.setdefault((prefix, pending), SystemState(prefix, pending))
    return sorted(
        states.values(),
        key=lambda s: (len(s.l), tuple(op_sort_key(o) for o in s.l), sorted(map(op_sort_key, s.O))),
    )


def find_noncommuting_witness(
    spec: SeqObjectSpec,
    h: History,
    op: OpInstance,
    max_ops: int = DEFAULT_STATE_BOUND,
) -> Optional[tuple[SystemState, frozenset]]:
    """A system state and pending subset with which `op` fails to commute."""
    for state in enumerate_system_states(spec, h, op, max_ops=max_ops):
        pending = sorted(state.O, key=op_sort_key)
        for size in range(1, len(pending) + 1):
            for subset in combinations(pending, size):
                if not commutes_with_set(spec, state.l, op, subset):
                    return state, frozenset(subset)
    return None


@dataclass
class AuditEntry:
    op: OpInstance
    used_strong_sync: bool
    cap_triggered: bool
    witness: Optional[tuple[SystemState, frozenset]] = None

    @property
    def ok(self) -> bool:
        if not self.used_strong_sync or self.cap_triggered:
            return True
        return self.witness is not None

    def to_json(self) -> dict:
        doc = {
            "op": self.op.op_id,
            "used_strong_sync": self.used_strong_sync,
            "cap_triggered": self.cap_triggered,
            "ok": self.ok,
        }
        if self.witness is not None:
            state, subset = self.witness
            doc["witness"] = {
                "state": state.to_json(),
                "subset": sorted(op.op_id for op in subset),
            }
        return doc


@dataclass
class AuditVerdict:
    entries: list[AuditEntry]

    @property
    def passed(self) -> bool:
        return all(entry.ok for entry in self.entries)

    def to_json(self) -> dict:
        return {"passed": self.passed, "publishes": [e.to_json() for e in self.entries]}


def audit_dynamic_concurrency(trace, max_ops: int = DEFAULT_STATE_BOUND) -> AuditVerdict:
    """Check that every strong-primitive use has a non-commuting witness."""
    spec = trace.make_spec()
    h = history_of(trace)
    sync_users = {
        event["publish"]
        for event in trace.events
        if event["kind"] == "base_step" and event["op"] == "propose"
    }
    cap_triggered = {
        event["op"]
        for event in trace.events
        if event["kind"] == "res" and event.get("cap_triggered")
    }
    entries = []
    for op in sorted(h.ops, key=op_sort_key):
        used = op.op_id in sync_users
        capped = op.op_id in cap_triggered
        witness = None
        if used and not capped:
            witness = find_noncommuting_witness(spec, h, op, max_ops=max_ops)
        entries.append(
            AuditEntry(op=op, used_strong_sync=used, cap_triggered=capped, witness=witness)
        )
    return AuditVerdict(entries=entries)


# ---------------------------------------------------------------------------
# Graph invariants via trace replay


def _view_from_json(value: dict, ops: dict[str, OpInstance]) -> AbcView:
    return AbcView(
        A=frozenset(ops[i] for i in value["A"]),
        B={ops[i]: b for i, b in value["B"].items()},
        C={
            ops[i]: frozenset(ops[s] for s in sources)
            for i, sources in value["C"].items()
        },
    )


def _is_acyclic(C) -> bool:
    try:
        linearize(C)
        return True
    except InvariantViolation:
        return False


def _transitivity_holes(C) -> list:
    edges = {(src, dst) for dst, sources in C.items() for src in sources}
    holes = []
    for a, b in edges:
        for b2, c in edges:
            if b == b2 and a != c and (a, c) not in edges:
                holes.append((a, b, c))
    return holes


def topological_outcomes_consistent(spec: SeqObjectSpec, C) -> Optional[str]:
    """Dynamic program over downsets of C.

    Every prefix of every topological ordering is a downward-closed vertex
    set; if each downset has a unique (state, responses) outcome regardless
    of the order it was reached in, then all topological orderings are
    pairwise equivalent, including equal-set prefixes. Returns a violation
    message or None.
    """
    vertices = set(C)
    for sources in C.values():
        vertices.update(sources)
    deps = {v: set(C.get(v, frozenset())) & vertices for v in vertices}
    outcomes = {frozenset(): (spec.initial_state, {})}
    frontier = [frozenset()]
    while frontier:
        next_frontier = []
        for downset in frontier:
            state, responses = outcomes[downset]
            for v in sorted(vertices - downset, key=op_sort_key):
                if not deps[v] <= downset:
                    continue
                response, new_state = spec.apply(state, v)
                grown = downset | {v}
                new_out = (new_state, {**responses, v: response})
                if grown in outcomes:
                    prev_state, prev_resp = outcomes[grown]
                    if not spec.state_eq(prev_state, new_state) or prev_resp != new_out[1]:
                        return (
                            f"orderings of prefix set {sorted(o.op_id for o in grown)} "
                            "are not equivalent"
                        )
                else:
                    outcomes[grown] = new_out
                    next_frontier.append(grown)
        frontier = next_frontier
    return None


def enumerate_topological_orderings(C, limit: int = 100_000) -> list[tuple]:
    """All topological orderings of C (explicit, for small graphs)."""
    vertices = set(C)
    for sources in C.values():
        vertices.update(sources)
    deps = {v: set(C.get(v, frozenset())) & vertices for v in vertices}
    orders: list[tuple] = []
    order: list[OpInstance] = []
    placed: set = set()

    def backtrack():
        if len(order) == len(vertices):
            orders.append(tuple(order))
            if len(orders) > limit:
                raise CapacityError(f"more than {limit} topological orderings")
            return
        for v in sorted(vertices - placed, key=op_sort_key):
            if deps[v] <= placed:
                placed.add(v)
                order.append(v)
                backtrack()
                placed.discard(v)
                order.pop()

    backtrack()
    return orders


@dataclass
class GraphReport:
    violations: list[str] = field(default_factory=list)
    views_checked: int = 0
    final_C: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "views_checked": self.views_checked,
            "violations": list(self.violations),
        }


def check_graph_invariants(trace, topo_vertex_bound: int = 8) -> GraphReport:
    """Replay a trace and verify every graph-level invariant.

    Violations are reported, not thrown, so a single report covers a whole
    corrupted trace.
    """
    spec = trace.make_spec()
    ops = trace.ops
    report = GraphReport()
    n = trace.header["processes"]
    locals_ = [AbcLocal() for _ in range(n)]
    views: list[tuple[int, AbcView]] = []
    add_a_counts: dict[str, int] = {}
    add_b_counts: dict[str, int] = {}
    k_values = [0] * n
    h = history_of(trace)

    def merged() -> AbcView:
        return merge_components(loc.component() for loc in locals_)

    for event in trace.events:
        kind = event["kind"]
        if kind == "base_step" and event["object"] == "abc":
            p = event["process"]
            value = event["value"]
            if event["op"] == "add_A":
                op = ops[value["op"]]
                add_a_counts[op.op_id] = add_a_counts.get(op.op_id, 0) + 1
                if op.process_id != p:
                    report.violations.append(
                        f"step {event['step']}: p{p} announced foreign op {op.op_id}"
                    )
                locals_[p].R_A.add(op)
            elif event["op"] == "add_B":
                op = ops[value["op"]]
                add_b_counts[op.op_id] = add_b_counts.get(op.op_id, 0) + 1
                if op.process_id != p:
                    report.violations.append(
                        f"step {event['step']}: p{p} booked foreign op {op.op_id}"
                    )
                locals_[p].R_B.add((op, value["b"]))
            elif event["op"] == "add_C":
                op = ops[value["op"]]
                sources = frozenset(ops[s] for s in value["sources"])
                locals_[p].R_C.add((op, sources))
            elif event["op"] == "read":
                recorded = _view_from_json(value, ops)
                expected = merged()
                if (
                    recorded.A != expected.A
                    or dict(recorded.B) != dict(expected.B)
                    or dict(recorded.C) != dict(expected.C)
                ):
                    report.violations.append(
                        f"step {event['step']}: read result differs from step-order merge"
                    )
                views.append((event["step"], recorded))
        elif kind == "base_step" and event["object"] == "K":
            p = event["process"]
            if event["op"] == "write":
                if event["value"] <= k_values[p]:
                    report.violations.append(
                        f"step {event['step']}: K[{p}] wrote non-increasing value"
                    )
                k_values[p] = event["value"]
        elif kind == "res":
            op = ops[event["op"]]
            if op not in merged().vertices_C():
                report.violations.append(
                    f"step {event['step']}: {op.op_id} returned before being committed"
                )

    for op_id, count in {**add_a_counts, **add_b_counts}.items():
        if count > 1:
            report.violations.append(f"{op_id} announced or booked more than once")

    # Per-view structural checks.
    checked_graphs: set = set()
    canonical_responses: dict[OpInstance, Any] = {}
    for step, view in views:
        report.views_checked += 1
        c_items = frozenset((op, sources) for op, sources in view.C.items())
        vertices = view.vertices_C()
        for op in view.C:
            if op in view.C[op]:
                report.violations.append(f"step {step}: C is not irreflexive at {op.op_id}")
        if not _is_acyclic(view.C):
            report.violations.append(f"step {step}: C contains a cycle")
            continue
        for a, b, c in _transitivity_holes(view.C):
            report.violations.append(
                f"step {step}: C misses transitive edge {a.op_id}->{c.op_id} via {b.op_id}"
            )
        if not vertices <= view.vertices_B():
            report.violations.append(f"step {step}: vertices(C) not within vertices(B)")
        if not view.vertices_B() <= view.A:
            report.violations.append(f"step {step}: vertices(B) not within A")
        if c_items not in checked_graphs and len(vertices) <= topo_vertex_bound:
            checked_graphs.add(c_items)
            problem = topological_outcomes_consistent(spec, view.C)
            if problem:
                report.violations.append(f"step {step}: {problem}")
            else:
                outcome = apply_sequence(spec, linearize(view.C))
                for op, response in outcome.responses.items():
                    if op in canonical_responses and canonical_responses[op] != response:
                        report.violations.append(
                            f"step {step}: response of {op.op_id} changed across graph versions"
                        )
                    canonical_responses.setdefault(op, response)

    # Monotone growth across successive views (global step order).
    for (step1, v1), (step2, v2) in zip(views, views[1:]):
        if not v1.A <= v2.A:
            report.violations.append(f"steps {step1}->{step2}: A shrank")
        if not set(v1.B.items()) <= set(v2.B.items()):
            report.violations.append(f"steps {step1}->{step2}: B shrank or changed")
        for op, sources in v1.C.items():
            if not sources <= v2.C.get(op, frozenset()):
                report.violations.append(f"steps {step1}->{step2}: C shrank at {op.op_id}")

    # Real-time precedence in the final graph.
    final = merged()
    report.final_C = {op: sources for op, sources in final.C.items()}
    final_edges = final.edges_C()
    final_vertices = final.vertices_C()
    for a, b in h.precedence_pairs():
        if a in final_vertices and b in final_vertices and (a, b) not in final_edges:
            report.violations.append(
                f"real-time precedence edge {a.op_id}->{b.op_id} missing from final C"
            )
    return report


def check_wait_freedom(trace) -> list[str]:
    """Verify the conflict-resolution iteration bound for every publish."""
    h = history_of(trace)
    c = h.concurrency_level()
    violations = []
    proposals: dict[str, int] = {}
    for event in trace.events:
        if event["kind"] == "base_step" and event["op"] == "propose":
            proposals[event["publish"]] = proposals.get(event["publish"], 0) + 1
    for event in trace.publish_results():
        if event["path"] != CONFLICT_RESOLUTION and event["cr_iterations"] == 0:
            continue
        iterations = event["cr_iterations"]
        if iterations > c + 2:
            violations.append(
                f"{event['op']} took {iterations} conflict-resolution iterations "
                f"(> concurrency {c} + 2)"
            )
        if proposals.get(event["op"], 0) > iterations:
            violations.append(
                f"{event['op']} proposed more often than its reported iteration count"
            )
    return violations


def check_final_orderings_linearizable(
    trace, topo_vertex_bound: int = 8, order_limit: int = 100_000
) -> list[str]:
    """Every topological ordering of the final graph must linearize the history."""
    spec = trace.make_spec()
    h = history_of(trace)
    report = check_graph_invariants(trace)
    final_C = report.final_C
    vertices = set(final_C)
    for sources in final_C.values():
        vertices.update(sources)
    violations = []
    if len(vertices) <= topo_vertex_bound:
        for order in enumerate_topological_orderings(final_C, limit=order_limit):
            if not verify_linearization(spec, h, order):
                violations.append(
                    "topological ordering "
                    + ",".join(o.op_id for o in order)
                    + " is not a linearization of the history"
                )
    else:
        order = linearize(final_C)
        if not verify_linearization(spec, h, order):
            violations.append("canonical topological ordering is not a linearization")
    return violations
