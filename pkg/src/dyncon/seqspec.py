"""Sequential object model plus equivalence/commutativity machinery.

Everything in here is a pure function over immutable inputs: the engine and
the checkers both fold concrete operation sequences through a sequential
specification and compare outcomes structurally.
"""
from __future__ import annotations

import operator
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Any, Callable, Iterable, Sequence

from .errors import CapacityError, MalformedInputError

DEFAULT_SUBSET_CAP = 8


@dataclass(frozen=True, order=True)
class OpInstance:
    """A uniquely identified operation invocation.

    (process_id, seq_no) is globally unique within a run; the dataclass is
    frozen so instances can live in sets and serve as graph vertices.
    """

    process_id: int
    seq_no: int
    method: str = field(compare=False)
    args: tuple = field(default=(), compare=False)

    @property
    def op_id(self) -> str:
        return f"p{self.process_id}.{self.seq_no}"

    def __repr__(self) -> str:
        args = ",".join(repr(a) for a in self.args)
        return f"{self.op_id}:{self.method}({args})"

    def to_json(self) -> dict:
        return {
            "id": self.op_id,
            "process": self.process_id,
            "seq": self.seq_no,
            "method": self.method,
            "args": list(self.args),
        }

    @classmethod
    def from_json(cls, d: dict) -> "OpInstance":
        return cls(
            process_id=d["process"],
            seq_no=d["seq"],
            method=d["method"],
            args=tuple(d.get("args", ())),
        )


def op_sort_key(op: OpInstance) -> tuple[int, int]:
    return (op.process_id, op.seq_no)


@dataclass
class SeqObjectSpec:
    """Pluggable sequential specification.

    `apply(state, op) -> (response, new_state)` must be deterministic, total
    on valid inputs, and must not mutate `state`. `state_eq` defaults to
    structural equality; objects may supply a coarser equivalence.
    """

    name: str
    initial_state: Any
    apply: Callable[[Any, OpInstance], tuple[Any, Any]]
    state_eq: Callable[[Any, Any], bool] = operator.eq


@dataclass
class OrderingOutcome:
    final_state: Any
    responses: dict[OpInstance, Any]


def apply_sequence(spec: SeqObjectSpec, seq: Sequence[OpInstance]) -> OrderingOutcome:
    """Fold `spec.apply` over `seq` from the initial state."""
    seen: set[OpInstance] = set()
    state = spec.initial_state
    responses: dict[OpInstance, Any] = {}
    for op in seq:
        if op in seen:
            raise MalformedInputError(f"duplicate operation {op} in sequence")
        seen.add(op)
        response, state = spec.apply(state, op)
        responses[op] = response
    return OrderingOutcome(final_state=state, responses=responses)


def orderings_equivalent(
    spec: SeqObjectSpec, s: Sequence[OpInstance], s2: Sequence[OpInstance]
) -> bool:
    """True iff both orderings of the same set end in equal states and every
    operation responds identically in both."""
    if set(s) != set(s2) or len(s) != len(s2):
        raise MalformedInputError("orderings are not permutations of each other")
    out1 = apply_sequence(spec, s)
    out2 = apply_sequence(spec, s2)
    if not spec.state_eq(out1.final_state, out2.final_state):
        return False
    return all(out1.responses[op] == out2.responses[op] for op in s)


def _check_commute_preconditions(l, op, others: Iterable[OpInstance]) -> None:
    l_set = set(l)
    others = set(others)
    if op in l_set or op in others:
        raise MalformedInputError(f"{op} must not occur in the prefix or the set")
    if l_set & others:
        raise MalformedInputError("prefix and operation set are not disjoint")


def commutes_in(
    spec: SeqObjectSpec,
    l: Sequence[OpInstance],
    op: OpInstance,
    s: Sequence[OpInstance],
) -> bool:
    """True iff l . s . op and l . op . s are equivalent orderings."""
    _check_commute_preconditions(l, op, s)
    before = tuple(l) + tuple(s) + (op,)
    after = tuple(l) + (op,) + tuple(s)
    return orderings_equivalent(spec, before, after)


def commutes_with_set(
    spec: SeqObjectSpec,
    l: Sequence[OpInstance],
    op: OpInstance,
    S: Iterable[OpInstance],
) -> bool:
    """True iff op commutes in l with every ordering of S."""
    S = sorted(set(S), key=op_sort_key)
    _check_commute_preconditions(l, op, S)
    return all(commutes_in(spec, l, op, perm) for perm in permutations(S))


def commutes_with_all_subsets(
    spec: SeqObjectSpec,
    l: Sequence[OpInstance],
    op: OpInstance,
    S: Iterable[OpInstance],
    cap: int = DEFAULT_SUBSET_CAP,
) -> bool:
    """True iff op commutes in l with every subset of S.

    Exact enumeration, short-circuiting on the first failing subset. Raises
    CapacityError when |S| exceeds `cap`; callers choose whether that is a
    hard error (checker mode) or a conservative fallthrough (engine mode).
    """
    S = sorted(set(S), key=op_sort_key)
    _check_commute_preconditions(l, op, S)
    if len(S) > cap:
        raise CapacityError(
            f"subset enumeration over {len(S)} concurrent operations exceeds cap {cap}"
        )
    for size in range(len(S) + 1):
        for subset in combinations(S, size):
            if not commutes_with_set(spec, l, op, subset):
                return False
    return True
