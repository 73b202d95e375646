"""Wait-free universal construction that pays for consensus only on conflict.

Operations are announced, booked and committed through a shared dependency
graph; any two committed orderings agree on every response. A deterministic
scheduler, trace checkers and a fuzzing harness round out the package.
"""
from .abcgraph import AbcGraph, AbcView, UNBOOKED
from .base import ConsensusObject, SnapshotObject, SyncUsageLog
from .checkers import (
    History,
    SystemState,
    audit_dynamic_concurrency,
    check_final_orderings_linearizable,
    check_graph_invariants,
    check_linearizable,
    check_wait_freedom,
    enumerate_linearizations,
    enumerate_system_states,
    find_noncommuting_witness,
    history_of,
    topological_outcomes_consistent,
)
from .engine import (
    CONFLICT_FREE,
    CONFLICT_RESOLUTION,
    PublishResult,
    linearize,
    publish_machine,
    result_in,
)
from .errors import CapacityError, DynconError, InvariantViolation, MalformedInputError
from .fuzzing import ALL_CHECKS, FuzzResult, FuzzTemplate, fuzz, run_checks
from .objects import make_spec, spec_names
from .scheduler import FORMAT_VERSION, Scenario, Trace, run
from .seqspec import (
    DEFAULT_SUBSET_CAP,
    OpInstance,
    SeqObjectSpec,
    apply_sequence,
    commutes_in,
    commutes_with_all_subsets,
    commutes_with_set,
    orderings_equivalent,
)

__version__ = "0.1.0"

__all__ = [
    "AbcGraph",
    "AbcView",
    "UNBOOKED",
    "ConsensusObject",
    "SnapshotObject",
    "SyncUsageLog",
    "History",
    "SystemState",
    "audit_dynamic_concurrency",
    "check_final_orderings_linearizable",
    "check_graph_invariants",
    "check_linearizable",
    "check_wait_freedom",
    "enumerate_linearizations",
    "enumerate_system_states",
    "find_noncommuting_witness",
    "history_of",
    "topological_outcomes_consistent",
    "CONFLICT_FREE",
    "CONFLICT_RESOLUTION",
    "PublishResult",
    "linearize",
    "publish_machine",
    "result_in",
    "CapacityError",
    "DynconError",
    "InvariantViolation",
    "MalformedInputError",
    "ALL_CHECKS",
    "FuzzResult",
    "FuzzTemplate",
    "fuzz",
    "run_checks",
    "make_spec",
    "spec_names",
    "FORMAT_VERSION",
    "Scenario",
    "Trace",
    "run",
    "DEFAULT_SUBSET_CAP",
    "OpInstance",
    "SeqObjectSpec",
    "apply_sequence",
    "commutes_in",
    "commutes_with_all_subsets",
    "commutes_with_set",
    "orderings_equivalent",
]
