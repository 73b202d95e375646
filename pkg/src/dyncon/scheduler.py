"""Deterministic interleaving harness.

Publish invocations run as cooperative step machines under a single-threaded
scheduler. Every shared-object access occupies exactly one globally numbered
trace step, which makes runs bit-reproducible from a scenario (explicit
schedule or seed) and gives the checkers a total step order to replay.
"""
from __future__ import annotations

import json
import logging
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Optional

from .abcgraph import AbcGraph
from .base import ConsensusObject, SnapshotObject, SyncUsageLog
from .engine import MUTATIONS, PublishResult, publish_machine
from .errors import InvariantViolation, MalformedInputError
from .objects import make_spec
from .seqspec import DEFAULT_SUBSET_CAP, OpInstance

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass
class Scenario:
    spec_name: str
    n_processes: int
    workload: list[OpInstance]  # global list; per-process order gives program order
    spec_params: dict = field(default_factory=dict)
    schedule: Optional[list[int]] = None
    seed: Optional[int] = None
    crashes: list[tuple[int, int]] = field(default_factory=list)  # (process, step)
    cap: int = DEFAULT_SUBSET_CAP
    drain: bool = False  # finish round-robin after an explicit schedule
    mutation: Optional[str] = None

    def validate(self) -> None:
        if self.n_processes <= 0:
            raise MalformedInputError("n_processes must be positive")
        if self.cap <= 0:
            raise MalformedInputError("cap must be positive")
        if self.mutation not in MUTATIONS:
            raise MalformedInputError(f"unknown mutation {self.mutation!r}")
        if self.schedule is None and self.seed is None:
            raise MalformedInputError("scenario needs an explicit schedule or a seed")
        seen = set()
        for op in self.workload:
            if not 0 <= op.process_id < self.n_processes:
                raise MalformedInputError(f"workload process {op.process_id} out of range")
            if (op.process_id, op.seq_no) in seen:
                raise MalformedInputError(f"duplicate operation id {op.op_id}")
            seen.add((op.process_id, op.seq_no))
        for p, step in self.crashes:
            if not 0 <= p < self.n_processes or step < 0:
                raise MalformedInputError(f"invalid crash entry ({p}, {step})")

    @classmethod
    def from_json(cls, doc: dict) -> "Scenario":
        version = doc.get("format_version", FORMAT_VERSION)
        if version != FORMAT_VERSION:
            raise MalformedInputError(f"unsupported scenario format_version {version}")
        per_process_seq: dict[int, int] = {}
        workload = []
        for entry in doc.get("workload", []):
            p = entry["process"]
            seq = per_process_seq.get(p, 0)
            per_process_seq[p] = seq + 1
            workload.append(
                OpInstance(p, seq, entry["method"], tuple(entry.get("args", ())))
            )
        scenario = cls(
            spec_name=doc["spec"],
            spec_params=doc.get("spec_params", {}),
            n_processes=doc["processes"],
            workload=workload,
            schedule=doc.get("schedule"),
            seed=doc.get("seed"),
            crashes=[(c["process"], c["step"]) for c in doc.get("crashes", [])],
            cap=doc.get("cap", DEFAULT_SUBSET_CAP),
            drain=doc.get("drain", False),
            mutation=doc.get("mutation"),
        )
        scenario.validate()
        return scenario

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass
class Trace:
    """Globally ordered event log of one run."""

    header: dict
    events: list[dict]
    ops: dict[str, OpInstance]

    @property
    def spec_name(self) -> str:
        return self.header["spec"]

    def make_spec(self):
        return make_spec(self.header["spec"], self.header.get("spec_params"))

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(json.dumps({"kind": "header", **self.header}, sort_keys=True) + "\n")
            for event in self.events:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "Trace":
        with open(path) as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        if not lines or lines[0].get("kind") != "header":
            raise MalformedInputError("trace file missing header record")
        header = {k: v for k, v in lines[0].items() if k != "kind"}
        if header.get("format_version") != FORMAT_VERSION:
            raise MalformedInputError(
                f"unsupported trace format_version {header.get('format_version')}"
            )
        ops = {d["id"]: OpInstance.from_json(d) for d in header["ops"]}
        return cls(header=header, events=lines[1:], ops=ops)

    def consensus_uses(self) -> list[dict]:
        return [
            e
            for e in self.events
            if e["kind"] == "base_step" and e["op"] == "propose"
        ]

    def publish_results(self) -> list[dict]:
        return [e for e in self.events if e["kind"] == "res"]


@dataclass
class _ProcState:
    queue: deque
    machine: Any = None
    started: bool = False
    inbox: Any = None
    current_op: Optional[OpInstance] = None
    crashed: bool = False


class _Run:
    def __init__(self, scenario: Scenario):
        scenario.validate()
        self.scenario = scenario
        self.spec = make_spec(scenario.spec_name, scenario.spec_params)
        n = scenario.n_processes
        self.graph = AbcGraph(n)
        self.K = SnapshotObject(n, initial=0, object_id="K")
        self.consensus: dict[int, ConsensusObject] = {}
        self.sync_log = SyncUsageLog()
        self.events: list[dict] = []
        self.step = 0
        self.procs = []
        for p in range(n):
            ops = deque(op for op in scenario.workload if op.process_id == p)
            self.procs.append(_ProcState(queue=ops))
        self.pending_crashes = sorted(scenario.crashes, key=lambda c: c[1])

    # -- events ---------------------------------------------------------

    def _emit(self, kind: str, process: Optional[int] = None, **payload) -> dict:
        event = {"step": self.step, "kind": kind}
        if process is not None:
            event["process"] = process
        event.update(payload)
        self.events.append(event)
        self.step += 1
        return event

    # -- execution ------------------------------------------------------

    def _enabled(self, p: int) -> bool:
        st = self.procs[p]
        return not st.crashed and (st.machine is not None or bool(st.queue))

    def _inject_due_crashes(self) -> None:
        while self.pending_crashes and self.pending_crashes[0][1] <= self.step:
            p, at = self.pending_crashes.pop(0)
            if self.procs[p].crashed:
                continue
            if at < self.step:
                log.warning("crash for p%d scheduled at %d injected late at %d", p, at, self.step)
            self._emit("crash", process=p)
            self.procs[p].crashed = True
            self.procs[p].machine = None
            self.procs[p].queue.clear()

    def _advance(self, p: int) -> None:
        st = self.procs[p]
        if st.machine is None:
            op = st.queue.popleft()
            st.current_op = op
            st.machine = publish_machine(
                self.spec, p, op, cap=self.scenario.cap, mutation=self.scenario.mutation
            )
            st.started = False
            st.inbox = None
            self._emit("inv", process=p, op=op.op_id)
            return
        try:
            if not st.started:
                st.started = True
                request = next(st.machine)
            else:
                request = st.machine.send(st.inbox)
        except StopIteration as stop:
            result: PublishResult = stop.value
            self._emit(
                "res",
                process=p,
                op=result.op.op_id,
                response=result.response,
                path=result.return_path,
                k0=result.k0,
                cr_iterations=result.cr_iterations,
                cap_triggered=result.cap_triggered,
            )
            st.machine = None
            st.current_op = None
            return
        st.inbox = self._execute(p, st.current_op, request)

    def _execute(self, p: int, publish_op: OpInstance, request: tuple):
        kind = request[0]
        pid = publish_op.op_id
        if kind == "abc_add_A":
            op = request[1]
            self.graph.add_A(p, op)
            self._emit("base_step", process=p, object="abc", op="add_A",
                       publish=pid, value={"op": op.op_id})
            return None
        if kind == "abc_add_B":
            op, b = request[1], request[2]
            self.graph.add_B(p, op, b)
            self._emit("base_step", process=p, object="abc", op="add_B",
                       publish=pid, value={"op": op.op_id, "b": b})
            return None
        if kind == "abc_add_C":
            op, sources, cert = request[1], request[2], request[3]
            newly = op not in self.graph.read(p).vertices_C()
            self.graph.add_C(p, op, sources)
            self._emit("base_step", process=p, object="abc", op="add_C",
                       publish=pid,
                       value={"op": op.op_id, "sources": sorted(s.op_id for s in sources)})
            if newly:
                self._emit("commit", process=p, publish=pid, **cert.to_json())
            return None
        if kind == "abc_read":
            view = self.graph.read(p)
            self._emit("base_step", process=p, object="abc", op="read",
                       publish=pid, value=view.to_json())
            return view
        if kind == "k_scan":
            levels = self.K.scan()
            self._emit("base_step", process=p, object="K", op="scan",
                       publish=pid, value=list(levels))
            return levels
        if kind == "k_write":
            k = request[1]
            self.K.write(p, k, writer=p)
            self._emit("base_step", process=p, object="K", op="write",
                       publish=pid, value=k)
            return None
        if kind == "cons_propose":
            k, proposed = request[1], request[2]
            obj = self.consensus.setdefault(k, ConsensusObject(k))
            self.sync_log.record(pid, p, obj.object_id, self.step)
            decided = obj.propose(proposed)
            self._emit("base_step", process=p, object=obj.object_id, op="propose",
                       publish=pid,
                       value={"proposed": proposed.op_id, "decided": decided.op_id})
            return decided
        raise InvariantViolation(f"unknown step request {kind!r}")

    def execute(self) -> Trace:
        scenario = self.scenario
        explicit = list(scenario.schedule or [])
        cursor = 0
        rng = random.Random(scenario.seed) if scenario.seed is not None else None
        rr = 0  # round-robin pointer for drain mode
        while True:
            self._inject_due_crashes()
            enabled = [p for p in range(scenario.n_processes) if self._enabled(p)]
            if not enabled:
                break
            if cursor < len(explicit):
                p = explicit[cursor]
                cursor += 1
                if not (0 <= p < scenario.n_processes) or not self._enabled(p):
                    log.info("schedule slot %d for p%s skipped (disabled)", cursor - 1, p)
                    continue
            elif scenario.schedule is not None and not scenario.drain:
                break
            elif rng is not None:
                p = rng.choice(enabled)
            else:
                while not self._enabled(rr % scenario.n_processes):
                    rr += 1
                p = rr % scenario.n_processes
                rr += 1
            self._advance(p)

        header = {
            "format_version": FORMAT_VERSION,
            "spec": scenario.spec_name,
            "spec_params": scenario.spec_params,
            "processes": scenario.n_processes,
            "cap": scenario.cap,
            "seed": scenario.seed,
            "mutation": scenario.mutation,
            "ops": [op.to_json() for op in scenario.workload],
        }
        ops = {op.op_id: op for op in scenario.workload}
        return Trace(header=header, events=self.events, ops=ops)


def run(scenario: Scenario) -> Trace:
    """Execute a scenario; identical scenarios yield bit-identical traces."""
    return _Run(scenario).execute()
