"""Seed-driven schedule (and optionally workload) fuzzing with checkers."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Optional

from .checkers import (
    audit_dynamic_concurrency,
    check_final_orderings_linearizable,
    check_graph_invariants,
    check_linearizable,
    check_wait_freedom,
    history_of,
)
from .errors import MalformedInputError
from .scheduler import FORMAT_VERSION, Scenario, Trace, run
from .seqspec import DEFAULT_SUBSET_CAP, OpInstance

ALL_CHECKS = ("lin", "graph", "dyncon", "wf")


@dataclass
class FuzzTemplate:
    spec_name: str
    spec_params: dict = field(default_factory=dict)
    n_processes: int | tuple[int, int] = 2
    n_ops: int | tuple[int, int] = 4
    workload: Optional[list[dict]] = None  # fixed workload, else randomized
    crash_probability: float = 0.0
    cap: int = DEFAULT_SUBSET_CAP
    mutation: Optional[str] = None

    @classmethod
    def from_json(cls, doc: dict) -> "FuzzTemplate":
        if "schedule" in doc:
            raise MalformedInputError("fuzz templates must not fix an explicit schedule")

        def span(value, default):
            if value is None:
                return default
            if isinstance(value, int):
                return value
            return (value["min"], value["max"])

        return cls(
            spec_name=doc["spec"],
            spec_params=doc.get("spec_params", {}),
            n_processes=span(doc.get("processes"), 2),
            n_ops=span(doc.get("ops"), 4),
            workload=doc.get("workload"),
            crash_probability=doc.get("crash_probability", 0.0),
            cap=doc.get("cap", DEFAULT_SUBSET_CAP),
            mutation=doc.get("mutation"),
        )

    @classmethod
    def load(cls, path) -> "FuzzTemplate":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _pick(rng: random.Random, value) -> int:
    if isinstance(value, tuple):
        return rng.randint(*value)
    return value


def random_workload(spec_name: str, rng: random.Random, n_processes: int, n_ops: int) -> list[dict]:
    """A random per-spec workload; every op assigned to a random process."""
    entries = []
    for _ in range(n_ops):
        p = rng.randrange(n_processes)
        if spec_name == "list":
            method = rng.choice(["append", "append", "readLast", "readAll", "swap"])
            if method == "append":
                args = [rng.choice("abcd")]
            elif method == "swap":
                i = rng.randint(0, 2)
                args = [i, rng.randint(i, 3)]
            else:
                args = []
        elif spec_name == "asset-transfer":
            method = rng.choice(["transfer", "transfer", "readBalance"])
            if method == "transfer":
                args = ["main", "other", rng.choice([25, 50, 75, 100])]
            else:
                args = ["main"]
        elif spec_name == "counter":
            method = rng.choice(["inc", "inc", "read"])
            args = []
        elif spec_name == "register":
            method = rng.choice(["write", "write", "read"])
            args = [rng.choice("xyz")] if method == "write" else []
        else:
            raise MalformedInputError(f"no workload generator for spec {spec_name!r}")
        entries.append({"process": p, "method": method, "args": args})
    return entries


def scenario_for_seed(template: FuzzTemplate, seed: int) -> Scenario:
    # str seeding is stable across interpreter runs (unlike hashing a tuple)
    rng = random.Random(f"dyncon-fuzz:{seed}")
    n_processes = _pick(rng, template.n_processes)
    if template.workload is not None:
        entries = template.workload
    else:
        n_ops = _pick(rng, template.n_ops)
        entries = random_workload(template.spec_name, rng, n_processes, n_ops)
    crashes = []
    if rng.random() < template.crash_probability:
        crashes.append({"process": rng.randrange(n_processes), "step": rng.randint(1, 40)})
    doc = {
        "format_version": FORMAT_VERSION,
        "spec": template.spec_name,
        "spec_params": template.spec_params,
        "processes": n_processes,
        "workload": entries,
        "seed": seed,
        "crashes": crashes,
        "cap": template.cap,
    }
    scenario = Scenario.from_json(doc)
    scenario.mutation = template.mutation
    return scenario


@dataclass
class FuzzResult:
    seed: int
    trace: Trace
    verdicts: dict[str, bool]
    failures: list[str]
    consensus_uses: int
    max_cr_iterations: int
    crashed: bool

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "passed": self.passed,
            "verdicts": self.verdicts,
            "failures": self.failures,
            "consensus_uses": self.consensus_uses,
            "max_cr_iterations": self.max_cr_iterations,
            "crashed": self.crashed,
        }


def run_checks(trace: Trace, checks=ALL_CHECKS) -> tuple[dict[str, bool], list[str]]:
    verdicts: dict[str, bool] = {}
    failures: list[str] = []
    spec = trace.make_spec()
    if "lin" in checks:
        h = history_of(trace)
        witness = check_linearizable(spec, h)
        verdicts["lin"] = witness is not None
        if witness is None:
            failures.append("history is not linearizable")
        topo_failures = check_final_orderings_linearizable(trace)
        if topo_failures:
            verdicts["lin"] = False
            failures.extend(topo_failures)
    if "graph" in checks:
        report = check_graph_invariants(trace)
        verdicts["graph"] = report.passed
        failures.extend(report.violations)
    if "dyncon" in checks:
        audit = audit_dynamic_concurrency(trace)
        verdicts["dyncon"] = audit.passed
        if not audit.passed:
            failures.extend(
                f"{e.op.op_id}: consensus use without a non-commuting witness"
                for e in audit.entries
                if not e.ok
            )
    if "wf" in checks:
        wf = check_wait_freedom(trace)
        verdicts["wf"] = not wf
        failures.extend(wf)
    return verdicts, failures


def fuzz(template: FuzzTemplate, seeds, checks=ALL_CHECKS) -> list[FuzzResult]:
    """Run every seed, apply the selected checkers, aggregate failures."""
    results = []
    for seed in seeds:
        scenario = scenario_for_seed(template, seed)
        trace = run(scenario)
        verdicts, failures = run_checks(trace, checks)
        res_events = trace.publish_results()
        results.append(
            FuzzResult(
                seed=seed,
                trace=trace,
                verdicts=verdicts,
                failures=failures,
                consensus_uses=len(trace.consensus_uses()),
                max_cr_iterations=max(
                    (e["cr_iterations"] for e in res_events), default=0
                ),
                crashed=any(e["kind"] == "crash" for e in trace.events),
            )
        )
    return results
