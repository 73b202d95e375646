"""Command-line front end.

Exit-code contract: 0 pass, 1 violation, 2 malformed input / capacity error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .checkers import History, enumerate_system_states, history_of
from .errors import CapacityError, MalformedInputError
from .fuzzing import ALL_CHECKS, FuzzTemplate, fuzz, run_checks
from .objects import make_spec
from .scheduler import FORMAT_VERSION, Scenario, Trace, run

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2


def _check_pinned_version() -> None:
    pinned = os.environ.get("DYNCON_FORMAT_VERSION")
    if pinned is not None and int(pinned) != FORMAT_VERSION:
        raise MalformedInputError(
            f"DYNCON_FORMAT_VERSION={pinned} does not match supported version {FORMAT_VERSION}"
        )


def _parse_checks(value: str) -> tuple[str, ...]:
    checks = tuple(part.strip() for part in value.split(",") if part.strip())
    unknown = set(checks) - set(ALL_CHECKS)
    if unknown:
        raise MalformedInputError(f"unknown checks: {sorted(unknown)}")
    return checks


def _parse_seed_range(value: str) -> range:
    if ".." in value:
        lo, hi = value.split("..", 1)
        return range(int(lo), int(hi))
    return range(int(value))


def _emit(doc: dict, fmt: str, human_lines) -> None:
    if fmt == "json":
        print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        for line in human_lines:
            print(line)


def cmd_run(args) -> int:
    scenario = Scenario.load(args.scenario)
    if args.seed is not None:
        scenario.seed = args.seed
    if args.cap is not None:
        scenario.cap = args.cap
    trace = run(scenario)
    if args.out:
        trace.to_jsonl(args.out)
    results = trace.publish_results()
    uses = trace.consensus_uses()
    doc = {
        "responses": [
            {
                "op": e["op"],
                "response": e["response"],
                "path": e["path"],
                "cr_iterations": e["cr_iterations"],
            }
            for e in results
        ],
        "consensus_uses": len(uses),
        "events": len(trace.events),
        "trace": args.out,
    }
    lines = [
        f"{e['op']}: {e['response']!r} via {e['path']}"
        + (f" ({e['cr_iterations']} iterations)" if e["cr_iterations"] else "")
        for e in results
    ]
    lines.append(f"consensus uses: {len(uses)}")
    if args.out:
        lines.append(f"trace written to {args.out}")
    _emit(doc, args.format, lines)
    return EXIT_OK


def cmd_check(args) -> int:
    trace = Trace.from_jsonl(args.trace)
    checks = _parse_checks(args.checks)
    verdicts, failures = run_checks(trace, checks)
    doc = {"verdicts": verdicts, "failures": failures, "passed": not failures}
    lines = [f"{name}: {'pass' if ok else 'FAIL'}" for name, ok in sorted(verdicts.items())]
    lines.extend(f"  {f}" for f in failures)
    _emit(doc, args.format, lines)
    return EXIT_OK if not failures else EXIT_VIOLATION


def cmd_states(args) -> int:
    history, doc = History.load(args.history)
    spec_name = doc.get("spec")
    if spec_name is None:
        raise MalformedInputError("history file does not name its object spec")
    spec = make_spec(spec_name, doc.get("spec_params"))
    target = next((op for op in history.ops if op.op_id == args.op), None)
    if target is None:
        raise MalformedInputError(f"unknown op id {args.op!r}")
    states = enumerate_system_states(spec, history, target, max_ops=args.max_ops)
    out = {"op": target.op_id, "count": len(states), "states": [s.to_json() for s in states]}
    lines = [f"{len(states)} system states during {target.op_id}:"]
    for i, state in enumerate(states, 1):
        l_txt = ", ".join(op.op_id for op in state.l) or "(empty)"
        o_txt = ", ".join(sorted(op.op_id for op in state.O))
        lines.append(f"  {i:2d}. l = [{l_txt}]  O = {{{o_txt}}}")
    _emit(out, args.format, lines)
    return EXIT_OK


def cmd_fuzz(args) -> int:
    template = FuzzTemplate.load(args.template)
    if args.mutate:
        template.mutation = args.mutate
    if args.cap is not None:
        template.cap = args.cap
    checks = _parse_checks(args.checks)
    results = fuzz(template, _parse_seed_range(args.seeds), checks)
    failing = [r for r in results if not r.passed]
    doc = {
        "seeds": len(results),
        "failing_seeds": [r.seed for r in failing],
        "consensus_uses": sum(r.consensus_uses for r in results),
        "results": [r.to_json() for r in failing],
    }
    lines = [
        f"{len(results)} seeds, {len(failing)} failing, "
        f"{doc['consensus_uses']} total consensus uses"
    ]
    for r in failing:
        lines.append(f"  seed {r.seed}: " + "; ".join(r.failures))
    if args.report_dir:
        from .report import write_fuzz_report

        written = write_fuzz_report(results, args.report_dir)
        doc["report_files"] = written
        lines.extend(f"wrote {path}" for path in written)
    _emit(doc, args.format, lines)
    return EXIT_OK if not failing else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyncon",
        description="Run, fuzz and verify the dynamically concurrent execution engine.",
    )
    parser.add_argument("--format", choices=["json", "human"], default="human")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", help="write the trace as JSON lines")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--cap", type=int)
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="run checkers over a trace file")
    p_check.add_argument("trace")
    p_check.add_argument("--checks", default=",".join(ALL_CHECKS))
    p_check.set_defaults(func=cmd_check)

    p_states = sub.add_parser("states", help="enumerate system states during an op")
    p_states.add_argument("history")
    p_states.add_argument("op", help="operation id, e.g. p3.1")
    p_states.add_argument("--max-ops", type=int, default=8)
    p_states.set_defaults(func=cmd_states)

    p_fuzz = sub.add_parser("fuzz", help="run seeded schedules with checkers")
    p_fuzz.add_argument("template")
    p_fuzz.add_argument("--seeds", default="100", help="N or A..B")
    p_fuzz.add_argument("--checks", default=",".join(ALL_CHECKS))
    p_fuzz.add_argument("--cap", type=int)
    p_fuzz.add_argument("--mutate", choices=["skip_commutativity", "stale_dependencies"])
    p_fuzz.add_argument("--report-dir", help="write summary.csv and figures here")
    p_fuzz.set_defaults(func=cmd_fuzz)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _check_pinned_version()
        return args.func(args)
    except (MalformedInputError, CapacityError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
