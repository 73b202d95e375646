"""CLI subcommands, formats and exit codes."""
import json

import pytest

from dyncon.cli import main


def test_run_writes_trace_and_reports(tmp_path, capsys, scenarios_dir):
    out = tmp_path / "t.jsonl"
    code = main(["run", str(scenarios_dir / "asset100.json"), "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "accepted" in text and "rejected" in text
    assert out.exists()


def test_run_json_format(capsys, scenarios_dir):
    code = main(["--format", "json", "run", str(scenarios_dir / "solo.json")])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["consensus_uses"] == 0
    assert [r["response"] for r in doc["responses"]] == ["ok", 1]


def test_check_pass_and_violation(tmp_path, capsys, scenarios_dir):
    out = tmp_path / "t.jsonl"
    assert main(["run", str(scenarios_dir / "asset100.json"), "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["check", str(out)]) == 0
    # corrupt one recorded read
    lines = out.read_text().splitlines()
    for i, line in enumerate(lines):
        doc = json.loads(line)
        if doc.get("op") == "read" and doc["value"]["A"]:
            doc["value"]["A"] = []
            lines[i] = json.dumps(doc, sort_keys=True)
            break
    out.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["check", str(out)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_check_unknown_check_name(tmp_path, scenarios_dir, capsys):
    out = tmp_path / "t.jsonl"
    main(["run", str(scenarios_dir / "solo.json"), "--out", str(out)])
    assert main(["check", str(out), "--checks", "lin,nope"]) == 2


def test_states_output(capsys, scenarios_dir):
    code = main(["--format", "json", "states", str(scenarios_dir / "fig1_history.json"), "p3.1"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["count"] == 10
    assert main(["states", str(scenarios_dir / "fig1_history.json"), "p9.9"]) == 2


def test_fuzz_report_files(tmp_path, capsys):
    template = tmp_path / "tmpl.json"
    template.write_text(json.dumps({"spec": "counter", "processes": 2, "ops": 3}))
    report = tmp_path / "report"
    code = main(["fuzz", str(template), "--seeds", "0..10", "--report-dir", str(report)])
    assert code == 0
    assert (report / "summary.csv").exists()
    assert (report / "consensus_uses.png").stat().st_size > 0
    assert (report / "cr_iterations.png").stat().st_size > 0
    header = (report / "summary.csv").read_text().splitlines()[0]
    assert header.split(",")[:3] == ["seed", "passed", "consensus_uses"]


def test_fuzz_mutation_fails(tmp_path):
    template = tmp_path / "tmpl.json"
    template.write_text(
        json.dumps({"spec": "list", "processes": {"min": 2, "max": 3}, "ops": {"min": 4, "max": 6}})
    )
    code = main(["fuzz", str(template), "--seeds", "0..10", "--mutate", "skip_commutativity"])
    assert code == 1


def test_fuzz_template_rejects_fixed_schedule(tmp_path):
    template = tmp_path / "tmpl.json"
    template.write_text(json.dumps({"spec": "counter", "schedule": [0, 0]}))
    assert main(["fuzz", str(template)]) == 2


def test_missing_file_is_input_error():
    assert main(["run", "/no/such/file.json"]) == 2


def test_format_version_pin(monkeypatch, scenarios_dir):
    monkeypatch.setenv("DYNCON_FORMAT_VERSION", "1")
    assert main(["run", str(scenarios_dir / "solo.json")]) == 0
    monkeypatch.setenv("DYNCON_FORMAT_VERSION", "2")
    assert main(["run", str(scenarios_dir / "solo.json")]) == 2
