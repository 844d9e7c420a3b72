from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from stagegate.cli import main
from stagegate.suites import hr_domain_dir, hr_suite_path, sgd_domain_dir, sgd_suite_path


@pytest.fixture(scope="module")
def small_suite(tmp_path_factory):
    """A 12-scenario slice of the shipped hiring suite (keeps CLI tests fast)."""
    full = json.loads(hr_suite_path().read_text())
    wanted = [
        s for s in full["scenarios"]
        if s["scenario_id"] in {
            "normal-001", "normal-002", "illegal-001", "illegal-017", "illegal-023",
            "rollback-001", "multi-001", "abort-001", "concurrent-001",
            "illegal-015", "illegal-013", "normal-003",
        }
    ]
    payload = {"suite_name": "slice", "domain": "hr", "scenarios": wanted}
    path = tmp_path_factory.mktemp("suite") / "slice.json"
    path.write_text(json.dumps(payload))
    return path


def test_validate_clean_bundle_exits_zero(capsys):
    assert main(["validate", str(hr_domain_dir())]) == 0
    assert "valid" in capsys.readouterr().out


def test_validate_broken_bundle_prints_entries(tmp_path, capsys):
    for name in ("automaton.json", "skills.json", "patterns.json", "fixtures.json"):
        shutil.copy(hr_domain_dir() / name, tmp_path / name)
    automaton = json.loads((tmp_path / "automaton.json").read_text())
    del automaton["binding"]["screen_resume"]
    automaton["initial"] = "nowhere"
    (tmp_path / "automaton.json").write_text(json.dumps(automaton))
    code = main(["validate", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 1
    assert "initial_not_in_stages" in out
    assert "screen_resume" in out


def test_validate_nonexistent_path_exits_two():
    assert main(["validate", "/nonexistent/bundle"]) == 2


def test_run_writes_artifacts_and_exits_zero(tmp_path, small_suite, capsys):
    out_dir = tmp_path / "run"
    code = main([
        "run", "--domain", str(hr_domain_dir()), "--suite", str(small_suite),
        "--seed", "7", "--out", str(out_dir),
    ])
    assert code == 0
    assert (out_dir / "manifest.json").exists()
    assert (out_dir / "report.json").exists()
    assert (out_dir / "goals.json").exists()
    traces = list((out_dir / "traces").glob("*.jsonl"))
    assert traces
    report = json.loads((out_dir / "report.json").read_text())
    assert report["n_scenarios"] == 12
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["toggles"]["stage_check"] is True


def test_run_is_deterministic_modulo_timestamps(tmp_path, small_suite):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for out_dir in dirs:
        assert main([
            "run", "--domain", str(hr_domain_dir()), "--suite", str(small_suite),
            "--seed", "7", "--out", str(out_dir),
        ]) == 0
    report_a = (dirs[0] / "report.json").read_bytes()
    report_b = (dirs[1] / "report.json").read_bytes()
    assert report_a == report_b

    def stripped_traces(out_dir: Path) -> dict[str, list[dict]]:
        lines = {}
        for trace in sorted((out_dir / "traces").glob("*.jsonl")):
            rows = []
            for line in trace.read_text().splitlines():
                row = json.loads(line)
                row.pop("timestamp")
                rows.append(row)
            lines[trace.name] = rows
        return lines

    assert stripped_traces(dirs[0]) == stripped_traces(dirs[1])


def test_no_stage_check_flag_increases_blocks(tmp_path, small_suite):
    full_dir, ablated_dir = tmp_path / "full", tmp_path / "ablated"
    main(["run", "--domain", str(hr_domain_dir()), "--suite", str(small_suite),
          "--out", str(full_dir)])
    main(["run", "--domain", str(hr_domain_dir()), "--suite", str(small_suite),
          "--out", str(ablated_dir), "--no-stage-check"])
    full = json.loads((full_dir / "report.json").read_text())
    ablated = json.loads((ablated_dir / "report.json").read_text())
    assert ablated["blocked_total"] > full["blocked_total"]


def test_replay_of_completed_run_matches_snapshot(tmp_path, small_suite, capsys):
    out_dir = tmp_path / "run"
    main(["run", "--domain", str(hr_domain_dir()), "--suite", str(small_suite),
          "--out", str(out_dir)])
    traces = sorted((out_dir / "traces").glob("*.jsonl"))
    for trace in traces:
        assert main(["replay", str(trace)]) == 0, trace.name
    out = capsys.readouterr().out
    assert "replay matches snapshot" in out


def test_replay_with_deleted_line_exits_two(tmp_path, small_suite, capsys):
    out_dir = tmp_path / "run"
    main(["run", "--domain", str(hr_domain_dir()), "--suite", str(small_suite),
          "--out", str(out_dir)])
    trace = next(
        t for t in sorted((out_dir / "traces").glob("*.jsonl"))
        if len(t.read_text().splitlines()) >= 3
    )
    lines = trace.read_text().splitlines()
    trace.write_text("\n".join([lines[0]] + lines[2:]) + "\n")
    code = main(["replay", str(trace)])
    err = capsys.readouterr().err
    assert code == 2
    assert "seq" in err


def test_replay_divergent_snapshot_exits_one(tmp_path, small_suite, capsys):
    out_dir = tmp_path / "run"
    main(["run", "--domain", str(hr_domain_dir()), "--suite", str(small_suite),
          "--out", str(out_dir)])
    snapshot_path = sorted((out_dir / "traces").glob("*.snapshot.json"))[0]
    snapshot = json.loads(snapshot_path.read_text())
    snapshot["current_stage"] = "onb"
    snapshot_path.write_text(json.dumps(snapshot))
    trace = snapshot_path.with_name(snapshot_path.name.replace(".snapshot.json", ".jsonl"))
    assert main(["replay", str(trace)]) == 1


def test_report_formats(tmp_path, small_suite, capsys):
    out_dir = tmp_path / "run"
    main(["run", "--domain", str(hr_domain_dir()), "--suite", str(small_suite),
          "--out", str(out_dir)])
    capsys.readouterr()
    assert main(["report", str(out_dir), "--format", "json"]) == 0
    parsed = json.loads(capsys.readouterr().out)
    assert parsed["n_scenarios"] == 12
    assert main(["report", str(out_dir)]) == 0
    text = capsys.readouterr().out
    assert "TCR" in text and "Blk" in text


def test_report_missing_artifacts_exits_two(tmp_path):
    assert main(["report", str(tmp_path)]) == 2


def test_ablate_writes_comparison(tmp_path, small_suite, capsys):
    out_dir = tmp_path / "ablate"
    code = main(["ablate", "--domain", str(hr_domain_dir()), "--suite", str(small_suite),
                 "--out", str(out_dir)])
    assert code == 0
    payload = json.loads((out_dir / "ablation.json").read_text())
    assert set(payload["reports"]) == {"full", "no_stage_check", "no_precondition", "no_audit"}
    assert payload["reports"]["no_audit"]["trc"] == 0.0
    assert payload["deltas"]["no_stage_check"]["blocked_total"] > 0
    text = capsys.readouterr().out
    assert "no_stage_check" in text


def test_inject_writes_reproducible_adversarial_suite(tmp_path, capsys):
    out_a = tmp_path / "variants_a.json"
    out_b = tmp_path / "variants_b.json"
    for out in (out_a, out_b):
        code = main([
            "inject", "--domain", str(sgd_domain_dir("Banks_1")),
            "--suite", str(sgd_suite_path("Banks_1")),
            "--seed", "11", "--count", "5", "--out", str(out),
        ])
        assert code == 0
    assert out_a.read_bytes() == out_b.read_bytes()
    payload = json.loads(out_a.read_text())
    assert len(payload["scenarios"]) == 5
    assert all(s["type"] == "illegal" for s in payload["scenarios"])
    run_dir = tmp_path / "run"
    assert main(["run", "--domain", str(sgd_domain_dir("Banks_1")),
                 "--suite", str(out_a), "--out", str(run_dir)]) == 0
    report = json.loads((run_dir / "report.json").read_text())
    assert report["blocked_total"] >= 5  # every injected turn is caught


def test_run_against_sgd_domain(tmp_path):
    out_dir = tmp_path / "banks"
    code = main([
        "run", "--domain", str(sgd_domain_dir("Banks_1")),
        "--suite", str(sgd_suite_path("Banks_1")), "--out", str(out_dir),
    ])
    assert code == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert report["n_scenarios"] == 120
    assert report["blocked_total"] == 20
