from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stagegate.dispatcher import DispatchToggles
from stagegate.errors import IntegrityFault
from stagegate.evaluation import (
    ABLATION_CONFIGS,
    Confusion,
    blocking_metrics,
    compare_configs,
    compute_blocking,
    compute_report,
    grade_traces,
)
from stagegate.runner import run_suite
from stagegate.scenarios import load_domain, load_suite
from stagegate.suites import sgd_domain_dir, sgd_suite_path


def test_paper_shaped_confusion_reproduces_reported_metrics():
    metrics = blocking_metrics(Confusion(tp=22, fp=0, fn=3, tn=857))
    assert round(100 * metrics.accuracy, 1) == 99.7
    assert round(100 * metrics.precision, 1) == 100.0
    assert round(100 * metrics.recall, 1) == 88.0
    assert round(100 * metrics.f1, 1) == 93.6


def test_empty_positive_conventions():
    metrics = blocking_metrics(Confusion(tp=0, fp=0, fn=0, tn=50))
    assert metrics.precision == 1.0
    assert metrics.recall == 1.0
    assert metrics.accuracy == 1.0
    empty = blocking_metrics(Confusion(0, 0, 0, 0))
    assert empty.accuracy is None
    assert empty.precision == 1.0 and empty.recall == 1.0


@settings(max_examples=150, deadline=None)
@given(
    st.lists(
        st.tuples(st.booleans(), st.booleans()),  # (blocked, expected_legal)
        max_size=60,
    )
)
def test_confusion_matches_bruteforce_counter(pairs):
    tally = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    for blocked, legal in pairs:
        if blocked and not legal:
            tally["tp"] += 1
        elif blocked and legal:
            tally["fp"] += 1
        elif not blocked and not legal:
            tally["fn"] += 1
        else:
            tally["tn"] += 1
    metrics = blocking_metrics(Confusion(**tally))
    assert metrics.confusion.total == len(pairs)
    if tally["tp"] + tally["fp"]:
        assert metrics.precision == tally["tp"] / (tally["tp"] + tally["fp"])
    else:
        assert metrics.precision == 1.0


def test_compute_blocking_on_shipped_run(hr_run):
    metrics = compute_blocking(hr_run.steps, hr_run.labels())
    assert metrics.confusion == Confusion(tp=22, fp=0, fn=3, tn=857)


def test_compute_blocking_rejects_unaligned_inputs(hr_run):
    labels = hr_run.labels()[:-1]
    with pytest.raises(IntegrityFault):
        compute_blocking(hr_run.steps, labels)


def test_grade_traces_counts_match_recount(hr_run):
    events = hr_run.events()
    distribution = grade_traces(events)
    recount = {}
    for event in events:
        recount[event.outcome] = recount.get(event.outcome, 0) + 1
    for outcome, count in recount.items():
        assert distribution.counts[outcome] == count
    assert distribution.total == len(events)
    total_pct = sum(distribution.percentage(k) for k in distribution.counts)
    assert abs(total_pct - 100.0) < 0.2


def test_report_fields_on_shipped_suite(hr_report):
    assert hr_report.n_scenarios == 185
    assert hr_report.n_messages == 882
    assert hr_report.blocked_total == 22
    assert hr_report.blocked_stage_gate == 16
    assert hr_report.blocked_precondition == 6
    assert hr_report.trc == 1.0
    assert hr_report.tcr == 1.0
    assert round(100 * hr_report.cvr, 1) == 2.5
    illegal = hr_report.per_type["illegal"].to_dict()
    assert illegal["n"] == 25
    assert illegal["blocked"] == 22
    assert illegal["violations"] == 16
    assert illegal["precondition_failures"] == 6
    for name in ("normal", "rollback", "multi", "abort", "concurrent"):
        assert hr_report.per_type[name].to_dict()["blocked"] == 0


def test_report_six_type_keys_for_hr(hr_report):
    assert set(hr_report.per_type) == {"normal", "illegal", "rollback", "multi", "abort", "concurrent"}


def test_report_two_type_keys_for_sgd():
    bundle = load_domain(sgd_domain_dir("Banks_1"))
    suite = load_suite(sgd_suite_path("Banks_1"), bundle)
    run = run_suite(bundle, suite)
    report = compute_report(run, bundle)
    assert set(report.per_type) == {"normal", "illegal"}


def test_per_type_blocked_sums_to_total(hr_report):
    assert sum(row.blocked for row in hr_report.per_type.values()) == hr_report.blocked_total


def test_empty_suite_report_uses_conventions(hr_bundle):
    run = run_suite(hr_bundle, [])
    report = compute_report(run, hr_bundle)
    assert report.n_scenarios == 0 and report.n_messages == 0
    assert report.tcr is None and report.cvr is None and report.sta is None and report.trc is None
    assert report.blocking.precision == 1.0 and report.blocking.recall == 1.0
    assert report.blocking.accuracy is None


def test_audit_off_zeroes_trc_only(hr_bundle, hr_suite, hr_report):
    run = run_suite(hr_bundle, hr_suite, toggles=DispatchToggles(audit=False))
    report = compute_report(run, hr_bundle)
    assert report.trc == 0.0
    assert report.blocked_total == hr_report.blocked_total
    assert report.cvr == hr_report.cvr
    assert report.tcr == hr_report.tcr
    assert dict(report.distribution.counts) == dict(hr_report.distribution.counts)


def test_ablation_directions_on_shipped_suite(hr_bundle, hr_suite):
    comparison = compare_configs(hr_bundle, hr_suite, ABLATION_CONFIGS, seed=0)
    full = comparison.reports["full"]
    no_stage = comparison.reports["no_stage_check"]
    no_pre = comparison.reports["no_precondition"]
    no_audit = comparison.reports["no_audit"]

    assert no_stage.blocked_total > full.blocked_total
    assert no_stage.cvr > full.cvr
    assert no_pre.blocked_total <= full.blocked_total
    assert no_audit.trc == 0.0
    assert no_audit.blocked_total == full.blocked_total
    assert dict(no_audit.distribution.counts) == dict(full.distribution.counts)

    deltas = comparison.deltas()
    assert deltas["full"]["blocked_total"] == 0
    assert deltas["full"]["cvr"] == 0.0


def test_identical_configs_produce_identical_reports(hr_bundle, hr_suite):
    twice = compare_configs(
        hr_bundle, hr_suite, (("a", DispatchToggles()), ("b", DispatchToggles())), seed=3
    )
    a = twice.reports["a"].to_dict()
    b = twice.reports["b"].to_dict()
    a.pop("latency_ms"), b.pop("latency_ms")
    a.pop("toggles"), b.pop("toggles")
    assert a == b


def test_report_text_rendering_mentions_key_numbers(hr_report):
    text = hr_report.to_text()
    assert "blocked: 22 (stage-gate 16, precondition 6)" in text
    assert "precision 100.0%" in text
    assert "recall 88.0%" in text


def test_all_success_run_has_clean_distribution(hr_bundle, hr_suite):
    aborts = [s for s in hr_suite if s.type == "abort"]
    run = run_suite(hr_bundle, aborts)
    distribution = grade_traces(run.events())
    assert distribution.counts == {
        "SUCCESS": len(aborts),
        "ILLEGAL_TRANSITION": 0,
        "PRECONDITION_FAIL": 0,
        "SKILL_NOT_FOUND": 0,
    }


def test_stage_changes_trace_back_to_success_events(hr_run):
    """Every stage change in a goal's log belongs to exactly one SUCCESS event."""
    for gid in hr_run.manager.goal_ids():
        events = hr_run.manager.list_events(gid)
        stage = None
        for event in events:
            if stage is not None:
                assert event.stage_before == stage
            if event.stage_after != event.stage_before:
                assert event.outcome == "SUCCESS"
            stage = event.stage_after
        if events:
            assert hr_run.manager.goal(gid).current_stage == stage


def test_parallel_run_matches_sequential(hr_bundle, hr_suite):
    subset = hr_suite[:40]
    sequential = compute_report(run_suite(hr_bundle, subset, parallel=1), hr_bundle)
    parallel = compute_report(run_suite(hr_bundle, subset, parallel=4), hr_bundle)
    a, b = sequential.to_dict(), parallel.to_dict()
    a.pop("latency_ms"), b.pop("latency_ms")
    assert a == b
