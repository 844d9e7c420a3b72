"""Governance metrics over completed runs: rates, confusion, comparisons.

All computations are pure functions of step records and scenario metadata.
The blocking confusion treats ILLEGAL_TRANSITION and PRECONDITION_FAIL as
blocks; a routing miss (SKILL_NOT_FOUND) is not a governance block.  A step
counts as violating when a stage-illegal or precondition-violating action
was attempted, whether the pipeline blocked it or (in ablated configs)
executed it anyway.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from .dispatcher import FULL, DispatchToggles
from .errors import IntegrityFault
from .memory import ProcessEvent
from .router import UNKNOWN
from .runner import RunResult, StepRecord, run_suite
from .scenarios import DomainBundle, LabeledMessage, Scenario, simulate_scenario

BLOCK_OUTCOMES = ("ILLEGAL_TRANSITION", "PRECONDITION_FAIL")


# -- confusion arithmetic -----------------------------------------------------


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class BlockingMetrics:
    confusion: Confusion
    accuracy: float | None
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "confusion": {
                "tp": self.confusion.tp,
                "fp": self.confusion.fp,
                "fn": self.confusion.fn,
                "tn": self.confusion.tn,
            },
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def blocking_metrics(confusion: Confusion) -> BlockingMetrics:
    """Derived rates with the empty-denominator conventions pinned.

    precision = 1.0 when tp+fp = 0, recall = 1.0 when tp+fn = 0, f1 = 0 when
    precision+recall = 0, accuracy undefined (None) on an empty matrix.
    """
    tp, fp, fn, tn = confusion.tp, confusion.fp, confusion.fn, confusion.tn
    precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
    recall = 1.0 if tp + fn == 0 else tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    accuracy = None if confusion.total == 0 else (tp + tn) / confusion.total
    return BlockingMetrics(confusion, accuracy, precision, recall, f1)


def compute_blocking(
    steps: Sequence[StepRecord], labels: Sequence[LabeledMessage]
) -> BlockingMetrics:
    """Message-level blocking correctness against ground-truth labels.

    Steps and labels align by (scenario_id, turn_index); any key present on
    one side only is an integrity fault listing the unmatched keys.
    """
    outcomes = {(s.scenario_id, s.turn_index): s.outcome for s in steps}
    expected = {(m.scenario_id, m.turn_index): m.expected_legal for m in labels}
    unmatched = sorted(set(outcomes) ^ set(expected))
    if unmatched:
        raise IntegrityFault(f"unaligned steps/labels, first unmatched keys: {unmatched[:5]}")
    tp = fp = fn = tn = 0
    for key, outcome in outcomes.items():
        blocked = outcome in BLOCK_OUTCOMES
        legal = expected[key]
        if blocked and not legal:
            tp += 1
        elif blocked and legal:
            fp += 1
        elif not blocked and not legal:
            fn += 1
        else:
            tn += 1
    return blocking_metrics(Confusion(tp, fp, fn, tn))


# -- trace grading ------------------------------------------------------------


@dataclass(frozen=True)
class TraceDistribution:
    counts: Mapping[str, int]
    total: int

    def percentage(self, outcome: str) -> float:
        if self.total == 0:
            return 0.0
        return 100.0 * self.counts.get(outcome, 0) / self.total

    def to_dict(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "counts": dict(self.counts),
            "percentages": {k: round(self.percentage(k), 1) for k in self.counts},
        }


def grade_traces(events: Iterable[ProcessEvent]) -> TraceDistribution:
    """Per-step outcome tally over an event log."""
    counts = {"SUCCESS": 0, "ILLEGAL_TRANSITION": 0, "PRECONDITION_FAIL": 0, "SKILL_NOT_FOUND": 0}
    total = 0
    for event in events:
        counts[event.outcome] = counts.get(event.outcome, 0) + 1
        total += 1
    return TraceDistribution(counts=counts, total=total)


# -- full report ----------------------------------------------------------------


@dataclass
class TypeBreakdown:
    n: int = 0
    completed: int = 0
    steps: int = 0
    blocked: int = 0
    violations: int = 0  # stage-gate blocks (illegal transitions)
    precondition_failures: int = 0
    violating_steps: int = 0
    scenarios_with_violation: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "tcr": None if self.n == 0 else self.completed / self.n,
            "cvr": None if self.steps == 0 else self.violating_steps / self.steps,
            "cvr_scenarios": None if self.n == 0 else self.scenarios_with_violation / self.n,
            "blocked": self.blocked,
            "violations": self.violations,
            "precondition_failures": self.precondition_failures,
        }


@dataclass
class EvalReport:
    n_scenarios: int
    n_messages: int
    tcr: float | None
    cvr: float | None
    sta: float | None
    trc: float | None
    blocking: BlockingMetrics
    distribution: TraceDistribution
    blocked_total: int
    blocked_stage_gate: int
    blocked_precondition: int
    per_type: dict[str, TypeBreakdown]
    latency_ms: dict[str, float]
    toggles: DispatchToggles = FULL

    def to_dict(self) -> dict[str, Any]:
        out = {
            "n_scenarios": self.n_scenarios,
            "n_messages": self.n_messages,
            "tcr": self.tcr,
            "cvr": self.cvr,
            "sta": self.sta,
            "trc": self.trc,
            "blocked_total": self.blocked_total,
            "blocked_stage_gate": self.blocked_stage_gate,
            "blocked_precondition": self.blocked_precondition,
            "blocking": self.blocking.to_dict(),
            "trace_distribution": self.distribution.to_dict(),
            "per_type": {k: v.to_dict() for k, v in sorted(self.per_type.items())},
            "latency_ms": self.latency_ms,
            "toggles": {
                "stage_check": self.toggles.stage_check,
                "precondition_check": self.toggles.precondition_check,
                "audit": self.toggles.audit,
            },
        }
        return out

    def to_text(self) -> str:
        def pct(value: float | None) -> str:
            return "n/a" if value is None else f"{100.0 * value:.1f}%"

        lines = [
            f"scenarios: {self.n_scenarios}   messages: {self.n_messages}",
            f"TCR {pct(self.tcr)}   CVR {pct(self.cvr)}   STA {pct(self.sta)}   TRC {pct(self.trc)}",
            f"blocked: {self.blocked_total} "
            f"(stage-gate {self.blocked_stage_gate}, precondition {self.blocked_precondition})",
            (
                f"blocking: accuracy {pct(self.blocking.accuracy)}  "
                f"precision {pct(self.blocking.precision)}  "
                f"recall {pct(self.blocking.recall)}  f1 {pct(self.blocking.f1)}"
            ),
            "trace distribution: "
            + "  ".join(
                f"{k}={v} ({self.distribution.percentage(k):.1f}%)"
                for k, v in self.distribution.counts.items()
            ),
            f"latency: gate {self.latency_ms.get('gate', 0.0):.3f} ms"
            f"  route {self.latency_ms.get('route', 0.0):.3f} ms"
            f"  executor {self.latency_ms.get('executor', 0.0):.3f} ms (medians)",
            "",
            f"{'type':<12}{'n':>5}{'TCR':>9}{'CVR':>9}{'Blk':>6}{'Vio':>6}{'PreF':>7}",
        ]
        for name, row in sorted(self.per_type.items()):
            d = row.to_dict()
            lines.append(
                f"{name:<12}{d['n']:>5}{pct(d['tcr']):>9}{pct(d['cvr']):>9}"
                f"{d['blocked']:>6}{d['violations']:>6}{d['precondition_failures']:>7}"
            )
        return "\n".join(lines)


def _median_ms(samples: list[int]) -> float:
    if not samples:
        return 0.0
    return statistics.median(samples) / 1e6


def step_is_violation(step: StepRecord, bundle: DomainBundle) -> bool:
    """Attempted stage-illegal or precondition-violating action.

    Independent of whether the pipeline blocked it, so the rate can rise
    when checks are removed and the action executes anyway.
    """
    intent = step.result.detail.get("routing", {}).get("intent", UNKNOWN)
    binding = bundle.automaton.binding.get(intent)
    if binding is not None and step.result.stage_before not in binding:
        return True
    return step.outcome == "PRECONDITION_FAIL"


def compute_report(run: RunResult, bundle: DomainBundle) -> EvalReport:
    """Populate every metric for one completed run."""
    steps = run.steps
    total = len(steps)
    labels = run.labels()

    # Completion: every track of the scenario ends at its expected stage.
    completed_ids: set[str] = set()
    for scenario in run.scenarios:
        done = True
        for track, gid in run.goal_map[scenario.scenario_id].items():
            live = run.manager.goal(gid)
            if live.current_stage != scenario.expected_final_stage.get(track):
                done = False
        if done:
            completed_ids.add(scenario.scenario_id)

    # State-transition accuracy against the forward simulation.
    sta_hits = 0
    sim_cache: dict[str, dict[int, tuple[str, str]]] = {}
    for scenario in run.scenarios:
        sim_cache[scenario.scenario_id] = {
            s.turn_index: (s.stage_before, s.stage_after)
            for s in simulate_scenario(bundle, scenario)
        }
    for step in steps:
        expected = sim_cache[step.scenario_id].get(step.turn_index)
        if expected == (step.result.stage_before, step.result.stage_after):
            sta_hits += 1

    # Replayable-trace coverage: a step counts when its goal's log replays
    # to exactly the live state.
    trc_steps = 0
    if run.toggles.audit and total:
        consistent: dict[str, bool] = {}
        for gid in {s.goal_id for s in steps}:
            replayed = run.manager.replay(gid)
            live = run.manager.goal(gid)
            live_state = run.manager.context(gid).business_state
            consistent[gid] = (
                replayed.record.current_stage == live.current_stage
                and replayed.record.status == live.status
                and replayed.business_state == live_state
                and replayed.last_seq == run.manager.last_seq(gid)
            )
        trc_steps = sum(1 for s in steps if consistent[s.goal_id])

    blocked = [s for s in steps if s.outcome in BLOCK_OUTCOMES]
    stage_gate = sum(1 for s in blocked if s.outcome == "ILLEGAL_TRANSITION")
    precond = sum(1 for s in blocked if s.outcome == "PRECONDITION_FAIL")
    violating = [s for s in steps if step_is_violation(s, bundle)]

    per_type: dict[str, TypeBreakdown] = {}
    by_id = {s.scenario_id: s for s in run.scenarios}
    for scenario in run.scenarios:
        row = per_type.setdefault(scenario.type, TypeBreakdown())
        row.n += 1
        if scenario.scenario_id in completed_ids:
            row.completed += 1
    violating_ids: set[str] = set()
    for step in steps:
        row = per_type[by_id[step.scenario_id].type]
        row.steps += 1
        if step.outcome in BLOCK_OUTCOMES:
            row.blocked += 1
            if step.outcome == "ILLEGAL_TRANSITION":
                row.violations += 1
            else:
                row.precondition_failures += 1
        if step_is_violation(step, bundle):
            row.violating_steps += 1
            violating_ids.add(step.scenario_id)
    for scenario in run.scenarios:
        if scenario.scenario_id in violating_ids:
            per_type[scenario.type].scenarios_with_violation += 1

    gate_samples = [s.result.detail["timing_ns"].get("gate_ns", 0) for s in steps if "gate_ns" in s.result.detail["timing_ns"]]
    route_samples = [s.result.detail["timing_ns"].get("route_ns", 0) for s in steps]
    exec_samples = [
        s.result.detail["timing_ns"]["executor_ns"]
        for s in steps
        if "executor_ns" in s.result.detail["timing_ns"]
    ]

    return EvalReport(
        n_scenarios=len(run.scenarios),
        n_messages=total,
        tcr=None if not run.scenarios else len(completed_ids) / len(run.scenarios),
        cvr=None if total == 0 else len(violating) / total,
        sta=None if total == 0 else sta_hits / total,
        trc=(0.0 if not run.toggles.audit else trc_steps / total) if total else None,
        blocking=compute_blocking(steps, labels),
        distribution=grade_traces(_pseudo_events(steps)),
        blocked_total=len(blocked),
        blocked_stage_gate=stage_gate,
        blocked_precondition=precond,
        per_type=per_type,
        latency_ms={
            "gate": round(_median_ms(gate_samples), 6),
            "route": round(_median_ms(route_samples), 6),
            "executor": round(_median_ms(exec_samples), 6),
        },
        toggles=run.toggles,
    )


def _pseudo_events(steps: Sequence[StepRecord]):
    """Outcome tally source that works whether or not auditing was on."""

    class _Shim:
        __slots__ = ("outcome",)

        def __init__(self, outcome: str) -> None:
            self.outcome = outcome

    return [_Shim(s.outcome) for s in steps]


# -- ablation comparison -----------------------------------------------------------


ABLATION_CONFIGS: tuple[tuple[str, DispatchToggles], ...] = (
    ("full", DispatchToggles()),
    ("no_stage_check", DispatchToggles(stage_check=False)),
    ("no_precondition", DispatchToggles(precondition_check=False)),
    ("no_audit", DispatchToggles(audit=False)),
)


@dataclass
class ConfigComparison:
    reports: dict[str, EvalReport]
    baseline: str = "full"

    def deltas(self) -> dict[str, dict[str, float | None]]:
        base = self.reports[self.baseline]
        out: dict[str, dict[str, float | None]] = {}
        for name, report in self.reports.items():
            out[name] = {
                "blocked_total": report.blocked_total - base.blocked_total,
                "cvr": None
                if report.cvr is None or base.cvr is None
                else report.cvr - base.cvr,
                "tcr": None
                if report.tcr is None or base.tcr is None
                else report.tcr - base.tcr,
                "trc": None
                if report.trc is None or base.trc is None
                else report.trc - base.trc,
            }
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "baseline": self.baseline,
            "reports": {name: report.to_dict() for name, report in self.reports.items()},
            "deltas": self.deltas(),
        }

    def to_text(self) -> str:
        def pct(value: float | None) -> str:
            return "n/a" if value is None else f"{100.0 * value:.1f}%"

        lines = [f"{'config':<18}{'TCR':>9}{'CVR':>9}{'TRC':>9}{'Blk':>6}"]
        for name, report in self.reports.items():
            lines.append(
                f"{name:<18}{pct(report.tcr):>9}{pct(report.cvr):>9}"
                f"{pct(report.trc):>9}{report.blocked_total:>6}"
            )
        return "\n".join(lines)


def compare_configs(
    bundle: DomainBundle,
    scenarios: Sequence[Scenario],
    configs: Sequence[tuple[str, DispatchToggles]] = ABLATION_CONFIGS,
    seed: int = 0,
    parallel: int = 1,
) -> ConfigComparison:
    """Run the same suite under each toggle set and report side by side."""
    reports: dict[str, EvalReport] = {}
    for name, toggles in configs:
        run = run_suite(bundle, scenarios, toggles=toggles, seed=seed, parallel=parallel)
        reports[name] = compute_report(run, bundle)
    baseline = configs[0][0]
    return ConfigComparison(reports=reports, baseline=baseline)
