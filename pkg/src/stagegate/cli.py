"""Command-line entry point: validate, run, replay, report, ablate.

Exit codes are stable across commands: 0 success, 1 validation failure or
replay divergence, 2 input fault (missing or unusable artifacts), 3 runtime
fault mid-run.  Metric values never affect exit codes.

Primary artifacts (report, traces) are byte-reproducible for identical
inputs and seed; wall-clock data is isolated to the manifest, trace
timestamps, and the separate timing file.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from .automaton import automaton_from_dict, validate_definition
from .dispatcher import DispatchToggles
from .errors import ConfigError, IntegrityFault, StagegateError
from .evaluation import ABLATION_CONFIGS, EvalReport, compare_configs, compute_report
from .memory import FileEventStore, load_trace, replay_events
from .registry import build_registry
from .router import table_from_list, validate_table
from .runner import RunResult, run_suite
from .scenarios import (
    BUNDLE_FILES,
    DomainBundle,
    inject_illegal,
    load_domain,
    load_suite,
    save_suite,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INPUT = 2
EXIT_RUNTIME = 3


def _toggles_from_args(args: argparse.Namespace) -> DispatchToggles:
    return DispatchToggles(
        stage_check=not args.no_stage_check,
        precondition_check=not args.no_precondition,
        audit=not args.no_audit,
    )


def _report_json(report: EvalReport) -> str:
    payload = report.to_dict()
    payload.pop("latency_ms", None)  # timing lives in timing.json
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def cmd_validate(args: argparse.Namespace) -> int:
    directory = Path(args.domain)
    if not directory.is_dir():
        print(f"error: {directory} is not a directory", file=sys.stderr)
        return EXIT_INPUT

    parts: dict[str, Any] = {}
    for key, filename in BUNDLE_FILES.items():
        path = directory / filename
        try:
            parts[key] = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            print(f"error: {path}: file not found", file=sys.stderr)
            return EXIT_INPUT
        except json.JSONDecodeError as exc:
            print(f"error: {path}: invalid JSON: {exc}", file=sys.stderr)
            return EXIT_INPUT

    problems: list[str] = []
    warnings: list[str] = []
    automaton = None
    try:
        automaton = automaton_from_dict(parts["automaton"], name=directory.name)
        for entry in validate_definition(automaton).entries:
            target = problems if entry.severity == "error" else warnings
            target.append(f"{BUNDLE_FILES['automaton']}: {entry.code}: {entry.message}")
    except ConfigError as exc:
        problems.append(f"{BUNDLE_FILES['automaton']}: {exc}")

    if automaton is not None:
        try:
            registry = build_registry(parts["skills"], automaton)
            for entry in registry.validate_against(automaton).entries:
                problems.append(f"{BUNDLE_FILES['skills']}: {entry.code}: {entry.message}")
            missing = sorted(s.id for s in registry if s.id not in parts["fixtures"])
            if missing:
                problems.append(f"{BUNDLE_FILES['fixtures']}: missing fixtures: {', '.join(missing)}")
            try:
                table = table_from_list(parts["patterns"])
                for entry in validate_table(table, automaton).entries:
                    problems.append(f"{BUNDLE_FILES['patterns']}: {entry.code}: {entry.message}")
                routable = {p.intent for p in table}
                for spec in registry:
                    if spec.intent not in routable:
                        problems.append(
                            f"{BUNDLE_FILES['patterns']}: intent {spec.intent!r} "
                            f"(skill {spec.id!r}) has no route"
                        )
            except ConfigError as exc:
                problems.append(f"{BUNDLE_FILES['patterns']}: {exc}")
        except StagegateError as exc:
            problems.append(f"{BUNDLE_FILES['skills']}: {exc}")

    for line in warnings:
        print(f"warning: {line}")
    if problems:
        for line in problems:
            print(f"error: {line}")
        return EXIT_VALIDATION
    print(f"{directory.name}: bundle is valid")
    return EXIT_OK


def _load_inputs(args: argparse.Namespace) -> tuple[DomainBundle, list]:
    bundle = load_domain(args.domain)
    scenarios = load_suite(args.suite, bundle)
    return bundle, scenarios


def _write_run_artifacts(
    out_dir: Path, run: RunResult, report: EvalReport, bundle: DomainBundle
) -> None:
    (out_dir / "report.json").write_text(_report_json(report), encoding="utf-8")
    (out_dir / "timing.json").write_text(
        json.dumps({"latency_ms_median": report.latency_ms}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    goals = {
        "domain": bundle.name,
        "scenarios": {
            s.scenario_id: {
                "type": s.type,
                "goals": {str(t): g for t, g in sorted(run.goal_map[s.scenario_id].items())},
                "expected_final_stage": {str(t): st for t, st in sorted(s.expected_final_stage.items())},
            }
            for s in run.scenarios
        },
    }
    (out_dir / "goals.json").write_text(
        json.dumps(goals, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def cmd_run(args: argparse.Namespace) -> int:
    try:
        bundle, scenarios = _load_inputs(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    toggles = _toggles_from_args(args)
    manifest = {
        "run_id": f"{Path(args.suite).stem}-seed{args.seed}",
        "domain": str(args.domain),
        "suite": str(args.suite),
        "toggles": {
            "stage_check": toggles.stage_check,
            "precondition_check": toggles.precondition_check,
            "audit": toggles.audit,
        },
        "seed": args.seed,
        "started_at": time.time(),
        "output_dir": str(out_dir),
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    store = FileEventStore(out_dir / "traces")
    try:
        run = run_suite(
            bundle, scenarios, toggles=toggles, seed=args.seed, store=store, parallel=args.parallel
        )
        report = compute_report(run, bundle)
        _write_run_artifacts(out_dir, run, report, bundle)
    except StagegateError as exc:
        print(f"runtime fault: {exc} (partial traces kept in {out_dir / 'traces'})", file=sys.stderr)
        return EXIT_RUNTIME
    print(report.to_text())
    print(f"\nartifacts written to {out_dir}")
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    trace_path = Path(args.trace)
    if not trace_path.exists():
        print(f"error: {trace_path} not found", file=sys.stderr)
        return EXIT_INPUT

    domain_path = args.domain
    if domain_path is None:
        manifest_path = trace_path.parent.parent / "manifest.json"
        if manifest_path.exists():
            domain_path = json.loads(manifest_path.read_text(encoding="utf-8"))["domain"]
    if domain_path is None:
        print("error: --domain required (no manifest.json next to traces)", file=sys.stderr)
        return EXIT_INPUT

    try:
        bundle = load_domain(domain_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    goal_id = trace_path.stem
    try:
        events = load_trace(trace_path)
        result = replay_events(
            goal_id=goal_id,
            domain=bundle.name,
            automaton=bundle.automaton,
            registry=bundle.registry,
            events=events,
        )
    except IntegrityFault as exc:
        seq = f" (seq {exc.seq})" if exc.seq is not None else ""
        print(f"corrupted trace{seq}: {exc}", file=sys.stderr)
        return EXIT_INPUT

    reconstructed = {
        "goal_id": goal_id,
        "current_stage": result.record.current_stage,
        "status": result.record.status,
        "business_state": result.business_state,
        "last_seq": result.last_seq,
    }
    print(json.dumps(reconstructed, indent=2, sort_keys=True))

    snapshot_path = trace_path.with_name(f"{goal_id}.snapshot.json")
    if snapshot_path.exists():
        snapshot = json.loads(snapshot_path.read_text(encoding="utf-8"))
        mismatches = [
            key
            for key, value in (
                ("current_stage", snapshot["current_stage"]),
                ("status", snapshot["status"]),
                ("business_state", snapshot["business_state"]),
                ("last_seq", snapshot["last_seq"]),
            )
            if reconstructed[key] != value
        ]
        if mismatches:
            print(
                f"divergence from snapshot after seq {result.last_seq}: {', '.join(mismatches)}",
                file=sys.stderr,
            )
            return EXIT_VALIDATION
        print("replay matches snapshot")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    report_path = run_dir / "report.json"
    if not report_path.exists():
        print(f"error: {report_path} not found", file=sys.stderr)
        return EXIT_INPUT
    payload = json.loads(report_path.read_text(encoding="utf-8"))
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
        return EXIT_OK

    def pct(value: float | None) -> str:
        return "n/a" if value is None else f"{100.0 * value:.1f}%"

    print(f"scenarios: {payload['n_scenarios']}   messages: {payload['n_messages']}")
    print(
        f"TCR {pct(payload['tcr'])}   CVR {pct(payload['cvr'])}   "
        f"STA {pct(payload['sta'])}   TRC {pct(payload['trc'])}"
    )
    print(
        f"blocked: {payload['blocked_total']} (stage-gate {payload['blocked_stage_gate']}, "
        f"precondition {payload['blocked_precondition']})"
    )
    blocking = payload["blocking"]
    print(
        f"blocking: accuracy {pct(blocking['accuracy'])}  precision {pct(blocking['precision'])}  "
        f"recall {pct(blocking['recall'])}  f1 {pct(blocking['f1'])}"
    )
    print(f"{'type':<12}{'n':>5}{'TCR':>9}{'CVR':>9}{'Blk':>6}{'Vio':>6}{'PreF':>7}")
    for name, row in sorted(payload["per_type"].items()):
        print(
            f"{name:<12}{row['n']:>5}{pct(row['tcr']):>9}{pct(row['cvr']):>9}"
            f"{row['blocked']:>6}{row['violations']:>6}{row['precondition_failures']:>7}"
        )
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    try:
        bundle, scenarios = _load_inputs(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        comparison = compare_configs(
            bundle, scenarios, ABLATION_CONFIGS, seed=args.seed, parallel=args.parallel
        )
    except StagegateError as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    payload = comparison.to_dict()
    for report in payload["reports"].values():
        report.pop("latency_ms", None)
    (out_dir / "ablation.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(comparison.to_text())
    print(f"\nablation table written to {out_dir / 'ablation.json'}")
    return EXIT_OK


def cmd_inject(args: argparse.Namespace) -> int:
    try:
        bundle, scenarios = _load_inputs(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    normals = [
        s for s in scenarios
        if s.type == "normal" and all(m.expected_legal for m in s.messages)
    ]
    if not normals:
        print("error: suite contains no fully-legal normal scenarios", file=sys.stderr)
        return EXIT_INPUT
    try:
        variants = [
            inject_illegal(scenario, bundle, args.strategy, seed=args.seed + index)
            for index, scenario in enumerate(normals[: args.count])
        ]
    except StagegateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_suite(out_path, f"{Path(args.suite).stem}-injected", bundle.name, variants)
    print(f"wrote {len(variants)} adversarial variants to {out_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stagegate",
        description="Stage-constrained workflow dispatch: validate configs, run suites, "
        "replay traces, report metrics, run ablations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="validate a domain bundle directory")
    p_validate.add_argument("domain", help="domain bundle directory")
    p_validate.set_defaults(func=cmd_validate)

    def add_run_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--domain", required=True, help="domain bundle directory")
        p.add_argument("--suite", required=True, help="suite JSON file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True, help="output directory for run artifacts")
        p.add_argument("--parallel", type=int, default=1, help="concurrent scenarios")

    p_run = sub.add_parser("run", help="run a suite and write trace/report artifacts")
    add_run_flags(p_run)
    p_run.add_argument("--no-stage-check", action="store_true")
    p_run.add_argument("--no-precondition", action="store_true")
    p_run.add_argument("--no-audit", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_replay = sub.add_parser("replay", help="reconstruct final state from a trace file")
    p_replay.add_argument("trace", help="goal trace file (.jsonl)")
    p_replay.add_argument("--domain", help="domain bundle directory (defaults to run manifest)")
    p_replay.set_defaults(func=cmd_replay)

    p_report = sub.add_parser("report", help="render the metrics report of a run directory")
    p_report.add_argument("run_dir", help="directory written by `stagegate run`")
    p_report.add_argument("--format", choices=("json", "text"), default="text")
    p_report.set_defaults(func=cmd_report)

    p_ablate = sub.add_parser("ablate", help="run the four toggle configurations and compare")
    add_run_flags(p_ablate)
    p_ablate.set_defaults(func=cmd_ablate)

    p_inject = sub.add_parser(
        "inject", help="derive adversarial stage-skipping variants from normal scenarios"
    )
    p_inject.add_argument("--domain", required=True, help="domain bundle directory")
    p_inject.add_argument("--suite", required=True, help="source suite JSON file")
    p_inject.add_argument("--seed", type=int, default=0)
    p_inject.add_argument("--out", required=True, help="output suite file for the variants")
    p_inject.add_argument("--strategy", choices=("stage_skip", "premature_terminal"),
                          default="stage_skip")
    p_inject.add_argument("--count", type=int, default=20, help="variants to generate")
    p_inject.set_defaults(func=cmd_inject)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
