"""State-aware dispatch: route, gate, execute, advance, audit.

Every message passes the same pipeline: intent resolution, the stage
legality gate, stage-filtered skill selection, precondition evaluation,
execution, postcondition application, and a validated stage advance.  One
ProcessEvent is appended per step, before the result is surfaced.

Two block classes both surface as ILLEGAL_TRANSITION and are told apart by
sub-reason: ``pre_exec_stage_illegal`` (the stage gate fired before any
skill was selected) and ``post_exec_transition_rejected`` (the intent was
stage-legal but its target stage is unreachable from here; the skill ran,
but nothing is committed).  No blocked dispatch mutates business state or
stage.
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from .automaton import StageId, WorkflowAutomaton
from .context import DispatchContext, SkillResult, payload_digest
from .errors import ConfigError
from .memory import GoalManager, ProcessEvent
from .registry import SkillRegistry, SkillSpec, apply_postconditions
from .router import FallbackResolver, IntentPattern, identify

Executor = Callable[[SkillSpec, DispatchContext], SkillResult]


@dataclass(frozen=True)
class DispatchToggles:
    """Ablation switches; all on reproduces the full pipeline.

    ``stage_check=False`` removes the first-line defense: intents flow
    straight to intent-only skill selection and only preconditions (and the
    post-execution transition check) stand between a stage-illegal request
    and execution.  ``audit=False`` suppresses event emission but not state
    mutation.
    """

    stage_check: bool = True
    precondition_check: bool = True
    audit: bool = True


FULL = DispatchToggles()


@dataclass(frozen=True)
class DispatchDeps:
    automaton: WorkflowAutomaton
    registry: SkillRegistry
    table: tuple[IntentPattern, ...]
    manager: GoalManager
    executor: Executor
    fallback: FallbackResolver | None = None


@dataclass
class DispatchResult:
    outcome: str
    stage_before: StageId
    stage_after: StageId
    skill_id: str | None = None
    detail: dict[str, Any] = field(default_factory=dict)
    event: ProcessEvent | None = None

    @property
    def blocked(self) -> bool:
        return self.outcome in ("ILLEGAL_TRANSITION", "PRECONDITION_FAIL")


def dispatch(
    message: str,
    goal_id: str,
    deps: DispatchDeps,
    toggles: DispatchToggles = FULL,
) -> DispatchResult:
    """Run one message through the full pipeline for the given goal.

    Dispatches for the same goal are serialized; the per-goal lock is held
    for the whole step.  Gate time (stage check + precondition evaluation)
    and executor time are recorded separately in ``detail["timing_ns"]`` so
    dispatcher-internal overhead stays distinguishable from execution cost.
    """
    manager = deps.manager
    with manager.lock(goal_id):
        return _dispatch_locked(message, goal_id, deps, toggles)


def _dispatch_locked(
    message: str, goal_id: str, deps: DispatchDeps, toggles: DispatchToggles
) -> DispatchResult:
    manager = deps.manager
    automaton = deps.automaton
    record = manager.goal(goal_id)
    stage = record.current_stage
    ctx = manager.context(goal_id)
    timing: dict[str, int] = {}

    t0 = time.perf_counter_ns()
    decision = identify(message, ctx, deps.table, deps.fallback)
    timing["route_ns"] = time.perf_counter_ns() - t0

    def finish(
        outcome: str,
        *,
        stage_after: StageId | None = None,
        skill: SkillSpec | None = None,
        sub_reason: str | None = None,
        pre_results: tuple[tuple[str, bool], ...] = (),
        digest: str | None = None,
        payload: Any = None,
        detail: dict[str, Any] | None = None,
    ) -> DispatchResult:
        after = stage if stage_after is None else stage_after
        event = None
        full_detail = {"routing": {"intent": decision.intent, "mode": decision.mode}}
        full_detail.update(detail or {})
        full_detail["timing_ns"] = timing
        if toggles.audit:
            event = ProcessEvent(
                seq=manager.last_seq(goal_id) + 1,
                timestamp=time.time(),
                goal_id=goal_id,
                intent=decision.intent,
                stage_before=stage,
                stage_after=after,
                skill_id=skill.id if skill else None,
                outcome=outcome,
                sub_reason=sub_reason,
                precondition_results=pre_results,
                payload_digest=digest,
            )
            manager.log_event(event, payload)
        return DispatchResult(
            outcome=outcome,
            stage_before=stage,
            stage_after=after,
            skill_id=skill.id if skill else None,
            detail=full_detail,
            event=event,
        )

    if not decision.resolved or decision.intent not in automaton.binding:
        return finish(
            "SKILL_NOT_FOUND",
            sub_reason="intent_unresolved",
            detail={"error": decision.error} if decision.error else None,
        )
    intent = decision.intent

    gate_start = time.perf_counter_ns()
    if toggles.stage_check and not automaton.is_stage_legal(intent, stage):
        timing["gate_ns"] = time.perf_counter_ns() - gate_start
        return finish(
            "ILLEGAL_TRANSITION",
            sub_reason="pre_exec_stage_illegal",
            detail={"rejected": {"intent": intent, "stage": stage}},
        )

    if toggles.stage_check:
        skill = deps.registry.select_skill(intent, stage)
    else:
        skill = deps.registry.select_by_intent(intent)
    if skill is None:
        timing["gate_ns"] = time.perf_counter_ns() - gate_start
        return finish("SKILL_NOT_FOUND", sub_reason="no_matching_skill")

    pre_results: tuple[tuple[str, bool], ...] = ()
    if toggles.precondition_check:
        report = deps.registry.check_preconditions(skill, ctx)
        pre_results = report.results
        if not report.satisfied:
            timing["gate_ns"] = time.perf_counter_ns() - gate_start
            detail: dict[str, Any] = {"first_failure": report.first_failure}
            if report.evaluation_errors:
                detail["evaluation_errors"] = dict(report.evaluation_errors)
            return finish(
                "PRECONDITION_FAIL",
                skill=skill,
                sub_reason=None,
                pre_results=pre_results,
                detail=detail,
            )
    timing["gate_ns"] = time.perf_counter_ns() - gate_start

    exec_start = time.perf_counter_ns()
    try:
        result = deps.executor(skill, ctx)
    except Exception as exc:
        result = SkillResult("failed", {"error": str(exc)})
    timing["executor_ns"] = time.perf_counter_ns() - exec_start
    digest = payload_digest(result.payload)

    if not result.ok:
        # Executor faults are not a governance outcome class: the step is a
        # failed SUCCESS-path dispatch with no postconditions and no advance.
        return finish(
            "SUCCESS",
            skill=skill,
            sub_reason="execution_error",
            pre_results=pre_results,
            digest=digest,
            detail={"executor_status": result.status},
        )

    new_ctx = apply_postconditions(skill, ctx, result)
    target = automaton.target_stage(intent)
    stage_after = stage
    if target is not None and target != stage:
        if automaton.can_transition(stage, target):
            stage_after = target
        else:
            return finish(
                "ILLEGAL_TRANSITION",
                skill=skill,
                sub_reason="post_exec_transition_rejected",
                pre_results=pre_results,
                digest=digest,
                detail={"rejected": {"from": stage, "to": target}},
            )

    if stage_after != stage:
        manager.advance_stage(goal_id, stage, stage_after)
    manager.commit_context(goal_id, new_ctx)
    return finish(
        "SUCCESS",
        stage_after=stage_after,
        skill=skill,
        pre_results=pre_results,
        digest=digest,
        payload=result.payload,
    )


def dispatch_with_config(
    message: str,
    goal_id: str,
    deps: DispatchDeps,
    toggles: DispatchToggles,
) -> DispatchResult:
    """Alias kept for symmetry with the ablation harness."""
    return dispatch(message, goal_id, deps, toggles)


class MockExecutor:
    """Deterministic canned responses keyed by skill id.

    Stands in for live endpoints: same skill + same fixtures always yields
    the identical result.  Failures can be injected per skill id to exercise
    the execution-error path; optional latency simulates slow backends.
    """

    def __init__(
        self,
        fixtures: Mapping[str, Any],
        fail_ids: Sequence[str] = (),
        latency_s: float = 0.0,
    ) -> None:
        self.fixtures = dict(fixtures)
        self.fail_ids = set(fail_ids)
        self.latency_s = latency_s

    def validate_against(self, registry: SkillRegistry) -> None:
        missing = sorted(spec.id for spec in registry if spec.id not in self.fixtures)
        if missing:
            raise ConfigError(f"executor fixtures missing for skills: {', '.join(missing)}")

    def __call__(self, skill: SkillSpec, ctx: DispatchContext) -> SkillResult:
        if self.latency_s:
            time.sleep(self.latency_s)
        if skill.id in self.fail_ids:
            return SkillResult("failed", {"error": f"injected failure for {skill.id}"})
        if skill.id not in self.fixtures:
            raise ConfigError(f"no fixture for skill {skill.id!r}")
        return SkillResult("ok", copy.deepcopy(self.fixtures[skill.id]))
