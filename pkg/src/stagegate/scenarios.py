"""Scenario and domain-bundle ingestion, labeling, and adversarial variants.

A domain bundle is a directory of four JSON files (automaton, skills,
patterns, fixtures) that must cross-validate before anything runs.  Suites
are labeled message sequences; ground-truth legality labels come from a
forward simulator that folds the declarative configs directly, so labels
never depend on the dispatcher under test.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .automaton import StageId, automaton_from_dict, validate_definition
from .context import DispatchContext
from .dispatcher import MockExecutor
from .errors import ConfigError, GenerationFault
from .registry import SkillRegistry, apply_effects, build_registry
from .router import (
    IntentPattern,
    TokenOverlapFallback,
    identify,
    table_from_list,
    validate_table,
)

SCENARIO_TYPES = ("normal", "illegal", "rollback", "multi", "abort", "concurrent")

BUNDLE_FILES = {
    "automaton": "automaton.json",
    "skills": "skills.json",
    "patterns": "patterns.json",
    "fixtures": "fixtures.json",
}


@dataclass(frozen=True)
class LabeledMessage:
    text: str
    expected_legal: bool
    scenario_id: str
    turn_index: int
    label_intent: str | None = None  # semantic intent for labeling, when it differs from routing
    track: int = 0


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    domain: str
    type: str
    messages: tuple[LabeledMessage, ...]
    expected_final_stage: Mapping[int, StageId]

    def tracks(self) -> list[int]:
        return sorted({m.track for m in self.messages})


@dataclass
class DomainBundle:
    name: str
    automaton: WorkflowAutomaton
    registry: SkillRegistry
    table: tuple[IntentPattern, ...]
    fixtures: dict[str, Any]
    fallback: TokenOverlapFallback | None = None

    def build_executor(self, fail_ids: Sequence[str] = ()) -> MockExecutor:
        executor = MockExecutor(self.fixtures, fail_ids=fail_ids)
        executor.validate_against(self.registry)
        return executor


# -- domain loading ----------------------------------------------------------


def _read_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc


def bundle_from_dicts(
    name: str, parts: Mapping[str, Any], located: Mapping[str, str] | None = None
) -> DomainBundle:
    """Cross-validate the four bundle parts and assemble a DomainBundle.

    ``located`` maps part name to a display path so the first error can be
    pinned to a file when the parts came from disk.
    """
    where = dict(located or {})

    def at(part: str) -> str:
        return where.get(part, part)

    automaton = automaton_from_dict(parts["automaton"], name=name)
    report = validate_definition(automaton)
    if not report.ok:
        first = report.errors()[0]
        raise ConfigError(f"{at('automaton')}: {first.code}: {first.message}")

    registry = build_registry(parts["skills"], automaton)
    cross = registry.validate_against(automaton)
    if not cross.ok:
        first = cross.errors()[0]
        raise ConfigError(f"{at('skills')}: {first.code}: {first.message}")

    table = table_from_list(parts["patterns"])
    table_report = validate_table(table, automaton)
    if not table_report.ok:
        first = table_report.errors()[0]
        raise ConfigError(f"{at('patterns')}: {first.code}: {first.message}")

    routable = {entry.intent for entry in table}
    for spec in registry:
        if spec.intent not in routable:
            raise ConfigError(
                f"{at('patterns')}: skill {spec.id!r} serves intent "
                f"{spec.intent!r} which no pattern routes to"
            )

    fixtures = parts["fixtures"]
    if not isinstance(fixtures, dict):
        raise ConfigError(f"{at('fixtures')}: expected an object keyed by skill id")
    missing = sorted(spec.id for spec in registry if spec.id not in fixtures)
    if missing:
        raise ConfigError(f"{at('fixtures')}: missing fixtures for: {', '.join(missing)}")

    return DomainBundle(
        name=name,
        automaton=automaton,
        registry=registry,
        table=table,
        fixtures=dict(fixtures),
        fallback=TokenOverlapFallback(table),
    )


def load_domain(path: str | Path) -> DomainBundle:
    """Load and cross-validate one domain directory.

    Any validation failure aborts with the first error located by file; a
    bundle that loads is safe to dispatch against.
    """
    directory = Path(path)
    parts = {key: _read_json(directory / fname) for key, fname in BUNDLE_FILES.items()}
    located = {key: str(directory / fname) for key, fname in BUNDLE_FILES.items()}
    return bundle_from_dicts(directory.name, parts, located)


def write_domain(directory: str | Path, bundle_dicts: Mapping[str, Any]) -> None:
    """Write the four bundle files from plain dicts (used by data builders)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for key, filename in BUNDLE_FILES.items():
        payload = bundle_dicts[key]
        (directory / filename).write_text(
            json.dumps(payload, indent=2, sort_keys=False) + "\n", encoding="utf-8"
        )


# -- suite loading -------------------------------------------------------------


def _scenario_from_dict(raw: Mapping[str, Any], domain: str, bundle: DomainBundle | None) -> Scenario:
    sid = str(raw.get("scenario_id", ""))
    if not sid:
        raise ConfigError("scenario missing scenario_id")
    stype = str(raw.get("type", ""))
    if stype not in SCENARIO_TYPES:
        raise ConfigError(f"scenario {sid!r}: unknown type {stype!r}")
    raw_messages = raw.get("messages", [])
    if not raw_messages:
        raise ConfigError(f"scenario {sid!r}: messages must be non-empty")

    messages = []
    for position, msg in enumerate(raw_messages):
        turn = int(msg.get("turn_index", -1))
        if turn != position:
            raise ConfigError(
                f"scenario {sid!r}: turn_index must be gapless from 0 (got {turn} at {position})"
            )
        messages.append(
            LabeledMessage(
                text=str(msg["text"]),
                expected_legal=bool(msg["expected_legal"]),
                scenario_id=sid,
                turn_index=turn,
                label_intent=msg.get("label_intent"),
                track=int(msg.get("track", 0)),
            )
        )

    final_raw = raw.get("expected_final_stage")
    if final_raw is None:
        raise ConfigError(f"scenario {sid!r}: expected_final_stage is required")
    if isinstance(final_raw, str):
        final = {0: final_raw}
    else:
        final = {int(track): str(stage) for track, stage in final_raw.items()}

    scenario = Scenario(
        scenario_id=sid,
        domain=domain,
        type=stype,
        messages=tuple(messages),
        expected_final_stage=final,
    )

    if stype == "illegal" and all(m.expected_legal for m in messages):
        raise ConfigError(f"scenario {sid!r}: illegal type requires an expected_legal=false message")
    for track in scenario.tracks():
        if track not in final:
            raise ConfigError(f"scenario {sid!r}: no expected_final_stage for track {track}")

    if bundle is not None:
        stages = set(bundle.automaton.stages)
        intents = set(bundle.automaton.intents)
        for stage in final.values():
            if stage not in stages:
                raise ConfigError(f"scenario {sid!r}: expected stage {stage!r} not in domain")
        for msg in messages:
            if msg.label_intent is not None and msg.label_intent not in intents:
                raise ConfigError(
                    f"scenario {sid!r}: label_intent {msg.label_intent!r} not in domain"
                )
    return scenario


def load_suite(path: str | Path, bundle: DomainBundle | None = None) -> list[Scenario]:
    raw = _read_json(Path(path))
    return suite_from_dict(raw, bundle)


def suite_from_dict(raw: Mapping[str, Any], bundle: DomainBundle | None = None) -> list[Scenario]:
    domain = str(raw.get("domain", ""))
    if bundle is not None and domain and domain != bundle.name:
        raise ConfigError(f"suite declares domain {domain!r} but bundle is {bundle.name!r}")
    scenarios = [_scenario_from_dict(item, domain, bundle) for item in raw.get("scenarios", [])]
    seen: set[str] = set()
    for scenario in scenarios:
        if scenario.scenario_id in seen:
            raise ConfigError(f"duplicate scenario_id {scenario.scenario_id!r}")
        seen.add(scenario.scenario_id)
    return scenarios


def suite_to_dict(suite_name: str, domain: str, scenarios: Sequence[Scenario]) -> dict[str, Any]:
    out_scenarios = []
    for scenario in scenarios:
        messages = []
        for msg in scenario.messages:
            entry: dict[str, Any] = {
                "turn_index": msg.turn_index,
                "text": msg.text,
                "expected_legal": msg.expected_legal,
            }
            if msg.label_intent is not None:
                entry["label_intent"] = msg.label_intent
            if msg.track != 0:
                entry["track"] = msg.track
            messages.append(entry)
        final: Any = (
            scenario.expected_final_stage[0]
            if set(scenario.expected_final_stage) == {0}
            else {str(k): v for k, v in scenario.expected_final_stage.items()}
        )
        out_scenarios.append(
            {
                "scenario_id": scenario.scenario_id,
                "type": scenario.type,
                "expected_final_stage": final,
                "messages": messages,
            }
        )
    return {"suite_name": suite_name, "domain": domain, "scenarios": out_scenarios}


def save_suite(path: str | Path, suite_name: str, domain: str, scenarios: Sequence[Scenario]) -> None:
    payload = suite_to_dict(suite_name, domain, scenarios)
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


# -- forward simulation (rule-based labeling) -----------------------------------


@dataclass(frozen=True)
class SimStep:
    turn_index: int
    track: int
    intent: str
    legal: bool
    outcome: str
    stage_before: StageId
    stage_after: StageId


def route_intent(bundle: DomainBundle, text: str) -> str:
    """Pattern-only routing used by the labeler (no fallback, no dispatcher)."""
    decision = identify(text, DispatchContext(goal_id="label"), bundle.table, fallback=None)
    return decision.intent


def simulate_scenario(bundle: DomainBundle, scenario: Scenario) -> list[SimStep]:
    """Fold a scenario through the declarative rules, one track at a time.

    A message is legal iff its semantic intent is stage-legal at the
    simulated current stage and every precondition derivable from prior
    turns holds.  Illegal or blocked turns leave the simulated state
    untouched, mirroring the no-advance-on-block contract.
    """
    automaton = bundle.automaton
    registry = bundle.registry
    stages: dict[int, StageId] = {t: automaton.initial for t in scenario.tracks()}
    contexts: dict[int, DispatchContext] = {
        t: DispatchContext(goal_id=f"sim-{scenario.scenario_id}-{t}") for t in scenario.tracks()
    }
    steps: list[SimStep] = []

    for msg in scenario.messages:
        track = msg.track
        stage = stages[track]
        ctx = contexts[track]
        intent = msg.label_intent or route_intent(bundle, msg.text)

        if intent not in automaton.binding:
            steps.append(SimStep(msg.turn_index, track, intent, True, "SKILL_NOT_FOUND", stage, stage))
            continue
        if stage not in automaton.binding[intent]:
            steps.append(SimStep(msg.turn_index, track, intent, False, "ILLEGAL_TRANSITION", stage, stage))
            continue
        skill = registry.select_skill(intent, stage)
        if skill is None:
            steps.append(SimStep(msg.turn_index, track, intent, True, "SKILL_NOT_FOUND", stage, stage))
            continue
        report = registry.check_preconditions(skill, ctx)
        if not report.satisfied:
            steps.append(SimStep(msg.turn_index, track, intent, False, "PRECONDITION_FAIL", stage, stage))
            continue

        target = automaton.stage_map.get(intent)
        after = stage
        if target is not None and target != stage:
            if automaton.can_transition(stage, target):
                after = target
            else:
                steps.append(
                    SimStep(msg.turn_index, track, intent, False, "ILLEGAL_TRANSITION", stage, stage)
                )
                continue

        contexts[track] = apply_effects(skill, ctx, "simulated")
        stages[track] = after
        steps.append(SimStep(msg.turn_index, track, intent, True, "SUCCESS", stage, after))

    return steps


def label_scenario(bundle: DomainBundle, scenario: Scenario) -> Scenario:
    """Re-derive expected_legal labels from the forward simulation."""
    steps = {s.turn_index: s for s in simulate_scenario(bundle, scenario)}
    messages = tuple(
        replace(msg, expected_legal=steps[msg.turn_index].legal) for msg in scenario.messages
    )
    return replace(scenario, messages=messages)


def expected_final_stages(bundle: DomainBundle, scenario: Scenario) -> dict[int, StageId]:
    """Final per-track stages the simulation predicts (suite self-checks)."""
    stages = {t: bundle.automaton.initial for t in scenario.tracks()}
    for step in simulate_scenario(bundle, scenario):
        stages[step.track] = step.stage_after
    return stages


# -- adversarial variants --------------------------------------------------------


def _message_text_for(bundle: DomainBundle, intent: str) -> str:
    for entry in bundle.table:
        if entry.intent == intent and entry.patterns:
            return entry.patterns[0].text
    raise GenerationFault(f"no routable phrasing for intent {intent!r}")


def inject_illegal(
    scenario: Scenario,
    bundle: DomainBundle,
    strategy: str = "stage_skip",
    seed: int = 0,
) -> Scenario:
    """Insert one stage-order-violating message into a normal scenario.

    ``stage_skip`` picks a position and an intent that is illegal at the
    simulated stage there; ``premature_terminal`` fires a terminal-stage
    action before its prerequisite, at the opening turn.  Deterministic for
    a given seed.
    """
    if scenario.type != "normal":
        raise GenerationFault("inject_illegal requires a normal-type scenario")
    if strategy not in ("stage_skip", "premature_terminal"):
        raise GenerationFault(f"unknown strategy {strategy!r}")

    rng = random.Random(seed)
    automaton = bundle.automaton
    steps = simulate_scenario(bundle, scenario)
    stage_at: dict[int, StageId] = {}
    stage = automaton.initial
    track0 = scenario.tracks()[0]
    for step in steps:
        if step.track == track0:
            stage_at[step.turn_index] = step.stage_before
            stage = step.stage_after
    stage_at[len(scenario.messages)] = stage

    candidates: list[tuple[int, str]] = []
    if strategy == "premature_terminal":
        terminals = automaton.terminal_stages()
        position = 0
        here = stage_at.get(0, automaton.initial)
        for intent in automaton.intents:
            target = automaton.stage_map.get(intent)
            if target in terminals and here not in automaton.binding[intent]:
                candidates.append((position, intent))
    else:
        for position in sorted(stage_at):
            here = stage_at[position]
            for intent in automaton.intents:
                if here not in automaton.binding[intent]:
                    candidates.append((position, intent))

    candidates = [
        (pos, intent)
        for pos, intent in candidates
        if any(entry.intent == intent and entry.patterns for entry in bundle.table)
    ]
    if not candidates:
        raise GenerationFault(
            f"scenario {scenario.scenario_id!r}: no injectable position for {strategy}"
        )
    position, intent = candidates[rng.randrange(len(candidates))]

    injected = LabeledMessage(
        text=_message_text_for(bundle, intent),
        expected_legal=False,
        scenario_id=scenario.scenario_id,
        turn_index=position,
        track=track0,
    )
    new_messages: list[LabeledMessage] = []
    for msg in scenario.messages[:position]:
        new_messages.append(msg)
    new_messages.append(injected)
    for msg in scenario.messages[position:]:
        new_messages.append(replace(msg, turn_index=msg.turn_index + 1))
    for i, msg in enumerate(new_messages):
        new_messages[i] = replace(msg, turn_index=i)

    return replace(
        scenario,
        scenario_id=f"{scenario.scenario_id}-inj",
        type="illegal",
        messages=tuple(new_messages),
    )


# -- schema-guided dialogue conversion ---------------------------------------------


def convert_dialogues(
    dialogues: Sequence[Mapping[str, Any]],
    bundle: DomainBundle,
    intent_map: Mapping[str, str] | None = None,
) -> list[Scenario]:
    """Convert schema-guided service dialogues into labeled scenarios.

    Thin converter for holders of the original dataset.  Documented input
    subset, per dialogue::

        {"dialogue_id": str,
         "turns": [{"speaker": "USER" | "SYSTEM",
                    "utterance": str,
                    "frames": [{"state": {"active_intent": str}}, ...]}, ...]}

    Only USER turns are kept.  ``intent_map`` translates the dialogue's
    active-intent names to this domain's intents and becomes the message's
    labeling intent; unmapped or absent intents fall back to routing the
    utterance text.  Labels and expected final stages come from the forward
    simulation, exactly as for authored suites.
    """
    intent_map = dict(intent_map or {})
    scenarios: list[Scenario] = []
    for dialogue in dialogues:
        did = str(dialogue.get("dialogue_id", ""))
        if not did:
            raise ConfigError("dialogue missing dialogue_id")
        messages: list[LabeledMessage] = []
        for turn in dialogue.get("turns", []):
            if turn.get("speaker") != "USER":
                continue
            if "utterance" not in turn:
                raise ConfigError(f"dialogue {did!r}: USER turn missing utterance")
            active = None
            for frame in turn.get("frames", []):
                active = frame.get("state", {}).get("active_intent")
                if active:
                    break
            label_intent = intent_map.get(active) if active else None
            messages.append(
                LabeledMessage(
                    text=str(turn["utterance"]),
                    expected_legal=True,  # placeholder, relabeled below
                    scenario_id=did,
                    turn_index=len(messages),
                    label_intent=label_intent,
                )
            )
        if not messages:
            raise ConfigError(f"dialogue {did!r} has no USER turns")
        scenario = Scenario(
            scenario_id=did,
            domain=bundle.name,
            type="normal",
            messages=tuple(messages),
            expected_final_stage={0: bundle.automaton.initial},
        )
        scenario = label_scenario(bundle, scenario)
        scenarios.append(
            replace(scenario, expected_final_stage=expected_final_stages(bundle, scenario))
        )
    return scenarios


# -- latent violations --------------------------------------------------------------


@dataclass(frozen=True)
class LatentViolation:
    domain: str
    scenario_id: str
    turn_index: int
    intent: str
    stage: StageId
    outcome: str


def detect_latent(steps: Iterable[Any], scenarios: Sequence[Scenario]) -> list[LatentViolation]:
    """Blocked events inside normal-split scenarios, with domain attribution.

    *steps* are runner step records (scenario_id, turn_index, event); only
    scenarios of type ``normal`` contribute, which is exactly the
    stage-order conflicts appearing outside any injected-illegal set.
    """
    by_id = {s.scenario_id: s for s in scenarios}
    latent: list[LatentViolation] = []
    for step in steps:
        scenario = by_id.get(step.scenario_id)
        if scenario is None or scenario.type != "normal":
            continue
        event = step.event
        if event is None or event.outcome not in ("ILLEGAL_TRANSITION", "PRECONDITION_FAIL"):
            continue
        latent.append(
            LatentViolation(
                domain=scenario.domain,
                scenario_id=step.scenario_id,
                turn_index=step.turn_index,
                intent=event.intent,
                stage=event.stage_before,
                outcome=event.outcome,
            )
        )
    return latent
