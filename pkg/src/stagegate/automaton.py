"""Workflow automaton: stages, transitions, and intent-stage legality.

A ``WorkflowAutomaton`` declares which stages a workflow may occupy, which
transitions between stages are legal, and — separately from the transition
relation — at which stages each intent may legally execute (the binding).
The binding is the first gate consulted by the dispatcher; the transition
relation governs stage advancement after a successful execution.

Stage and intent identifiers are case-sensitive exact strings.  Instances
are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

from .errors import ConfigError, LookupFault

StageId = str
IntentId = str

_CONFIG_KEYS = ("stages", "initial", "transitions", "intents", "binding", "stage_map")


@dataclass(frozen=True)
class ValidationEntry:
    severity: str  # "error" | "warning"
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    entries: tuple[ValidationEntry, ...] = ()

    @property
    def ok(self) -> bool:
        return not any(e.severity == "error" for e in self.entries)

    @property
    def empty(self) -> bool:
        return not self.entries

    def errors(self) -> list[ValidationEntry]:
        return [e for e in self.entries if e.severity == "error"]

    def __str__(self) -> str:
        if not self.entries:
            return "clean"
        return "\n".join(f"[{e.severity}] {e.code}: {e.message}" for e in self.entries)


@dataclass(frozen=True)
class WorkflowAutomaton:
    """One domain's stage set, transition relation, and intent binding.

    ``stage_map`` gives the stage the workflow should occupy after an intent
    succeeds.  A ``None`` target marks a stage-preserving intent (queries and
    fallbacks legal at every stage): dispatch never attempts a transition
    for it, which is the same as the target always equalling the current
    stage.
    """

    name: str
    stages: tuple[StageId, ...]
    initial: StageId
    transitions: frozenset[tuple[StageId, StageId]]
    intents: tuple[IntentId, ...]
    binding: Mapping[IntentId, frozenset[StageId]]
    stage_map: Mapping[IntentId, StageId | None]

    def _require_stage(self, stage: StageId) -> None:
        if stage not in self.stages:
            raise LookupFault("stage", stage)

    def _require_intent(self, intent: IntentId) -> None:
        if intent not in self.binding:
            raise LookupFault("intent", intent)

    def is_stage_legal(self, intent: IntentId, stage: StageId) -> bool:
        """True iff *intent* may execute while the workflow sits at *stage*."""
        self._require_intent(intent)
        self._require_stage(stage)
        return stage in self.binding[intent]

    def can_transition(self, from_stage: StageId, to_stage: StageId) -> bool:
        """True iff the stage change is declared legal (self-stay always is)."""
        self._require_stage(from_stage)
        self._require_stage(to_stage)
        return from_stage == to_stage or (from_stage, to_stage) in self.transitions

    def target_stage(self, intent: IntentId) -> StageId | None:
        """Post-success stage for *intent*; None for stage-preserving intents."""
        self._require_intent(intent)
        return self.stage_map[intent]

    def legal_intents(self, stage: StageId) -> set[IntentId]:
        """All intents whose binding includes *stage*."""
        self._require_stage(stage)
        return {i for i in self.intents if stage in self.binding.get(i, frozenset())}

    def terminal_stages(self) -> set[StageId]:
        """Stages with no outgoing transition (workflow can only stay or stop)."""
        outgoing = {f for f, t in self.transitions if f != t}
        return {s for s in self.stages if s not in outgoing}


def validate_definition(definition: WorkflowAutomaton) -> ValidationReport:
    """Check every structural invariant; problems become report entries."""
    entries: list[ValidationEntry] = []

    def err(code: str, message: str) -> None:
        entries.append(ValidationEntry("error", code, message))

    def warn(code: str, message: str) -> None:
        entries.append(ValidationEntry("warning", code, message))

    stage_set = set(definition.stages)
    if len(stage_set) != len(definition.stages):
        err("duplicate_stage", "stages contains duplicates")
    for stage in definition.stages:
        if not stage:
            err("empty_stage", "stage identifiers must be non-empty")

    intent_set = set(definition.intents)
    if len(intent_set) != len(definition.intents):
        err("duplicate_intent", "intents contains duplicates")
    for intent in definition.intents:
        if not intent:
            err("empty_intent", "intent identifiers must be non-empty")

    if definition.initial not in stage_set:
        err("initial_not_in_stages", f"initial stage {definition.initial!r} not in stages")

    for pair in sorted(definition.transitions):
        frm, to = pair
        if frm not in stage_set:
            err("transition_unknown_stage", f"transition source {frm!r} not in stages")
        if to not in stage_set:
            err("transition_unknown_stage", f"transition target {to!r} not in stages")

    for intent in sorted(definition.binding):
        if intent not in intent_set:
            err("binding_unknown_intent", f"binding key {intent!r} not in intents")
        for stage in sorted(definition.binding[intent]):
            if stage not in stage_set:
                err("binding_unknown_stage", f"binding for {intent!r} names unknown stage {stage!r}")
        if not definition.binding[intent]:
            # An intent legal nowhere is almost always an authoring mistake,
            # but adversarial configs may express it deliberately.
            warn("binding_empty", f"intent {intent!r} is bound to no stage")

    for intent in sorted(intent_set):
        if intent not in definition.binding:
            err("binding_missing_intent", f"intent {intent!r} missing from binding")
        if intent not in definition.stage_map:
            err("stage_map_missing_intent", f"intent {intent!r} missing from stage_map")

    for intent in sorted(definition.stage_map):
        if intent not in intent_set:
            err("stage_map_unknown_intent", f"stage_map key {intent!r} not in intents")
        target = definition.stage_map[intent]
        if target is not None and target not in stage_set:
            err("stage_map_unknown_stage", f"stage_map for {intent!r} names unknown stage {target!r}")

    return ValidationReport(tuple(entries))


def automaton_from_dict(raw: Mapping[str, Any], name: str = "domain") -> WorkflowAutomaton:
    """Build an automaton from its JSON config form.

    Unknown top-level keys are rejected by name.  ``stage_map`` values may be
    JSON ``null`` for stage-preserving intents.
    """
    unknown = sorted(set(raw) - set(_CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown automaton config keys: {', '.join(unknown)}")
    missing = sorted(set(_CONFIG_KEYS) - set(raw))
    if missing:
        raise ConfigError(f"missing automaton config keys: {', '.join(missing)}")

    stages = tuple(str(s) for s in raw["stages"])
    intents = tuple(str(i) for i in raw["intents"])
    transitions = frozenset((str(a), str(b)) for a, b in raw["transitions"])
    binding = {str(i): frozenset(str(s) for s in ss) for i, ss in raw["binding"].items()}
    stage_map = {
        str(i): (None if target is None else str(target))
        for i, target in raw["stage_map"].items()
    }
    return WorkflowAutomaton(
        name=name,
        stages=stages,
        initial=str(raw["initial"]),
        transitions=transitions,
        intents=intents,
        binding=binding,
        stage_map=stage_map,
    )


def automaton_to_dict(definition: WorkflowAutomaton) -> dict[str, Any]:
    """Inverse of :func:`automaton_from_dict` (key order normalized)."""
    return {
        "stages": list(definition.stages),
        "initial": definition.initial,
        "transitions": [list(pair) for pair in sorted(definition.transitions)],
        "intents": list(definition.intents),
        "binding": {i: sorted(definition.binding[i]) for i in definition.intents},
        "stage_map": {i: definition.stage_map[i] for i in definition.intents},
    }
