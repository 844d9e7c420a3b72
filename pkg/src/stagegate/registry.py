"""Skill registry: risk-leveled capabilities with stage and predicate guards.

Skills are declarative records.  Each one serves a single intent, applies at
a declared set of stages, and is guarded by named predicates resolved
against a catalog of pure context functions.  Postconditions are restricted
to declarative context mutations so that replay stays deterministic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from .automaton import StageId, IntentId, ValidationEntry, ValidationReport, WorkflowAutomaton
from .context import DispatchContext, SkillResult, payload_digest
from .errors import BindingFault, ConfigError, ConflictFault

_SKILL_KEYS = ("id", "intent", "level", "stages", "pre", "post", "risk", "disclosure")
_EFFECT_OPS = ("set", "append", "set_from_result")


class RiskLevel(enum.IntEnum):
    """L0 atomic query, L1 composite operation, L2 policy-level fallback."""

    L0 = 0
    L1 = 1
    L2 = 2

    @classmethod
    def parse(cls, text: str) -> "RiskLevel":
        try:
            return cls[text]
        except KeyError:
            raise ConfigError(f"unknown risk level: {text!r}") from None


@dataclass(frozen=True)
class PredicateRef:
    name: str
    description: str = ""


@dataclass(frozen=True)
class Effect:
    """One declarative context mutation applied after successful execution.

    ``set`` writes a literal value, ``append`` extends a list field, and
    ``set_from_result`` stores the digest of the skill result payload so the
    reference survives replay.
    """

    op: str
    field: str
    value: Any = None

    def __post_init__(self) -> None:
        if self.op not in _EFFECT_OPS:
            raise ConfigError(f"unknown postcondition op: {self.op!r}")


@dataclass(frozen=True)
class SkillSpec:
    id: str
    intent: IntentId
    level: RiskLevel
    applicable_stages: frozenset[StageId]  # empty set means "all stages"
    preconditions: tuple[PredicateRef, ...] = ()
    postconditions: tuple[Effect, ...] = ()
    risk_class: str = ""
    disclosure_tier: str = "bound"  # "routing" | "bound"

    def applies_at(self, stage: StageId) -> bool:
        return not self.applicable_stages or stage in self.applicable_stages


@dataclass(frozen=True)
class PreconditionReport:
    satisfied: bool
    results: tuple[tuple[str, bool], ...]
    first_failure: str | None = None
    evaluation_errors: Mapping[str, str] = field(default_factory=dict)


Predicate = Callable[[DispatchContext], bool]


class PredicateCatalog:
    """Named table of pure context predicates."""

    def __init__(self) -> None:
        self._table: dict[str, Predicate] = {}
        self._descriptions: dict[str, str] = {}

    def register(self, name: str, fn: Predicate, description: str = "") -> None:
        self._table[name] = fn
        self._descriptions[name] = description

    def register_flag(self, name: str, description: str = "") -> None:
        """Register a predicate that checks the same-named business flag."""
        self.register(
            name,
            lambda ctx, _flag=name: bool(ctx.business_state.get(_flag, False)),
            description or f"requires business flag {name!r}",
        )

    def resolves(self, name: str) -> bool:
        return name in self._table

    def describe(self, name: str) -> str:
        return self._descriptions.get(name, "")

    def evaluate(self, name: str, ctx: DispatchContext) -> bool:
        if name not in self._table:
            raise BindingFault(name)
        return bool(self._table[name](ctx))


class SkillRegistry:
    """Holds skills in registration order; immutable once the build phase ends."""

    def __init__(self, catalog: PredicateCatalog) -> None:
        self.catalog = catalog
        self._skills: list[SkillSpec] = []
        self._by_id: dict[str, SkillSpec] = {}

    def __len__(self) -> int:
        return len(self._skills)

    def __iter__(self):
        return iter(self._skills)

    def get(self, skill_id: str) -> SkillSpec | None:
        return self._by_id.get(skill_id)

    def register(self, spec: SkillSpec, automaton: WorkflowAutomaton) -> None:
        """Add a skill after checking stage membership and predicate binding."""
        if spec.id in self._by_id:
            raise ConflictFault(f"skill id already registered: {spec.id!r}")
        foreign = sorted(spec.applicable_stages - set(automaton.stages))
        if foreign:
            raise ConfigError(
                f"skill {spec.id!r} declares stages outside the automaton: {', '.join(foreign)}"
            )
        for ref in spec.preconditions:
            if not self.catalog.resolves(ref.name):
                raise BindingFault(ref.name)
        self._skills.append(spec)
        self._by_id[spec.id] = spec

    def select_skill(self, intent: IntentId, stage: StageId) -> SkillSpec | None:
        """Unique skill serving *intent* that applies at *stage*.

        When several match, the lowest risk level wins; ties break by
        registration order, so selection stays deterministic and auditable.
        """
        return self._select(intent, stage)

    def select_by_intent(self, intent: IntentId) -> SkillSpec | None:
        """Stage-agnostic selection used when the stage gate is disabled."""
        return self._select(intent, None)

    def _select(self, intent: IntentId, stage: StageId | None) -> SkillSpec | None:
        best: tuple[int, int] | None = None
        chosen: SkillSpec | None = None
        for index, spec in enumerate(self._skills):
            if spec.intent != intent:
                continue
            if stage is not None and not spec.applies_at(stage):
                continue
            key = (int(spec.level), index)
            if best is None or key < best:
                best = key
                chosen = spec
        return chosen

    def check_preconditions(self, skill: SkillSpec, ctx: DispatchContext) -> PreconditionReport:
        """Evaluate every guard of *skill* against *ctx* without mutating it.

        Evaluation is total (all predicates, declared order) and never
        raises: a predicate that faults is recorded as a false result tagged
        with the error so the dispatcher can return a clean block instead of
        crashing mid-dispatch.
        """
        results: list[tuple[str, bool]] = []
        errors: dict[str, str] = {}
        first_failure: str | None = None
        for ref in skill.preconditions:
            try:
                passed = self.catalog.evaluate(ref.name, ctx)
            except BindingFault:
                raise
            except Exception as exc:  # predicate fault degrades to False
                passed = False
                errors[ref.name] = f"evaluation_error: {exc}"
            results.append((ref.name, passed))
            if not passed and first_failure is None:
                first_failure = ref.name
        return PreconditionReport(
            satisfied=all(passed for _, passed in results),
            results=tuple(results),
            first_failure=first_failure,
            evaluation_errors=errors,
        )

    def manifest(self, stage: StageId, phase: str) -> list[dict[str, Any]]:
        """Skill summaries disclosed at *stage* for the given phase.

        The routing phase exposes only low-context entries for
        routing-visible skills; full descriptions and precondition lists are
        disclosed only in the bound phase, keeping capability exposure
        progressive.
        """
        if phase not in ("routing", "bound"):
            raise ConfigError(f"unknown manifest phase: {phase!r}")
        entries = []
        for spec in self._skills:
            if not spec.applies_at(stage):
                continue
            if phase == "routing":
                if spec.disclosure_tier != "routing":
                    continue
                entries.append({"id": spec.id, "intent": spec.intent, "level": spec.level.name})
            else:
                entries.append(
                    {
                        "id": spec.id,
                        "intent": spec.intent,
                        "level": spec.level.name,
                        "stages": sorted(spec.applicable_stages) or "*",
                        "preconditions": [
                            {"name": ref.name, "description": ref.description or self.catalog.describe(ref.name)}
                            for ref in spec.preconditions
                        ],
                        "risk": spec.risk_class,
                        "disclosure": spec.disclosure_tier,
                    }
                )
        return entries

    def validate_against(self, automaton: WorkflowAutomaton) -> ValidationReport:
        """Cross-checks between the registry and the active automaton.

        A skill must never apply at a stage where its intent is illegal: the
        binding is the governing contract and per-skill stages refine it.
        """
        entries: list[ValidationEntry] = []
        for spec in self._skills:
            applies_everywhere = (
                not spec.applicable_stages
                or spec.applicable_stages == frozenset(automaton.stages)
            )
            if spec.level == RiskLevel.L0 and applies_everywhere and spec.preconditions:
                entries.append(
                    ValidationEntry("error", "guarded_universal_query",
                                    f"L0 skill {spec.id!r} is available at every stage and must "
                                    f"not declare preconditions")
                )
            if spec.intent not in automaton.binding:
                entries.append(
                    ValidationEntry("error", "skill_unknown_intent",
                                    f"skill {spec.id!r} serves unknown intent {spec.intent!r}")
                )
                continue
            bound = automaton.binding[spec.intent]
            stages = spec.applicable_stages or set(automaton.stages)
            extra = sorted(set(stages) - set(bound))
            if extra:
                entries.append(
                    ValidationEntry("error", "skill_stage_outside_binding",
                                    f"skill {spec.id!r} applies at {extra} where intent "
                                    f"{spec.intent!r} is stage-illegal")
                )
        return ValidationReport(tuple(entries))


def apply_postconditions(
    skill: SkillSpec, ctx: DispatchContext, result: SkillResult
) -> DispatchContext:
    """Return a context with the skill's effects applied, in declared order.

    The input context is never mutated; callers commit the returned copy
    only when the whole dispatch succeeds.
    """
    return apply_effects(skill, ctx, payload_digest(result.payload))


def apply_effects(skill: SkillSpec, ctx: DispatchContext, result_digest: str) -> DispatchContext:
    """Effect application against a known result digest (shared with replay)."""
    updated = ctx.clone()
    state = updated.business_state
    for effect in skill.postconditions:
        if effect.op == "set":
            state[effect.field] = effect.value
        elif effect.op == "append":
            if effect.field not in state:
                raise ConfigError(
                    f"postcondition of {skill.id!r} appends to undefined field {effect.field!r}"
                )
            if not isinstance(state[effect.field], list):
                raise ConfigError(
                    f"postcondition of {skill.id!r} appends to non-list field {effect.field!r}"
                )
            state[effect.field].append(effect.value)
        else:  # set_from_result
            state[effect.field] = result_digest
    return updated


def skill_from_dict(raw: Mapping[str, Any]) -> SkillSpec:
    """Parse one skill config object (``stages`` may be ``"*"`` for all)."""
    unknown = sorted(set(raw) - set(_SKILL_KEYS))
    if unknown:
        raise ConfigError(f"unknown skill config keys: {', '.join(unknown)}")
    for key in ("id", "intent", "level"):
        if key not in raw:
            raise ConfigError(f"skill config missing key: {key}")
    stages_raw = raw.get("stages", "*")
    stages = frozenset() if stages_raw == "*" else frozenset(str(s) for s in stages_raw)
    effects = []
    for eff in raw.get("post", []):
        effects.append(Effect(op=eff["op"], field=eff["field"], value=eff.get("value")))
    return SkillSpec(
        id=str(raw["id"]),
        intent=str(raw["intent"]),
        level=RiskLevel.parse(str(raw["level"])),
        applicable_stages=stages,
        preconditions=tuple(PredicateRef(str(name)) for name in raw.get("pre", [])),
        postconditions=tuple(effects),
        risk_class=str(raw.get("risk", "")),
        disclosure_tier=str(raw.get("disclosure", "bound")),
    )


def skill_to_dict(spec: SkillSpec) -> dict[str, Any]:
    post = []
    for eff in spec.postconditions:
        entry: dict[str, Any] = {"op": eff.op, "field": eff.field}
        if eff.op != "set_from_result":
            entry["value"] = eff.value
        post.append(entry)
    return {
        "id": spec.id,
        "intent": spec.intent,
        "level": spec.level.name,
        "stages": sorted(spec.applicable_stages) if spec.applicable_stages else "*",
        "pre": [ref.name for ref in spec.preconditions],
        "post": post,
        "risk": spec.risk_class,
        "disclosure": spec.disclosure_tier,
    }


def build_registry(
    skill_dicts: Sequence[Mapping[str, Any]],
    automaton: WorkflowAutomaton,
    catalog: PredicateCatalog | None = None,
) -> SkillRegistry:
    """Build a registry from config objects, auto-registering flag predicates.

    Predicate names that were not explicitly registered are bound to
    same-named business flags, which is the convention all shipped configs
    follow.  Explicit registrations always win.
    """
    catalog = catalog or PredicateCatalog()
    specs = [skill_from_dict(raw) for raw in skill_dicts]
    for spec in specs:
        for ref in spec.preconditions:
            if not catalog.resolves(ref.name):
                catalog.register_flag(ref.name)
    registry = SkillRegistry(catalog)
    for spec in specs:
        registry.register(spec, automaton)
    return registry
