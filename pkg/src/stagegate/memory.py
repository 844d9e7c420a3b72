"""Goal-scoped governance memory: records, append-only events, and replay.

The GoalManager owns the four record classes (goal, position, candidate,
process event).  Stage changes go through validated advancement, every
dispatch step appends exactly one immutable ProcessEvent, and any goal can
be reconstructed by folding its event log from the beginning.

Two storage backends ship: an in-memory store for tests and a file-backed
append-only event log (JSONL per goal, plus a JSON snapshot) for durable
runs.  The interface leaves room for a SQL backend.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from .automaton import StageId, IntentId, WorkflowAutomaton
from .context import DispatchContext, payload_digest
from .errors import ConfigError, ConflictFault, IntegrityFault, LookupFault
from .registry import SkillRegistry, apply_effects

OUTCOMES = ("SUCCESS", "SKILL_NOT_FOUND", "PRECONDITION_FAIL", "ILLEGAL_TRANSITION")

# Stable key order for trace lines, so files diff cleanly across runs.
_EVENT_FIELDS = (
    "seq",
    "timestamp",
    "goal_id",
    "intent",
    "stage_before",
    "stage_after",
    "skill_id",
    "outcome",
    "sub_reason",
    "precondition_results",
    "payload_digest",
)


@dataclass(frozen=True)
class ProcessEvent:
    """One append-only audit record; the unit of trace grading and replay."""

    seq: int
    timestamp: float
    goal_id: str
    intent: IntentId
    stage_before: StageId
    stage_after: StageId
    skill_id: str | None
    outcome: str
    sub_reason: str | None = None
    precondition_results: tuple[tuple[str, bool], ...] = ()
    payload_digest: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "goal_id": self.goal_id,
            "intent": self.intent,
            "stage_before": self.stage_before,
            "stage_after": self.stage_after,
            "skill_id": self.skill_id,
            "outcome": self.outcome,
            "sub_reason": self.sub_reason,
            "precondition_results": [[name, passed] for name, passed in self.precondition_results],
            "payload_digest": self.payload_digest,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ProcessEvent":
        return cls(
            seq=int(raw["seq"]),
            timestamp=float(raw["timestamp"]),
            goal_id=str(raw["goal_id"]),
            intent=str(raw["intent"]),
            stage_before=str(raw["stage_before"]),
            stage_after=str(raw["stage_after"]),
            skill_id=raw.get("skill_id"),
            outcome=str(raw["outcome"]),
            sub_reason=raw.get("sub_reason"),
            precondition_results=tuple((str(n), bool(p)) for n, p in raw.get("precondition_results", [])),
            payload_digest=raw.get("payload_digest"),
        )

    def to_line(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


@dataclass
class GoalRecord:
    goal_id: str
    domain: str
    current_stage: StageId
    created_at: float
    status: str = "active"  # "active" | "closed"


@dataclass(frozen=True)
class PositionRecord:
    id: str
    goal_id: str
    attributes: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class CandidateRecord:
    id: str
    goal_id: str
    attributes: Mapping[str, Any] = field(default_factory=dict)


class InMemoryEventStore:
    """Per-goal event lists; payloads retained for digest verification."""

    def __init__(self) -> None:
        self._events: dict[str, list[ProcessEvent]] = {}
        self._payloads: dict[tuple[str, int], Any] = {}
        self._lock = threading.Lock()

    def append(self, event: ProcessEvent, payload: Any = None) -> None:
        with self._lock:
            self._events.setdefault(event.goal_id, []).append(event)
            if payload is not None:
                self._payloads[(event.goal_id, event.seq)] = payload

    def events_for(self, goal_id: str) -> list[ProcessEvent]:
        with self._lock:
            return list(self._events.get(goal_id, []))

    def payload_for(self, goal_id: str, seq: int) -> Any:
        return self._payloads.get((goal_id, seq))

    def goal_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._events)


class FileEventStore:
    """Append-only JSONL trace per goal with a JSON snapshot alongside.

    A completed append is flushed before returning, so an event is durable
    before the dispatch result surfaces to the caller.
    """

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _trace_path(self, goal_id: str) -> Path:
        return self.directory / f"{goal_id}.jsonl"

    def _snapshot_path(self, goal_id: str) -> Path:
        return self.directory / f"{goal_id}.snapshot.json"

    def append(self, event: ProcessEvent, payload: Any = None) -> None:
        line = event.to_line()
        with self._lock:
            with self._trace_path(event.goal_id).open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()

    def events_for(self, goal_id: str) -> list[ProcessEvent]:
        path = self._trace_path(goal_id)
        if not path.exists():
            return []
        return load_trace(path)

    def payload_for(self, goal_id: str, seq: int) -> Any:
        return None

    def goal_ids(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.jsonl"))

    def write_snapshot(self, record: GoalRecord, business_state: Mapping[str, Any], last_seq: int) -> None:
        snapshot = {
            "goal_id": record.goal_id,
            "domain": record.domain,
            "current_stage": record.current_stage,
            "status": record.status,
            "business_state": dict(business_state),
            "last_seq": last_seq,
        }
        path = self._snapshot_path(record.goal_id)
        path.write_text(json.dumps(snapshot, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_trace(path: str | Path) -> list[ProcessEvent]:
    """Read a JSONL trace file into events (no integrity checks here)."""
    events = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            events.append(ProcessEvent.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as exc:
            raise IntegrityFault(f"unparseable trace line {lineno} in {path}: {exc}") from exc
    return events


@dataclass
class ReplayResult:
    record: GoalRecord
    business_state: dict[str, Any]
    last_seq: int


class GoalManager:
    """Shared workflow state for all dispatchers, keyed by goal id.

    Reads are safe concurrently; writes for one goal are serialized by a
    per-goal lock.  The manager needs each domain's automaton (to validate
    advancement) and registry (to re-derive business state during replay).
    """

    def __init__(
        self,
        store: InMemoryEventStore | FileEventStore | None = None,
        domains: Mapping[str, tuple[WorkflowAutomaton, SkillRegistry]] | None = None,
    ) -> None:
        self.store = store or InMemoryEventStore()
        self._domains: dict[str, tuple[WorkflowAutomaton, SkillRegistry]] = dict(domains or {})
        self._goals: dict[str, GoalRecord] = {}
        self._contexts: dict[str, DispatchContext] = {}
        self._last_seq: dict[str, int] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._positions: dict[str, list[PositionRecord]] = {}
        self._candidates: dict[str, list[CandidateRecord]] = {}
        self._table_lock = threading.Lock()
        self._goal_counter = 0

    # -- domain wiring -----------------------------------------------------

    def add_domain(self, name: str, automaton: WorkflowAutomaton, registry: SkillRegistry) -> None:
        self._domains[name] = (automaton, registry)

    def automaton_for(self, goal_id: str) -> WorkflowAutomaton:
        return self._domains[self.goal(goal_id).domain][0]

    def _registry_for(self, domain: str) -> SkillRegistry:
        return self._domains[domain][1]

    # -- goal lifecycle ------------------------------------------------------

    def create_goal(self, domain: str, goal_id: str | None = None) -> GoalRecord:
        if domain not in self._domains:
            raise ConfigError(f"unknown domain: {domain!r}")
        automaton = self._domains[domain][0]
        with self._table_lock:
            if goal_id is None:
                self._goal_counter += 1
                goal_id = f"{domain}-{self._goal_counter:04d}"
            if goal_id in self._goals:
                raise ConflictFault(f"goal id already exists: {goal_id!r}")
            record = GoalRecord(
                goal_id=goal_id,
                domain=domain,
                current_stage=automaton.initial,
                created_at=time.time(),
            )
            self._goals[goal_id] = record
            self._contexts[goal_id] = DispatchContext(goal_id=goal_id)
            self._last_seq[goal_id] = 0
            self._locks[goal_id] = threading.RLock()
            self._positions[goal_id] = []
            self._candidates[goal_id] = []
        return record

    # -- business records (positions, candidates) -----------------------------

    def add_position(self, record: PositionRecord) -> None:
        self.goal(record.goal_id)
        with self._locks[record.goal_id]:
            self._positions[record.goal_id].append(record)

    def add_candidate(self, record: CandidateRecord) -> None:
        self.goal(record.goal_id)
        with self._locks[record.goal_id]:
            self._candidates[record.goal_id].append(record)

    def positions(self, goal_id: str) -> list[PositionRecord]:
        self.goal(goal_id)
        return list(self._positions[goal_id])

    def candidates(self, goal_id: str) -> list[CandidateRecord]:
        self.goal(goal_id)
        return list(self._candidates[goal_id])

    def goal(self, goal_id: str) -> GoalRecord:
        try:
            return self._goals[goal_id]
        except KeyError:
            raise LookupFault("goal", goal_id) from None

    def goal_ids(self) -> list[str]:
        return sorted(self._goals)

    def lock(self, goal_id: str) -> threading.RLock:
        self.goal(goal_id)
        return self._locks[goal_id]

    def context(self, goal_id: str) -> DispatchContext:
        """Copy of the goal's live context; commit changes via commit_context."""
        self.goal(goal_id)
        return self._contexts[goal_id].clone()

    def commit_context(self, goal_id: str, ctx: DispatchContext) -> None:
        self.goal(goal_id)
        self._contexts[goal_id] = ctx.clone()

    def last_seq(self, goal_id: str) -> int:
        self.goal(goal_id)
        return self._last_seq[goal_id]

    # -- validated mutation --------------------------------------------------

    def advance_stage(self, goal_id: str, from_stage: StageId, to_stage: StageId) -> None:
        """Move the goal from *from_stage* to *to_stage* under full validation.

        Rejects stale callers (current stage moved underneath them) and
        undeclared transitions; this is defense in depth below the
        dispatcher's own gates.
        """
        record = self.goal(goal_id)
        automaton = self._domains[record.domain][0]
        with self._locks[goal_id]:
            if record.current_stage != from_stage:
                raise ConflictFault(
                    f"goal {goal_id!r} is at {record.current_stage!r}, not {from_stage!r}"
                )
            if not automaton.can_transition(from_stage, to_stage):
                raise ConflictFault(
                    f"transition {from_stage!r} -> {to_stage!r} is not declared legal"
                )
            record.current_stage = to_stage
            if to_stage in automaton.terminal_stages():
                record.status = "closed"

    def log_event(self, event: ProcessEvent, payload: Any = None) -> None:
        """Durably append one event; seq must be exactly previous + 1."""
        self.goal(event.goal_id)
        with self._locks[event.goal_id]:
            expected = self._last_seq[event.goal_id] + 1
            if event.seq != expected:
                raise IntegrityFault(
                    f"event seq {event.seq} for goal {event.goal_id!r}, expected {expected}",
                    seq=event.seq,
                )
            self.store.append(event, payload)
            self._last_seq[event.goal_id] = event.seq

    def list_events(self, goal_id: str, outcome: str | None = None) -> list[ProcessEvent]:
        self.goal(goal_id)
        events = self.store.events_for(goal_id)
        if outcome is not None:
            events = [e for e in events if e.outcome == outcome]
        return events

    def all_events(self) -> list[ProcessEvent]:
        events: list[ProcessEvent] = []
        for goal_id in self.goal_ids():
            events.extend(self.store.events_for(goal_id))
        return events

    # -- replay ----------------------------------------------------------------

    def replay(self, goal_id: str) -> ReplayResult:
        """Rebuild the goal's state purely from its event log."""
        record = self.goal(goal_id)
        automaton, registry = self._domains[record.domain]
        events = self.store.events_for(goal_id)
        return replay_events(
            goal_id=goal_id,
            domain=record.domain,
            automaton=automaton,
            registry=registry,
            events=events,
            created_at=record.created_at,
            payload_lookup=self.store.payload_for,
        )

    def write_snapshots(self) -> None:
        if not isinstance(self.store, FileEventStore):
            return
        for goal_id in self.goal_ids():
            record = self.goal(goal_id)
            self.store.write_snapshot(
                record, self._contexts[goal_id].business_state, self._last_seq[goal_id]
            )


def replay_events(
    goal_id: str,
    domain: str,
    automaton: WorkflowAutomaton,
    registry: SkillRegistry,
    events: Iterable[ProcessEvent],
    created_at: float = 0.0,
    payload_lookup=None,
) -> ReplayResult:
    """Fold an event log into a reconstructed goal record and business state.

    Only SUCCESS events move state: the stage follows ``stage_after`` and
    business flags are re-derived from the skill's declarative postcondition
    effects.  Integrity violations (seq gap, broken stage chain, digest
    mismatch where payloads are retained) name the first bad seq.
    """
    stage = automaton.initial
    ctx = DispatchContext(goal_id=goal_id)
    last_seq = 0
    for event in events:
        if event.seq != last_seq + 1:
            raise IntegrityFault(
                f"seq gap in goal {goal_id!r}: got {event.seq}, expected {last_seq + 1}",
                seq=event.seq,
            )
        if event.stage_before != stage:
            raise IntegrityFault(
                f"stage chain broken at seq {event.seq}: log says {event.stage_before!r}, "
                f"replay says {stage!r}",
                seq=event.seq,
            )
        if event.outcome != "SUCCESS" and event.stage_after != event.stage_before:
            raise IntegrityFault(
                f"blocked event at seq {event.seq} changes stage", seq=event.seq
            )
        if event.outcome == "SUCCESS" and event.sub_reason != "execution_error":
            if event.skill_id is not None:
                skill = registry.get(event.skill_id)
                if skill is None:
                    raise IntegrityFault(
                        f"seq {event.seq} references unknown skill {event.skill_id!r}",
                        seq=event.seq,
                    )
                payload = payload_lookup(goal_id, event.seq) if payload_lookup else None
                if payload is not None and event.payload_digest is not None:
                    if payload_digest(payload) != event.payload_digest:
                        raise IntegrityFault(
                            f"payload digest mismatch at seq {event.seq}", seq=event.seq
                        )
                ctx = apply_effects(skill, ctx, event.payload_digest or "")
            stage = event.stage_after
        last_seq = event.seq

    record = GoalRecord(
        goal_id=goal_id,
        domain=domain,
        current_stage=stage,
        created_at=created_at,
        status="closed" if stage in automaton.terminal_stages() else "active",
    )
    return ReplayResult(record=record, business_state=ctx.business_state, last_seq=last_seq)
