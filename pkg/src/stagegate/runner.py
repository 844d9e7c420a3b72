"""Suite execution harness shared by the CLI, the evaluator, and tests."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .dispatcher import FULL, DispatchDeps, DispatchResult, DispatchToggles, dispatch
from .memory import FileEventStore, GoalManager, InMemoryEventStore, ProcessEvent
from .scenarios import DomainBundle, LabeledMessage, Scenario


@dataclass(frozen=True)
class StepRecord:
    """One dispatched message joined with its scenario coordinates."""

    scenario_id: str
    turn_index: int
    track: int
    goal_id: str
    message: LabeledMessage
    result: DispatchResult

    @property
    def event(self) -> ProcessEvent | None:
        return self.result.event

    @property
    def outcome(self) -> str:
        return self.result.outcome


@dataclass
class RunResult:
    domain: str
    toggles: DispatchToggles
    seed: int
    scenarios: list[Scenario]
    steps: list[StepRecord]
    manager: GoalManager
    goal_map: dict[str, dict[int, str]]

    def events(self) -> list[ProcessEvent]:
        return [s.event for s in self.steps if s.event is not None]

    def labels(self) -> list[LabeledMessage]:
        return [m for scenario in self.scenarios for m in scenario.messages]


def goal_id_for(scenario: Scenario, track: int) -> str:
    return f"{scenario.scenario_id}-t{track}"


def run_suite(
    bundle: DomainBundle,
    scenarios: Sequence[Scenario],
    toggles: DispatchToggles = FULL,
    seed: int = 0,
    store: InMemoryEventStore | FileEventStore | None = None,
    parallel: int = 1,
    fail_ids: Sequence[str] = (),
) -> RunResult:
    """Dispatch every scenario of a suite against a fresh goal per track.

    Messages within a scenario run in authored turn order (that order is the
    deterministic interleaving schedule for concurrent scenarios); distinct
    scenarios may run in parallel.  Results come back in suite order either
    way, so artifacts are reproducible.
    """
    manager = GoalManager(store=store)
    manager.add_domain(bundle.name, bundle.automaton, bundle.registry)
    executor = bundle.build_executor(fail_ids=fail_ids)
    deps = DispatchDeps(
        automaton=bundle.automaton,
        registry=bundle.registry,
        table=bundle.table,
        manager=manager,
        executor=executor,
        fallback=bundle.fallback,
    )

    goal_map: dict[str, dict[int, str]] = {}
    for scenario in scenarios:
        goal_map[scenario.scenario_id] = {}
        for track in scenario.tracks():
            gid = goal_id_for(scenario, track)
            manager.create_goal(bundle.name, goal_id=gid)
            goal_map[scenario.scenario_id][track] = gid

    def run_one(scenario: Scenario) -> list[StepRecord]:
        records = []
        for msg in scenario.messages:
            gid = goal_map[scenario.scenario_id][msg.track]
            result = dispatch(msg.text, gid, deps, toggles)
            records.append(
                StepRecord(
                    scenario_id=scenario.scenario_id,
                    turn_index=msg.turn_index,
                    track=msg.track,
                    goal_id=gid,
                    message=msg,
                    result=result,
                )
            )
        return records

    steps: list[StepRecord] = []
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            for records in pool.map(run_one, scenarios):
                steps.extend(records)
    else:
        for scenario in scenarios:
            steps.extend(run_one(scenario))

    manager.write_snapshots()
    return RunResult(
        domain=bundle.name,
        toggles=toggles,
        seed=seed,
        scenarios=list(scenarios),
        steps=steps,
        manager=manager,
        goal_map=goal_map,
    )
