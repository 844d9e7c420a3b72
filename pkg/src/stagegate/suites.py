"""Authored domain configs and labeled suites shipped with the package.

The hiring domain runs a six-stage workflow; eight service domains run
two-stage search-then-act workflows.  Suites are generated deterministically
from templates, labeled by the forward simulator, and self-checked against
the authored structure (message totals, outcome budget, label counts)
before they are ever written, so the shipped JSON cannot drift from the
documented shape.

Authored structure of the hiring suite: 185 scenarios / 882 messages
(50 normal, 25 illegal, 25 rollback, 25 multi, 30 abort, 30 concurrent),
with 16 stage-gate blocks, 6 precondition blocks, and 3 permitted-but-
illegal query turns.  The service suites total 960 dialogues / 1,734 turns
with 160 injected one-turn attacks and 41 latent stage-skips (38 in
Hotels_1, 3 in Music_1).
"""

from __future__ import annotations

import random
from pathlib import Path
from typing import Any, Mapping, Sequence

from .errors import ConfigError
from .scenarios import (
    DomainBundle,
    LabeledMessage,
    Scenario,
    bundle_from_dicts,
    expected_final_stages,
    label_scenario,
    simulate_scenario,
)

DATA_DIR = Path(__file__).parent / "data"

HR_DOMAIN = "hr"
SGD_DOMAINS = (
    "Banks_1",
    "Hotels_1",
    "RentalCars_1",
    "Events_1",
    "Buses_1",
    "Homes_1",
    "Media_2",
    "Music_1",
)

ALL_STAGES = ["init", "src", "int", "off", "onb", "close"]


# -- hiring domain -------------------------------------------------------------


def hr_domain_dicts() -> dict[str, Any]:
    """Config dicts for the six-stage hiring workflow."""
    automaton = {
        "stages": ALL_STAGES,
        "initial": "init",
        "transitions": [
            ["init", "src"],
            ["src", "int"],
            ["int", "off"],
            ["off", "onb"],
            ["onb", "close"],
            # rollback edges
            ["int", "src"],
            ["off", "int"],
            # early termination from every non-terminal stage
            ["init", "close"],
            ["src", "close"],
            ["int", "close"],
            ["off", "close"],
        ],
        "intents": [
            "create_demand",
            "pull_candidates",
            "screen_resume",
            "compare_candidates",
            "schedule_interview",
            "generate_questions",
            "record_feedback",
            "evaluate_candidate",
            "issue_offer",
            "onboard_candidate",
            "reopen_sourcing",
            "reopen_interview",
            "close_process",
            "get_job_list",
            "get_applicant_list",
            "query_status",
            "ask_missing",
        ],
        "binding": {
            "create_demand": ["init"],
            "pull_candidates": ["init", "src"],
            "screen_resume": ["src"],
            "compare_candidates": ["src"],
            "schedule_interview": ["src", "int"],
            "generate_questions": ["int"],
            "record_feedback": ["int"],
            "evaluate_candidate": ["int"],
            "issue_offer": ["int", "off"],
            "onboard_candidate": ["off", "onb"],
            "reopen_sourcing": ["int"],
            "reopen_interview": ["off"],
            "close_process": ALL_STAGES,
            "get_job_list": ALL_STAGES,
            "get_applicant_list": ALL_STAGES,
            "query_status": ALL_STAGES,
            "ask_missing": ALL_STAGES,
        },
        "stage_map": {
            "create_demand": "init",
            "pull_candidates": "src",
            "screen_resume": "src",
            "compare_candidates": "src",
            "schedule_interview": "int",
            "generate_questions": "int",
            "record_feedback": "int",
            "evaluate_candidate": "int",
            "issue_offer": "off",
            "onboard_candidate": "onb",
            "reopen_sourcing": "src",
            "reopen_interview": "int",
            "close_process": "close",
            "get_job_list": None,
            "get_applicant_list": None,
            "query_status": None,
            "ask_missing": None,
        },
    }

    skills = [
        # Atomic queries, universally available, no guards.
        {"id": "get_job_list", "intent": "get_job_list", "level": "L0", "stages": "*",
         "pre": [], "post": [], "risk": "read_only", "disclosure": "routing"},
        {"id": "get_applicant_list", "intent": "get_applicant_list", "level": "L0", "stages": "*",
         "pre": [], "post": [], "risk": "read_only", "disclosure": "routing"},
        {"id": "get_process_status", "intent": "query_status", "level": "L0", "stages": "*",
         "pre": [], "post": [], "risk": "read_only", "disclosure": "routing"},
        # Composite operations with stage and precondition constraints.
        {"id": "create_demand", "intent": "create_demand", "level": "L1", "stages": ["init"],
         "pre": [], "post": [{"op": "set", "field": "position_exists", "value": True}],
         "risk": "write", "disclosure": "bound"},
        {"id": "pull_parse", "intent": "pull_candidates", "level": "L1", "stages": ["init", "src"],
         "pre": ["position_exists"],
         "post": [{"op": "set", "field": "candidates_pulled", "value": True},
                  {"op": "set_from_result", "field": "candidates_ref"}],
         "risk": "write", "disclosure": "bound"},
        {"id": "screen", "intent": "screen_resume", "level": "L1", "stages": ["src"],
         "pre": ["position_exists", "candidates_pulled"],
         "post": [{"op": "set", "field": "candidates_screened", "value": True}],
         "risk": "write", "disclosure": "bound"},
        {"id": "compare", "intent": "compare_candidates", "level": "L1", "stages": ["src"],
         "pre": ["position_exists", "candidates_pulled"], "post": [],
         "risk": "read_only", "disclosure": "bound"},
        {"id": "schedule_interview", "intent": "schedule_interview", "level": "L1",
         "stages": ["src", "int"],
         "pre": ["position_exists", "candidates_screened"],
         "post": [{"op": "set", "field": "interview_scheduled", "value": True}],
         "risk": "external_notify", "disclosure": "bound"},
        {"id": "generate_questions", "intent": "generate_questions", "level": "L1",
         "stages": ["int"], "pre": ["position_exists"],
         "post": [{"op": "set", "field": "questions_generated", "value": True}],
         "risk": "content", "disclosure": "bound"},
        {"id": "record_feedback", "intent": "record_feedback", "level": "L1", "stages": ["int"],
         "pre": ["interview_scheduled"],
         "post": [{"op": "set", "field": "feedback_recorded", "value": True}],
         "risk": "write", "disclosure": "bound"},
        {"id": "evaluate", "intent": "evaluate_candidate", "level": "L1", "stages": ["int"],
         "pre": ["interview_scheduled"],
         "post": [{"op": "set", "field": "evaluation_done", "value": True}],
         "risk": "write", "disclosure": "bound"},
        {"id": "issue_offer", "intent": "issue_offer", "level": "L1", "stages": ["int", "off"],
         "pre": ["evaluation_done"],
         "post": [{"op": "set", "field": "offer_issued", "value": True}],
         "risk": "commitment", "disclosure": "bound"},
        {"id": "onboard", "intent": "onboard_candidate", "level": "L1", "stages": ["off", "onb"],
         "pre": ["offer_issued"],
         "post": [{"op": "set", "field": "onboarded", "value": True}],
         "risk": "write", "disclosure": "bound"},
        {"id": "reopen_sourcing", "intent": "reopen_sourcing", "level": "L1", "stages": ["int"],
         "pre": [],
         "post": [{"op": "set", "field": "candidates_pulled", "value": False},
                  {"op": "set", "field": "candidates_screened", "value": False}],
         "risk": "rollback", "disclosure": "bound"},
        {"id": "reopen_interview", "intent": "reopen_interview", "level": "L1", "stages": ["off"],
         "pre": [],
         "post": [{"op": "set", "field": "interview_scheduled", "value": False},
                  {"op": "set", "field": "evaluation_done", "value": False}],
         "risk": "rollback", "disclosure": "bound"},
        # Policy-level fallbacks.
        {"id": "close_process", "intent": "close_process", "level": "L2", "stages": "*",
         "pre": [], "post": [{"op": "set", "field": "process_closed", "value": True}],
         "risk": "terminal", "disclosure": "bound"},
        {"id": "ask_missing", "intent": "ask_missing", "level": "L2", "stages": "*",
         "pre": [], "post": [], "risk": "clarify", "disclosure": "routing"},
    ]

    patterns = [
        {"intent": "create_demand", "priority": 0, "patterns": [
            "create a hiring demand", "create demand", "open a new position",
            "create a new requisition", "start a hiring process"]},
        {"intent": "pull_candidates", "priority": 0, "patterns": [
            "pull candidates", "pull and parse resumes",
            "source candidates from the talent pool", "fetch candidates"]},
        {"intent": "screen_resume", "priority": 0, "patterns": [
            "screen resumes", "screen the resumes", "screen candidates",
            "re-screen resumes", "rescreen the pipeline"]},
        {"intent": "compare_candidates", "priority": 0, "patterns": [
            "compare candidates", "compare the candidates", "rank the shortlist"]},
        {"intent": "schedule_interview", "priority": 0, "patterns": [
            "schedule interview", "schedule the interview", "invite to interview",
            "invite the candidate to interview", "arrange the interview loop"]},
        {"intent": "generate_questions", "priority": 0, "patterns": [
            "generate test questions", "generate interview questions", "prepare question bank"]},
        {"intent": "record_feedback", "priority": 0, "patterns": [
            "interview feedback", "record interview feedback", "submit interviewer feedback"]},
        {"intent": "evaluate_candidate", "priority": 0, "patterns": [
            "evaluate candidate", "evaluate the candidates", "aggregate the evaluations"]},
        {"intent": "issue_offer", "priority": 0, "patterns": [
            "issue offer", "issue the offer", "send the offer letter", "make an offer"]},
        {"intent": "onboard_candidate", "priority": 0, "patterns": [
            "start onboarding", "onboard the new hire", "begin onboarding"]},
        {"intent": "reopen_sourcing", "priority": 0, "patterns": [
            "reopen sourcing", "go back to sourcing", "restart sourcing"]},
        {"intent": "reopen_interview", "priority": 0, "patterns": [
            "reopen the interview round", "back to interview stage", "redo the interviews"]},
        {"intent": "close_process", "priority": 0, "patterns": [
            "close the process", "close the workflow", "cancel the process",
            "abort the workflow", "terminate this process", "cancel this hiring process"]},
        {"intent": "get_job_list", "priority": 0, "patterns": [
            "show the job list", "show me the job list", "list open jobs",
            "get job list", "pull up the job list"]},
        {"intent": "get_applicant_list", "priority": 0, "patterns": [
            "show applicants", "list the applicants", "get applicant list"]},
        {"intent": "query_status", "priority": 0, "patterns": [
            "where are we in the process", "show process status", "status update please"]},
        {"intent": "ask_missing", "priority": 0, "patterns": [
            "help", "what do you need from me", "what information is missing"]},
    ]

    job_list = [
        {"id": f"P{i:04d}", "title": title, "department": dept}
        for i, (title, dept) in enumerate(
            [
                (f"{level} {role}", dept)
                for role, dept in (
                    ("Backend Engineer", "Platform"),
                    ("Data Analyst", "Analytics"),
                    ("Account Manager", "Sales"),
                    ("QA Engineer", "Quality"),
                    ("Product Designer", "Design"),
                    ("Recruiter", "People"),
                    ("Payroll Specialist", "Finance"),
                    ("Support Agent", "Support"),
                )
                for level in ("Junior", "Mid-level", "Senior", "Staff", "Principal", "Lead")
            ],
            start=1,
        )
    ]
    assert len(job_list) == 48

    fixtures = {
        "get_job_list": {"positions": job_list},
        "get_applicant_list": {"applicants": [f"A{i:03d}" for i in range(1, 13)]},
        "get_process_status": {"status": "ok"},
        "create_demand": {"position_id": "P0001", "created": True},
        "pull_parse": {"candidates": [f"C{i:03d}" for i in range(1, 9)], "parsed": 8},
        "screen": {"passed": 5, "rejected": 3},
        "compare": {"ranking": ["C001", "C004", "C002"]},
        "schedule_interview": {"scheduled": ["C001", "C004"], "slots": 2},
        "generate_questions": {"questions": [f"Q{i}" for i in range(1, 6)]},
        "record_feedback": {"recorded": True},
        "evaluate": {"recommend": "C001", "score": 4.6},
        "issue_offer": {"offer_id": "O-1", "sent": True},
        "onboard": {"onboarding_id": "ON-1"},
        "close_process": {"closed": True},
        "ask_missing": {"prompt": "please provide the missing details"},
        "reopen_sourcing": {"reopened": "sourcing"},
        "reopen_interview": {"reopened": "interview"},
    }

    return {"automaton": automaton, "skills": skills, "patterns": patterns, "fixtures": fixtures}


def hr_bundle() -> DomainBundle:
    return bundle_from_dicts(HR_DOMAIN, hr_domain_dicts())


# Canonical phrasing per intent (first pattern), with alternates for variety.
_HR_PHRASES = {
    "create_demand": ["create a hiring demand", "open a new position", "start a hiring process"],
    "pull_candidates": ["pull candidates", "source candidates from the talent pool", "fetch candidates"],
    "screen_resume": ["screen resumes", "screen the resumes", "screen candidates"],
    "compare_candidates": ["compare candidates", "rank the shortlist"],
    "schedule_interview": ["schedule interview", "schedule the interview", "arrange the interview loop"],
    "generate_questions": ["generate test questions", "generate interview questions"],
    "record_feedback": ["interview feedback", "record interview feedback"],
    "evaluate_candidate": ["evaluate candidate", "evaluate the candidates", "aggregate the evaluations"],
    "issue_offer": ["issue offer", "send the offer letter", "make an offer"],
    "onboard_candidate": ["start onboarding", "onboard the new hire", "begin onboarding"],
    "reopen_sourcing": ["reopen sourcing", "go back to sourcing"],
    "reopen_interview": ["reopen the interview round", "redo the interviews"],
    "close_process": ["close the process", "close the workflow", "cancel the process"],
    "get_job_list": ["show the job list", "list open jobs"],
    "get_applicant_list": ["show applicants", "list the applicants"],
    "query_status": ["show process status", "where are we in the process"],
    "ask_missing": ["help", "what information is missing"],
}

_FLOW = (
    "create_demand",
    "pull_candidates",
    "screen_resume",
    "schedule_interview",
    "evaluate_candidate",
    "issue_offer",
    "onboard_candidate",
    "close_process",
)

# Illegal-type templates.  Each entry: (kind, turns) where a turn is either
# an intent name (legal flow step), ("IT", text) for a stage-gate violation,
# ("PF", intent) for a precondition violation, or ("FN", text, label_intent)
# for a permitted-but-illegal query (broad-stage skill, stage-specific intent).
_HR_ILLEGAL_TEMPLATES: list[list[Any]] = [
    # Stage-gate violations fired at init (case-table style one-liners).
    [("IT", "schedule interview"), "create_demand", "close_process"],
    [("IT", "interview feedback"), "create_demand", "close_process"],
    [("IT", "generate test questions"), "create_demand", "close_process"],
    [("IT", "invite to interview"), "create_demand", "close_process"],
    [("IT", "evaluate candidate"), "create_demand", "close_process"],
    [("IT", "issue offer"), "create_demand", "close_process"],
    [("IT", "start onboarding"), "create_demand", "close_process"],
    [("IT", "screen resumes"), "create_demand", "close_process"],
    [("IT", "submit interviewer feedback"), "create_demand", "close_process"],
    [("IT", "compare candidates"), "create_demand", "close_process"],
    # Stage-gate violations mid-flow at src.
    ["create_demand", "pull_candidates", ("IT", "record interview feedback"), "close_process"],
    ["create_demand", "pull_candidates", ("IT", "begin onboarding"), "close_process"],
    # Re-screen attempts after the offer went out.
    ["create_demand", "pull_candidates", "screen_resume", "schedule_interview",
     "evaluate_candidate", "issue_offer", ("IT", "re-screen resumes"), "close_process"],
    ["create_demand", "pull_candidates", "screen_resume", "schedule_interview",
     "evaluate_candidate", "issue_offer", ("IT", "rescreen the pipeline"), "close_process"],
    # Out-of-stage pulls during the interview loop; under ablation these
    # execute and derail the remaining turns.
    ["create_demand", "pull_candidates", "screen_resume", "schedule_interview",
     "evaluate_candidate", ("IT", "pull candidates"), "issue_offer",
     "onboard_candidate", "close_process"],
    ["create_demand", "pull_candidates", "screen_resume", "schedule_interview",
     "evaluate_candidate", ("IT", "fetch candidates"), "issue_offer",
     "onboard_candidate", "close_process"],
    # Precondition violations (stage-legal, data not ready).
    [("PF", "pull_candidates"), "create_demand", "close_process"],
    ["create_demand", "pull_candidates", ("PF", "schedule_interview"),
     "screen_resume", "close_process"],
    ["create_demand", "pull_candidates", "screen_resume", "schedule_interview",
     ("PF", "issue_offer"), "close_process"],
    ["create_demand", "pull_candidates", "screen_resume", "schedule_interview",
     "reopen_sourcing", ("PF", "compare_candidates"), "close_process"],
    ["create_demand", "pull_candidates", "screen_resume", "schedule_interview",
     "evaluate_candidate", "issue_offer", "reopen_interview",
     ("PF", "record_feedback"), "close_process"],
    ["create_demand", "pull_candidates", "screen_resume", "schedule_interview",
     "evaluate_candidate", "issue_offer", "reopen_interview",
     ("PF", "evaluate_candidate"), "close_process"],
    # Broad-stage queries carrying a stage-specific intent: permitted by the
    # skill's stage set, illegal under the annotation.
    [("FN", "pull up the job list so we can start screening", "screen_resume"),
     "create_demand", "pull_candidates", "close_process"],
    [("FN", "show me the job list for the screening round", "screen_resume"),
     "create_demand", "pull_candidates", "close_process"],
    [("FN", "list the applicants we should compare", "compare_candidates"),
     "create_demand", "pull_candidates", "close_process"],
]

_HR_ROLLBACK_SHORT = ["create_demand", "pull_candidates", "screen_resume",
                      "schedule_interview", "reopen_sourcing"]
_HR_ROLLBACK_RESOURCE = ["create_demand", "pull_candidates", "screen_resume",
                         "schedule_interview", "reopen_sourcing", "pull_candidates",
                         "close_process"]
_HR_ROLLBACK_OFFER = ["create_demand", "pull_candidates", "screen_resume",
                      "schedule_interview", "evaluate_candidate", "issue_offer",
                      "reopen_interview"]
_HR_MULTI_SHORT = ["create_demand", "pull_candidates", "compare_candidates"]
_HR_MULTI_FULL = ["create_demand", "pull_candidates", "screen_resume", "compare_candidates"]


def _phrase(rng: random.Random, intent: str) -> str:
    options = _HR_PHRASES[intent]
    return options[rng.randrange(len(options))]


def _hr_scenario(
    bundle: DomainBundle,
    rng: random.Random,
    scenario_id: str,
    stype: str,
    turns: Sequence[Any],
) -> Scenario:
    messages = []
    for position, turn in enumerate(turns):
        label_intent = None
        if isinstance(turn, tuple):
            if turn[0] == "IT":
                text = turn[1]
            elif turn[0] == "PF":
                text = _phrase(rng, turn[1])
            else:  # FN
                text = turn[1]
                label_intent = turn[2]
        else:
            text = _phrase(rng, turn)
        messages.append(
            LabeledMessage(
                text=text,
                expected_legal=True,  # placeholder, relabeled below
                scenario_id=scenario_id,
                turn_index=position,
                label_intent=label_intent,
            )
        )
    scenario = Scenario(
        scenario_id=scenario_id,
        domain=bundle.name,
        type=stype,
        messages=tuple(messages),
        expected_final_stage={0: bundle.automaton.initial},
    )
    scenario = label_scenario(bundle, scenario)
    finals = expected_final_stages(bundle, scenario)
    return Scenario(
        scenario_id=scenario.scenario_id,
        domain=scenario.domain,
        type=scenario.type,
        messages=scenario.messages,
        expected_final_stage=finals,
    )


def _hr_concurrent_scenario(bundle: DomainBundle, rng: random.Random, scenario_id: str) -> Scenario:
    plan = [(0, "create_demand"), (1, "create_demand"), (0, "close_process")]
    messages = []
    for position, (track, intent) in enumerate(plan):
        messages.append(
            LabeledMessage(
                text=_phrase(rng, intent),
                expected_legal=True,
                scenario_id=scenario_id,
                turn_index=position,
                track=track,
            )
        )
    scenario = Scenario(
        scenario_id=scenario_id,
        domain=bundle.name,
        type="concurrent",
        messages=tuple(messages),
        expected_final_stage={0: "init", 1: "init"},
    )
    scenario = label_scenario(bundle, scenario)
    finals = expected_final_stages(bundle, scenario)
    return Scenario(
        scenario_id=scenario.scenario_id,
        domain=scenario.domain,
        type=scenario.type,
        messages=scenario.messages,
        expected_final_stage=finals,
    )


def build_hr_suite(bundle: DomainBundle | None = None, seed: int = 1207) -> list[Scenario]:
    """The 185-scenario / 882-message hiring suite."""
    bundle = bundle or hr_bundle()
    rng = random.Random(seed)
    scenarios: list[Scenario] = []

    for i in range(50):
        scenarios.append(_hr_scenario(bundle, rng, f"normal-{i + 1:03d}", "normal", _FLOW))

    for i, template in enumerate(_HR_ILLEGAL_TEMPLATES):
        scenarios.append(_hr_scenario(bundle, rng, f"illegal-{i + 1:03d}", "illegal", template))

    rollback_templates = (
        [_HR_ROLLBACK_SHORT] * 12 + [_HR_ROLLBACK_RESOURCE] * 7 + [_HR_ROLLBACK_OFFER] * 6
    )
    for i, template in enumerate(rollback_templates):
        scenarios.append(_hr_scenario(bundle, rng, f"rollback-{i + 1:03d}", "rollback", template))

    multi_templates = [_HR_MULTI_SHORT] * 12 + [_HR_MULTI_FULL] * 13
    for i, template in enumerate(multi_templates):
        scenarios.append(_hr_scenario(bundle, rng, f"multi-{i + 1:03d}", "multi", template))

    for i in range(30):
        scenarios.append(_hr_scenario(bundle, rng, f"abort-{i + 1:03d}", "abort", ["close_process"]))

    for i in range(30):
        scenarios.append(_hr_concurrent_scenario(bundle, rng, f"concurrent-{i + 1:03d}"))

    _check_hr_suite(bundle, scenarios)
    return scenarios


def _check_hr_suite(bundle: DomainBundle, scenarios: Sequence[Scenario]) -> None:
    """Structural self-check; a failed assertion means the authoring drifted."""
    by_type: dict[str, int] = {}
    for s in scenarios:
        by_type[s.type] = by_type.get(s.type, 0) + 1
    expected_counts = {"normal": 50, "illegal": 25, "rollback": 25, "multi": 25,
                       "abort": 30, "concurrent": 30}
    if by_type != expected_counts:
        raise ConfigError(f"hiring suite category counts drifted: {by_type}")

    messages = sum(len(s.messages) for s in scenarios)
    if messages != 882:
        raise ConfigError(f"hiring suite must carry 882 messages, got {messages}")

    outcomes = {"SUCCESS": 0, "ILLEGAL_TRANSITION": 0, "PRECONDITION_FAIL": 0, "SKILL_NOT_FOUND": 0}
    illegal_labels = 0
    for scenario in scenarios:
        for step in simulate_scenario(bundle, scenario):
            outcomes[step.outcome] += 1
        illegal_labels += sum(1 for m in scenario.messages if not m.expected_legal)
    # The simulator predicts blocks for the three annotated query turns, so
    # it sees 19 illegal transitions where the dispatcher will block 16 and
    # permit 3 (the annotation uses the semantic intent, the router the text).
    if outcomes["ILLEGAL_TRANSITION"] != 19 or outcomes["PRECONDITION_FAIL"] != 6:
        raise ConfigError(f"hiring suite outcome budget drifted: {outcomes}")
    if illegal_labels != 25:
        raise ConfigError(f"hiring suite must label 25 messages illegal, got {illegal_labels}")


# -- service domains (two-stage search-then-act workflows) ------------------------


_SGD_SPEC: Mapping[str, Mapping[str, Any]] = {
    "Banks_1": {
        "stages": ["CheckBalance", "TransferMoney"],
        "search": ("check_balance", ["check my balance", "check balance", "show my account balance"]),
        "act": ("transfer_money", ["transfer money", "make a transfer", "send money to my savings"]),
        "shapes": [("triple", 100)],
    },
    "Hotels_1": {
        "stages": ["SearchHotel", "ReserveHotel"],
        "search": ("search_hotel", ["search hotels", "find hotels in the city", "search for a hotel"]),
        "act": ("reserve_hotel", ["reserve the hotel", "book the hotel room", "make a hotel reservation"]),
        "shapes": [("latent", 38), ("full", 62)],
    },
    "RentalCars_1": {
        "stages": ["GetCarsAvailable", "ReserveCar"],
        "search": ("get_cars_available", ["show available cars", "get available cars", "search rental cars"]),
        "act": ("reserve_car", ["reserve the car", "book the rental car"]),
        "shapes": [("full", 80), ("search_only", 20)],
    },
    "Events_1": {
        "stages": ["SearchEvent", "BuyTicket"],
        "search": ("search_event", ["search events", "find events this weekend"]),
        "act": ("buy_ticket", ["buy the ticket", "purchase event tickets"]),
        "shapes": [("full", 84), ("search_only", 16)],
    },
    "Buses_1": {
        "stages": ["SearchBus", "BuyTicket"],
        "search": ("search_bus", ["search buses", "find a bus route"]),
        "act": ("buy_ticket", ["buy the bus ticket", "purchase the bus fare"]),
        "shapes": [("full", 53), ("search_only", 47)],
    },
    "Homes_1": {
        "stages": ["SearchHome", "ReserveHome"],
        "search": ("search_home", ["search homes", "find apartments to visit"]),
        "act": ("reserve_home", ["schedule the home visit", "reserve the apartment viewing"]),
        "shapes": [("full", 100)],
    },
    "Media_2": {
        "stages": ["SearchMedia", "PlayMedia"],
        "search": ("search_media", ["search movies", "find a movie to watch"]),
        "act": ("play_media", ["play the movie", "start playback"]),
        "shapes": [("full", 98), ("search_only", 2)],
    },
    "Music_1": {
        "stages": ["SearchTrack", "PlayTrack"],
        "search": ("search_track", ["search songs", "find a track"]),
        "act": ("play_track", ["play the song", "play the track"]),
        "shapes": [("latent", 3), ("full", 97)],
    },
}

SGD_NORMAL_TURNS = {
    "Banks_1": 300, "Hotels_1": 162, "RentalCars_1": 180, "Events_1": 184,
    "Buses_1": 153, "Homes_1": 200, "Media_2": 198, "Music_1": 197,
}


def sgd_domain_dicts(domain: str) -> dict[str, Any]:
    spec = _SGD_SPEC[domain]
    stage_1, stage_2 = spec["stages"]
    search_intent, search_texts = spec["search"]
    act_intent, act_texts = spec["act"]

    automaton = {
        "stages": [stage_1, stage_2],
        "initial": stage_1,
        "transitions": [[stage_1, stage_2]],
        "intents": [search_intent, act_intent],
        "binding": {search_intent: [stage_1, stage_2], act_intent: [stage_2]},
        "stage_map": {search_intent: stage_2, act_intent: stage_2},
    }
    skills = [
        {"id": search_intent, "intent": search_intent, "level": "L0", "stages": "*",
         "pre": [], "post": [], "risk": "read_only", "disclosure": "routing"},
        {"id": act_intent, "intent": act_intent, "level": "L1", "stages": [stage_2],
         "pre": [], "post": [{"op": "set", "field": "transaction_done", "value": True}],
         "risk": "commitment", "disclosure": "bound"},
    ]
    patterns = [
        {"intent": search_intent, "priority": 0, "patterns": list(search_texts)},
        {"intent": act_intent, "priority": 0, "patterns": list(act_texts)},
    ]
    fixtures = {
        search_intent: {"results": [f"{domain}-R{i}" for i in range(1, 4)]},
        act_intent: {"confirmation": f"{domain}-OK"},
    }
    return {"automaton": automaton, "skills": skills, "patterns": patterns, "fixtures": fixtures}


def sgd_bundle(domain: str) -> DomainBundle:
    return bundle_from_dicts(domain, sgd_domain_dicts(domain))


def build_sgd_suite(domain: str, bundle: DomainBundle | None = None, seed: int = 1207) -> list[Scenario]:
    """One service domain's 100 normal dialogues plus 20 injected attacks."""
    bundle = bundle or sgd_bundle(domain)
    spec = _SGD_SPEC[domain]
    rng = random.Random(f"{seed}:{domain}")  # str seeding is stable across processes
    search_intent, search_texts = spec["search"]
    act_intent, act_texts = spec["act"]

    def pick(texts: Sequence[str]) -> str:
        return texts[rng.randrange(len(texts))]

    shapes: list[str] = []
    for shape, count in spec["shapes"]:
        shapes.extend([shape] * count)
    rng.shuffle(shapes)

    scenarios: list[Scenario] = []
    for i, shape in enumerate(shapes):
        sid = f"{domain}-normal-{i + 1:03d}"
        if shape == "triple":
            texts = [pick(search_texts), pick(act_texts), pick(search_texts)]
        elif shape == "full":
            texts = [pick(search_texts), pick(act_texts)]
        elif shape == "search_only":
            texts = [pick(search_texts)]
        else:  # latent: the user acts without searching first
            texts = [pick(act_texts)]
        messages = tuple(
            LabeledMessage(text=text, expected_legal=True, scenario_id=sid, turn_index=j)
            for j, text in enumerate(texts)
        )
        scenario = Scenario(
            scenario_id=sid, domain=domain, type="normal",
            messages=messages, expected_final_stage={0: bundle.automaton.initial},
        )
        scenario = label_scenario(bundle, scenario)
        finals = expected_final_stages(bundle, scenario)
        scenarios.append(
            Scenario(scenario_id=sid, domain=domain, type="normal",
                     messages=scenario.messages, expected_final_stage=finals)
        )

    for i in range(20):
        sid = f"{domain}-illegal-{i + 1:03d}"
        messages = (
            LabeledMessage(
                text=pick(act_texts), expected_legal=False, scenario_id=sid, turn_index=0
            ),
        )
        scenarios.append(
            Scenario(
                scenario_id=sid, domain=domain, type="illegal",
                messages=messages,
                expected_final_stage={0: bundle.automaton.initial},
            )
        )

    total_turns = sum(len(s.messages) for s in scenarios)
    if total_turns != SGD_NORMAL_TURNS[domain] + 20:
        raise ConfigError(
            f"{domain}: authored turn total drifted "
            f"({total_turns} vs {SGD_NORMAL_TURNS[domain] + 20})"
        )
    return scenarios


# -- shipped data access ---------------------------------------------------------


def hr_domain_dir() -> Path:
    return DATA_DIR / HR_DOMAIN


def sgd_domain_dir(domain: str) -> Path:
    return DATA_DIR / "sgd" / domain


def hr_suite_path() -> Path:
    return DATA_DIR / "hr_suite.json"


def sgd_suite_path(domain: str) -> Path:
    return DATA_DIR / "sgd" / domain / "suite.json"
