from __future__ import annotations

import json

import pytest

from stagegate.errors import ConfigError, GenerationFault
from stagegate.runner import run_suite
from stagegate.scenarios import (
    LabeledMessage,
    Scenario,
    detect_latent,
    inject_illegal,
    load_domain,
    load_suite,
    simulate_scenario,
    suite_from_dict,
    suite_to_dict,
)
from stagegate.suites import (
    SGD_DOMAINS,
    SGD_NORMAL_TURNS,
    build_hr_suite,
    build_sgd_suite,
    hr_domain_dir,
    hr_suite_path,
    sgd_bundle,
    sgd_domain_dir,
    sgd_suite_path,
)


def test_all_shipped_bundles_load_clean():
    bundles = [load_domain(hr_domain_dir())]
    for domain in SGD_DOMAINS:
        bundles.append(load_domain(sgd_domain_dir(domain)))
    assert len(bundles) == 9
    names = {b.name for b in bundles}
    assert "hr" in names and "Hotels_1" in names


def test_hotels_bundle_is_two_stage_search_then_reserve():
    bundle = load_domain(sgd_domain_dir("Hotels_1"))
    assert bundle.automaton.stages == ("SearchHotel", "ReserveHotel")
    assert bundle.automaton.initial == "SearchHotel"
    assert bundle.automaton.can_transition("SearchHotel", "ReserveHotel")


def test_bundle_with_unrouted_intent_fails_cross_validation(tmp_path):
    source = sgd_domain_dir("Banks_1")
    for name in ("automaton.json", "skills.json", "patterns.json", "fixtures.json"):
        (tmp_path / name).write_text((source / name).read_text())
    patterns = json.loads((tmp_path / "patterns.json").read_text())
    patterns = [p for p in patterns if p["intent"] != "transfer_money"]
    (tmp_path / "patterns.json").write_text(json.dumps(patterns))
    with pytest.raises(ConfigError, match="transfer_money"):
        load_domain(tmp_path)


def test_shipped_hr_suite_shape(hr_suite):
    assert len(hr_suite) == 185
    assert sum(len(s.messages) for s in hr_suite) == 882
    by_type = {}
    for s in hr_suite:
        by_type[s.type] = by_type.get(s.type, 0) + 1
    assert by_type == {
        "normal": 50, "illegal": 25, "rollback": 25, "multi": 25, "abort": 30, "concurrent": 30,
    }


def test_shipped_sgd_suites_shape():
    dialogues = 0
    turns = 0
    for domain in SGD_DOMAINS:
        bundle = load_domain(sgd_domain_dir(domain))
        suite = load_suite(sgd_suite_path(domain), bundle)
        assert sum(1 for s in suite if s.type == "normal") == 100
        assert sum(1 for s in suite if s.type == "illegal") == 20
        domain_turns = sum(len(s.messages) for s in suite)
        assert domain_turns == SGD_NORMAL_TURNS[domain] + 20
        dialogues += len(suite)
        turns += domain_turns
    assert dialogues == 960
    assert turns == 1734  # 1,574 normal-split turns plus 160 injected attacks


def test_turn_index_gap_is_schema_fault(hr_bundle):
    raw = {
        "domain": "hr",
        "scenarios": [
            {
                "scenario_id": "bad",
                "type": "normal",
                "expected_final_stage": "init",
                "messages": [
                    {"turn_index": 0, "text": "help", "expected_legal": True},
                    {"turn_index": 2, "text": "help", "expected_legal": True},
                ],
            }
        ],
    }
    with pytest.raises(ConfigError, match="turn_index"):
        suite_from_dict(raw, hr_bundle)


def test_illegal_type_requires_a_false_label(hr_bundle):
    raw = {
        "domain": "hr",
        "scenarios": [
            {
                "scenario_id": "bad",
                "type": "illegal",
                "expected_final_stage": "init",
                "messages": [{"turn_index": 0, "text": "help", "expected_legal": True}],
            }
        ],
    }
    with pytest.raises(ConfigError, match="illegal"):
        suite_from_dict(raw, hr_bundle)


def test_missing_expected_final_stage_is_fault(hr_bundle):
    raw = {
        "domain": "hr",
        "scenarios": [
            {
                "scenario_id": "bad",
                "type": "normal",
                "messages": [{"turn_index": 0, "text": "help", "expected_legal": True}],
            }
        ],
    }
    with pytest.raises(ConfigError, match="expected_final_stage"):
        suite_from_dict(raw, hr_bundle)


def test_suite_round_trip_is_semantically_identical(hr_bundle, hr_suite):
    as_dict = suite_to_dict("hr-governance-suite", "hr", hr_suite)
    again = suite_from_dict(as_dict, hr_bundle)
    assert again == hr_suite


def test_suite_builders_are_deterministic(hr_bundle):
    first = build_hr_suite(hr_bundle, seed=1207)
    second = build_hr_suite(hr_bundle, seed=1207)
    assert first == second
    shipped = load_suite(hr_suite_path(), hr_bundle)
    assert shipped == first


def test_sgd_builders_are_deterministic():
    bundle = sgd_bundle("Hotels_1")
    assert build_sgd_suite("Hotels_1", bundle) == build_sgd_suite("Hotels_1", bundle)


def test_shipped_sgd_suites_match_builders():
    for domain in SGD_DOMAINS:
        bundle = load_domain(sgd_domain_dir(domain))
        shipped = load_suite(sgd_suite_path(domain), bundle)
        assert shipped == build_sgd_suite(domain, bundle), domain


# -- forward simulation / labeling ------------------------------------------------


def test_labels_match_simulation_legality(hr_bundle, hr_suite):
    for scenario in hr_suite:
        steps = {s.turn_index: s for s in simulate_scenario(hr_bundle, scenario)}
        for message in scenario.messages:
            assert message.expected_legal == steps[message.turn_index].legal


def test_simulation_tracks_are_independent(hr_bundle, hr_suite):
    concurrent = next(s for s in hr_suite if s.type == "concurrent")
    steps = simulate_scenario(hr_bundle, concurrent)
    final = {}
    for step in steps:
        final[step.track] = step.stage_after
    assert final == dict(concurrent.expected_final_stage)


# -- injection ---------------------------------------------------------------------


def test_injection_is_deterministic_and_labeled_illegal():
    bundle = sgd_bundle("Banks_1")
    suite = build_sgd_suite("Banks_1", bundle)
    normal = next(s for s in suite if s.type == "normal")
    a = inject_illegal(normal, bundle, "stage_skip", seed=5)
    b = inject_illegal(normal, bundle, "stage_skip", seed=5)
    assert a == b
    assert a.type == "illegal"
    assert len(a.messages) == len(normal.messages) + 1
    assert sum(1 for m in a.messages if not m.expected_legal) >= 1
    assert [m.turn_index for m in a.messages] == list(range(len(a.messages)))


def test_premature_terminal_opens_with_the_blocked_action():
    bundle = sgd_bundle("Banks_1")
    suite = build_sgd_suite("Banks_1", bundle)
    normal = next(s for s in suite if s.type == "normal")
    variant = inject_illegal(normal, bundle, "premature_terminal", seed=9)
    first = variant.messages[0]
    assert not first.expected_legal
    steps = simulate_scenario(bundle, variant)
    assert steps[0].outcome == "ILLEGAL_TRANSITION"


def test_injected_messages_are_blocked_when_run():
    bundle = sgd_bundle("Events_1")
    suite = build_sgd_suite("Events_1", bundle)
    normals = [s for s in suite if s.type == "normal"][:10]
    variants = [inject_illegal(s, bundle, "stage_skip", seed=i) for i, s in enumerate(normals)]
    run = run_suite(bundle, variants)
    blocked_turns = {
        (s.scenario_id, s.turn_index) for s in run.steps if s.outcome == "ILLEGAL_TRANSITION"
    }
    for variant in variants:
        injected = [m for m in variant.messages if not m.expected_legal]
        for message in injected:
            assert (variant.scenario_id, message.turn_index) in blocked_turns


def test_generated_injections_blocked_on_all_domains():
    """20 generated variants per domain, every injected turn blocked: 160/160."""
    injected_total = injected_blocked = 0
    for domain in SGD_DOMAINS:
        bundle = sgd_bundle(domain)
        normals = [
            s for s in build_sgd_suite(domain, bundle)
            if s.type == "normal" and all(m.expected_legal for m in s.messages)
        ]
        variants = [
            inject_illegal(s, bundle, "stage_skip", seed=i) for i, s in enumerate(normals[:20])
        ]
        run = run_suite(bundle, variants)
        outcomes = {(s.scenario_id, s.turn_index): s.outcome for s in run.steps}
        for variant in variants:
            for message in variant.messages:
                if not message.expected_legal:
                    injected_total += 1
                    if outcomes[(variant.scenario_id, message.turn_index)] in (
                        "ILLEGAL_TRANSITION", "PRECONDITION_FAIL",
                    ):
                        injected_blocked += 1
    assert injected_total == 160
    assert injected_blocked == 160


def test_injection_requires_normal_scenario(hr_bundle, hr_suite):
    illegal = next(s for s in hr_suite if s.type == "illegal")
    with pytest.raises(GenerationFault):
        inject_illegal(illegal, hr_bundle, "stage_skip", seed=0)


def test_injection_fails_on_single_stage_domain():
    from stagegate.scenarios import bundle_from_dicts

    bundle = bundle_from_dicts(
        "flat",
        {
            "automaton": {
                "stages": ["only"],
                "initial": "only",
                "transitions": [],
                "intents": ["ping"],
                "binding": {"ping": ["only"]},
                "stage_map": {"ping": None},
            },
            "skills": [{"id": "ping", "intent": "ping", "level": "L0", "stages": "*",
                        "pre": [], "post": []}],
            "patterns": [{"intent": "ping", "patterns": ["ping"], "priority": 0}],
            "fixtures": {"ping": {"ok": True}},
        },
    )
    scenario = Scenario(
        scenario_id="s",
        domain="flat",
        type="normal",
        messages=(LabeledMessage("ping", True, "s", 0),),
        expected_final_stage={0: "only"},
    )
    with pytest.raises(GenerationFault):
        inject_illegal(scenario, bundle, "stage_skip", seed=0)


# -- latent detection -----------------------------------------------------------------


def test_convert_dialogues_from_schema_guided_form():
    from stagegate.scenarios import convert_dialogues

    bundle = sgd_bundle("Hotels_1")
    dialogues = [
        {
            "dialogue_id": "conv-001",
            "turns": [
                {"speaker": "USER", "utterance": "search hotels",
                 "frames": [{"state": {"active_intent": "FindHotel"}}]},
                {"speaker": "SYSTEM", "utterance": "found three options", "frames": []},
                {"speaker": "USER", "utterance": "reserve the hotel",
                 "frames": [{"state": {"active_intent": "ReserveHotel"}}]},
            ],
        },
        {
            "dialogue_id": "conv-002",
            "turns": [
                {"speaker": "USER", "utterance": "book the hotel room",
                 "frames": [{"state": {"active_intent": "ReserveHotel"}}]},
            ],
        },
    ]
    intent_map = {"FindHotel": "search_hotel", "ReserveHotel": "reserve_hotel"}
    scenarios = convert_dialogues(dialogues, bundle, intent_map)
    assert [s.scenario_id for s in scenarios] == ["conv-001", "conv-002"]
    first, second = scenarios
    assert len(first.messages) == 2  # SYSTEM turn dropped
    assert all(m.expected_legal for m in first.messages)
    assert first.expected_final_stage == {0: "ReserveHotel"}
    # the second dialogue reserves without searching: a latent stage-skip
    assert not second.messages[0].expected_legal
    assert second.expected_final_stage == {0: "SearchHotel"}
    run = run_suite(bundle, scenarios)
    assert detect_latent(run.steps, scenarios)[0].scenario_id == "conv-002"


def test_convert_dialogues_rejects_empty_user_turns():
    from stagegate.scenarios import convert_dialogues

    bundle = sgd_bundle("Hotels_1")
    with pytest.raises(ConfigError, match="no USER turns"):
        convert_dialogues(
            [{"dialogue_id": "x", "turns": [{"speaker": "SYSTEM", "utterance": "hi"}]}],
            bundle,
        )


def test_latent_detection_counts_equal_blocked_normal_events():
    bundle = load_domain(sgd_domain_dir("Hotels_1"))
    suite = load_suite(sgd_suite_path("Hotels_1"), bundle)
    run = run_suite(bundle, suite)
    latent = detect_latent(run.steps, suite)
    by_id = {s.scenario_id: s for s in suite}
    expected = [
        s for s in run.steps
        if by_id[s.scenario_id].type == "normal"
        and s.outcome in ("ILLEGAL_TRANSITION", "PRECONDITION_FAIL")
    ]
    assert len(latent) == len(expected) == 38
    assert all(v.domain == "Hotels_1" for v in latent)


def test_latent_detection_empty_when_no_stage_skips():
    bundle = load_domain(sgd_domain_dir("Homes_1"))
    suite = load_suite(sgd_suite_path("Homes_1"), bundle)
    run = run_suite(bundle, suite)
    assert detect_latent(run.steps, suite) == []
