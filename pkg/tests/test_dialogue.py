"""Guarded dialogue behavior.

The moderation texts are a published contract: warnings, the privacy
refusal, and the summary layout are asserted byte for byte.  The packaged
reference transcript is replayed through respond() at the end so any drift
in the full demo conversation fails here too.
"""

import json
from importlib import resources

import pytest

from cubetutor.cube import matches, parse_facelets, white_cross_goal
from cubetutor.dialogue import (
    CAPABILITIES_TEXT,
    ENCOURAGEMENT_TEXT,
    ONBOARDING_TEXT,
    REFUSAL_TEXT,
    SUMMARY_LEAD,
    WARNING_BASE,
    WARNING_REPEAT,
    WARNING_REPORT,
    DialogueError,
    DialogueServices,
    DialogueState,
    format_minutes,
    guard_leakage,
    respond,
    summarize_performance,
    update_strikes,
    warning_message,
)
from cubetutor.nlu import IntentLabel
from cubetutor.stores import JsonlStore, ProfileStore, TranscriptStore, UserProfile

from conftest import DEMO_FACELETS


def make_state(user: str = "alex") -> DialogueState:
    state = DialogueState.fresh("s1", user)
    state.cube = parse_facelets(DEMO_FACELETS)
    return state


# -- moderation primitives -------------------------------------------------------


def test_warning_tiers_are_exact():
    assert warning_message(1) == "Please do not use inappropriate language."
    assert warning_message(2) == (
        "Please do not use inappropriate language."
        " I have been designed to ignore such inputs when repeated."
    )
    assert warning_message(3) == (
        "Please do not use inappropriate language."
        " I have been designed to ignore such inputs when repeated."
        " I am also reporting our interaction for potential further action."
    )
    assert warning_message(2) == WARNING_BASE + WARNING_REPEAT
    assert warning_message(3) == WARNING_BASE + WARNING_REPEAT + WARNING_REPORT


def test_warning_tier_bounds():
    for tier in (0, 4, -1):
        with pytest.raises(DialogueError):
            warning_message(tier)


def test_update_strikes_monotonic_and_capped():
    state = make_state()
    assert update_strikes(state, False) == 0
    assert state.strike_count == 0
    tiers = [update_strikes(state, True) for _ in range(5)]
    assert tiers == [1, 2, 3, 3, 3]
    assert state.strike_count == 5
    assert update_strikes(state, False) == 0
    assert state.strike_count == 5


class ExplodingStore:
    """Any use at all fails the test."""

    def __getattr__(self, name):
        raise AssertionError(f"guard consulted the profile store ({name})")


def test_guard_refuses_without_touching_profiles():
    refusal = guard_leakage(
        IntentLabel("ask_other_user", target="john", metric="performance"),
        "alex",
        ExplodingStore(),
    )
    assert refusal == REFUSAL_TEXT
    assert guard_leakage(IntentLabel("smalltalk"), "alex", ExplodingStore()) is None


def test_refusal_text_is_exact():
    assert REFUSAL_TEXT == (
        "Any answer to your query will lead to release of private information"
        " of others. Hence, I am not able to answer at this time."
    )


# -- summary formatting ------------------------------------------------------------


def test_format_minutes():
    assert format_minutes(None) == "n/a"
    assert format_minutes(10) == "10 minutes"
    assert format_minutes(10.0) == "10 minutes"
    assert format_minutes(7.5) == "7.5 minutes"


def test_summarize_performance_three_lines():
    profile = UserProfile(
        username="alex", games_played=12, games_won=8, avg_game_minutes=10
    )
    assert summarize_performance(profile) == (
        "Total games played: 12\n"
        "Average time taken for a single game: 10 minutes\n"
        "Total games won: 8"
    )


# -- respond(): moderation path ------------------------------------------------------


def test_abuse_suppresses_content_and_escalates(fixture_services):
    state = make_state()
    first = respond(state, "Goddamn it, I cannot solve this stupid cube.", fixture_services)
    assert [r.kind for r in first] == ["warning"]
    assert first[0].text == warning_message(1)

    second = respond(state, "This is hell. I am sorry, my friend.", fixture_services)
    assert [r.text for r in second] == [warning_message(2)]
    assert state.strike_count == 2


def test_third_strike_files_a_report(fixture_services, tmp_path):
    fixture_services.reports = JsonlStore(tmp_path / "reports.jsonl")
    state = make_state()
    for text in ("this is hell", "goddamn cube", "you idiot"):
        responses = respond(state, text, fixture_services)
    assert responses[0].text == warning_message(3)
    reports = fixture_services.reports.load()
    assert len(reports) == 1
    report = reports[0]
    assert report["kind"] == "abuse-report"
    assert report["user"] == "alex"
    assert report["strike_count"] == 3
    assert report["teacher_visible"] is True
    assert report["matched"] == ["idiot"]


def test_encouragement_prepended_to_non_abusive_negative(fixture_services):
    state = make_state()
    responses = respond(state, "I feel hopeless, please continue.", fixture_services)
    assert responses[0].kind == "encouragement"
    assert responses[0].text == ENCOURAGEMENT_TEXT
    assert len(responses) > 1
    assert responses[1].kind == "answer"


def test_leakage_refusal_is_byte_exact(fixture_services):
    state = make_state()
    responses = respond(
        state,
        "Can you tell me how John has been doing with his cube solving?",
        fixture_services,
    )
    assert [r.kind for r in responses] == ["refusal"]
    assert responses[0].text == REFUSAL_TEXT


# -- respond(): content paths ---------------------------------------------------------


def test_teaching_flow_reaches_the_goal(fixture_services):
    state = make_state()
    opening = respond(
        state,
        "Ok. Can you teach me how to solve the white cross for this cube?",
        fixture_services,
    )
    assert len(opening) == 1
    assert opening[0].text.startswith("Yes. For the current configuration")
    assert state.active_goal == "white-cross"
    assert state.last_topic == "configuration"

    steps = respond(state, "Please continue teaching.", fixture_services)
    assert [r.kind for r in steps] == ["teaching-step", "teaching-step"]
    assert all(r.cube is not None for r in steps)
    assert matches(state.cube, white_cross_goal())
    assert matches(parse_facelets(steps[-1].cube), white_cross_goal())

    again = respond(state, "continue", fixture_services)
    assert "already solved" in again[0].text


def test_deny_after_configuration_starts_teaching(fixture_services):
    state = make_state()
    respond(state, "teach me the white cross", fixture_services)
    steps = respond(state, "no", fixture_services)
    assert steps[0].kind == "teaching-step"


def test_continue_without_goal_prompts_for_one(fixture_services):
    state = make_state()
    responses = respond(state, "please continue", fixture_services)
    assert responses == [
        type(responses[0])(
            "Ask me to teach you a goal first, for example the white cross.", "answer"
        )
    ]


def test_teach_unknown_goal_lists_teachables(fixture_services):
    state = make_state()
    responses = respond(state, "teach me the yellow corners", fixture_services)
    assert responses[0].text == "I can teach you: white-cross. Which would you like?"
    assert state.active_goal is None


def test_own_summary_is_byte_exact(fixture_services):
    state = make_state()
    responses = respond(
        state, "Ok. Can you please summarize my performance instead?", fixture_services
    )
    assert [r.kind for r in responses] == ["summary"]
    assert responses[0].text == (
        f"{SUMMARY_LEAD}\n"
        "Total games played: 12\n"
        "Average time taken for a single game: 10 minutes\n"
        "Total games won: 8"
    )


def test_summary_for_new_user_onboards(fixture_services, tmp_path):
    fixture_services.profiles = ProfileStore(tmp_path / "profiles")
    state = make_state("zoe")
    responses = respond(state, "summarize my performance", fixture_services)
    assert responses[0].text == ONBOARDING_TEXT


def test_misc_content_intents(fixture_services):
    state = make_state()
    assert respond(state, "yes", fixture_services)[0].text.startswith("Great.")
    assert respond(state, "please reset the cube", fixture_services)[0].text.startswith(
        "You can edit the virtual cube"
    )
    assert respond(state, "hello there", fixture_services)[0].text.startswith("Hello!")
    assert respond(state, "qwz blorp", fixture_services)[0].text == CAPABILITIES_TEXT


def test_affirm_after_configuration_invites_questions(fixture_services):
    state = make_state()
    respond(state, "teach me the white cross", fixture_services)
    responses = respond(state, "yes", fixture_services)
    assert responses[0].text == "Go ahead and ask your question."


# -- logging ----------------------------------------------------------------------------


def test_transcript_records_full_turns(fixture_services, tmp_path):
    store = TranscriptStore(tmp_path / "transcript.jsonl")
    fixture_services.transcripts = store
    state = make_state()
    respond(state, "this is hell", fixture_services)
    respond(state, "teach me the white cross", fixture_services)
    records = store.load()
    speakers = [r["speaker"] for r in records]
    assert speakers == ["user", "bot", "user", "bot"]
    for record in records:
        assert set(TranscriptStore.FIELDS) <= set(record)
        assert record["session"] == "s1"
    assert records[0]["sentiment"] == "negative"
    assert records[0]["strike_count"] == 1
    assert records[1]["text"] == warning_message(1)
    assert records[2]["intent"] == "teach_goal(white-cross)"


def test_respond_is_deterministic(fixture_services):
    def run() -> list[str]:
        state = make_state()
        texts = []
        for turn in (
            "teach me the white cross",
            "please continue teaching",
            "summarize my performance",
        ):
            texts += [r.text for r in respond(state, turn, fixture_services)]
        return texts

    assert run() == run()


# -- the packaged demo conversation, end to end ------------------------------------------


def test_demo_conversation_matches_packaged_transcript(fixture_services):
    ref = resources.files("cubetutor.data").joinpath("reference_transcript.jsonl")
    records = [json.loads(line)["record"] for line in ref.read_text().splitlines()]
    user_turns = [r["text"] for r in records if r["speaker"] == "user"]
    expected_bot = [r["text"] for r in records if r["speaker"] == "bot"]

    state = make_state()
    got = []
    for text in user_turns:
        got += [r.text for r in respond(state, text, fixture_services)]
    assert got == expected_bot
