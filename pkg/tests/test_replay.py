"""Transcript replay: the recorded conversation must be reproducible."""

import json

import pytest

from cubetutor.config import packaged_data
from cubetutor.replay import (
    ReplayError,
    fixture_services,
    format_diffs,
    replay_path,
    replay_records,
)
from cubetutor.stores import TranscriptStore

from conftest import DEMO_FACELETS

REFERENCE = packaged_data("reference_transcript.jsonl")


def reference_records() -> list[dict]:
    return TranscriptStore(REFERENCE).load()


def turn_record(speaker: str, text: str, session: str = "s1") -> dict:
    return {
        "timestamp": "1970-01-01T00:00:00Z",
        "session": session,
        "speaker": speaker,
        "text": text,
        "sentiment": None,
        "intent": None,
        "strike_count": 0,
    }


def header_record(text: str, session: str = "s1") -> dict:
    return turn_record("system", text, session)


# -- golden fixture -----------------------------------------------------------------


def test_reference_transcript_replays_with_zero_diff():
    report = replay_path(REFERENCE, services=fixture_services())
    assert report.ok
    assert report.turns == 7
    assert report.summary() == "replayed 7 turns, zero diff"


def test_reference_transcript_is_read_only(tmp_path):
    copy = tmp_path / "transcript.jsonl"
    copy.write_bytes(REFERENCE.read_bytes())
    before = copy.read_bytes()
    replay_path(copy, services=fixture_services())
    assert copy.read_bytes() == before


def test_replay_is_deterministic():
    records = reference_records()
    first = replay_records(records, services=fixture_services())
    second = replay_records(records, services=fixture_services())
    assert first.ok and second.ok
    assert first.turns == second.turns


# -- diffing ---------------------------------------------------------------------------


def test_tampered_bot_line_is_reported():
    records = reference_records()
    bot_indices = [i for i, r in enumerate(records) if r["speaker"] == "bot"]
    records[bot_indices[2]] = dict(
        records[bot_indices[2]], text="Something else entirely."
    )
    report = replay_records(records, services=fixture_services())
    assert not report.ok
    assert len(report.diffs) == 1
    diff = report.diffs[0]
    assert diff.turn == 3
    assert diff.expected != diff.actual
    assert "Something else entirely." in diff.expected

    rendered = format_diffs(report)
    assert "replayed 7 turns, 1 differ" in rendered
    assert "recorded:" in rendered and "replayed:" in rendered
    assert "turn 3" in rendered


def test_missing_bot_line_is_a_diff():
    records = reference_records()
    drop = next(i for i, r in enumerate(records) if r["speaker"] == "bot")
    del records[drop]
    report = replay_records(records, services=fixture_services())
    assert not report.ok
    assert report.diffs[0].turn == 1


# -- header handling ---------------------------------------------------------------------


def test_header_supplies_user_and_cube():
    records = [
        header_record(f"user=alex cube={DEMO_FACELETS}"),
        turn_record("user", "Can you tell me how John has been doing?"),
        turn_record(
            "bot",
            "Any answer to your query will lead to release of private information"
            " of others. Hence, I am not able to answer at this time.",
        ),
    ]
    assert replay_records(records, services=fixture_services()).ok


def test_arguments_override_header():
    records = [
        header_record("user=nobody"),
        turn_record("user", "summarize my performance"),
        turn_record(
            "bot",
            "Sure. Here is your summary.\n"
            "Total games played: 12\n"
            "Average time taken for a single game: 10 minutes\n"
            "Total games won: 8",
        ),
    ]
    # replayed as the onboarding-free demo user instead of the header's
    assert replay_records(records, services=fixture_services(), user="alex").ok
    assert not replay_records(records, services=fixture_services()).ok


def test_missing_user_is_an_error():
    records = [turn_record("user", "hello")]
    with pytest.raises(ReplayError, match="no user"):
        replay_records(records, services=fixture_services())


@pytest.mark.parametrize(
    "text",
    [
        "user",  # no '='
        "user=",  # empty value
        "flavor=mint",  # unknown key
        "user=alex user=sam",  # duplicate
    ],
)
def test_malformed_headers_rejected(text):
    records = [header_record(text), turn_record("user", "hi")]
    with pytest.raises(ReplayError):
        replay_records(records, services=fixture_services())


def test_system_line_after_start_rejected():
    records = [
        header_record("user=alex"),
        turn_record("user", "hi"),
        header_record("cube=" + DEMO_FACELETS),
    ]
    with pytest.raises(ReplayError, match="after the conversation started"):
        replay_records(records, services=fixture_services())


def test_bot_line_before_user_rejected():
    records = [header_record("user=alex"), turn_record("bot", "hello")]
    with pytest.raises(ReplayError, match="bot line before"):
        replay_records(records, services=fixture_services())


def test_empty_and_userless_transcripts_rejected():
    with pytest.raises(ReplayError, match="empty"):
        replay_records([], services=fixture_services())
    with pytest.raises(ReplayError, match="no user lines"):
        replay_records([header_record("user=alex")], services=fixture_services())


# -- session selection -----------------------------------------------------------------


def two_session_records() -> list[dict]:
    return [
        header_record("user=alex", session="a"),
        turn_record("user", "hello there", session="a"),
        turn_record(
            "bot",
            "Hello! Ask me to teach you the white cross whenever you are ready.",
            session="a",
        ),
        header_record("user=alex", session="b"),
        turn_record("user", "qwz blorp", session="b"),
        turn_record(
            "bot",
            "I did not catch that. I can teach you the white cross, describe the"
            " current cube, continue a lesson, or summarize your own performance.",
            session="b",
        ),
    ]


def test_multi_session_requires_a_choice():
    records = two_session_records()
    with pytest.raises(ReplayError) as err:
        replay_records(records, services=fixture_services())
    assert "a" in str(err.value) and "b" in str(err.value)


def test_session_filter_replays_only_that_session():
    records = two_session_records()
    assert replay_records(records, services=fixture_services(), session="a").ok
    assert replay_records(records, services=fixture_services(), session="b").ok
    with pytest.raises(ReplayError, match="no lines for session"):
        replay_records(records, services=fixture_services(), session="c")
