"""Re-run a recorded conversation through the engine and diff the bot lines.

A transcript is the JSONL format written by :class:`TranscriptStore`.  The
line format does not carry the user identity or the starting cube, so a
replayable transcript begins with one or more ``system`` lines whose text is
``key=value`` pairs (``user=alex cube=WWG...``).  Replays never write to any
store and run against a fixed clock, so a second replay of the same file is
byte-identical to the first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .config import packaged_data
from .cube import parse_facelets, solved_state
from .dialogue import DialogueServices, DialogueState, respond
from .macros import MacroLibrary
from .stores import ProfileStore, TranscriptStore


class ReplayError(ValueError):
    """Malformed transcript or missing replay context."""


@dataclass(frozen=True)
class TurnDiff:
    turn: int  # 1-based user-turn number
    user_text: str
    expected: tuple[str, ...]
    actual: tuple[str, ...]


@dataclass
class ReplayReport:
    turns: int
    diffs: list[TurnDiff] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diffs

    def summary(self) -> str:
        if self.ok:
            return f"replayed {self.turns} turns, zero diff"
        return f"replayed {self.turns} turns, {len(self.diffs)} differ"


def fixture_services() -> DialogueServices:
    """Demo profiles and macro library shipped with the package.

    No transcript or report store is attached: a replay must not append to
    the file it is reading, and the default epoch clock keeps any record it
    would have produced deterministic anyway.
    """
    return DialogueServices(
        profiles=ProfileStore(packaged_data("demo_profiles")),
        library=MacroLibrary.load(packaged_data("demo_library.json")),
    )


def services_from_config(config) -> DialogueServices:
    """Replay against an operator's stores; still read-only and fixed-clock."""
    from .nlg import TemplateSet
    from .nlu import load_abuse_lexicon, load_valence_lexicon

    return DialogueServices(
        profiles=ProfileStore(config.resolved_profiles_dir()),
        library=MacroLibrary.load(config.resolved_library_path()),
        valence=load_valence_lexicon(config.valence_path),
        abuse=load_abuse_lexicon(config.abuse_path),
        templates=TemplateSet.load(config.templates_path),
        register=config.register,
    )


def _parse_header(text: str) -> dict[str, str]:
    header: dict[str, str] = {}
    for token in text.split():
        key, sep, value = token.partition("=")
        if not sep or not key or not value:
            raise ReplayError(f"bad system header token {token!r}; want key=value")
        if key not in ("user", "cube"):
            raise ReplayError(f"unknown system header key {key!r}")
        if key in header:
            raise ReplayError(f"duplicate system header key {key!r}")
        header[key] = value
    return header


def _split_turns(
    records: list[dict],
) -> tuple[dict[str, str], list[tuple[str, list[str]]]]:
    """Leading system header plus (user text, recorded bot texts) per turn."""
    header: dict[str, str] = {}
    turns: list[tuple[str, list[str]]] = []
    started = False
    for record in records:
        speaker = record.get("speaker")
        text = record.get("text", "")
        if speaker == "system":
            if started:
                raise ReplayError("system line after the conversation started")
            header.update(_parse_header(text))
        elif speaker == "user":
            started = True
            turns.append((text, []))
        elif speaker == "bot":
            if not turns:
                raise ReplayError("bot line before any user line")
            turns[-1][1].append(text)
        else:
            raise ReplayError(f"unknown speaker {speaker!r}")
    return header, turns


def _single_session(records: list[dict], session: str | None) -> list[dict]:
    if session is not None:
        picked = [r for r in records if r.get("session") == session]
        if not picked:
            raise ReplayError(f"no lines for session {session!r}")
        return picked
    sessions = {r.get("session") for r in records}
    if len(sessions) > 1:
        names = ", ".join(sorted(str(s) for s in sessions))
        raise ReplayError(f"transcript holds several sessions ({names}); pick one")
    return records


def replay_records(
    records: list[dict],
    services: DialogueServices | None = None,
    session: str | None = None,
    user: str | None = None,
    cube: str | None = None,
) -> ReplayReport:
    """Feed each recorded user line through respond() and diff the bot lines.

    ``user`` and ``cube`` override the transcript's system header; the user
    must come from one of the two or the replay cannot be grounded.
    """
    if not records:
        raise ReplayError("empty transcript")
    records = _single_session(records, session)
    header, turns = _split_turns(records)
    if not turns:
        raise ReplayError("transcript has no user lines")
    user_id = user or header.get("user")
    if not user_id:
        raise ReplayError("no user: pass one or add a 'user=NAME' system line")
    facelets = cube or header.get("cube")
    start = parse_facelets(facelets) if facelets else solved_state()
    services = services or fixture_services()
    session_id = str(records[0].get("session", "replay"))

    state = DialogueState(session_id, user_id, start)
    report = ReplayReport(turns=len(turns))
    for index, (user_text, expected) in enumerate(turns, start=1):
        actual = [r.text for r in respond(state, user_text, services)]
        if actual != expected:
            report.diffs.append(
                TurnDiff(index, user_text, tuple(expected), tuple(actual))
            )
    return report


def replay_path(
    path: str | Path,
    services: DialogueServices | None = None,
    session: str | None = None,
    user: str | None = None,
    cube: str | None = None,
) -> ReplayReport:
    records = TranscriptStore(path).load()
    return replay_records(records, services, session=session, user=user, cube=cube)


def format_diffs(report: ReplayReport) -> str:
    lines = [report.summary()]
    for d in report.diffs:
        lines.append(f"turn {d.turn}: {d.user_text!r}")
        lines.append("  recorded:")
        lines.extend(f"    {t!r}" for t in d.expected)
        lines.append("  replayed:")
        lines.extend(f"    {t!r}" for t in d.actual)
    return "\n".join(lines)
