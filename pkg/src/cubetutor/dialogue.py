"""Guarded dialogue policy: strikes, leakage refusals, summaries, teaching.

The pipeline for every turn is fixed: normalize, score sentiment, update
strikes, classify intent, apply the leakage guard, then produce content.
An abusive turn gets its warning first and nothing else; a negative but
non-abusive turn gets an encouragement before the content.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .cube import (
    CubeState,
    PartialGoal,
    apply_move,
    format_facelets,
    is_placed,
    matches,
    solved_state,
    white_cross_goal,
)
from .macros import MacroAction, MacroLibrary, greedy_solve_with_library
from .nlg import TemplateSet, default_templates, describe_configuration, render_teaching_step
from .nlu import (
    NEGATIVE,
    AbuseLexicon,
    IntentLabel,
    Utterance,
    classify_intent,
    detect_abuse,
    load_abuse_lexicon,
    load_valence_lexicon,
    score_sentiment,
)
from .stores import StoreError, TranscriptStore, UserProfile


class DialogueError(StoreError):
    pass


WARNING_BASE = "Please do not use inappropriate language."
WARNING_REPEAT = " I have been designed to ignore such inputs when repeated."
WARNING_REPORT = " I am also reporting our interaction for potential further action."

REFUSAL_TEXT = (
    "Any answer to your query will lead to release of private information "
    "of others. Hence, I am not able to answer at this time."
)

ENCOURAGEMENT_TEXT = (
    "Do not worry, this takes practice. Keep solving, or take a short break "
    "and come back to it."
)

SUMMARY_LEAD = "Sure. Here is your summary."

ONBOARDING_TEXT = (
    "I do not have any completed games on record for you yet. "
    "Play a game and I will keep track."
)

CAPABILITIES_TEXT = (
    "I did not catch that. I can teach you the white cross, describe the "
    "current cube, continue a lesson, or summarize your own performance."
)


@dataclass
class DialogueState:
    session_id: str
    user_id: str
    cube: CubeState
    strike_count: int = 0
    active_goal: str | None = None
    last_topic: str | None = None  # configuration | teaching | summary | ...

    @classmethod
    def fresh(cls, session_id: str, user_id: str) -> "DialogueState":
        return cls(session_id, user_id, solved_state())


@dataclass(frozen=True)
class Response:
    text: str
    kind: str  # answer | warning | refusal | encouragement | summary | teaching-step
    cube: str | None = None  # facelet string after this step, when it moved


def warning_message(tier: int) -> str:
    """Exact warning text per strike tier; tiers only ever extend the text."""
    if tier == 1:
        return WARNING_BASE
    if tier == 2:
        return WARNING_BASE + WARNING_REPEAT
    if tier == 3:
        return WARNING_BASE + WARNING_REPEAT + WARNING_REPORT
    raise DialogueError(f"warning tier must be 1..3, got {tier}")


def update_strikes(state: DialogueState, abuse_flag: bool) -> int:
    """Bump the session strike count on abuse; the tier caps at 3 while the
    count keeps recording further offences."""
    if not abuse_flag:
        return 0
    state.strike_count += 1
    return min(state.strike_count, 3)


def guard_leakage(intent: IntentLabel, requester_id: str, profile_store) -> str | None:
    """Refusal text for any question about another user, else None.

    The profile store is deliberately never consulted: the refusal is
    identical whether the target exists or not, so the reply leaks nothing,
    not even existence.
    """
    del requester_id, profile_store
    if intent.name == "ask_other_user":
        return REFUSAL_TEXT
    return None


def format_minutes(value: float | None) -> str:
    if value is None:
        return "n/a"
    if value == int(value):
        return f"{int(value)} minutes"
    return f"{value:g} minutes"


def summarize_performance(profile: UserProfile) -> str:
    """Exactly three fields: games played, average minutes, games won."""
    return "\n".join(
        (
            f"Total games played: {profile.games_played}",
            f"Average time taken for a single game: {format_minutes(profile.avg_game_minutes)}",
            f"Total games won: {profile.games_won}",
        )
    )


@dataclass
class DialogueServices:
    """Everything respond() needs beyond the per-session state."""

    profiles: object  # ProfileStore-compatible
    library: MacroLibrary
    valence: dict[str, float] = field(default_factory=load_valence_lexicon)
    abuse: AbuseLexicon = field(default_factory=load_abuse_lexicon)
    templates: TemplateSet = field(default_factory=default_templates)
    goals: dict[str, PartialGoal] = field(
        default_factory=lambda: {"white-cross": white_cross_goal()}
    )
    transcripts: TranscriptStore | None = None
    reports: object | None = None  # JsonlStore-compatible
    clock: Callable[[], str] = lambda: "1970-01-01T00:00:00Z"
    register: str = "standard"


@dataclass(frozen=True)
class TeachingStep:
    text: str
    moves: tuple
    cube_after: CubeState


def _goal_phrase(goal_name: str) -> str:
    return goal_name.replace("-", " ")


def _split_at_placement(
    cube: CubeState, macro: MacroAction
) -> list[tuple]:
    """Split a macro's moves where its target first becomes placed."""
    running = cube
    placed_at = None
    for i, move in enumerate(macro.sequence):
        running = apply_move(running, move)
        if placed_at is None and is_placed(running, macro.effect.target):
            placed_at = i
    if placed_at is None or placed_at == len(macro.sequence) - 1:
        return [macro.sequence]
    return [macro.sequence[: placed_at + 1], macro.sequence[placed_at + 1 :]]


def teaching_steps(
    cube: CubeState,
    library: MacroLibrary,
    goal_name: str,
    templates: TemplateSet | None = None,
    register: str = "standard",
) -> tuple[list[TeachingStep], CubeState, str]:
    """Greedy-solve the cube and narrate the moves in milestone groups.

    Each applied macro contributes a group that ends when its target cubelet
    clicks into place, plus a restoration tail when more moves follow; the
    group that completes the goal says so.  Returns (steps, final cube,
    greedy status).
    """
    result = greedy_solve_with_library(cube, library)
    steps: list[TeachingStep] = []
    running = cube
    first = True
    for macro in result.applied:
        target = macro.effect.target
        for group in _split_at_placement(running, macro):
            after = running
            for move in group:
                after = apply_move(after, move)
            aligned = target if is_placed(after, target) and not is_placed(running, target) else None
            solves = _goal_phrase(goal_name) if matches(after, library.goal) else None
            text = render_teaching_step(
                group,
                first=first,
                aligned=aligned,
                solves=solves,
                preserved=aligned is None and solves is None,
                register=register,
                templates=templates,
            )
            steps.append(TeachingStep(text, tuple(group), after))
            running = after
            first = False
    return steps, running, result.status


def describe_cube_text(
    cube: CubeState,
    goal: PartialGoal,
    goal_name: str,
    templates: TemplateSet | None = None,
    register: str = "standard",
) -> str:
    """The configuration description used when a lesson starts."""
    if matches(cube, goal):
        return f"The {_goal_phrase(goal_name)} is already solved."
    sentences = describe_configuration(cube, goal, register=register, templates=templates)
    lead = (
        "For the current configuration of the Rubik's cube, "
        + sentences[0].text
        + "."
    )
    rest = [s.text[0].upper() + s.text[1:] + "." for s in sentences[1:]]
    return " ".join([lead] + rest)


def _log(
    services: DialogueServices,
    state: DialogueState,
    speaker: str,
    text: str,
    sentiment: str | None,
    intent: str | None,
) -> None:
    if services.transcripts is None:
        return
    services.transcripts.append(
        {
            "timestamp": services.clock(),
            "session": state.session_id,
            "speaker": speaker,
            "text": text,
            "sentiment": sentiment,
            "intent": intent,
            "strike_count": state.strike_count,
        }
    )


def _report_strike(services: DialogueServices, state: DialogueState, matched: tuple) -> None:
    if services.reports is None:
        return
    services.reports.append(
        {
            "timestamp": services.clock(),
            "session": state.session_id,
            "user": state.user_id,
            "kind": "abuse-report",
            "strike_count": state.strike_count,
            "matched": list(matched),
            "teacher_visible": True,
        }
    )


def _content_responses(
    state: DialogueState,
    intent: IntentLabel,
    services: DialogueServices,
) -> list[Response]:
    if intent.name == "teach_goal":
        goal_name = intent.goal or ""
        goal = services.goals.get(goal_name)
        if goal is None:
            teachable = ", ".join(sorted(services.goals))
            return [Response(f"I can teach you: {teachable}. Which would you like?", "answer")]
        state.active_goal = goal_name
        state.last_topic = "configuration"
        text = describe_cube_text(
            state.cube, goal, goal_name, services.templates, services.register
        )
        return [Response(f"Yes. {text}\nDo you have any questions?", "answer")]

    if intent.name == "continue_teaching" or (
        intent.name == "deny" and state.last_topic == "configuration"
    ):
        if state.active_goal is None:
            return [Response("Ask me to teach you a goal first, for example the white cross.", "answer")]
        goal = services.goals[state.active_goal]
        if matches(state.cube, goal):
            state.last_topic = "teaching"
            return [
                Response(
                    f"The {_goal_phrase(state.active_goal)} is already solved. "
                    "Edit the cube if you want to practice another configuration.",
                    "answer",
                )
            ]
        steps, final_cube, status = teaching_steps(
            state.cube,
            services.library,
            state.active_goal,
            services.templates,
            services.register,
        )
        state.cube = final_cube
        state.last_topic = "teaching"
        out = [
            Response(step.text, "teaching-step", cube=format_facelets(step.cube_after))
            for step in steps
        ]
        if status != "solved":
            out.append(
                Response(
                    "I do not have a macro for the remaining pieces; "
                    "edit the cube or ask me to describe it.",
                    "answer",
                )
            )
        return out

    if intent.name == "ask_own_summary":
        profile = services.profiles.get(state.user_id)
        state.last_topic = "summary"
        if profile is None:
            return [Response(ONBOARDING_TEXT, "answer")]
        return [Response(f"{SUMMARY_LEAD}\n{summarize_performance(profile)}", "summary")]

    if intent.name == "affirm":
        if state.last_topic == "configuration":
            return [Response("Go ahead and ask your question.", "answer")]
        return [Response("Great. Say 'continue' when you want the next step.", "answer")]

    if intent.name == "edit_cube":
        return [
            Response(
                "You can edit the virtual cube any time; send the new "
                "configuration and I will describe it.",
                "answer",
            )
        ]

    if intent.name == "smalltalk":
        return [Response("Hello! Ask me to teach you the white cross whenever you are ready.", "answer")]

    if intent.name == "deny":
        return [Response("Alright. Tell me when you want to continue.", "answer")]

    return [Response(CAPABILITIES_TEXT, "answer")]


def respond(
    state: DialogueState, utterance: Utterance | str, services: DialogueServices
) -> list[Response]:
    """One dialogue turn; returns the ordered bot responses."""
    u = Utterance.parse(utterance) if isinstance(utterance, str) else utterance
    sentiment = score_sentiment(u, services.valence)
    abuse_flag, matched = detect_abuse(u, services.abuse)
    tier = update_strikes(state, abuse_flag)
    intent = classify_intent(
        u,
        known_usernames=services.profiles.usernames(),
        requester=state.user_id,
    )
    if abuse_flag and intent.name in ("unknown", "smalltalk"):
        intent = IntentLabel("abusive")
    _log(services, state, "user", u.raw, sentiment.label, intent.describe())

    responses: list[Response]
    if abuse_flag:
        responses = [Response(warning_message(tier), "warning")]
        if tier >= 3:
            _report_strike(services, state, matched)
    else:
        refusal = guard_leakage(intent, state.user_id, services.profiles)
        if refusal is not None:
            responses = [Response(refusal, "refusal")]
        else:
            responses = _content_responses(state, intent, services)
            if sentiment.label == NEGATIVE:
                responses = [Response(ENCOURAGEMENT_TEXT, "encouragement")] + responses

    for response in responses:
        _log(services, state, "bot", response.text, None, None)
    return responses
