"""Lexicon-rule language analysis: normalization, sentiment, abuse, intent.

Everything in this module is deterministic table lookup plus small
word-window rules, so the dialogue layer above it can be audited line by
line.  The lexicons ship as data files (valence.tsv, abuse.txt) and can be
swapped wholesale without touching code.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .cube import CubeError

POSITIVE = "positive"
NEGATIVE = "negative"
NEUTRAL = "neutral"

# scorer rule constants
NEGATION_WINDOW = 3
BOOSTER_GAIN = 0.25
NORMALIZATION_ALPHA = 15.0
LABEL_THRESHOLD = 0.05
VALENCE_RANGE = 4.0

NEGATORS = frozenset({
    "not", "no", "never", "none", "nothing", "cannot", "without",
    "don't", "doesn't", "didn't", "won't", "can't", "isn't", "aren't",
    "wasn't", "weren't", "couldn't", "shouldn't", "wouldn't", "ain't",
})

BOOSTERS = frozenset({
    "very", "really", "extremely", "so", "totally", "absolutely",
    "incredibly", "utterly",
})

# lowercase words, word-internal apostrophes kept so contractions survive
_TOKEN_RE = re.compile(r"[a-z0-9]+(?:'[a-z0-9]+)*")
_CLAUSE_CHARS = frozenset(",.;:!?\n")


class LexiconError(CubeError):
    pass


@dataclass(frozen=True)
class Utterance:
    """Raw text plus its normalized token stream.

    Normalization is deterministic: lowercase, punctuation stripped,
    word-internal apostrophes preserved ("don't" stays one token).
    ``boundaries`` holds indices of tokens that start a new clause, so
    word-window rules can refuse to reach across a comma or sentence end
    ("No, you idiot" must not negate "idiot").
    """

    raw: str
    tokens: tuple[str, ...]
    boundaries: frozenset[int] = frozenset()

    @classmethod
    def parse(cls, text: str) -> "Utterance":
        lowered = text.lower()
        tokens: list[str] = []
        boundaries: set[int] = set()
        last_end = 0
        for match in _TOKEN_RE.finditer(lowered):
            if tokens and _CLAUSE_CHARS & set(lowered[last_end:match.start()]):
                boundaries.add(len(tokens))
            tokens.append(match.group())
            last_end = match.end()
        return cls(text, tuple(tokens), frozenset(boundaries))


@dataclass(frozen=True)
class SentimentResult:
    label: str  # positive | negative | neutral
    intensity: float  # in [-1, 1]


def _data_text(filename: str, path: str | Path | None) -> str:
    if path is not None:
        return Path(path).read_text()
    return resources.files("cubetutor.data").joinpath(filename).read_text()


def load_valence_lexicon(path: str | Path | None = None) -> dict[str, float]:
    """``token<TAB>valence`` lines, ``#`` comments, valence in [-4, 4]."""
    lexicon: dict[str, float] = {}
    text = _data_text("valence.tsv", path)
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise LexiconError(f"valence line {lineno}: expected token<TAB>valence")
        token, raw_valence = parts[0].strip(), parts[1].strip()
        try:
            valence = float(raw_valence)
        except ValueError as exc:
            raise LexiconError(f"valence line {lineno}: bad number {raw_valence!r}") from exc
        if not -VALENCE_RANGE <= valence <= VALENCE_RANGE:
            raise LexiconError(f"valence line {lineno}: {valence} outside [-4, 4]")
        if token in lexicon:
            raise LexiconError(f"valence line {lineno}: duplicate token {token!r}")
        lexicon[token] = valence
    if not lexicon:
        raise LexiconError("empty valence lexicon")
    return lexicon


def score_sentiment(u: Utterance, lexicon: dict[str, float]) -> SentimentResult:
    """Valence sum with negation flips and booster scaling, squashed to [-1, 1].

    A valenced token is flipped once per negator and scaled +25% per booster
    among the 3 tokens before it in the same clause; the total is normalized
    by s/sqrt(s^2+15) and labeled positive/negative outside the +-0.05 band.
    """
    total = 0.0
    tokens = u.tokens
    for i, token in enumerate(tokens):
        valence = lexicon.get(token, 0.0)
        if valence == 0.0:
            continue
        for j in range(i - 1, max(0, i - NEGATION_WINDOW) - 1, -1):
            if j + 1 in u.boundaries:  # scope never crosses into a prior clause
                break
            if tokens[j] in NEGATORS:
                valence = -valence
            elif tokens[j] in BOOSTERS:
                valence *= 1.0 + BOOSTER_GAIN
        total += valence
    intensity = total / math.sqrt(total * total + NORMALIZATION_ALPHA)
    if intensity >= LABEL_THRESHOLD:
        label = POSITIVE
    elif intensity <= -LABEL_THRESHOLD:
        label = NEGATIVE
    else:
        label = NEUTRAL
    return SentimentResult(label, intensity)


@dataclass(frozen=True)
class AbuseLexicon:
    terms: frozenset[str]
    phrases: tuple[tuple[str, ...], ...]


def load_abuse_lexicon(path: str | Path | None = None) -> AbuseLexicon:
    """One term or multiword phrase per line, ``#`` comments."""
    terms: set[str] = set()
    phrases: list[tuple[str, ...]] = []
    for line in _data_text("abuse.txt", path).splitlines():
        entry = line.strip()
        if not entry or entry.startswith("#"):
            continue
        words = tuple(_TOKEN_RE.findall(entry.lower()))
        if not words:
            raise LexiconError(f"abuse entry {entry!r} has no words")
        if len(words) == 1:
            terms.add(words[0])
        else:
            phrases.append(words)
    if not terms and not phrases:
        raise LexiconError("empty abuse lexicon")
    return AbuseLexicon(frozenset(terms), tuple(phrases))


def detect_abuse(u: Utterance, lexicon: AbuseLexicon) -> tuple[bool, tuple[str, ...]]:
    """Exact-token match only; "hello" never matches "hell"."""
    matched: list[str] = []
    for token in u.tokens:
        if token in lexicon.terms and token not in matched:
            matched.append(token)
    for phrase in lexicon.phrases:
        width = len(phrase)
        for start in range(len(u.tokens) - width + 1):
            if u.tokens[start:start + width] == phrase:
                text = " ".join(phrase)
                if text not in matched:
                    matched.append(text)
                break
    return bool(matched), tuple(matched)


@dataclass(frozen=True)
class IntentLabel:
    name: str
    goal: str | None = None  # teach_goal
    target: str | None = None  # ask_other_user
    metric: str | None = None  # ask_other_user

    def describe(self) -> str:
        slots = [s for s in (self.goal, self.target, self.metric) if s]
        return f"{self.name}({', '.join(slots)})" if slots else self.name


# words that make a question about someone's play history or ability
PERFORMANCE_WORDS = frozenset({
    "perform", "performance", "performed", "performing", "score", "scored",
    "game", "games", "won", "win", "wins", "winning", "able", "ability",
    "success", "successful", "successfully", "time", "minutes", "skill",
    "level", "summary", "move", "moves", "solve", "solved", "solving",
    "play", "played", "plays", "progress", "stats", "doing",
})

# first matching rule names the metric slot
_METRIC_RULES: tuple[tuple[frozenset[str], str], ...] = (
    (frozenset({"successfully", "success", "successful", "able", "ability"}), "move-success"),
    (frozenset({"score", "scored"}), "score"),
    (frozenset({"won", "win", "wins", "winning"}), "games-won"),
    (frozenset({"played", "play", "plays", "game", "games"}), "games-played"),
    (frozenset({"time", "minutes", "long"}), "avg-time"),
    (frozenset({"summary", "performance", "progress", "stats"}), "performance"),
)

_SUMMARY_WORDS = frozenset({"summary", "performance", "progress", "stats", "statistics"})
_SELF_WORDS = frozenset({"i", "my", "me", "mine", "myself", "i'm", "i've"})
_TEACH_WORDS = frozenset({"teach", "learn", "show", "tutorial", "lesson"})
_CONTINUE_WORDS = frozenset({"continue", "next", "proceed", "resume"})
_CONTINUE_PHRASES = (("keep", "going"), ("go", "on"), ("carry", "on"), ("what", "now"))
_AFFIRM_WORDS = frozenset({"yes", "yeah", "yep", "yup", "sure", "ok", "okay", "alright", "fine", "correct", "right"})
_DENY_WORDS = frozenset({"no", "nope", "nah", "negative"})
_EDIT_WORDS = frozenset({"edit", "set", "change", "update", "scramble", "reset"})
_GREETING_WORDS = frozenset({
    "hi", "hello", "hey", "howdy", "thanks", "thank", "bye", "goodbye",
    "morning", "evening", "afternoon",
})
_THIRD_PERSON_WORDS = frozenset({"he", "she", "they", "friend", "friends", "someone", "anyone", "classmate", "others"})

# recognizable goal keyword sequences, longest first
_GOAL_PHRASES: tuple[tuple[tuple[str, ...], str], ...] = (
    (("white", "cross"), "white-cross"),
    (("cross",), "white-cross"),
)


def _contains_phrase(tokens: tuple[str, ...], phrase: tuple[str, ...]) -> bool:
    width = len(phrase)
    return any(tokens[i:i + width] == phrase for i in range(len(tokens) - width + 1))


def _find_goal(tokens: tuple[str, ...]) -> str | None:
    for phrase, goal in _GOAL_PHRASES:
        if _contains_phrase(tokens, phrase):
            return goal
    return None


def _metric_for(tokens: frozenset[str]) -> str:
    for words, metric in _METRIC_RULES:
        if tokens & words:
            return metric
    return "performance"


def classify_intent(
    u: Utterance,
    known_usernames: tuple[str, ...] = (),
    requester: str | None = None,
) -> IntentLabel:
    """Ordered rule cascade; exactly one label.

    Leakage beats everything (a named other user plus performance words),
    then own-summary, teaching, continue, cube editing, yes/no, smalltalk.
    Third-person performance questions with no known username are smalltalk
    by design: without a name there is nothing to leak.
    """
    tokens = u.tokens
    token_set = frozenset(tokens)
    requester_key = requester.lower() if requester else None
    by_lower = {name.lower(): name for name in known_usernames}
    # possessives ("john's") must still count as naming that user
    stems = [t[:-2] if t.endswith("'s") else t for t in tokens]
    others = [by_lower[t] for t in stems if t in by_lower and t != requester_key]

    if others and token_set & PERFORMANCE_WORDS:
        return IntentLabel("ask_other_user", target=others[0], metric=_metric_for(token_set))
    if token_set & _SUMMARY_WORDS and token_set & _SELF_WORDS:
        return IntentLabel("ask_own_summary")
    if token_set & _TEACH_WORDS:
        return IntentLabel("teach_goal", goal=_find_goal(tokens))
    if token_set & _CONTINUE_WORDS or any(
        _contains_phrase(tokens, p) for p in _CONTINUE_PHRASES
    ):
        return IntentLabel("continue_teaching")
    if token_set & _EDIT_WORDS and "cube" in token_set:
        return IntentLabel("edit_cube")
    if tokens and all(t in _AFFIRM_WORDS for t in tokens):
        return IntentLabel("affirm")
    if tokens and all(t in _DENY_WORDS or t in ("thanks", "thank") for t in tokens):
        return IntentLabel("deny")
    if token_set & _GREETING_WORDS:
        return IntentLabel("smalltalk")
    if token_set & _THIRD_PERSON_WORDS and token_set & PERFORMANCE_WORDS:
        return IntentLabel("smalltalk")
    return IntentLabel("unknown")
