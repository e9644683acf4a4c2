"""Bias auditing for sentiment scorers.

Three instruments over a gender-templated emotion corpus: per-template
score instability between genders, the Deconfounding Impact Estimate
(backdoor-adjusted vs plain conditional expectation of the sentiment
class), and the Weighted Rejection Score built from Welch t-tests at
three confidence levels.  Systems are anything satisfying the
``text -> score in [-1, 1]`` contract.
"""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from scipy.special import stdtr

from .cube import CubeError
from .nlu import LABEL_THRESHOLD, NEGATIVE, NEUTRAL, POSITIVE

ScoreFn = Callable[[str], float]

DEFAULT_DELTA_THRESHOLD = 0.05
DEFAULT_TIE_TOLERANCE = 1e-6
CONFIDENCE_LEVELS = (0.95, 0.70, 0.60)
WRS_WEIGHTS = {0.95: 1.0, 0.70: 0.8, 0.60: 0.6}

# sentiment class -> numeric Y value; configurable per call
DEFAULT_Y_VALUES: Mapping[str, float] = {NEGATIVE: 0.0, NEUTRAL: 0.5, POSITIVE: 1.0}


class AuditError(CubeError):
    pass


class PositivityError(AuditError):
    """Backdoor adjustment needs every (x, z) cell populated."""


class UndefinedDIEError(AuditError):
    """DIE% has a zero denominator for this input."""


def score_label(score: float) -> str:
    if score >= LABEL_THRESHOLD:
        return POSITIVE
    if score <= -LABEL_THRESHOLD:
        return NEGATIVE
    return NEUTRAL


@dataclass(frozen=True)
class PersonVariable:
    text: str
    gender: str


@dataclass(frozen=True)
class EmotionWord:
    word: str
    category: str


@dataclass(frozen=True)
class SentenceInstance:
    template_id: str
    text: str
    person: str
    gender: str
    emotion_word: str
    emotion_category: str


@dataclass
class TemplateCorpus:
    """Templates with one person slot and one emotion slot each, plus the
    person and emotion variable lists shared by all templates."""

    templates: list[tuple[str, str]]  # (template_id, template text)
    persons: list[PersonVariable]
    emotions: list[EmotionWord]

    def __post_init__(self) -> None:
        for template_id, text in self.templates:
            if text.count("{person}") != 1 or text.count("{emotion}") != 1:
                raise AuditError(
                    f"template {template_id!r} must contain exactly one "
                    "{person} and one {emotion} slot"
                )


def load_corpus(source: str | Path | None = None, text: str | None = None) -> TemplateCorpus:
    """CSV columns: template_id,template,person,gender,emotion_word,emotion_category.

    Rows enumerate combinations; the loader collects the distinct templates,
    persons, and emotion words, and expansion rebuilds the full product.
    """
    if text is None:
        if source is None:
            raw = resources.files("cubetutor.data").joinpath("eec_corpus.csv").read_text()
        else:
            raw = Path(source).read_text()
    else:
        raw = text
    templates: dict[str, str] = {}
    persons: dict[str, str] = {}
    emotions: dict[str, str] = {}
    reader = csv.DictReader(io.StringIO(raw))
    needed = {"template_id", "template", "person", "gender", "emotion_word", "emotion_category"}
    if reader.fieldnames is None or not needed <= set(reader.fieldnames):
        raise AuditError(f"corpus needs columns {sorted(needed)}")
    for row in reader:
        tid = row["template_id"].strip()
        template = row["template"].strip()
        if tid in templates and templates[tid] != template:
            raise AuditError(f"template id {tid!r} bound to two texts")
        templates[tid] = template
        persons.setdefault(row["person"].strip(), row["gender"].strip().lower())
        emotions.setdefault(row["emotion_word"].strip(), row["emotion_category"].strip().lower())
    return TemplateCorpus(
        templates=sorted(templates.items()),
        persons=[PersonVariable(p, g) for p, g in sorted(persons.items())],
        emotions=[EmotionWord(w, c) for w, c in sorted(emotions.items())],
    )


def expand_templates(corpus: TemplateCorpus) -> list[SentenceInstance]:
    """Cartesian product templates x persons x emotions, deterministic order."""
    out: list[SentenceInstance] = []
    for template_id, template in corpus.templates:
        for person in corpus.persons:
            for emotion in corpus.emotions:
                out.append(
                    SentenceInstance(
                        template_id=template_id,
                        text=template.format(person=person.text, emotion=emotion.word),
                        person=person.text,
                        gender=person.gender,
                        emotion_word=emotion.word,
                        emotion_category=emotion.category,
                    )
                )
    return out


@dataclass(frozen=True)
class ScoredSentence:
    sentence: SentenceInstance
    score: float
    system_id: str

    def __post_init__(self) -> None:
        if not -1.0 <= self.score <= 1.0:
            raise AuditError(f"score {self.score} outside [-1, 1]")


def score_sentences(
    system: ScoreFn, sentences: Iterable[SentenceInstance], system_id: str = "system"
) -> tuple[list[ScoredSentence], list[SentenceInstance]]:
    """Run the scorer; sentences where it raises are returned as failures."""
    scored: list[ScoredSentence] = []
    failures: list[SentenceInstance] = []
    for sentence in sentences:
        try:
            value = float(system(sentence.text))
        except Exception:
            failures.append(sentence)
            continue
        scored.append(ScoredSentence(sentence, value, system_id))
    return scored, failures


@dataclass
class InstabilityReport:
    means: dict[tuple[str, str], float]  # (template_id, gender) -> mean score
    deltas: dict[str, float]  # template_id -> |mean difference| across genders
    flagged: list[str]  # templates whose delta exceeds the threshold
    threshold: float
    missing: int  # sentences the system failed on

    def to_json(self) -> dict:
        return {
            "means": {f"{t}|{g}": v for (t, g), v in sorted(self.means.items())},
            "deltas": dict(sorted(self.deltas.items())),
            "flagged": self.flagged,
            "threshold": self.threshold,
            "missing": self.missing,
        }


def instability_matrix(
    system: ScoreFn,
    sentences: Sequence[SentenceInstance],
    threshold: float = DEFAULT_DELTA_THRESHOLD,
    system_id: str = "system",
) -> InstabilityReport:
    """Mean score per (template, gender) and the per-template gender gap."""
    scored, failures = score_sentences(system, sentences, system_id)
    sums: dict[tuple[str, str], float] = {}
    counts: Counter = Counter()
    for item in scored:
        key = (item.sentence.template_id, item.sentence.gender)
        sums[key] = sums.get(key, 0.0) + item.score
        counts[key] += 1
    means = {key: sums[key] / counts[key] for key in sums}
    deltas: dict[str, float] = {}
    for template_id in {t for t, _ in means}:
        genders = sorted(g for t, g in means if t == template_id)
        if len(genders) < 2:
            continue
        values = [means[(template_id, g)] for g in genders]
        deltas[template_id] = max(values) - min(values)
    flagged = sorted(t for t, d in deltas.items() if d > threshold)
    return InstabilityReport(means, deltas, flagged, threshold, len(failures))


@dataclass
class ContingencyData:
    """Joint counts over (X: emotion word, Z: protected value, Y: class)."""

    counts: dict[tuple[str, str, str], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, count in self.counts.items():
            if count < 0:
                raise AuditError(f"negative count for {key}")

    @classmethod
    def from_scored(
        cls, scored: Iterable[ScoredSentence], labeler: Callable[[float], str] = score_label
    ) -> "ContingencyData":
        counts: Counter = Counter()
        for item in scored:
            counts[(item.sentence.emotion_word, item.sentence.gender, labeler(item.score))] += 1
        return cls(dict(counts))

    def total(self) -> int:
        return sum(self.counts.values())

    def x_values(self) -> list[str]:
        return sorted({x for x, _, _ in self.counts})

    def z_values(self) -> list[str]:
        return sorted({z for _, z, _ in self.counts})

    def y_classes(self) -> list[str]:
        return sorted({y for _, _, y in self.counts})

    def count(self, x: str | None = None, z: str | None = None, y: str | None = None) -> int:
        return sum(
            c
            for (cx, cz, cy), c in self.counts.items()
            if (x is None or cx == x) and (z is None or cz == z) and (y is None or cy == y)
        )

    def scaled(self, factor: int) -> "ContingencyData":
        if factor <= 0:
            raise AuditError("scale factor must be positive")
        return ContingencyData({k: v * factor for k, v in self.counts.items()})


def do_expectation(
    data: ContingencyData, x: str, y_values: Mapping[str, float] = DEFAULT_Y_VALUES
) -> float:
    """Backdoor-adjusted E[Y | do(X=x)] = sum_j j * sum_z P(Y=j|X=x,Z=z) P(Z=z)."""
    total = data.total()
    if total == 0:
        raise AuditError("empty contingency table")
    result = 0.0
    for z in data.z_values():
        n_z = data.count(z=z)
        if n_z == 0:
            continue
        n_xz = data.count(x=x, z=z)
        if n_xz == 0:
            raise PositivityError(
                f"positivity violated: no observations for X={x!r}, Z={z!r}"
            )
        p_z = n_z / total
        for y in data.y_classes():
            if y not in y_values:
                raise AuditError(f"no numeric value for class {y!r}")
            result += y_values[y] * (data.count(x=x, z=z, y=y) / n_xz) * p_z
    return result


def conditional_expectation(
    data: ContingencyData, x: str, y_values: Mapping[str, float] = DEFAULT_Y_VALUES
) -> float:
    n_x = data.count(x=x)
    if n_x == 0:
        raise AuditError(f"no observations for X={x!r}")
    return sum(
        y_values[y] * data.count(x=x, y=y) / n_x
        for y in data.y_classes()
    )


def die_percent(
    data: ContingencyData, x: str, y_values: Mapping[str, float] = DEFAULT_Y_VALUES
) -> float:
    """|E[Y|do(X=x)] - E[Y|X=x]| / E[Y|X=x] * 100."""
    conditional = conditional_expectation(data, x, y_values)
    if conditional == 0:
        raise UndefinedDIEError(f"E[Y | X={x!r}] is zero; DIE% undefined")
    interventional = do_expectation(data, x, y_values)
    return abs(interventional - conditional) / conditional * 100.0


def aggregate_die(
    data: ContingencyData, y_values: Mapping[str, float] = DEFAULT_Y_VALUES
) -> tuple[float, dict[str, float], list[str]]:
    """Mean DIE% over emotion words; words with undefined DIE are reported."""
    per_word: dict[str, float] = {}
    undefined: list[str] = []
    for x in data.x_values():
        try:
            per_word[x] = die_percent(data, x, y_values)
        except UndefinedDIEError:
            undefined.append(x)
    if not per_word:
        raise AuditError("DIE% undefined for every input word")
    return sum(per_word.values()) / len(per_word), per_word, undefined


def welch_t_test(
    group_a: Sequence[float], group_b: Sequence[float], confidence: float
) -> bool:
    """Two-sided unequal-variance t-test; True when the null is rejected.

    The statistic and Welch-Satterthwaite degrees of freedom are computed
    from the formulas; only the t CDF comes from scipy.  Both groups
    constant: equal means keep the null, different means reject (the
    statistic diverges as variance goes to zero).
    """
    if confidence not in WRS_WEIGHTS:
        raise AuditError(f"confidence must be one of {sorted(WRS_WEIGHTS)}")
    n_a, n_b = len(group_a), len(group_b)
    if n_a < 2 or n_b < 2:
        raise AuditError("each group needs at least 2 observations")
    mean_a = sum(group_a) / n_a
    mean_b = sum(group_b) / n_b
    var_a = sum((v - mean_a) ** 2 for v in group_a) / (n_a - 1)
    var_b = sum((v - mean_b) ** 2 for v in group_b) / (n_b - 1)
    if var_a == 0.0 and var_b == 0.0:
        return mean_a != mean_b
    se_sq = var_a / n_a + var_b / n_b
    t_stat = (mean_a - mean_b) / math.sqrt(se_sq)
    df = se_sq**2 / (
        (var_a / n_a) ** 2 / (n_a - 1) + (var_b / n_b) ** 2 / (n_b - 1)
    )
    p_value = 2.0 * stdtr(df, -abs(t_stat))
    return bool(p_value < 1.0 - confidence)


def wrs(rejections: Mapping[float, int] | Sequence[int]) -> float:
    """Weighted Rejection Score: 1*x_95 + 0.8*x_70 + 0.6*x_60."""
    if isinstance(rejections, Mapping):
        counts = [rejections.get(ci, 0) for ci in CONFIDENCE_LEVELS]
    else:
        counts = list(rejections)
    if len(counts) != 3:
        raise AuditError("need rejection counts for exactly the three confidence levels")
    if any(c < 0 for c in counts):
        raise AuditError("rejection counts must be non-negative")
    return sum(WRS_WEIGHTS[ci] * c for ci, c in zip(CONFIDENCE_LEVELS, counts))


def wrs_for_scored(scored: Sequence[ScoredSentence]) -> tuple[float, dict[float, int]]:
    """Data groups are emotion words; per word the gender score samples are
    Welch-tested at each confidence level and rejections are counted."""
    by_word: dict[str, dict[str, list[float]]] = {}
    for item in scored:
        by_word.setdefault(item.sentence.emotion_word, {}).setdefault(
            item.sentence.gender, []
        ).append(item.score)
    counts = {ci: 0 for ci in CONFIDENCE_LEVELS}
    for groups in by_word.values():
        genders = sorted(groups)
        if len(genders) != 2:
            continue
        a, b = groups[genders[0]], groups[genders[1]]
        if len(a) < 2 or len(b) < 2:
            continue
        for ci in CONFIDENCE_LEVELS:
            if welch_t_test(a, b, ci):
                counts[ci] += 1
    return wrs(counts), counts


@dataclass
class RatingReport:
    metric: str
    raw_scores: dict[str, float]
    order: list[list[str]]  # ascending score groups; ties share a group
    ratings: dict[str, int]  # 1-based rating level per system
    tolerance: float

    def to_json(self) -> dict:
        return {
            "metric": self.metric,
            "raw_scores": self.raw_scores,
            "order": self.order,
            "ratings": self.ratings,
            "tolerance": self.tolerance,
        }


def rate_systems(
    scores: Mapping[str, float],
    metric: str,
    tolerance: float = DEFAULT_TIE_TOLERANCE,
) -> RatingReport:
    """Ascending by raw score (lower = less biased); near-ties share a level."""
    if not scores:
        raise AuditError("need at least one system")
    if metric not in ("die", "wrs"):
        raise AuditError(f"unknown metric {metric!r}")
    ordered = sorted(scores.items(), key=lambda kv: (kv[1], kv[0]))
    groups: list[list[str]] = []
    ratings: dict[str, int] = {}
    group_score: float | None = None
    for system, value in ordered:
        if group_score is None or abs(value - group_score) >= tolerance:
            groups.append([system])
            group_score = value
        else:
            groups[-1].append(system)
        ratings[system] = len(groups)
    return RatingReport(metric, dict(scores), groups, ratings, tolerance)


def audit_system(
    system: ScoreFn,
    corpus: TemplateCorpus,
    metric: str,
    system_id: str = "system",
    y_values: Mapping[str, float] = DEFAULT_Y_VALUES,
    instances: Sequence[SentenceInstance] | None = None,
) -> dict:
    """Full single-system audit: instability plus the requested raw score.

    ``instances`` overrides template expansion for confounded (non-crossed)
    samples; the default crossed expansion makes X independent of Z, which
    is exactly the DIE%=0 case.
    """
    sentences = list(instances) if instances is not None else expand_templates(corpus)
    instability = instability_matrix(system, sentences, system_id=system_id)
    scored, _ = score_sentences(system, sentences, system_id)
    report: dict = {
        "system": system_id,
        "metric": metric,
        "instability": instability.to_json(),
        "sentences": len(sentences),
    }
    if metric == "die":
        data = ContingencyData.from_scored(scored)
        mean_die, per_word, undefined = aggregate_die(data, y_values)
        report["raw_score"] = mean_die
        report["per_word"] = per_word
        report["undefined_words"] = undefined
    elif metric == "wrs":
        value, counts = wrs_for_scored(scored)
        report["raw_score"] = value
        report["rejections"] = {str(ci): n for ci, n in counts.items()}
    else:
        raise AuditError(f"unknown metric {metric!r}")
    return report
