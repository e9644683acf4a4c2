"""Template NLG: predicate programs and macros rendered as plain English.

Templates live in data/nlg_templates.txt, one line per (predicate, register).
Rendering is pure and deterministic; ordering follows fixed readability
rules (preconditions before actions before effects, sentences grouped by the
cubelet they talk about, placement facts ahead of alignment facts).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .cube import (
    Color,
    CubeError,
    CubeState,
    Face,
    Move,
    PartialGoal,
    cubelet_name,
    goal_cubelets,
    is_edge,
    is_placed,
    locate_cubelet,
)
from .predicates import (
    _CORNER_FACELETS,
    _EDGE_FACELETS,
    Atom,
    COLOR_WORDS,
    PredicateProgram,
    program_to_predicates,
    state_context,
)

REGISTERS = ("standard", "simplified")

FACE_WORDS = {
    Face.U: "top",
    Face.D: "bottom",
    Face.L: "left",
    Face.R: "right",
    Face.F: "front",
    Face.B: "back",
}

_POSITION_WORDS = {
    "U": "top",
    "D": "bottom",
    "L": "left",
    "R": "right",
    "F": "front",
    "B": "back",
}


def position_phrase(slot_name: str) -> str:
    return "-".join(_POSITION_WORDS[ch] for ch in slot_name)


def move_phrase(move: Move) -> str:
    direction = "counterclockwise" if move.prime else "clockwise"
    return f"rotate the {FACE_WORDS[move.face]} face {direction}"


class TemplateError(CubeError):
    pass


class TemplateSet:
    """Templates keyed by (pattern, register); loaded from the line format
    ``name/arity<TAB>register<TAB>template``."""

    def __init__(self, entries: dict[tuple[str, str], str]):
        self.entries = entries
        for name_arity in {k for k, _ in entries}:
            for reg in REGISTERS:
                if (name_arity, reg) not in entries:
                    raise TemplateError(f"{name_arity} missing register {reg!r}")

    @classmethod
    def parse(cls, text: str, source: str = "<string>") -> "TemplateSet":
        entries: dict[tuple[str, str], str] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise TemplateError(f"{source}:{lineno}: expected 3 tab-separated fields")
            pattern, register, template = parts
            if "/" not in pattern or register not in REGISTERS:
                raise TemplateError(f"{source}:{lineno}: bad pattern or register")
            key = (pattern.strip(), register)
            if key in entries:
                raise TemplateError(f"{source}:{lineno}: duplicate template for {key}")
            entries[key] = template.strip()
        if not entries:
            raise TemplateError(f"{source}: no templates found")
        return cls(entries)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "TemplateSet":
        if path is not None:
            return cls.parse(Path(path).read_text(), source=str(path))
        ref = resources.files("cubetutor.data").joinpath("nlg_templates.txt")
        return cls.parse(ref.read_text(), source="nlg_templates.txt")

    def fill(self, pattern: str, register: str, slots: dict[str, str]) -> str:
        key = (pattern, register)
        if key not in self.entries:
            raise TemplateError(f"no template for {pattern} in register {register!r}")
        return self.entries[key].format(**slots)


_default_templates: TemplateSet | None = None


def default_templates() -> TemplateSet:
    global _default_templates
    if _default_templates is None:
        _default_templates = TemplateSet.load()
    return _default_templates


def _atom_slots(atom: Atom) -> tuple[str, dict[str, str]]:
    """Template pattern plus filled slot words for one atom."""
    name, args = atom.name, atom.args
    if name == "placed":
        cid, truth = args
        state = "in place" if truth == "true" else "out of place"
        return "placed/2", {"cubelet": cubelet_name(cid), "state": state}
    if name == "aligned":
        cid, color, center = args
        kind = "edge" if is_edge(cid) else "corner"
        return "aligned/3", {"color": color, "kind": kind, "center": center}
    if name in ("edge_slot", "corner_slot"):
        pos, cid, orient = args
        table = _EDGE_FACELETS if name == "edge_slot" else _CORNER_FACELETS
        facelet = table[pos][int(orient)]
        low_color = min(Color(COLOR_WORDS.index(w)) for w in _cubelet_color_words(cid))
        return f"{name}/3", {
            "cubelet": cubelet_name(cid),
            "position": position_phrase(pos),
            "color": COLOR_WORDS[low_color],
            "face": FACE_WORDS[Face(facelet // 9)],
        }
    slot, color = args
    return "sticker_at/2", {
        "index": str(int(slot) % 9 + 1),
        "face": FACE_WORDS[Face(int(slot) // 9)],
        "color": color,
    }


def _cubelet_color_words(cid: str) -> list[str]:
    from .cube import COLOR_LETTERS

    return [COLOR_WORDS[COLOR_LETTERS.index(ch)] for ch in cid]


def render_predicate(
    atom: Atom, register: str = "standard", templates: TemplateSet | None = None
) -> str:
    """Lowercase sentence fragment for one atom, no trailing period."""
    templates = templates or default_templates()
    pattern, slots = _atom_slots(atom)
    return templates.fill(pattern, register, slots)


@dataclass(frozen=True)
class TaggedSentence:
    text: str
    section: str  # precondition | action | effect
    cubelet: str | None = None
    kind: str | None = None  # placement | alignment


_SECTION_RANK = {"precondition": 0, "action": 1, "effect": 2}
_KIND_RANK = {"placement": 0, "alignment": 1, None: 2}


def order_sentences(sentences: list[TaggedSentence]) -> list[TaggedSentence]:
    groups: dict[tuple[int, str | None], int] = {}
    for s in sentences:
        key = (_SECTION_RANK[s.section], s.cubelet)
        if s.cubelet is not None and key not in groups:
            groups[key] = len(groups)
    decorated = []
    for i, s in enumerate(sentences):
        section = _SECTION_RANK[s.section]
        group = groups.get((section, s.cubelet), len(groups) + i)
        decorated.append((section, group, _KIND_RANK.get(s.kind, 2), i, s))
    decorated.sort(key=lambda t: t[:4])
    return [t[4] for t in decorated]


@dataclass
class ExplanationText:
    sentences: list[TaggedSentence] = field(default_factory=list)

    @property
    def text(self) -> str:
        return " ".join(_sentence_case(s.text) for s in self.sentences)

    def section(self, tag: str) -> list[str]:
        return [s.text for s in self.sentences if s.section == tag]


def _sentence_case(fragment: str) -> str:
    text = fragment[0].upper() + fragment[1:]
    return text if text.endswith((".", "!", "?")) else text + "."


def _atom_kind(atom: Atom) -> str:
    return "alignment" if atom.name == "aligned" else "placement"


def render_program(
    program: PredicateProgram,
    register: str = "standard",
    section: str = "precondition",
    templates: TemplateSet | None = None,
    lead_cubelet: str | None = None,
) -> list[TaggedSentence]:
    groups = program_to_predicates(program)
    if lead_cubelet is not None:
        # readability: facts about the cubelet being acted on come first
        groups.sort(key=lambda g: 0 if any(a.cubelet_ref == lead_cubelet for a in g) else 1)
    out = []
    for group in groups:
        for atom in group:
            out.append(
                TaggedSentence(
                    render_predicate(atom, register, templates),
                    section,
                    cubelet=atom.cubelet_ref,
                    kind=_atom_kind(atom),
                )
            )
    return out


def render_macro(macro, register: str = "standard", templates: TemplateSet | None = None) -> ExplanationText:
    """Precondition sentences, one action sentence per move, effect sentence,
    then a comprehension check."""
    templates = templates or default_templates()
    sentences = render_program(
        macro.precondition, register, "precondition", templates,
        lead_cubelet=macro.effect.target,
    )
    for move in macro.sequence:
        sentences.append(TaggedSentence(move_phrase(move), "action"))
    effect_text = templates.fill(
        "effect_placed/1", register, {"cubelet": cubelet_name(macro.effect.target)}
    )
    sentences.append(
        TaggedSentence(effect_text, "effect", cubelet=macro.effect.target, kind="placement")
    )
    ordered = order_sentences(sentences)
    ordered.append(TaggedSentence(templates.fill("question/0", register, {}), "effect"))
    return ExplanationText(ordered)


_NUMBER_WORDS = (
    "zero", "one", "two", "three", "four", "five", "six",
    "seven", "eight", "nine", "ten", "eleven", "twelve",
)


def count_word(n: int) -> str:
    return _NUMBER_WORDS[n] if 0 <= n < len(_NUMBER_WORDS) else str(n)


def render_teaching_step(
    moves,
    first: bool,
    aligned: str | None = None,
    solves: str | None = None,
    preserved: bool = False,
    register: str = "standard",
    templates: TemplateSet | None = None,
) -> str:
    """One teaching utterance for a group of moves.

    The move sentence states how many face rotations happen; milestone
    sentences follow ("...is aligned" when the group places its target
    cubelet, "Solved!" when it completes the goal named by ``solves``,
    a preservation note for restoration tails).
    """
    if not moves:
        raise TemplateError("teaching step needs at least one move")
    templates = templates or default_templates()
    body = templates.fill(
        "teach_group/4",
        register,
        {
            "opener": "here we" if first else "we",
            "count": count_word(len(moves)),
            "rotations": "rotation" if len(moves) == 1 else "rotations",
            "faces": "face" if len({m.face for m in moves}) == 1 else "faces",
        },
    )
    if solves is not None:
        body += " " + templates.fill("teach_purpose/1", register, {"goal": solves})
    sentences = [body]
    if aligned is not None:
        sentences.append(
            templates.fill("milestone_aligned/1", register, {"cubelet": cubelet_name(aligned)})
        )
    if solves is not None:
        sentences.append(templates.fill("milestone_solved/0", register, {}))
    elif preserved and aligned is None:
        sentences.append(templates.fill("milestone_preserved/0", register, {}))
    return " ".join(_sentence_case(s) for s in sentences)


def describe_configuration(
    state: CubeState,
    goal: PartialGoal,
    register: str = "standard",
    templates: TemplateSet | None = None,
) -> list[TaggedSentence]:
    """Placement and alignment facts for every unplaced goal cubelet."""
    templates = templates or default_templates()
    ctx = state_context(state)
    sentences: list[TaggedSentence] = []
    for cid in goal_cubelets(goal):
        if is_placed(state, cid):
            continue
        placed_atom = Atom("placed", (cid, "false"))
        sentences.append(
            TaggedSentence(
                render_predicate(placed_atom, register, templates),
                "precondition",
                cubelet=cid,
                kind="placement",
            )
        )
        slot, _ = locate_cubelet(state, cid)
        table = _EDGE_FACELETS if is_edge(cid) else _CORNER_FACELETS
        parts = []
        # lowest-ordered color first, so "white side" leads for cross edges
        for f in sorted(table[slot], key=lambda f: int(ctx.facelets[f])):
            color = Color(ctx.facelets[f])
            center = Color(ctx.facelets[(f // 9) * 9 + 4])
            atom = Atom("aligned", (cid, COLOR_WORDS[color], COLOR_WORDS[center]))
            parts.append(render_predicate(atom, register, templates))
        if parts:
            sentences.append(
                TaggedSentence(" and ".join(parts), "precondition", cubelet=cid, kind="alignment")
            )
    return order_sentences(sentences)
