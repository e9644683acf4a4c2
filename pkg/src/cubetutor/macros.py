"""Macro discovery: focused solves, complexity-ranked selection, learned
preconditions, and a library whose greedy application solves the target goal.

The outer loop scrambles configurations, extracts the cheapest focused move
sequence some configuration needs, induces a precondition separating states
where the sequence works from states where it does not, validates the macro
on held-out states, then replays the grown library over all configurations
until none of them needs anything new.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cube import (
    CubeError,
    CubeState,
    Move,
    PartialGoal,
    _home_color,
    apply_sequence,
    format_moves,
    goal_cubelets,
    home_facelets,
    invert_moves,
    is_edge,
    is_placed,
    locate_cubelet,
    matches,
    mirror_cubelet,
    mirror_move,
    parse_moves,
    scramble,
    sequence_gather,
    yaw_cubelet,
    yaw_move,
)
from .induction import ExampleSet, InductionError, induce_program
from .predicates import (
    _EDGE_FACELETS,
    HOME_LOCATIONS,
    PredicateError,
    PredicateProgram,
    evaluate_program,
    mirror_program,
    parse_program,
    vocabulary_for_cubelets,
    yaw_program,
)
from .search import MaxHeuristic, MisplacedBound, SearchError, SearchResult, astar_solve
from .value_table import ValueTable, train_value_table

log = logging.getLogger(__name__)

LIBRARY_FORMAT_VERSION = 1
DEFAULT_COMPLEXITY_CAP = 8
DEFAULT_MACRO_CAP = 24
DEFAULT_NODE_BUDGET = 200_000


class MacroError(CubeError):
    pass


class MacroPreconditionError(MacroError):
    """apply_macro called on a state the precondition rejects."""


class InsufficientExamplesError(InductionError):
    def __init__(self, positives: int, required: int):
        super().__init__(f"only {positives} positive examples, need {required}")
        self.positives = positives
        self.required = required


@dataclass(frozen=True)
class FocusedEffect:
    """Place one cubelet while a set of already-placed cubelets stays put."""

    target: str
    protected: frozenset[str]
    description: str = ""

    def __post_init__(self):
        if self.target in self.protected:
            raise MacroError(f"target {self.target} cannot also be protected")


@dataclass(frozen=True)
class MacroCandidate:
    sequence: tuple[Move, ...]
    effect: FocusedEffect
    source: CubeState
    effect_class: tuple

    @property
    def complexity(self) -> int:
        return len(self.sequence)


@dataclass
class MacroAction:
    name: str
    precondition: PredicateProgram
    sequence: tuple[Move, ...]
    effect: FocusedEffect
    complexity: int
    metadata: dict = field(default_factory=dict)


def focused_goal(effect: FocusedEffect) -> PartialGoal:
    values = np.zeros(54, dtype=np.uint8)
    mask = np.zeros(54, dtype=bool)
    for cid in (effect.target, *effect.protected):
        for f in home_facelets(cid):
            values[f] = int(_home_color(f))
            mask[f] = True
    for face in range(6):
        center = 9 * face + 4
        values[center] = int(_home_color(center))
        mask[center] = True
    return PartialGoal(values, mask, name=f"place-{effect.target}")


def preserved_cubelets(sequence: tuple[Move, ...]) -> frozenset[str]:
    """Cubelets whose home facelets the sequence fixes pointwise; these stay
    placed under the sequence from any state, not just the source."""
    gather = sequence_gather(sequence)
    from .cube import ALL_CUBELET_IDS

    return frozenset(
        cid
        for cid in ALL_CUBELET_IDS
        if all(gather[f] == f for f in home_facelets(cid))
    )


# -- single-cubelet distance tables, shared across searches ------------------

_cubelet_tables: dict[str, ValueTable] = {}


def _cubelet_goal(cid: str) -> PartialGoal:
    return focused_goal(FocusedEffect(cid, frozenset()))


def cubelet_distance_table(cid: str) -> ValueTable:
    """Exact distance-to-home for one cubelet (small pattern space), used as
    an admissible heuristic inside focused searches."""
    table = _cubelet_tables.get(cid)
    if table is None:
        table = train_value_table(
            _cubelet_goal(cid), samples=800, max_depth=8, iterations=60, seed=97
        )
        _cubelet_tables[cid] = table
    return table


_focused_cache: dict[tuple, SearchResult | None] = {}
_misplaced = MisplacedBound()


def solve_focused(
    state: CubeState,
    effect: FocusedEffect,
    heuristic=None,
    node_budget: int = DEFAULT_NODE_BUDGET,
    weight: float = 1.0,
) -> SearchResult:
    """Place effect.target without disturbing effect.protected.

    The goal constrains only target + protected + centers, so the search
    problem depends on the state only through the target's location; results
    are cached on that key and reused across states.
    """
    for cid in effect.protected:
        if not is_placed(state, cid):
            raise MacroError(f"protected cubelet {cid} is not in place")
    goal = focused_goal(effect)
    if matches(state, goal):
        return SearchResult(path=(), nodes_expanded=0)
    cache_key = (goal.key, effect.target, locate_cubelet(state, effect.target))
    if heuristic is None and weight == 1.0:
        cached = _focused_cache.get(cache_key)
        if cached is not None:
            return cached
    h = heuristic or MaxHeuristic(
        [cubelet_distance_table(effect.target), _misplaced]
    )
    result = astar_solve(state, goal, heuristic=h, weight=weight, node_budget=node_budget)
    if heuristic is None and weight == 1.0:
        _focused_cache[cache_key] = result
    return result


# -- candidate discovery ------------------------------------------------------


def generate_configurations(
    n: int, depth_range: tuple[int, int], seed: int
) -> list[CubeState]:
    if n < 1:
        raise MacroError(f"need at least one configuration, got {n}")
    lo, hi = depth_range
    if lo > hi or lo < 1:
        raise MacroError(f"bad depth range {depth_range}")
    rng = np.random.default_rng(seed)
    configs = []
    for _ in range(n):
        depth = int(rng.integers(lo, hi + 1))
        state, _ = scramble(depth, rng=rng)
        configs.append(state)
    return configs


_YAW = {"U": "U", "D": "D", "F": "R", "R": "B", "B": "L", "L": "F"}


def _yaw_slot(name: str, k: int) -> str:
    for _ in range(k):
        name = "".join(_YAW[ch] for ch in name)
    return name if name in _EDGE_FACELETS else name[::-1]


def effect_class(target: str, location: tuple[str, int]) -> tuple:
    """Position/orientation of the target relative to its home slot, so the
    class is colorless for top/bottom-layer edges; other cubelets fall back
    to the absolute description."""
    slot, orient = location
    if is_edge(target):
        facelet = _EDGE_FACELETS[slot][orient]
        orient_face = "UDLRFB"[facelet // 9]
        home_slot, _ = HOME_LOCATIONS[target]
        axis = "U" if "U" in home_slot else ("D" if "D" in home_slot else None)
        if axis is not None:
            side = home_slot.replace(axis, "")
            k = 0
            while side != "R":
                side = _YAW[side]
                k += 1
            for _ in range(k):
                orient_face = _YAW[orient_face]
            return ("edge", axis, _yaw_slot(slot, k), orient_face)
        return ("edge", slot, orient, home_slot)
    return ("corner", slot, orient, HOME_LOCATIONS[target][0])


def _candidate_key(candidate: MacroCandidate) -> tuple:
    return (
        format_moves(candidate.sequence),
        candidate.effect_class,
        candidate.effect.target,
        tuple(sorted(candidate.effect.protected)),
    )


def canonical_macro_key(sequence: tuple[Move, ...], target: str) -> tuple:
    """Key identifying a (sequence, target) pair up to yaw and reflection, so
    a learned macro also claims the seven conjugated colorings it can serve.

    The protected set is deliberately absent: a macro's behavior is fixed by
    its moves and target (the precondition is induced from labels that only
    depend on those), so candidates differing only in protected annotation
    are interchangeable."""
    return min(
        (
            format_moves(conjugate_sequence(sequence, k, m)),
            conjugate_cubelet(target, k, m),
        )
        for k, m in VARIANT_KEYS
    )


def discover_candidates(
    configs: list[CubeState],
    goal: PartialGoal,
    heuristic=None,
    node_budget: int = DEFAULT_NODE_BUDGET,
    stats: dict | None = None,
) -> list[MacroCandidate]:
    """One focused solve per (configuration, unplaced goal cubelet); search
    failures are counted in stats, never fatal."""
    relevant = goal_cubelets(goal)
    seen: dict[tuple, MacroCandidate] = {}
    failures = 0
    for config in configs:
        placed = frozenset(c for c in relevant if is_placed(config, c))
        for target in relevant:
            if target in placed:
                continue
            effect = FocusedEffect(
                target, placed, description=f"place the {target} cubelet"
            )
            try:
                result = solve_focused(
                    config, effect, heuristic=heuristic, node_budget=node_budget
                )
            except SearchError:
                failures += 1
                continue
            if not result.path:
                continue
            candidate = MacroCandidate(
                sequence=tuple(result.path),
                effect=effect,
                source=config,
                effect_class=effect_class(target, locate_cubelet(config, target)),
            )
            seen.setdefault(_candidate_key(candidate), candidate)
    if stats is not None:
        stats["search_failures"] = failures
        stats["unique_candidates"] = len(seen)
    return sorted(
        seen.values(),
        key=lambda c: (c.complexity, format_moves(c.sequence), c.effect.target,
                       tuple(sorted(c.effect.protected))),
    )


def select_lowest_complexity(candidates: list[MacroCandidate]) -> MacroCandidate:
    if not candidates:
        raise MacroError("no candidates to select from")
    return min(
        candidates,
        key=lambda c: (c.complexity, format_moves(c.sequence), c.effect.target,
                       tuple(sorted(c.effect.protected))),
    )


# -- example generation and validation ---------------------------------------


def _label(
    sequence: tuple[Move, ...], effect: FocusedEffect, state: CubeState
) -> bool:
    """Ground truth by application: the sequence places the target and does
    not disturb any protected cubelet that was in place.  Protection is
    vacuous for a cubelet that was already out of place, mirroring the macro
    soundness contract."""
    after = apply_sequence(state, sequence)
    if not is_placed(after, effect.target):
        return False
    return all(
        is_placed(after, cid)
        for cid in effect.protected
        if is_placed(state, cid)
    )


def _synthesize_matching(
    sequence: tuple[Move, ...],
    effect: FocusedEffect,
    rng: np.random.Generator,
    count: int,
    node_budget: int,
) -> list[CubeState]:
    """States where the sequence provably works, built by construction:
    place target + protected from a random scramble, then undo the sequence
    so the target lands back at the source location the sequence expects."""
    inverse = invert_moves(sequence)
    out = []
    attempts = 0
    while len(out) < count and attempts < count * 6:
        attempts += 1
        state, _ = scramble(int(rng.integers(4, 15)), rng=rng)
        try:
            placed_so_far: set[str] = set()
            for cid in sorted(effect.protected) + [effect.target]:
                if not is_placed(state, cid):
                    step = solve_focused(
                        state,
                        FocusedEffect(cid, frozenset(placed_so_far)),
                        node_budget=node_budget,
                    )
                    state = apply_sequence(state, step.path)
                placed_so_far.add(cid)
        except SearchError:
            continue
        cand_state = apply_sequence(state, inverse)
        if _label(sequence, effect, cand_state):
            out.append(cand_state)
    return out


def generate_examples(
    candidate: MacroCandidate,
    configs: list[CubeState],
    extra_samples: int,
    seed: int,
    min_pos: int = 5,
    depth_range: tuple[int, int] = (1, 20),
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> ExampleSet:
    """Label configs plus random scrambles by applying the sequence; add
    synthesized positives (rare classes never show up by chance) and one-move
    near-miss perturbations of positives to sharpen the boundary."""
    rng = np.random.default_rng(seed)
    pool = list(configs)
    lo, hi = depth_range
    for _ in range(extra_samples):
        state, _ = scramble(int(rng.integers(lo, hi + 1)), rng=rng)
        pool.append(state)

    positives: dict[bytes, CubeState] = {}
    negatives: dict[bytes, CubeState] = {}
    for state in pool:
        side = positives if _label(candidate.sequence, candidate.effect, state) else negatives
        side.setdefault(state.key, state)

    want = max(min_pos, 8)
    if len(positives) < want:
        for state in _synthesize_matching(
            candidate.sequence, candidate.effect, rng, want - len(positives), node_budget
        ):
            positives.setdefault(state.key, state)

    from .cube import MOVES

    for state in list(positives.values())[:20]:
        move = MOVES[int(rng.integers(0, 12))]
        near = apply_sequence(state, (move,))
        if near.key in positives or near.key in negatives:
            continue
        side = positives if _label(candidate.sequence, candidate.effect, near) else negatives
        side.setdefault(near.key, near)

    if len(positives) < min_pos:
        raise InsufficientExamplesError(len(positives), min_pos)
    return ExampleSet(list(positives.values()), list(negatives.values()))


def validate_macro(
    macro: MacroAction,
    samples: int = 100,
    seed: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> dict:
    """Held-out soundness sweep: on precondition-satisfying states, the
    effect must hold and no protected cubelet that was in place may move."""
    rng = np.random.default_rng(seed)
    tested = effect_failures = protection_violations = 0
    rejected = 0
    attempts = 0
    while tested < samples and attempts < samples * 8:
        attempts += 1
        batch = _synthesize_matching(macro.sequence, macro.effect, rng, 1, node_budget)
        if not batch:
            continue
        state = batch[0]
        if not evaluate_program(macro.precondition, state):
            rejected += 1
            continue
        in_place = [c for c in macro.effect.protected if is_placed(state, c)]
        after = apply_sequence(state, macro.sequence)
        if not is_placed(after, macro.effect.target):
            effect_failures += 1
        if any(not is_placed(after, cid) for cid in in_place):
            protection_violations += 1
        tested += 1
    return {
        "tested": tested,
        "effect_failures": effect_failures,
        "protection_violations": protection_violations,
        "precondition_rejected": rejected,
        "passed": tested >= samples
        and effect_failures == 0
        and protection_violations == 0,
    }


# -- library ------------------------------------------------------------------


@dataclass
class MacroLibrary:
    """Macros in complexity order (stable by insertion for ties)."""

    goal: PartialGoal
    macros: list[MacroAction] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, macro: MacroAction) -> None:
        if any(m.name == macro.name for m in self.macros):
            raise MacroError(f"duplicate macro name {macro.name!r}")
        macro.metadata.setdefault("insertion_index", len(self.macros))
        self.macros.append(macro)
        self.macros.sort(key=lambda m: (m.complexity, m.metadata["insertion_index"]))

    def __len__(self) -> int:
        return len(self.macros)

    def to_json(self) -> dict:
        return {
            "format_version": LIBRARY_FORMAT_VERSION,
            "kind": "macro-library",
            "goal_pattern": self.goal.pattern(),
            "goal_name": self.goal.name,
            "metadata": self.metadata,
            "macros": [
                {
                    "name": m.name,
                    "precondition": m.precondition.serialize(),
                    "moves": format_moves(m.sequence),
                    "effect": {
                        "target": m.effect.target,
                        "protected": sorted(m.effect.protected),
                        "description": m.effect.description,
                    },
                    "complexity": m.complexity,
                    "metadata": m.metadata,
                }
                for m in self.macros
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MacroLibrary":
        if (
            doc.get("format_version") != LIBRARY_FORMAT_VERSION
            or doc.get("kind") != "macro-library"
        ):
            raise MacroError("unsupported macro library document")
        from .cube import goal_from_pattern

        goal = goal_from_pattern(doc["goal_pattern"])
        goal.name = doc.get("goal_name")
        lib = cls(goal=goal, metadata=doc.get("metadata", {}))
        for entry in doc["macros"]:
            effect = FocusedEffect(
                entry["effect"]["target"],
                frozenset(entry["effect"]["protected"]),
                entry["effect"].get("description", ""),
            )
            lib.macros.append(
                MacroAction(
                    name=entry["name"],
                    precondition=parse_program(entry["precondition"]),
                    sequence=parse_moves(entry["moves"]),
                    effect=effect,
                    complexity=entry["complexity"],
                    metadata=entry.get("metadata", {}),
                )
            )
        lib.macros.sort(
            key=lambda m: (m.complexity, m.metadata.get("insertion_index", 0))
        )
        return lib

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "MacroLibrary":
        return cls.from_json(json.loads(Path(path).read_text()))


def apply_macro(state: CubeState, macro: MacroAction) -> CubeState:
    if not evaluate_program(macro.precondition, state):
        raise MacroPreconditionError(f"{macro.name}: precondition not satisfied")
    return apply_sequence(state, macro.sequence)


_preserved_cache: dict[str, frozenset[str]] = {}


def _macro_safe(macro: MacroAction, state: CubeState, relevant: tuple[str, ...]) -> bool:
    """True when applying the macro cannot unplace any currently placed goal
    cubelet: each one is the target, explicitly protected, or structurally
    preserved by the sequence."""
    key = format_moves(macro.sequence)
    preserved = _preserved_cache.get(key)
    if preserved is None:
        preserved = preserved_cubelets(macro.sequence)
        _preserved_cache[key] = preserved
    for cid in relevant:
        if cid == macro.effect.target or cid in macro.effect.protected or cid in preserved:
            continue
        if is_placed(state, cid):
            return False
    return True


# -- conjugated variants --------------------------------------------------------
#
# A macro learned for one coloring transfers to the seven others obtained by
# rotating the cube about the vertical axis (with side colors relabelled) and
# reflecting it left-right (red and orange swapped, turn directions flipped).
# The variant's sequence, precondition and effect are the conjugates of the
# originals, so its soundness is inherited rather than re-learned.

#: identity first, then the pure yaws, then the reflected family.
VARIANT_KEYS: tuple[tuple[int, bool], ...] = tuple(
    (k, m) for m in (False, True) for k in range(4)
)


def conjugate_sequence(
    sequence: tuple[Move, ...], k: int, mirrored: bool = False
) -> tuple[Move, ...]:
    if mirrored:
        sequence = tuple(mirror_move(m) for m in sequence)
    return tuple(yaw_move(m, k) for m in sequence)


def conjugate_cubelet(cubelet_id: str, k: int, mirrored: bool = False) -> str:
    if mirrored:
        cubelet_id = mirror_cubelet(cubelet_id)
    return yaw_cubelet(cubelet_id, k)


def conjugate_effect(effect: FocusedEffect, k: int, mirrored: bool = False) -> FocusedEffect:
    target = conjugate_cubelet(effect.target, k, mirrored)
    return FocusedEffect(
        target=target,
        protected=frozenset(conjugate_cubelet(c, k, mirrored) for c in effect.protected),
        description=f"place the {target} cubelet",
    )


_variant_cache: dict[tuple, "MacroAction | None"] = {}


def conjugate_macro(macro: MacroAction, k: int, mirrored: bool = False) -> "MacroAction | None":
    """The macro conjugated by an optional reflection then k quarter-yaws, or
    None when its precondition does not survive the transform (corner
    orientation atoms can be lost)."""
    k %= 4
    if k == 0 and not mirrored:
        return macro
    cache_key = (macro.name, format_moves(macro.sequence),
                 macro.precondition.serialize(), k, mirrored)
    if cache_key in _variant_cache:
        return _variant_cache[cache_key]
    try:
        precondition = macro.precondition
        if mirrored:
            precondition = mirror_program(precondition)
        precondition = yaw_program(precondition, k)
    except PredicateError:
        _variant_cache[cache_key] = None
        return None
    suffix = ("~" if k or mirrored else "") + (f"y{k}" if k else "") + ("m" if mirrored else "")
    variant = MacroAction(
        name=macro.name + suffix,
        precondition=precondition,
        sequence=conjugate_sequence(macro.sequence, k, mirrored),
        effect=conjugate_effect(macro.effect, k, mirrored),
        complexity=macro.complexity,
        metadata={"variant_of": macro.name, "yaw": k, "mirrored": mirrored},
    )
    _variant_cache[cache_key] = variant
    return variant


def _applicable_variant(
    macro: MacroAction, state: CubeState, relevant: tuple[str, ...]
) -> "MacroAction | None":
    """First conjugated variant (base first) whose precondition holds, whose
    target still needs placing, and whose application cannot unplace a placed
    goal cubelet.  The target gate keeps every application strict progress,
    which bounds greedy solving by the number of goal cubelets."""
    for k, mirrored in VARIANT_KEYS:
        variant = conjugate_macro(macro, k, mirrored)
        if variant is None or is_placed(state, variant.effect.target):
            continue
        if evaluate_program(variant.precondition, state) and _macro_safe(
            variant, state, relevant
        ):
            return variant
    return None


@dataclass
class GreedyResult:
    status: str  # solved | no_applicable_macro | step_cap
    moves: tuple[Move, ...]
    macro_names: tuple[str, ...]
    final_state: CubeState
    applied: tuple[MacroAction, ...] = ()  # the exact variants, in order


def greedy_solve_with_library(
    state: CubeState, library: MacroLibrary, step_cap: int = 32
) -> GreedyResult:
    """Apply the first applicable macro in library order until the goal holds.

    Each macro is tried in its symmetry-conjugated colorings (yaws, then
    mirrored yaws), so one learned macro covers the symmetric cases its
    training never saw."""
    relevant = goal_cubelets(library.goal)
    moves: list[Move] = []
    used: list[MacroAction] = []

    def result(status: str) -> GreedyResult:
        return GreedyResult(
            status,
            tuple(moves),
            tuple(m.name for m in used),
            state,
            tuple(used),
        )

    for _ in range(step_cap):
        if matches(state, library.goal):
            return result("solved")
        chosen = None
        for macro in library.macros:
            chosen = _applicable_variant(macro, state, relevant)
            if chosen is not None:
                break
        if chosen is None:
            return result("no_applicable_macro")
        state = apply_sequence(state, chosen.sequence)
        moves.extend(chosen.sequence)
        used.append(chosen)
    return result("solved" if matches(state, library.goal) else "step_cap")


def _macro_name(candidate: MacroCandidate, taken: set[str]) -> str:
    slot, orient = locate_cubelet(candidate.source, candidate.effect.target)
    base = f"place-{candidate.effect.target.lower()}-{slot.lower()}{orient}"
    if len(candidate.effect.protected) > 0:
        base += f"-k{len(candidate.effect.protected)}"
    name = base
    suffix = 2
    while name in taken:
        name = f"{base}-{suffix}"
        suffix += 1
    return name


def learn_macro_library(
    goal: PartialGoal,
    config_count: int = 200,
    depth_range: tuple[int, int] = (1, 20),
    seed: int = 0,
    induction_params: dict | None = None,
    complexity_cap: int = DEFAULT_COMPLEXITY_CAP,
    macro_cap: int = DEFAULT_MACRO_CAP,
    node_budget: int = DEFAULT_NODE_BUDGET,
    validation_samples: int = 100,
    max_iterations: int | None = None,
) -> MacroLibrary:
    """The outer discovery loop; deterministic for fixed arguments."""
    if config_count < 1:
        raise MacroError("config_count must be >= 1")
    params = {"max_clause_size": 4, "max_clauses": 3, "min_pos": 5, "extra_samples": 120}
    params.update(induction_params or {})
    relevant = goal_cubelets(goal)
    vocabulary = vocabulary_for_cubelets(relevant)

    configs = generate_configurations(config_count, depth_range, seed)
    current = list(configs)
    library = MacroLibrary(goal=goal)
    failed_keys: set[tuple] = set()
    names: set[str] = set()
    iteration_log: list[dict] = []
    cap = max_iterations if max_iterations is not None else macro_cap * 4
    discovery_failures = 0

    stop_reason = "iteration_cap"
    induction_failures = 0
    validation_failures = 0
    for iteration in range(cap):
        unsolved = [c for c in current if not matches(c, goal)]
        if not unsolved:
            stop_reason = "all_solved"
            break
        if len(library) >= macro_cap:
            stop_reason = "macro_cap"
            break
        stats: dict = {}
        known = {
            canonical_macro_key(m.sequence, m.effect.target)
            for m in library.macros
        }
        candidates = [
            c
            for c in discover_candidates(
                unsolved, goal, node_budget=node_budget, stats=stats
            )
            if c.complexity <= complexity_cap
            and canonical_macro_key(c.sequence, c.effect.target)
            not in failed_keys | known
        ]
        discovery_failures += stats.get("search_failures", 0)
        if not candidates:
            stop_reason = "no_new_candidates"
            break

        added = None
        candidate_min_complexity = min(c.complexity for c in candidates)
        skipped = 0
        while candidates:
            candidate = select_lowest_complexity(candidates)
            candidates.remove(candidate)
            try:
                examples = generate_examples(
                    candidate,
                    current,
                    extra_samples=params["extra_samples"],
                    seed=seed * 100003 + iteration,
                    min_pos=params["min_pos"],
                    depth_range=depth_range,
                    node_budget=node_budget,
                )
                program = induce_program(
                    examples,
                    vocabulary,
                    max_clause_size=params["max_clause_size"],
                    max_clauses=params["max_clauses"],
                )
            except InductionError as exc:
                log.debug("induction failed for %s: %s", format_moves(candidate.sequence), exc)
                induction_failures += 1
                skipped += 1
                failed_keys.add(
                    canonical_macro_key(candidate.sequence, candidate.effect.target)
                )
                continue
            macro = MacroAction(
                name=_macro_name(candidate, names),
                precondition=program,
                sequence=candidate.sequence,
                effect=candidate.effect,
                complexity=candidate.complexity,
                metadata={"iteration": iteration},
            )
            checks = validate_macro(
                macro,
                samples=validation_samples,
                seed=seed * 7 + iteration + 13,
                node_budget=node_budget,
            )
            if not checks["passed"]:
                log.debug("validation failed for %s: %s", macro.name, checks)
                validation_failures += 1
                skipped += 1
                failed_keys.add(
                    canonical_macro_key(candidate.sequence, candidate.effect.target)
                )
                continue
            macro.metadata["validation"] = checks
            macro.metadata["training_examples"] = {
                "positives": len(examples.positives),
                "negatives": len(examples.negatives),
            }
            names.add(macro.name)
            library.add(macro)
            added = macro
            break
        if added is None:
            stop_reason = "candidates_exhausted"
            break

        # Replay the library over every configuration to a fixpoint.  A config
        # that was stuck can only move again if the newly added macro (in any
        # yaw coloring) applies to it, so that is the only trigger worth
        # checking per iteration.
        for i, state in enumerate(current):
            if matches(state, goal):
                continue
            if _applicable_variant(added, state, relevant) is not None:
                current[i] = greedy_solve_with_library(state, library).final_state
        iteration_log.append(
            {
                "iteration": iteration,
                "macro": added.name,
                "complexity": added.complexity,
                "candidate_min_complexity": candidate_min_complexity,
                "skipped_candidates": skipped,
                "unsolved_before": len(unsolved),
                "unsolved_after": sum(1 for c in current if not matches(c, goal)),
            }
        )

    solved = sum(1 for c in current if matches(c, goal))
    library.metadata = {
        "seed": seed,
        "config_count": config_count,
        "depth_range": list(depth_range),
        "complexity_cap": complexity_cap,
        "macro_cap": macro_cap,
        "induction_params": params,
        "iterations": iteration_log,
        "stop_reason": stop_reason,
        "discovery_search_failures": discovery_failures,
        "induction_failures": induction_failures,
        "validation_failures": validation_failures,
        "training_solve_rate": solved / config_count,
        "unsolved_configs": config_count - solved,
    }
    return library
