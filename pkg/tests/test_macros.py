"""Macro discovery, libraries, and the greedy macro solver.

The teaching demo doubles as a frozen oracle: the demo configuration is four
quarter turns from solved, and the shipped library's single macro restores it
with the exact inverse sequence, so every layer from focused search to greedy
application can be checked against literal facelet strings.
"""

import numpy as np
import pytest

from cubetutor.cube import (
    ALL_CUBELET_IDS,
    CubeState,
    apply_sequence,
    format_facelets,
    format_moves,
    goal_cubelets,
    is_placed,
    locate_cubelet,
    matches,
    parse_moves,
    scramble,
    solved_state,
    white_cross_goal,
)
from cubetutor.macros import (
    VARIANT_KEYS,
    FocusedEffect,
    MacroAction,
    MacroError,
    MacroLibrary,
    MacroPreconditionError,
    apply_macro,
    canonical_macro_key,
    conjugate_cubelet,
    conjugate_macro,
    conjugate_sequence,
    discover_candidates,
    effect_class,
    focused_goal,
    generate_configurations,
    generate_examples,
    greedy_solve_with_library,
    learn_macro_library,
    preserved_cubelets,
    select_lowest_complexity,
    solve_focused,
    validate_macro,
)
from cubetutor.predicates import evaluate_program, parse_program
from cubetutor.search import bfs_oracle

from conftest import DEMO_MACRO_MOVES, DEMO_SETUP_MOVES

SOLVED_FACELETS = "W" * 9 + "Y" * 9 + "R" * 9 + "O" * 9 + "B" * 9 + "G" * 9

CROSS_EDGES = ("WB", "WG", "WR", "WO")

DEMO_EFFECT = FocusedEffect("WO", frozenset({"WB", "WG", "WR"}))


def cross_placed_count(state: CubeState) -> int:
    return sum(is_placed(state, cid) for cid in CROSS_EDGES)


# -- the demo macro as a frozen oracle ----------------------------------------


def test_demo_macro_restores_the_cube(demo_state):
    # The demo state was produced by the inverse sequence, so applying the
    # macro must return the literal solved facelet string, not merely a
    # state where the goal predicate happens to hold.
    after = apply_sequence(demo_state, parse_moves(DEMO_MACRO_MOVES))
    assert format_facelets(after) == SOLVED_FACELETS


def test_focused_search_matches_breadth_first_depth(demo_state):
    goal = focused_goal(DEMO_EFFECT)
    oracle_depth = bfs_oracle(demo_state, goal, max_depth=4)
    assert oracle_depth == 4

    result = solve_focused(demo_state, DEMO_EFFECT)
    assert len(result.path) == oracle_depth
    after = apply_sequence(demo_state, result.path)
    assert cross_placed_count(after) == 4


def test_focused_search_requires_protected_in_place(demo_state):
    # WO is the one unplaced cross edge in the demo, so protecting it is
    # asking for a contradiction and must be rejected up front.
    effect = FocusedEffect("WG", frozenset({"WO"}))
    with pytest.raises(MacroError):
        solve_focused(demo_state, effect)


def test_focused_search_is_empty_at_goal():
    result = solve_focused(solved_state(), DEMO_EFFECT)
    assert result.path == ()
    assert result.nodes_expanded == 0


def test_effect_rejects_target_in_protected():
    with pytest.raises(MacroError):
        FocusedEffect("WO", frozenset({"WO"}))


# -- structural preservation ---------------------------------------------------


def test_preserved_cubelets_of_demo_macro():
    preserved = preserved_cubelets(parse_moves(DEMO_MACRO_MOVES))
    assert {"WB", "WG", "WR"} <= preserved
    assert "WO" not in preserved


def test_preserved_cubelets_identity_and_single_turn():
    assert preserved_cubelets(()) == frozenset(ALL_CUBELET_IDS)
    # One face turn moves exactly four edges and four corners.
    preserved = preserved_cubelets(parse_moves("R"))
    assert len(preserved) == 12
    assert "WB" in preserved
    assert "WO" not in preserved


def test_preserved_cubelets_stay_placed_from_any_state(demo_state):
    seq = parse_moves(DEMO_MACRO_MOVES)
    preserved = preserved_cubelets(seq)
    rng = np.random.default_rng(5)
    for _ in range(10):
        state, _ = scramble(int(rng.integers(3, 14)), rng=rng)
        after = apply_sequence(state, seq)
        for cid in preserved:
            assert is_placed(state, cid) == is_placed(after, cid)


# -- effect classes and canonical keys ----------------------------------------


def test_effect_class_is_colorless_across_yaw(demo_state):
    base = effect_class("WO", locate_cubelet(demo_state, "WO"))
    setup = parse_moves(DEMO_SETUP_MOVES)
    for k in (1, 2, 3):
        twin = apply_sequence(solved_state(), conjugate_sequence(setup, k))
        target = conjugate_cubelet("WO", k)
        assert effect_class(target, locate_cubelet(twin, target)) == base


def test_canonical_key_is_conjugation_invariant():
    seq = parse_moves(DEMO_MACRO_MOVES)
    base = canonical_macro_key(seq, "WO")
    for k, mirrored in VARIANT_KEYS:
        key = canonical_macro_key(
            conjugate_sequence(seq, k, mirrored),
            conjugate_cubelet("WO", k, mirrored),
        )
        assert key == base


def test_conjugate_identity_and_period():
    seq = parse_moves(DEMO_MACRO_MOVES)
    assert conjugate_sequence(seq, 0) == seq
    assert conjugate_sequence(conjugate_sequence(seq, 2), 2) == seq
    assert conjugate_cubelet("WO", 4) == "WO"
    assert conjugate_cubelet(conjugate_cubelet("WO", 0, mirrored=True), 0, mirrored=True) == "WO"


# -- candidate discovery --------------------------------------------------------


def test_discovery_on_demo_finds_the_macro(demo_state):
    stats: dict = {}
    candidates = discover_candidates([demo_state], white_cross_goal(), stats=stats)
    assert candidates, "demo has one unplaced cross edge, expected a candidate"
    assert stats["search_failures"] == 0
    assert stats["unique_candidates"] == len(candidates)
    assert all(c.effect.target == "WO" for c in candidates)

    best = select_lowest_complexity(candidates)
    assert best.complexity == 4
    after = apply_sequence(demo_state, best.sequence)
    assert cross_placed_count(after) == 4


def test_discovery_output_is_sorted_and_deduplicated(demo_state):
    rng = np.random.default_rng(17)
    configs = [scramble(int(rng.integers(2, 8)), rng=rng)[0] for _ in range(6)]
    candidates = discover_candidates(configs, white_cross_goal())

    def key(c):
        return (c.complexity, format_moves(c.sequence), c.effect.target,
                tuple(sorted(c.effect.protected)))

    assert [key(c) for c in candidates] == sorted(key(c) for c in candidates)
    identities = {
        (format_moves(c.sequence), c.effect_class, c.effect.target,
         tuple(sorted(c.effect.protected)))
        for c in candidates
    }
    assert len(identities) == len(candidates)


def test_select_lowest_complexity_requires_candidates():
    with pytest.raises(MacroError):
        select_lowest_complexity([])


def test_generate_configurations_validation_and_determinism():
    with pytest.raises(MacroError):
        generate_configurations(0, (1, 5), seed=0)
    with pytest.raises(MacroError):
        generate_configurations(3, (6, 2), seed=0)
    a = generate_configurations(5, (1, 8), seed=9)
    b = generate_configurations(5, (1, 8), seed=9)
    assert [s.key for s in a] == [s.key for s in b]


# -- example labeling -----------------------------------------------------------


def test_examples_label_demo_positive_and_solved_negative(demo_state):
    candidates = discover_candidates([demo_state], white_cross_goal())
    candidate = select_lowest_complexity(candidates)
    solved = solved_state()
    examples = generate_examples(
        candidate, [demo_state, solved], extra_samples=30, seed=3
    )
    positive_keys = {s.key for s in examples.positives}
    negative_keys = {s.key for s in examples.negatives}
    # The source configuration is a positive by construction; the solved
    # state is a negative for a placement macro because the sequence moves
    # the already-placed target away.
    assert demo_state.key in positive_keys
    assert solved.key in negative_keys
    assert not positive_keys & negative_keys


# -- library container ----------------------------------------------------------


def _toy_macro(name: str, moves: str, complexity: int) -> MacroAction:
    return MacroAction(
        name=name,
        precondition=parse_program("placed(WO,false)"),
        sequence=parse_moves(moves),
        effect=FocusedEffect("WO", frozenset()),
        complexity=complexity,
    )


def test_library_orders_by_complexity():
    lib = MacroLibrary(goal=white_cross_goal())
    lib.add(_toy_macro("long", "R U R' U' R U", 6))
    lib.add(_toy_macro("short", "R U", 2))
    lib.add(_toy_macro("middle", "R U R'", 3))
    assert [m.name for m in lib.macros] == ["short", "middle", "long"]
    assert len(lib) == 3


def test_library_rejects_duplicate_names():
    lib = MacroLibrary(goal=white_cross_goal())
    lib.add(_toy_macro("one", "R", 1))
    with pytest.raises(MacroError):
        lib.add(_toy_macro("one", "F", 1))


def test_library_round_trip(demo_library, tmp_path):
    path = tmp_path / "library.json"
    demo_library.save(path)
    loaded = MacroLibrary.load(path)
    assert loaded.to_json() == demo_library.to_json()
    assert [m.name for m in loaded.macros] == [m.name for m in demo_library.macros]
    assert loaded.macros[0].precondition.serialize() == (
        demo_library.macros[0].precondition.serialize()
    )


def test_library_rejects_foreign_documents(demo_library):
    doc = demo_library.to_json()
    wrong_kind = dict(doc, kind="not-a-library")
    with pytest.raises(MacroError):
        MacroLibrary.from_json(wrong_kind)
    wrong_version = dict(doc, format_version=-1)
    with pytest.raises(MacroError):
        MacroLibrary.from_json(wrong_version)


# -- macro application and validation -------------------------------------------


def test_apply_macro_enforces_precondition(demo_state, demo_library):
    macro = demo_library.macros[0]
    after = apply_macro(demo_state, macro)
    assert format_facelets(after) == SOLVED_FACELETS
    with pytest.raises(MacroPreconditionError):
        apply_macro(solved_state(), macro)


def test_shipped_macro_validates_cleanly(demo_library):
    report = validate_macro(demo_library.macros[0], samples=40, seed=7)
    assert report["tested"] == 40
    assert report["effect_failures"] == 0
    assert report["protection_violations"] == 0
    assert report["passed"] is True


# -- greedy solving --------------------------------------------------------------


def test_greedy_solves_demo_with_shipped_macro(demo_state, demo_library):
    result = greedy_solve_with_library(demo_state, demo_library)
    assert result.status == "solved"
    assert format_moves(result.moves) == DEMO_MACRO_MOVES
    assert result.macro_names == ("place-wo-dr1-k3",)
    assert len(result.applied) == 1
    assert matches(result.final_state, demo_library.goal)


def test_greedy_reports_no_applicable_macro(demo_state):
    empty = MacroLibrary(goal=white_cross_goal())
    result = greedy_solve_with_library(demo_state, empty)
    assert result.status == "no_applicable_macro"
    assert result.moves == ()
    assert result.final_state == demo_state


def test_greedy_uses_yawed_variant(demo_library):
    # Recolored twin of the demo: the same defect one quarter-yaw around the
    # cube, which the base macro's precondition cannot match directly.
    twin = apply_sequence(
        solved_state(), conjugate_sequence(parse_moves(DEMO_SETUP_MOVES), 1)
    )
    result = greedy_solve_with_library(twin, demo_library)
    assert result.status == "solved"
    assert len(result.applied) == 1
    variant = result.applied[0]
    assert variant.metadata["variant_of"] == "place-wo-dr1-k3"
    assert variant.metadata["yaw"] == 1


def test_greedy_solves_mirrored_twin(demo_library):
    # The reflected defect happens to coincide with a double-yaw of the
    # original, so greedy may pick either conjugate; what matters is that
    # some non-base variant applies and solves.
    twin = apply_sequence(
        solved_state(),
        conjugate_sequence(parse_moves(DEMO_SETUP_MOVES), 0, mirrored=True),
    )
    result = greedy_solve_with_library(twin, demo_library)
    assert result.status == "solved"
    assert len(result.applied) == 1
    variant = result.applied[0]
    assert variant.metadata["variant_of"] == "place-wo-dr1-k3"

    mirrored = conjugate_macro(demo_library.macros[0], 0, mirrored=True)
    assert mirrored is not None
    assert evaluate_program(mirrored.precondition, twin)
    assert matches(apply_sequence(twin, mirrored.sequence), demo_library.goal)


def test_conjugate_macro_identity_is_shared(demo_library):
    macro = demo_library.macros[0]
    assert conjugate_macro(macro, 0, mirrored=False) is macro
    assert conjugate_macro(macro, 4, mirrored=False) is macro
    variant = conjugate_macro(macro, 2, mirrored=False)
    assert variant is not None
    assert variant.complexity == macro.complexity
    assert variant.effect.target == conjugate_cubelet("WO", 2)


# -- the full learning loop -------------------------------------------------------


@pytest.fixture(scope="module")
def learned_library():
    return learn_macro_library(
        white_cross_goal(),
        config_count=40,
        depth_range=(1, 12),
        seed=2,
        macro_cap=40,
        validation_samples=20,
    )


def test_learning_records_provenance(learned_library):
    meta = learned_library.metadata
    for key in (
        "seed",
        "config_count",
        "depth_range",
        "complexity_cap",
        "macro_cap",
        "induction_params",
        "iterations",
        "stop_reason",
        "discovery_search_failures",
        "induction_failures",
        "validation_failures",
        "training_solve_rate",
        "unsolved_configs",
    ):
        assert key in meta, key
    assert meta["seed"] == 2
    assert meta["config_count"] == 40
    assert meta["training_solve_rate"] >= 0.9
    assert meta["stop_reason"] in {
        "all_solved",
        "macro_cap",
        "no_new_candidates",
        "iteration_cap",
    }


def test_learned_macros_are_capped_sorted_and_named(learned_library):
    macros = learned_library.macros
    assert 0 < len(macros) <= 40
    complexities = [m.complexity for m in macros]
    assert complexities == sorted(complexities)
    assert all(c <= 8 for c in complexities)
    names = [m.name for m in macros]
    assert len(set(names)) == len(names)
    assert all(m.precondition.clauses for m in macros)


def test_greedy_progress_is_strict_on_fresh_scrambles(learned_library):
    relevant = goal_cubelets(learned_library.goal)
    rng = np.random.default_rng(123)
    solved_count = 0
    for _ in range(30):
        start, _ = scramble(int(rng.integers(1, 13)), rng=rng)
        result = greedy_solve_with_library(start, learned_library)
        if result.status != "solved":
            continue
        solved_count += 1
        assert matches(result.final_state, learned_library.goal)
        # Replay the applied macros: every precondition must hold at its
        # application point and each step must place at least one more goal
        # cubelet without unplacing any.
        state = start
        placed = sum(is_placed(state, cid) for cid in relevant)
        for macro in result.applied:
            state = apply_macro(state, macro)
            now = sum(is_placed(state, cid) for cid in relevant)
            assert now > placed
            placed = now
        assert state == result.final_state
    assert solved_count >= 27


def test_learning_is_deterministic():
    kwargs = dict(
        config_count=6,
        depth_range=(1, 6),
        seed=4,
        macro_cap=6,
        validation_samples=10,
    )
    first = learn_macro_library(white_cross_goal(), **kwargs)
    second = learn_macro_library(white_cross_goal(), **kwargs)
    assert first.to_json() == second.to_json()


def test_learning_rejects_bad_config_count():
    with pytest.raises(MacroError):
        learn_macro_library(white_cross_goal(), config_count=0)
