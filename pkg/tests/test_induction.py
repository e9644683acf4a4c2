"""Precondition induction tests: consistency contract, minimality, bounds."""

from __future__ import annotations

import numpy as np
import pytest

from cubetutor.cube import apply_move, apply_sequence, parse_moves, scramble, solved_state
from cubetutor.induction import (
    ExampleSet,
    InductionError,
    InductionFailure,
    induce_program,
)
from cubetutor.predicates import (
    Atom,
    evaluate_program,
    parse_atom,
    vocabulary_for_cubelets,
)


def _states(seeds, depth=8):
    return [scramble(depth, seed=s)[0] for s in seeds]


def test_single_atom_separable_case():
    # positives all satisfy sticker_at(4, white) (any reachable state does);
    # craft separation instead on edge_slot: positives have WO at DR/1,
    # negatives don't.
    sequence = parse_moves("F' R' F D")
    demo = apply_sequence(solved_state(), sequence)
    positives = [demo]
    negatives = [solved_state()]
    vocab = vocabulary_for_cubelets(("WO",))
    program = induce_program(ExampleSet(positives, negatives), vocab)
    assert evaluate_program(program, demo)
    assert not evaluate_program(program, solved_state())
    # one clause, one atom suffices for a single separable pair
    assert len(program.clauses) == 1
    assert len(program.clauses[0].atoms) == 1


def test_postcondition_full_cover_zero_negatives():
    rng = np.random.default_rng(5)
    vocab = vocabulary_for_cubelets(("WO", "WB"))
    target = parse_atom("placed(WO,true)")
    pool = [scramble(int(rng.integers(2, 10)), rng=rng)[0] for _ in range(120)]
    from cubetutor.predicates import state_context

    positives = [s for s in pool if target.evaluate(state_context(s))]
    negatives = [s for s in pool if not target.evaluate(state_context(s))][:40]
    if len(positives) < 2:
        positives = [solved_state(), apply_move(solved_state(), parse_moves("B")[0])]
        negatives = [s for s in pool if not target.evaluate(state_context(s))][:40]
    program = induce_program(ExampleSet(positives, negatives), vocab)
    for s in positives:
        assert evaluate_program(program, s)
    for s in negatives:
        assert not evaluate_program(program, s)


def test_overlapping_examples_rejected():
    state = solved_state()
    with pytest.raises(InductionError):
        ExampleSet([state], [state])


def test_no_positives_rejected():
    with pytest.raises(InductionError):
        induce_program(ExampleSet([], [solved_state()]),
                       vocabulary_for_cubelets(("WO",)))


def test_bounds_failure_raises_induction_failure():
    # an empty vocabulary cannot separate anything
    demo = apply_sequence(solved_state(), parse_moves("F' R' F D"))
    with pytest.raises((InductionFailure, InductionError)):
        induce_program(ExampleSet([demo], [solved_state()]), vocabulary=())


def test_adding_negative_never_enlarges_training_acceptance():
    rng = np.random.default_rng(11)
    vocab = vocabulary_for_cubelets(("WO",))
    from cubetutor.predicates import state_context

    target = parse_atom("placed(WO,true)")
    pool = [scramble(int(rng.integers(2, 10)), rng=rng)[0] for _ in range(200)]
    positives = [s for s in pool if target.evaluate(state_context(s))][:10]
    negatives = [s for s in pool if not target.evaluate(state_context(s))]
    assert len(positives) >= 2
    base_negs = negatives[:20]
    extra_neg = negatives[20]
    before = induce_program(ExampleSet(positives, base_negs), vocab)
    after = induce_program(ExampleSet(positives, base_negs + [extra_neg]), vocab)
    training = pool
    accepted_before = {s.key for s in training if evaluate_program(before, s)}
    accepted_after = {s.key for s in training if evaluate_program(after, s)}
    assert accepted_after <= accepted_before


def test_deterministic_for_fixed_inputs():
    demo = apply_sequence(solved_state(), parse_moves("F' R' F D"))
    vocab = vocabulary_for_cubelets(("WO", "WB"))
    examples = ExampleSet([demo], [solved_state()])
    a = induce_program(examples, vocab)
    b = induce_program(examples, vocab)
    assert a == b and a.serialize() == b.serialize()
