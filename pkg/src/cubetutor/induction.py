"""Rule induction: learn a predicate program separating labeled cube states.

Generate-and-test over the closed atom vocabulary: clauses are searched by
increasing size in canonical atom order, a greedy set-cover assembles the
disjunction, and the result must cover every positive and reject every
negative of the training set or induction fails.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cube import CubeError, CubeState
from .predicates import Atom, Clause, PredicateProgram, state_context


class InductionError(CubeError):
    pass


@dataclass
class InductionFailure(InductionError):
    """No consistent program within bounds; carries best-found coverage."""

    covered_positives: int
    total_positives: int
    clauses_found: int

    def __str__(self) -> str:
        return (
            f"no consistent program: covered {self.covered_positives}"
            f"/{self.total_positives} positives with {self.clauses_found} clauses"
        )


@dataclass
class ExampleSet:
    positives: list[CubeState]
    negatives: list[CubeState] = field(default_factory=list)

    def __post_init__(self):
        pos_keys = {s.key for s in self.positives}
        if any(s.key in pos_keys for s in self.negatives):
            raise InductionError("positive and negative examples overlap")


def _truth_matrix(atoms: tuple[Atom, ...], states: list[CubeState]) -> np.ndarray:
    out = np.zeros((len(atoms), len(states)), dtype=bool)
    for j, state in enumerate(states):
        ctx = state_context(state)
        for i, atom in enumerate(atoms):
            out[i, j] = atom.evaluate(ctx)
    return out


_BEAM = 512


def induce_program(
    examples: ExampleSet,
    vocabulary: tuple[Atom, ...],
    max_clause_size: int = 4,
    max_clauses: int = 3,
) -> PredicateProgram:
    """Smallest-clause-first greedy cover.  Raises InductionFailure when the
    bounds don't admit a consistent program."""
    if not examples.positives:
        raise InductionError("at least one positive example is required")
    if max_clause_size < 1 or max_clauses < 1:
        raise InductionError("clause bounds must be positive")
    atoms = tuple(sorted(set(vocabulary)))
    pos = _truth_matrix(atoms, examples.positives)
    neg = _truth_matrix(atoms, examples.negatives)
    n_pos = pos.shape[1]

    uncovered = np.ones(n_pos, dtype=bool)
    clauses: list[Clause] = []
    while uncovered.any() and len(clauses) < max_clauses:
        found = _find_clause(atoms, pos, neg, uncovered, max_clause_size)
        if found is None:
            raise InductionFailure(int(n_pos - uncovered.sum()), n_pos, len(clauses))
        idxs, covers = found
        clauses.append(Clause(tuple(atoms[i] for i in idxs)))
        uncovered &= ~covers
    if uncovered.any():
        raise InductionFailure(int(n_pos - uncovered.sum()), n_pos, len(clauses))

    program = PredicateProgram(tuple(clauses))
    _assert_consistent(program, examples)
    return program


def _find_clause(atoms, pos, neg, uncovered, max_clause_size):
    """Consistent clause covering the most uncovered positives; ties go to
    the smaller clause, then to canonical enumeration order.

    A narrow small clause must not shadow a wider larger one, or the greedy
    cover starves before max_clauses runs out.  Beam search over
    atom-index-increasing partial clauses: exhaustive at size 1, then the
    _BEAM most promising prefixes (fewest accepted negatives, then widest
    coverage) are extended.  Returns (atom index tuple, covered-positive
    mask) or None.
    """
    n_atoms = len(atoms)
    # Atoms covering no uncovered positive can never help a cover clause.
    useful = np.flatnonzero(pos[:, uncovered].any(axis=1)) if uncovered.any() else []
    frontier: list[tuple[tuple[int, ...], np.ndarray, np.ndarray]] = [
        ((i,), pos[i], neg[i]) for i in useful
    ]
    best = None  # (-coverage, size, idxs, covers)
    for _size in range(1, max_clause_size + 1):
        for idxs, p, n in frontier:
            if n.any() or not p[uncovered].any():
                continue
            key = (-int(p[uncovered].sum()), len(idxs), idxs)
            if best is None or key < best[:3]:
                best = key + (p,)
        if _size == max_clause_size:
            break
        frontier.sort(key=lambda t: (int(t[2].sum()), -int(t[1][uncovered].sum()), t[0]))
        nxt = []
        for idxs, p, n in frontier[:_BEAM]:
            if not n.any():
                continue  # consistent already; any extension is dominated
            for j in range(idxs[-1] + 1, n_atoms):
                p2 = p & pos[j]
                if not p2[uncovered].any():
                    continue
                nxt.append((idxs + (j,), p2, n & neg[j]))
        frontier = nxt
    if best is None:
        return None
    return best[2], best[3]


def _assert_consistent(program: PredicateProgram, examples: ExampleSet) -> None:
    from .predicates import evaluate_program

    for s in examples.positives:
        if not evaluate_program(program, s):
            raise InductionError("induced program rejects a training positive")
    for s in examples.negatives:
        if evaluate_program(program, s):
            raise InductionError("induced program accepts a training negative")
