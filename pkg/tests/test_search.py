"""Search tests: optimality against a breadth-first oracle, budgets, bounds."""

from __future__ import annotations

import numpy as np
import pytest

from cubetutor.cube import (
    PartialGoal,
    apply_sequence,
    matches,
    scramble,
    solved_state,
    white_cross_goal,
)
from cubetutor.search import (
    MaxHeuristic,
    SearchBudgetError,
    astar_solve,
    bfs_oracle,
    misplaced_bound_heuristic,
)


def full_goal() -> PartialGoal:
    solved = solved_state()
    return PartialGoal(solved.facelets, np.ones(54, dtype=bool), name="solved")


def test_empty_path_when_already_at_goal():
    result = astar_solve(solved_state(), white_cross_goal())
    assert result.path == ()
    assert result.nodes_expanded == 0


def test_path_reaches_goal_and_matches_oracle_depth():
    rng = np.random.default_rng(17)
    goal = white_cross_goal()
    for _ in range(25):
        depth = int(rng.integers(1, 6))
        state, _ = scramble(depth, rng=rng)
        result = astar_solve(state, goal)
        assert matches(apply_sequence(state, result.path), goal)
        oracle = bfs_oracle(state, goal, max_depth=depth)
        assert oracle is not None
        assert len(result.path) == oracle


def test_full_goal_solves_shallow_scrambles_optimally():
    rng = np.random.default_rng(4)
    goal = full_goal()
    for _ in range(10):
        depth = int(rng.integers(1, 5))
        state, _ = scramble(depth, rng=rng)
        result = astar_solve(state, goal)
        oracle = bfs_oracle(state, goal, max_depth=depth)
        assert len(result.path) == oracle
        assert matches(apply_sequence(state, result.path), goal)


def test_misplaced_bound_is_admissible_on_samples():
    rng = np.random.default_rng(9)
    goal = white_cross_goal()
    for _ in range(40):
        depth = int(rng.integers(1, 6))
        state, _ = scramble(depth, rng=rng)
        bound = misplaced_bound_heuristic(state, goal)
        true_cost = bfs_oracle(state, goal, max_depth=depth)
        assert true_cost is not None
        assert bound <= true_cost


def test_budget_error_carries_expansion_count():
    state, _ = scramble(12, seed=30)
    with pytest.raises(SearchBudgetError) as info:
        astar_solve(state, full_goal(), node_budget=50)
    assert info.value.nodes_expanded >= 50


def test_weighted_search_still_reaches_goal():
    state, _ = scramble(6, seed=21)
    goal = white_cross_goal()
    result = astar_solve(state, goal, weight=2.0)
    assert matches(apply_sequence(state, result.path), goal)


def test_max_heuristic_is_pointwise_max():
    goal = white_cross_goal()

    class Constant:
        def __init__(self, value):
            self.value = value

        def estimate(self, state, goal):
            return self.value

        def estimate_batch(self, states, goal):
            return np.full(states.shape[0], self.value)

    combo = MaxHeuristic([Constant(1.0), Constant(3.0), Constant(2.0)])
    state, _ = scramble(5, seed=2)
    assert combo.estimate(state, goal) == 3.0
    with pytest.raises(ValueError):
        MaxHeuristic([])


def test_bfs_oracle_none_when_out_of_range():
    state, _ = scramble(8, seed=77)
    goal = full_goal()
    # depth-8 scrambles practically never solve within 1 move
    assert bfs_oracle(state, goal, max_depth=1) is None
